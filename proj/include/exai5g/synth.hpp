#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "exai5g/dataset.hpp"
#include "exai5g/ingest.hpp"
#include "exai5g/schema.hpp"

namespace exai5g {

/// A threshold signature every row of `cls` satisfies and no Benign row does.
struct PlantedRule {
    ClassLabel cls;
    std::string feature;
    RuleOp op;
    double threshold;

    bool holds(double value) const { return op == RuleOp::Greater ? value > threshold : value <= threshold; }
};

struct SynthConfig {
    std::size_t total_records = 20000;
    std::uint64_t seed = 7;
    /// Seeds the per-class feature means; shared by every file drawn from one
    /// population (train and test) so they follow the same distribution.
    std::uint64_t geometry_seed = 2024;
    std::array<double, kNumClasses> class_weights = testbed_weights();
    std::vector<PlantedRule> planted_rules = default_planted_rules();
    /// Noise standard deviation as a fraction of the mean gap between class means.
    double noise_fraction = 0.05;

    /// Train-set class proportions of the 5G IoT testbed capture.
    static std::array<double, kNumClasses> testbed_weights();
    static std::vector<PlantedRule> default_planted_rules();

    void validate() const;
};

/// Per-class row counts: round(weight * total) for attack classes, the rest to Benign.
std::array<std::size_t, kNumClasses> class_counts(const SynthConfig& cfg);

/// Seeded synthetic flows. Column `http.request.uri` holds codes that match the
/// vocabulary a fit over the rendered table would assign.
Dataset generate(const SynthConfig& cfg);

/// Renders generated rows as the raw CSV table the ingest stage consumes.
RawTable to_raw_table(const Dataset& data);

/// The URI strings used by the generator, in sorted order (code = index + 1).
const std::vector<std::string>& synth_uris();

}  // namespace exai5g
