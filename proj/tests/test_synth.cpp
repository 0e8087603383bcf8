#include <cmath>
#include <numeric>

#include "doctest.h"
#include "exai5g/errors.hpp"
#include "exai5g/ingest.hpp"
#include "exai5g/synth.hpp"

using namespace exai5g;

TEST_SUITE("synth") {
    TEST_CASE("testbed proportions give the expected Benign count") {
        SynthConfig cfg;
        cfg.total_records = 20000;
        const auto counts = class_counts(cfg);
        CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 20000);
        // The class rows of the table sum to 1,743,083 while its total row reads
        // 1,753,454; proportions use the class sum so they add up to one.
        const double by_class_sum = 1322254.0 / 1743083.0 * 20000.0;
        const double by_total_row = 1322254.0 / 1753454.0 * 20000.0;
        CHECK(std::abs(double(counts[0]) - by_class_sum) <= 4.0);
        CHECK(std::abs(double(counts[0]) - by_total_row) / by_total_row < 0.01);
        CHECK(counts[code(ClassLabel::DoS_MQTT)] == std::size_t(std::lround(250514.0 / 1743083.0 * 20000.0)));
        double sum = 0;
        for (double w : cfg.class_weights) sum += w;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("same seed gives identical data") {
        SynthConfig cfg;
        cfg.total_records = 800;
        const auto a = generate(cfg);
        const auto b = generate(cfg);
        CHECK(a.records == b.records);
        CHECK(a.labels == b.labels);
        CHECK(format_csv(to_raw_table(a)) == format_csv(to_raw_table(b)));
        cfg.seed += 1;
        CHECK(generate(cfg).records != a.records);
    }

    TEST_CASE("planted rules hold for every row of their class") {
        SynthConfig cfg;
        cfg.total_records = 20000;
        const auto d = generate(cfg);
        const auto& schema = FeatureSchema::standard();
        for (const auto& rule : cfg.planted_rules) {
            const auto col = static_cast<Eigen::Index>(*schema.index_of(rule.feature));
            std::size_t n = 0;
            for (std::size_t i = 0; i < d.rows(); ++i) {
                if (d.labels[i] != code(rule.cls)) continue;
                ++n;
                CHECK(rule.holds(d.records(static_cast<Eigen::Index>(i), col)));
            }
            CHECK(n > 0);
        }
        const auto stream = static_cast<Eigen::Index>(*schema.index_of("tcp.stream"));
        for (std::size_t i = 0; i < d.rows(); ++i) {
            if (d.labels[i] == code(ClassLabel::DoS_MQTT)) CHECK(d.records(static_cast<Eigen::Index>(i), stream) > 5e5);
        }
    }

    TEST_CASE("rendered URIs re-encode to the generated codes") {
        SynthConfig cfg;
        cfg.total_records = 2000;
        const auto d = generate(cfg);
        const auto table = to_raw_table(d);
        const auto& schema = FeatureSchema::standard();
        const auto enc = encode(table, schema, Vocabulary::fit(table, schema));
        CHECK(enc.data.labels == d.labels);
        CHECK((enc.data.records - d.records).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("invalid configurations are rejected") {
        SynthConfig cfg;
        cfg.class_weights[0] += 0.5;
        CHECK_THROWS_AS(cfg.validate(), WeightMismatch);
        SynthConfig tiny;
        tiny.total_records = 3;
        CHECK_THROWS_AS(tiny.validate(), ConfigInvalid);
    }
}
