#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/schema.hpp"

namespace exai5g {

enum class Provenance { Train, Val, Test, Synthetic };

std::string_view provenance_name(Provenance p);

/// Rows are flows, columns follow FeatureSchema ordering; labels are class codes.
struct Dataset {
    Eigen::MatrixXd records;
    std::vector<int> labels;
    Provenance provenance = Provenance::Synthetic;

    std::size_t rows() const { return labels.size(); }

    /// Subset of rows in the given order.
    Dataset select(const std::vector<std::size_t>& indices) const;

    /// Per-class row counts, indexed by class code.
    std::vector<std::size_t> class_counts() const;

    /// Throws ShapeMismatch / ParseError on broken invariants.
    void check() const;
};

}  // namespace exai5g
