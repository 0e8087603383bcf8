#include "exai5g/dataset.hpp"

#include "exai5g/errors.hpp"

namespace exai5g {

std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Train: return "train";
        case Provenance::Val: return "val";
        case Provenance::Test: return "test";
        case Provenance::Synthetic: return "synthetic";
    }
    return "unknown";
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.provenance = provenance;
    out.records.resize(static_cast<Eigen::Index>(indices.size()), records.cols());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.records.row(static_cast<Eigen::Index>(i)) = records.row(static_cast<Eigen::Index>(indices[i]));
        out.labels.push_back(labels[indices[i]]);
    }
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(kNumClasses, 0);
    for (int y : labels) counts[static_cast<std::size_t>(y)]++;
    return counts;
}

void Dataset::check() const {
    if (static_cast<std::size_t>(records.rows()) != labels.size()) {
        throw ShapeMismatch("dataset has " + std::to_string(records.rows()) + " rows but " +
                            std::to_string(labels.size()) + " labels");
    }
    if (!records.allFinite()) throw ParseError("dataset contains NaN or Inf");
    for (int y : labels) {
        if (y < 0 || y >= static_cast<int>(kNumClasses)) throw ParseError("label out of range");
    }
}

}  // namespace exai5g
