#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/dataset.hpp"
#include "exai5g/schema.hpp"

namespace exai5g {

/// A parsed CSV: header plus string cells.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

RawTable read_csv(const std::filesystem::path& path);
RawTable parse_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const RawTable& table);
std::string format_csv(const RawTable& table);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

/// Categorical vocabularies: column -> (value -> code). Codes start at 1 in
/// lexicographic order; 0 is reserved for values unseen at fit time.
struct Vocabulary {
    std::map<std::string, std::map<std::string, int>> columns;

    static Vocabulary fit(const RawTable& table, const FeatureSchema& schema);
    std::string to_json() const;
    static Vocabulary from_json(const std::string& text);
};

struct EncodedTable {
    Dataset data;
    /// Values mapped to the reserved unknown code, per column.
    std::map<std::string, std::size_t> unknown_counts;
};

/// Encodes a raw table with the 29 schema columns plus `label`.
EncodedTable encode(const RawTable& table, const FeatureSchema& schema, const Vocabulary& vocab);

/// Stratified split; per class round(n * train_fraction) rows go to the first
/// output, but never fewer than one when the class is present.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed);

struct ScalerParams {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd std;

    std::string to_json() const;
    static ScalerParams from_json(const std::string& text);
};

/// Column means and population standard deviations; near-constant columns get std 1.
ScalerParams fit_scaler(const Dataset& train);
Dataset transform(const Dataset& data, const ScalerParams& scaler);
Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& standardized, const ScalerParams& scaler);

/// Dataset <-> CSV with schema header and class-name labels.
RawTable to_table(const Dataset& data, const FeatureSchema& schema);
Dataset read_dataset(const std::filesystem::path& path, const FeatureSchema& schema, Provenance provenance);
void write_dataset(const std::filesystem::path& path, const Dataset& data, const FeatureSchema& schema);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace exai5g
