#include "exai5g/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "exai5g/errors.hpp"

namespace exai5g {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool parse_number(const std::string& cell, double& out) {
    if (cell == "True" || cell == "true") {
        out = 1.0;
        return true;
    }
    if (cell == "False" || cell == "false") {
        out = 0.0;
        return true;
    }
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<std::size_t> column_positions(const RawTable& table, const FeatureSchema& schema,
                                          std::size_t& label_pos) {
    std::vector<std::size_t> pos(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
        auto it = std::find(table.header.begin(), table.header.end(), schema.name(f));
        if (it == table.header.end()) {
            throw ParseError("CSV is missing schema column '" + std::string(schema.name(f)) + "'");
        }
        pos[f] = static_cast<std::size_t>(it - table.header.begin());
    }
    auto it = std::find(table.header.begin(), table.header.end(), "label");
    if (it == table.header.end()) throw ParseError("CSV is missing the 'label' column");
    label_pos = static_cast<std::size_t>(it - table.header.begin());
    return pos;
}

int parse_label(const std::string& cell, std::size_t row) {
    if (auto c = parse_class(cell)) return code(*c);
    throw ParseError("unknown class label '" + cell + "' at row " + std::to_string(row));
}

std::string escape_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("cannot format double");
    return std::string(buf, ptr);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

RawTable parse_csv(const std::string& text) {
    RawTable table;
    std::vector<std::string> record;
    std::string cell;
    bool quoted = false;
    bool any = false;
    auto end_record = [&] {
        record.push_back(std::move(cell));
        cell.clear();
        if (table.header.empty()) {
            table.header = std::move(record);
        } else if (!(record.size() == 1 && record[0].empty())) {
            if (record.size() != table.header.size()) {
                throw ParseError("CSV row " + std::to_string(table.rows.size()) + " has " +
                                 std::to_string(record.size()) + " cells, header has " +
                                 std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(record));
        }
        record.clear();
        any = false;
    };
    std::size_t i = 0;
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            record.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            end_record();
        } else if (c != '\r') {
            cell += c;
        }
    }
    if (quoted) throw ParseError("CSV ends inside a quoted cell");
    if (any) end_record();
    return table;
}

RawTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

std::string format_csv(const RawTable& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += escape_cell(cells[i]);
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
}

void write_csv(const std::filesystem::path& path, const RawTable& table) { write_text(path, format_csv(table)); }

Vocabulary Vocabulary::fit(const RawTable& table, const FeatureSchema& schema) {
    std::size_t label_pos = 0;
    const auto pos = column_positions(table, schema, label_pos);
    Vocabulary vocab;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        if (schema[f].kind != FeatureKind::Categorical) continue;
        std::set<std::string> values;
        for (const auto& row : table.rows) {
            std::string v = trim(row[pos[f]]);
            if (!v.empty()) values.insert(std::move(v));
        }
        auto& codes = vocab.columns[std::string(schema.name(f))];
        int next = 1;
        for (const auto& v : values) codes.emplace(v, next++);
    }
    return vocab;
}

std::string Vocabulary::to_json() const {
    nlohmann::json j = columns;
    return j.dump(2) + "\n";
}

Vocabulary Vocabulary::from_json(const std::string& text) {
    Vocabulary v;
    v.columns = nlohmann::json::parse(text).get<std::map<std::string, std::map<std::string, int>>>();
    return v;
}

EncodedTable encode(const RawTable& table, const FeatureSchema& schema, const Vocabulary& vocab) {
    std::size_t label_pos = 0;
    const auto pos = column_positions(table, schema, label_pos);
    EncodedTable out;
    auto& d = out.data;
    d.records.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(schema.size()));
    d.labels.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t f = 0; f < schema.size(); ++f) {
            const std::string cell = trim(row[pos[f]]);
            const std::string name(schema.name(f));
            if (cell.empty()) throw MissingValue(r, name);
            double value = 0.0;
            if (schema[f].kind == FeatureKind::Categorical) {
                value = 0.0;
                bool known = false;
                if (const auto col = vocab.columns.find(name); col != vocab.columns.end()) {
                    if (const auto it = col->second.find(cell); it != col->second.end()) {
                        value = it->second;
                        known = true;
                    }
                }
                if (!known) out.unknown_counts[name]++;
            } else if (!parse_number(cell, value)) {
                throw ParseError("non-numeric value '" + cell + "' at row " + std::to_string(r) +
                                 ", column '" + name + "'");
            }
            d.records(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = value;
        }
        const std::string label = trim(row[label_pos]);
        if (label.empty()) throw MissingValue(r, "label");
        d.labels.push_back(parse_label(label, r));
    }
    d.check();
    return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigInvalid("train_fraction", "must lie strictly between 0 and 1");
    }
    std::vector<std::vector<std::size_t>> by_class(kNumClasses);
    for (std::size_t i = 0; i < data.rows(); ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
    for (auto& idx : by_class) {
        if (idx.empty()) continue;
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(double(idx.size()) * train_fraction));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size());
        first.insert(first.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        second.insert(second.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    Dataset a = data.select(first);
    Dataset b = data.select(second);
    a.provenance = Provenance::Train;
    b.provenance = Provenance::Val;
    return {std::move(a), std::move(b)};
}

ScalerParams fit_scaler(const Dataset& train) {
    if (train.rows() == 0) throw EmptyTrain("cannot fit a scaler on an empty dataset");
    ScalerParams s;
    s.mean = train.records.colwise().mean();
    const Eigen::MatrixXd centered = train.records.rowwise() - s.mean;
    s.std = (centered.array().square().colwise().sum() / double(train.rows())).sqrt().matrix();
    for (Eigen::Index c = 0; c < s.std.size(); ++c) {
        if (s.std(c) < 1e-12) s.std(c) = 1.0;
    }
    return s;
}

Dataset transform(const Dataset& data, const ScalerParams& scaler) {
    if (data.records.cols() != scaler.mean.size()) throw ShapeMismatch("transform: scaler width");
    Dataset out = data;
    out.records = ((data.records.rowwise() - scaler.mean).array().rowwise() / scaler.std.array()).matrix();
    return out;
}

Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& standardized, const ScalerParams& scaler) {
    Eigen::MatrixXd out = (standardized.array().rowwise() * scaler.std.array()).matrix();
    out.rowwise() += scaler.mean;
    return out;
}

std::string ScalerParams::to_json() const {
    nlohmann::ordered_json j;
    j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
    j["std"] = std::vector<double>(std.data(), std.data() + std.size());
    return j.dump(2) + "\n";
}

ScalerParams ScalerParams::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("std").get<std::vector<double>>();
    if (m.size() != s.size()) throw ParseError("scaler mean/std lengths differ");
    ScalerParams p;
    p.mean = Eigen::Map<const Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    p.std = Eigen::Map<const Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    return p;
}

RawTable to_table(const Dataset& data, const FeatureSchema& schema) {
    RawTable t;
    for (std::size_t f = 0; f < schema.size(); ++f) t.header.emplace_back(schema.name(f));
    t.header.emplace_back("label");
    t.rows.reserve(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(schema.size() + 1);
        for (Eigen::Index c = 0; c < data.records.cols(); ++c) {
            row.push_back(format_double(data.records(static_cast<Eigen::Index>(r), c)));
        }
        row.emplace_back(class_name(data.labels[r]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Dataset read_dataset(const std::filesystem::path& path, const FeatureSchema& schema, Provenance provenance) {
    const RawTable table = read_csv(path);
    std::size_t label_pos = 0;
    const auto pos = column_positions(table, schema, label_pos);
    Dataset d;
    d.provenance = provenance;
    d.records.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(schema.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t f = 0; f < schema.size(); ++f) {
            double v = 0.0;
            const std::string cell = trim(table.rows[r][pos[f]]);
            if (cell.empty()) throw MissingValue(r, std::string(schema.name(f)));
            if (!parse_number(cell, v)) {
                throw ParseError("non-numeric value '" + cell + "' in encoded dataset " + path.string());
            }
            d.records(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = v;
        }
        d.labels.push_back(parse_label(trim(table.rows[r][label_pos]), r));
    }
    d.check();
    return d;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data, const FeatureSchema& schema) {
    write_csv(path, to_table(data, schema));
}

}  // namespace exai5g
