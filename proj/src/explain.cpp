#include "exai5g/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "exai5g/assets_data.hpp"
#include "exai5g/errors.hpp"
#include "exai5g/schema.hpp"

namespace exai5g {

namespace {

bool name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ExplanationRequest make_request(std::size_t record_id, std::string cls_name, std::string clause,
                                const Eigen::VectorXd& raw_values, const Eigen::VectorXd& attributions) {
    if (raw_values.size() != attributions.size()) throw ShapeMismatch("make_request: value/attribution widths differ");
    const auto& schema = FeatureSchema::standard();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(attributions.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(attributions(a)) > std::abs(attributions(b));
    });
    ExplanationRequest req{record_id, std::move(cls_name), std::move(clause), {}};
    for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
        const Eigen::Index f = order[k];
        req.top5.push_back({std::string(schema.name(static_cast<std::size_t>(f))), raw_values(f), attributions(f)});
    }
    return req;
}

std::string format_ig_list(const std::vector<FeatureAttribution>& features) {
    std::string out;
    char buf[256];
    for (std::size_t i = 0; i < features.size(); ++i) {
        std::snprintf(buf, sizeof buf, "- %s (Value: %.4f, Attribution: %+.4f)", features[i].name.c_str(),
                      features[i].value, features[i].attribution);
        if (i) out += '\n';
        out += buf;
    }
    return out;
}

std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(tmpl.size() + 512);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto key = tmpl.substr(i + 1, close - i - 1);
                const auto hit = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
                if (hit != values.end()) {
                    out += hit->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::string build_generator_prompt(const ExplanationRequest& req) {
    const std::string sample = req.top5.empty() ? std::string() : req.top5.front().name;
    return render_template(assets::k_generator_prompt_txt, {{"cls_name", req.cls_name},
                                                             {"clause", req.clause},
                                                             {"ig_list", format_ig_list(req.top5)},
                                                             {"sample_feat_name", sample}});
}

std::string build_evaluator_prompt(const std::string& explanation_text) {
    return render_template(assets::k_evaluator_prompt_txt, {{"explanation_text", explanation_text}});
}

std::vector<std::string> referenced_features(std::string_view text, const std::vector<std::string>& names) {
    std::vector<std::pair<std::size_t, std::string>> hits;
    for (const auto& name : names) {
        if (name.empty()) continue;
        for (auto pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
            const bool left_ok = pos == 0 || !(name_char(text[pos - 1]) || text[pos - 1] == '.');
            const std::size_t end = pos + name.size();
            // A trailing '.' is sentence punctuation unless a name character follows it.
            const bool right_ok = end >= text.size() || (!name_char(text[end]) &&
                                                         !(text[end] == '.' && end + 1 < text.size() &&
                                                           name_char(text[end + 1])));
            if (left_ok && right_ok) {
                hits.emplace_back(pos, name);
                break;
            }
        }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> out;
    for (auto& [pos, name] : hits) out.push_back(std::move(name));
    return out;
}

Explanation parse_explanation(const std::string& raw, const ExplanationRequest& req, std::string generator) {
    Explanation e;
    e.raw_text = raw;
    e.generator = std::move(generator);
    e.request = req;
    std::vector<std::string> names;
    for (const auto& f : req.top5) names.push_back(f.name);
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.starts_with("- ")) {
            e.bullets.push_back(trim(std::string_view(t).substr(2)));
            e.bullet_features.push_back(referenced_features(e.bullets.back(), names));
        } else {
            ++e.stray_lines;
        }
    }
    return e;
}

std::string ExplanationRequest::to_json() const {
    nlohmann::ordered_json j;
    j["record_id"] = record_id;
    j["cls_name"] = cls_name;
    j["clause"] = clause;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : top5) arr.push_back({{"name", f.name}, {"value", f.value}, {"attribution", f.attribution}});
    j["top5"] = std::move(arr);
    return j.dump();
}

ExplanationRequest ExplanationRequest::from_json(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        ExplanationRequest r;
        r.record_id = j.at("record_id").get<std::size_t>();
        r.cls_name = j.at("cls_name").get<std::string>();
        r.clause = j.at("clause").get<std::string>();
        for (const auto& f : j.at("top5")) {
            r.top5.push_back({f.at("name").get<std::string>(), f.at("value").get<double>(),
                              f.at("attribution").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("explanation request: ") + e.what());
    }
}

std::string Explanation::to_json() const {
    nlohmann::ordered_json j;
    j["record_id"] = request.record_id;
    j["generator"] = generator;
    j["raw_text"] = raw_text;
    j["bullets"] = bullets;
    return j.dump();
}

}  // namespace exai5g
