#include "exai5g/validate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>

#include "json.hpp"

#include "exai5g/assets_data.hpp"
#include "exai5g/errors.hpp"

namespace exai5g {

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Lowercase with whitespace runs folded to one space.
std::string fold(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::optional<std::size_t> find_word(const std::string& hay, const std::string& term) {
    for (auto pos = hay.find(term); pos != std::string::npos; pos = hay.find(term, pos + 1)) {
        const std::size_t end = pos + term.size();
        if ((pos == 0 || !word_char(hay[pos - 1])) && (end == hay.size() || !word_char(hay[end]))) return pos;
    }
    return std::nullopt;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

DirectionLexicon DirectionLexicon::standard() { return from_json(std::string(assets::k_direction_lexicon_json)); }

DirectionLexicon DirectionLexicon::from_json(const std::string& text) {
    DirectionLexicon lex;
    try {
        const auto j = nlohmann::json::parse(text);
        lex.positive = j.at("positive").get<std::vector<std::string>>();
        lex.negative = j.at("negative").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid("validate.lexicon", e.what());
    }
    lex.validate();
    return lex;
}

std::string DirectionLexicon::to_json() const {
    nlohmann::ordered_json j;
    j["positive"] = positive;
    j["negative"] = negative;
    return j.dump(2);
}

void DirectionLexicon::validate() const {
    std::set<std::string> pos;
    for (const auto& t : positive) {
        if (fold(t).empty()) throw ConfigInvalid("validate.lexicon", "empty term");
        pos.insert(fold(t));
    }
    for (const auto& t : negative) {
        if (fold(t).empty()) throw ConfigInvalid("validate.lexicon", "empty term");
        if (pos.contains(fold(t))) throw ConfigInvalid("validate.lexicon", "term '" + t + "' is listed as both directions");
    }
}

std::optional<TermHit> first_direction_term(std::string_view text, const DirectionLexicon& lex, bool* mixed) {
    const std::string hay = fold(text);
    std::optional<TermHit> best;
    bool seen_pos = false;
    bool seen_neg = false;
    auto scan = [&](const std::vector<std::string>& terms, Direction d) {
        for (const auto& t : terms) {
            const auto pos = find_word(hay, fold(t));
            if (!pos) continue;
            (d == Direction::Positive ? seen_pos : seen_neg) = true;
            // Earliest wins; at the same offset the longer phrase wins.
            if (!best || *pos < best->position || (*pos == best->position && t.size() > best->term.size())) {
                best = TermHit{d, t, *pos};
            }
        }
    };
    scan(lex.positive, Direction::Positive);
    scan(lex.negative, Direction::Negative);
    if (mixed) *mixed = seen_pos && seen_neg;
    return best;
}

StructureCheck check_structure(const Explanation& expl) {
    StructureCheck s;
    const std::size_t n = expl.bullets.size();
    if (n < 3 || n > 4) s.reasons.push_back("bullet count " + std::to_string(n));
    if (expl.stray_lines > 0) s.reasons.push_back(std::to_string(expl.stray_lines) + " non-bullet line(s)");
    for (std::size_t b = 0; b < n; ++b) {
        if (expl.bullet_features[b].empty()) {
            s.reasons.push_back("bullet " + std::to_string(b + 1) + " names no top-5 feature: " + expl.bullets[b]);
        }
    }
    s.valid = s.reasons.empty();
    return s;
}

FaithfulnessResult attribution_faithfulness(const Explanation& expl, const DirectionLexicon& lex) {
    FaithfulnessResult r;
    for (std::size_t b = 0; b < expl.bullets.size(); ++b) {
        const auto& feats = expl.bullet_features[b];
        if (feats.empty()) continue;
        bool mixed = false;
        const auto hit = first_direction_term(expl.bullets[b], lex, &mixed);
        if (!hit) continue;
        if (mixed) r.flags.push_back("mixed-direction: bullet " + std::to_string(b + 1));
        const auto& top = expl.request.top5;
        const auto f = std::find_if(top.begin(), top.end(), [&](const FeatureAttribution& x) { return x.name == feats[0]; });
        const double a = f->attribution;
        const bool pass = a == 0.0 || (hit->direction == Direction::Positive ? a > 0.0 : a < 0.0);
        ++r.n_checked;
        if (pass) ++r.n_passed;
    }
    if (r.n_checked == 0) {
        r.score = 1.0;
        r.flags.push_back("no-directional-language");
    } else {
        r.score = double(r.n_passed) / double(r.n_checked);
    }
    return r;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ShapeMismatch("cosine: widths differ");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double semantic_similarity(const std::string& rule_text, const std::string& explanation_text,
                           EmbeddingProvider& embedder) {
    const auto v = embedder.embed({rule_text, explanation_text});
    return cosine(v.at(0), v.at(1));
}

std::optional<int> parse_actionability(std::string_view reply) {
    static const std::regex re(R"(actionability\s+score\s*\**\s*:\s*\**\s*\[?\s*(-?\d+))", std::regex::icase);
    const std::string s(reply);
    std::smatch m;
    if (!std::regex_search(s, m, re)) return std::nullopt;
    const std::string digits = m[1].str();
    if (digits.size() > 3) return std::nullopt;
    const int k = std::stoi(digits);
    if (k < 1 || k > 5) return std::nullopt;
    return k;
}

ActionabilityResult actionability(const Explanation& expl, ChatProvider& judge) {
    ActionabilityResult r;
    r.reply = judge.complete(build_evaluator_prompt(expl.raw_text));
    r.score = parse_actionability(r.reply);
    return r;
}

ValidationReport score_explanation(const Explanation& expl, EmbeddingProvider& embedder, const DirectionLexicon& lex) {
    ValidationReport v;
    v.record_id = expl.request.record_id;
    v.generator = expl.generator;
    const auto s = check_structure(expl);
    v.structural_valid = s.valid;
    v.structure_reasons = s.reasons;
    v.semantic_similarity = semantic_similarity(expl.request.clause, expl.raw_text, embedder);
    const auto f = attribution_faithfulness(expl, lex);
    v.attribution_faithfulness = f.score;
    v.faithfulness_n_checked = f.n_checked;
    v.flags = f.flags;
    return v;
}

std::vector<ValidationReport> evaluate_batch(const std::vector<Explanation>& explanations,
                                             const std::function<ChatProvider&(std::size_t)>& judge_for,
                                             EmbeddingProvider& embedder, const DirectionLexicon& lex,
                                             int max_in_flight) {
    std::vector<ValidationReport> out;
    out.reserve(explanations.size());
    for (const auto& e : explanations) out.push_back(score_explanation(e, embedder, lex));
    const auto judged = bounded_map<ActionabilityResult>(
        explanations.size(), max_in_flight, [&](std::size_t i) { return actionability(explanations[i], judge_for(i)); });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].actionability = judged[i].score;
        out[i].judge_reply = judged[i].reply;
        if (!judged[i].score) out[i].flags.push_back("UnparseableScore");
    }
    return out;
}

std::vector<GeneratorSummary> summarize(const std::vector<ValidationReport>& reports) {
    std::vector<GeneratorSummary> rows;
    std::vector<std::size_t> n_scored;
    std::vector<double> act_sum;
    for (const auto& r : reports) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const GeneratorSummary& g) { return g.generator == r.generator; });
        if (it == rows.end()) {
            rows.push_back({r.generator, 0, 0.0, 0.0, 0.0, std::nullopt, 0});
            n_scored.push_back(0);
            act_sum.push_back(0.0);
            it = rows.end() - 1;
        }
        const auto g = static_cast<std::size_t>(it - rows.begin());
        ++it->n_instances;
        it->struct_valid_pct += r.structural_valid ? 1.0 : 0.0;
        it->semantic_similarity += r.semantic_similarity;
        it->attribution_faithfulness += r.attribution_faithfulness;
        if (r.actionability) {
            act_sum[g] += *r.actionability;
            ++n_scored[g];
        } else {
            ++it->n_unparseable;
        }
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        const double n = double(rows[g].n_instances);
        rows[g].struct_valid_pct = 100.0 * rows[g].struct_valid_pct / n;
        rows[g].semantic_similarity /= n;
        rows[g].attribution_faithfulness /= n;
        if (n_scored[g]) rows[g].actionability = act_sum[g] / double(n_scored[g]);
    }
    return rows;
}

std::string summary_csv(const std::vector<GeneratorSummary>& rows) {
    std::string out =
        "generator,struct_valid_pct,semantic_similarity,attribution_faithfulness,actionability,n_instances,n_unparseable\n";
    for (const auto& r : rows) {
        out += r.generator + "," + fixed(r.struct_valid_pct, 1) + "," + fixed(r.semantic_similarity, 3) + "," +
               fixed(r.attribution_faithfulness, 3) + "," + (r.actionability ? fixed(*r.actionability, 2) : "") + "," +
               std::to_string(r.n_instances) + "," + std::to_string(r.n_unparseable) + "\n";
    }
    return out;
}

std::string summary_json(const std::vector<GeneratorSummary>& rows) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["generator"] = r.generator;
        j["struct_valid_pct"] = r.struct_valid_pct;
        j["semantic_similarity"] = r.semantic_similarity;
        j["attribution_faithfulness"] = r.attribution_faithfulness;
        j["actionability"] = r.actionability ? nlohmann::ordered_json(*r.actionability) : nlohmann::ordered_json();
        j["n_instances"] = r.n_instances;
        j["n_unparseable"] = r.n_unparseable;
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::string ValidationReport::to_json() const {
    nlohmann::ordered_json j;
    j["record_id"] = record_id;
    j["generator"] = generator;
    j["structural_valid"] = structural_valid;
    j["structure_reasons"] = structure_reasons;
    j["semantic_similarity"] = semantic_similarity;
    j["attribution_faithfulness"] = attribution_faithfulness;
    j["faithfulness_n_checked"] = faithfulness_n_checked;
    j["actionability"] = actionability ? nlohmann::ordered_json(*actionability) : nlohmann::ordered_json();
    j["judge_reply"] = judge_reply;
    j["flags"] = flags;
    return j.dump();
}

ValidationReport ValidationReport::from_json(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        ValidationReport v;
        v.record_id = j.at("record_id").get<std::size_t>();
        v.generator = j.at("generator").get<std::string>();
        v.structural_valid = j.at("structural_valid").get<bool>();
        v.structure_reasons = j.at("structure_reasons").get<std::vector<std::string>>();
        v.semantic_similarity = j.at("semantic_similarity").get<double>();
        v.attribution_faithfulness = j.at("attribution_faithfulness").get<double>();
        v.faithfulness_n_checked = j.at("faithfulness_n_checked").get<std::size_t>();
        if (!j.at("actionability").is_null()) v.actionability = j.at("actionability").get<int>();
        v.judge_reply = j.at("judge_reply").get<std::string>();
        v.flags = j.at("flags").get<std::vector<std::string>>();
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("validation record: ") + e.what());
    }
}

}  // namespace exai5g
