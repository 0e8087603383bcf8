#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exai5g/explain.hpp"
#include "exai5g/llm.hpp"

namespace exai5g {

struct DirectionLexicon {
    std::vector<std::string> positive;
    std::vector<std::string> negative;

    /// The lexicon shipped with the library.
    static DirectionLexicon standard();
    static DirectionLexicon from_json(const std::string& text);
    std::string to_json() const;
    /// Throws ConfigInvalid when a term is empty or listed on both sides.
    void validate() const;
};

enum class Direction { Positive, Negative };

struct TermHit {
    Direction direction;
    std::string term;
    std::size_t position = 0;
};

/// Earliest lexicon term in `text`, case-insensitive, whole words only.
/// `mixed` is set when terms of both directions occur.
std::optional<TermHit> first_direction_term(std::string_view text, const DirectionLexicon& lex, bool* mixed = nullptr);

struct StructureCheck {
    bool valid = false;
    std::vector<std::string> reasons;
};

/// 3 or 4 bullets, nothing but bullets, every bullet names a top-5 feature.
StructureCheck check_structure(const Explanation& expl);

struct FaithfulnessResult {
    double score = 1.0;
    std::size_t n_checked = 0;
    std::size_t n_passed = 0;
    std::vector<std::string> flags;
};

/// Per bullet: first top-5 feature named and first directional term. Passes when
/// the term's direction matches the attribution sign; zero attribution passes.
FaithfulnessResult attribution_faithfulness(const Explanation& expl, const DirectionLexicon& lex);

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double semantic_similarity(const std::string& rule_text, const std::string& explanation_text,
                           EmbeddingProvider& embedder);

/// First "Actionability Score: k" in the reply (markdown emphasis and brackets
/// tolerated). Empty when absent or outside 1..5.
std::optional<int> parse_actionability(std::string_view reply);

struct ActionabilityResult {
    std::optional<int> score;
    std::string reply;
};

ActionabilityResult actionability(const Explanation& expl, ChatProvider& judge);

struct ValidationReport {
    std::size_t record_id = 0;
    std::string generator;
    bool structural_valid = false;
    std::vector<std::string> structure_reasons;
    double semantic_similarity = 0.0;
    double attribution_faithfulness = 1.0;
    std::size_t faithfulness_n_checked = 0;
    std::optional<int> actionability;
    std::string judge_reply;
    std::vector<std::string> flags;

    std::string to_json() const;
    static ValidationReport from_json(const std::string& line);
};

/// Scores that need no judge call.
ValidationReport score_explanation(const Explanation& expl, EmbeddingProvider& embedder, const DirectionLexicon& lex);

struct GeneratorSummary {
    std::string generator;
    std::size_t n_instances = 0;
    double struct_valid_pct = 0.0;
    double semantic_similarity = 0.0;
    double attribution_faithfulness = 0.0;
    /// Mean over parsed scores; empty when none parsed.
    std::optional<double> actionability;
    std::size_t n_unparseable = 0;
};

/// Scores every explanation; judge calls run with at most `max_in_flight` in flight.
/// `judge_for` maps an explanation index to its judge.
std::vector<ValidationReport> evaluate_batch(const std::vector<Explanation>& explanations,
                                             const std::function<ChatProvider&(std::size_t)>& judge_for,
                                             EmbeddingProvider& embedder, const DirectionLexicon& lex,
                                             int max_in_flight = 4);

/// One row per generator in order of first appearance.
std::vector<GeneratorSummary> summarize(const std::vector<ValidationReport>& reports);
/// generator,struct_valid_pct,semantic_similarity,attribution_faithfulness,actionability,n_instances,n_unparseable
std::string summary_csv(const std::vector<GeneratorSummary>& rows);
std::string summary_json(const std::vector<GeneratorSummary>& rows);

}  // namespace exai5g
