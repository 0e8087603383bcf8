#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace exai5g {

struct FeatureAttribution {
    std::string name;
    double value = 0.0;
    double attribution = 0.0;
};

struct ExplanationRequest {
    std::size_t record_id = 0;
    std::string cls_name;
    /// Rendered clause of the leaf whose support holds record_id.
    std::string clause;
    /// Sorted by |attribution| descending.
    std::vector<FeatureAttribution> top5;

    std::string to_json() const;
    static ExplanationRequest from_json(const std::string& line);
};

/// Top five features by |attribution|, ties to the lower feature index.
ExplanationRequest make_request(std::size_t record_id, std::string cls_name, std::string clause,
                                const Eigen::VectorXd& raw_values, const Eigen::VectorXd& attributions);

/// One line per feature: `- name (Value: 812.4183, Attribution: +0.1234)`.
std::string format_ig_list(const std::vector<FeatureAttribution>& features);

/// Substitutes `{key}` placeholders in a single pass; unknown keys are left as is.
std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values);

std::string build_generator_prompt(const ExplanationRequest& req);
std::string build_evaluator_prompt(const std::string& explanation_text);

struct Explanation {
    std::string raw_text;
    std::vector<std::string> bullets;
    std::string generator;
    ExplanationRequest request;
    /// Per bullet, the top-5 names it mentions in order of appearance.
    std::vector<std::vector<std::string>> bullet_features;
    /// Non-empty lines that are not bullets.
    std::size_t stray_lines = 0;

    std::string to_json() const;
};

/// Bullets are lines whose trimmed form starts with "- "; the marker is stripped.
Explanation parse_explanation(const std::string& raw, const ExplanationRequest& req, std::string generator = {});

/// Names from `names` that occur in `text` as whole feature tokens, in order of
/// first appearance. `tcp.window_size` does not match inside `tcp.window_size.1`.
std::vector<std::string> referenced_features(std::string_view text, const std::vector<std::string>& names);

}  // namespace exai5g
