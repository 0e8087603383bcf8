#include "exai5g/rules.hpp"

#include <algorithm>
#include <cstdio>
#include <iterator>
#include <numeric>

#include "json.hpp"

#include "exai5g/errors.hpp"

namespace exai5g {

namespace {

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void collect(const DecisionTree& tree, int id, std::vector<Condition>& path, std::vector<RuleClause>& out) {
    const auto& schema = FeatureSchema::standard();
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
        out.push_back(RuleClause{n.leaf_index, id, path, n.cls, {}});
        return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const std::string name = f < schema.size() ? std::string(schema.name(f)) : "f" + std::to_string(f);
    path.push_back({f, name, RuleOp::LessEqual, n.threshold});
    collect(tree, n.left, path, out);
    path.back().op = RuleOp::Greater;
    collect(tree, n.right, path, out);
    path.pop_back();
}

}  // namespace

bool RuleClause::matches(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(row); });
}

std::string RuleClause::render() const {
    std::string out = "class(" + std::string(class_name(predicted_class)) + ") :- ";
    if (conditions.empty()) return out + "true";
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        if (i) out += ", ";
        out += conditions[i].name + " " + std::string(op_symbol(conditions[i].op)) + " " +
               fixed4(conditions[i].threshold);
    }
    return out;
}

std::vector<RuleClause> clauses_of(const DecisionTree& tree) {
    std::vector<RuleClause> out;
    std::vector<Condition> path;
    if (!tree.nodes.empty()) collect(tree, 0, path, out);
    std::sort(out.begin(), out.end(), [](const RuleClause& a, const RuleClause& b) { return a.leaf_index < b.leaf_index; });
    return out;
}

RuleSet extract_rules(const DecisionTree& tree, const Eigen::MatrixXd& test, const std::vector<int>& model_preds) {
    if (static_cast<std::size_t>(test.rows()) != model_preds.size()) {
        throw LengthMismatch("extract_rules: predictions do not match test rows");
    }
    RuleSet rs;
    rs.clauses = clauses_of(tree);
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        const int leaf = tree.nodes[static_cast<std::size_t>(tree.route(test.row(i)))].leaf_index;
        rs.clauses[static_cast<std::size_t>(leaf)].support.push_back(static_cast<std::size_t>(i));
    }
    rs.metrics = rule_metrics(rs.clauses, model_preds, static_cast<std::size_t>(test.rows()));
    return rs;
}

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    const std::size_t uni = a.size() + b.size() - both.size();
    return uni == 0 ? 0.0 : double(both.size()) / double(uni);
}

RuleSetMetrics rule_metrics(const std::vector<RuleClause>& rules, const std::vector<int>& model_preds,
                            std::size_t n_test) {
    RuleSetMetrics m;
    m.n_rules = rules.size();
    std::vector<int> owner(n_test, -1);
    std::size_t covered = 0;
    std::size_t agree = 0;
    for (std::size_t r = 0; r < rules.size(); ++r) {
        if (!rules[r].support.empty()) ++m.n_nonzero_support;
        for (std::size_t i : rules[r].support) {
            if (owner[i] >= 0) continue;
            owner[i] = static_cast<int>(r);
            ++covered;
            if (rules[r].predicted_class == model_preds[i]) ++agree;
        }
    }
    m.coverage = n_test == 0 ? 0.0 : double(covered) / double(n_test);
    m.fidelity = covered == 0 ? 0.0 : double(agree) / double(covered);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < rules.size(); ++a) {
        for (std::size_t b = a + 1; b < rules.size(); ++b) {
            sum += jaccard(rules[a].support, rules[b].support);
            ++pairs;
        }
    }
    m.redundancy = pairs == 0 ? 0.0 : sum / double(pairs);
    return m;
}

std::vector<PruningPoint> pruning_curve(const std::vector<RuleClause>& rules, const std::vector<int>& model_preds,
                                        std::size_t n_test) {
    std::vector<const RuleClause*> order;
    for (const auto& r : rules) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const RuleClause* a, const RuleClause* b) {
        if (a->support.size() != b->support.size()) return a->support.size() > b->support.size();
        return a->leaf_index < b->leaf_index;
    });
    std::vector<char> seen(n_test, 0);
    std::size_t covered = 0;
    std::size_t agree = 0;
    std::vector<PruningPoint> curve;
    for (std::size_t k = 0; k < order.size(); ++k) {
        for (std::size_t i : order[k]->support) {
            if (seen[i]) continue;
            seen[i] = 1;
            ++covered;
            if (order[k]->predicted_class == model_preds[i]) ++agree;
        }
        curve.push_back({k + 1, n_test == 0 ? 0.0 : double(covered) / double(n_test),
                         covered == 0 ? 0.0 : double(agree) / double(covered)});
    }
    return curve;
}

std::string pruning_curve_csv(const std::vector<PruningPoint>& curve) {
    std::string out = "k,coverage,fidelity\n";
    char buf[96];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", p.k, p.coverage, p.fidelity);
        out += buf;
    }
    return out;
}

std::vector<RuleClause> prune_least_supported(const std::vector<RuleClause>& rules) {
    if (rules.size() < 2) throw TooFewRules("pruning needs at least 2 rules, got " + std::to_string(rules.size()));
    std::size_t drop = 0;
    for (std::size_t r = 1; r < rules.size(); ++r) {
        const auto s = rules[r].support.size();
        const auto best = rules[drop].support.size();
        if (s < best || (s == best && rules[r].leaf_index > rules[drop].leaf_index)) drop = r;
    }
    std::vector<RuleClause> out;
    out.reserve(rules.size() - 1);
    for (std::size_t r = 0; r < rules.size(); ++r) {
        if (r != drop) out.push_back(rules[r]);
    }
    return out;
}

std::string RuleSet::to_json() const {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : clauses) {
        nlohmann::ordered_json r;
        r["leaf_index"] = c.leaf_index;
        r["class"] = class_name(c.predicted_class);
        auto conds = nlohmann::ordered_json::array();
        for (const auto& cond : c.conditions) {
            conds.push_back({{"feature", cond.name}, {"op", op_symbol(cond.op)}, {"threshold", cond.threshold}});
        }
        r["conditions"] = std::move(conds);
        r["support_size"] = c.support.size();
        r["text"] = c.render();
        arr.push_back(std::move(r));
    }
    j["rules"] = std::move(arr);
    j["metrics"] = {{"coverage", metrics.coverage},
                    {"fidelity", metrics.fidelity},
                    {"redundancy", metrics.redundancy},
                    {"n_rules", metrics.n_rules},
                    {"n_nonzero_support", metrics.n_nonzero_support}};
    j["notes"] = {"redundancy is the mean pairwise Jaccard index of leaf supports; leaves of one tree are disjoint, "
                  "so it is 0 for an unpruned rule set"};
    return j.dump(1);
}

std::string RuleSet::to_text() const {
    std::string out;
    for (const auto& c : clauses) {
        out += c.render() + "  % support " + std::to_string(c.support.size()) + "\n";
    }
    return out;
}

}  // namespace exai5g
