#include "exai5g/config.hpp"

#include <set>

#include "json.hpp"

#include "exai5g/ingest.hpp"

namespace exai5g {

namespace {

using nlohmann::json;

/// Reads a JSON object field by field and rejects keys nobody asked for.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigInvalid(path_.empty() ? "<root>" : path_, "expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigInvalid(field(key), e.what());
        }
    }

    template <typename T>
    void get_opt(const char* key, std::optional<T>& out) {
        used_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = std::move(v);
    }

    const json* child(const char* key) {
        used_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.contains(k)) throw ConfigInvalid(field(k), "unknown field");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

LlmConfig read_llm(const json& j, const std::string& path) {
    Reader r(j, path);
    LlmConfig c;
    r.get("name", c.name);
    r.get("endpoint_url", c.endpoint_url);
    r.get("model_name", c.model_name);
    r.get("temperature", c.temperature);
    r.get("max_tokens", c.max_tokens);
    r.get("timeout_s", c.timeout_s);
    r.get("retries", c.retries);
    r.get("backoff_s", c.backoff_s);
    r.get("api_key_env", c.api_key_env);
    r.finish();
    return c;
}

json llm_json(const LlmConfig& c) {
    return {{"name", c.name},         {"endpoint_url", c.endpoint_url}, {"model_name", c.model_name},
            {"temperature", c.temperature}, {"max_tokens", c.max_tokens}, {"timeout_s", c.timeout_s},
            {"retries", c.retries},   {"backoff_s", c.backoff_s},       {"api_key_env", c.api_key_env}};
}

}  // namespace

std::filesystem::path RunConfig::run_dir(int run) const { return paths.out_dir / ("run_" + std::to_string(run)); }

void RunConfig::validate() const {
    if (n_runs < 1) throw ConfigInvalid("n_runs", "must be at least 1");
    if (n_explain_instances < 1) throw ConfigInvalid("n_explain_instances", "must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigInvalid("train_fraction", "must be in (0, 1)");
    if (synth_test_records < 1) throw ConfigInvalid("synth.test_records", "must be at least 1");
    if (paths.out_dir.empty()) throw ConfigInvalid("paths.out_dir", "must not be empty");
    if (paths.raw_train.has_value() != paths.raw_test.has_value()) {
        throw ConfigInvalid("paths.raw_train", "raw_train and raw_test must be given together");
    }
    synth.validate();
    model.validate();
    train.validate();
    tree.validate();
    attribution.validate();
    if (llm.generators.empty()) throw ConfigInvalid("llm.generators", "needs at least one generator");
    if (llm.max_in_flight < 1) throw ConfigInvalid("llm.max_in_flight", "must be at least 1");
    if (llm.mock_judge_score < 0 || llm.mock_judge_score > 5) {
        throw ConfigInvalid("llm.mock_judge_score", "must be 0 (derived) or 1..5");
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < llm.generators.size(); ++i) {
        const auto field = "llm.generators[" + std::to_string(i) + "]";
        llm.generators[i].validate(field);
        if (!names.insert(llm.generators[i].label()).second) throw ConfigInvalid(field + ".name", "duplicate generator");
    }
    llm.judge.validate("llm.judge");
    if (llm.embedder_kind != "tf" && llm.embedder_kind != "remote") {
        throw ConfigInvalid("llm.embedder.kind", "must be 'tf' or 'remote'");
    }
    if (llm.embedder_kind == "remote") llm.embedder.validate("llm.embedder");
    if (bench.n < 1) throw ConfigInvalid("bench.n", "must be at least 1");
    if (mlp.hidden.empty()) throw ConfigInvalid("mlp.hidden", "needs at least one layer");
}

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigInvalid("<root>", std::string("not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    Reader r(root, "");
    r.get("seed", cfg.seed);
    r.get("n_runs", cfg.n_runs);
    r.get("n_explain_instances", cfg.n_explain_instances);
    r.get("train_fraction", cfg.train_fraction);
    r.get("run_baselines", cfg.run_baselines);

    if (const auto* p = r.child("paths")) {
        Reader s(*p, "paths");
        std::string out = cfg.paths.out_dir.string();
        s.get("out_dir", out);
        cfg.paths.out_dir = out;
        std::optional<std::string> v;
        s.get_opt("raw_train", v);
        if (v) cfg.paths.raw_train = *v;
        v.reset();
        s.get_opt("raw_test", v);
        if (v) cfg.paths.raw_test = *v;
        v.reset();
        s.get_opt("lexicon", v);
        if (v) cfg.paths.lexicon = *v;
        s.finish();
    }
    if (const auto* p = r.child("synth")) {
        Reader s(*p, "synth");
        s.get("total_records", cfg.synth.total_records);
        s.get("test_records", cfg.synth_test_records);
        s.get("seed", cfg.synth.seed);
        s.get("geometry_seed", cfg.synth.geometry_seed);
        s.get("noise_fraction", cfg.synth.noise_fraction);
        if (const auto* w = s.child("class_weights")) {
            if (!w->is_object()) throw ConfigInvalid("synth.class_weights", "expected {class: weight}");
            cfg.synth.class_weights.fill(0.0);
            for (const auto& [name, val] : w->items()) {
                const auto cls = parse_class(name);
                if (!cls) throw ConfigInvalid("synth.class_weights." + name, "unknown class");
                if (!val.is_number()) throw ConfigInvalid("synth.class_weights." + name, "expected a number");
                cfg.synth.class_weights[static_cast<std::size_t>(*cls)] = val.get<double>();
            }
        }
        if (const auto* rules = s.child("planted_rules")) {
            if (!rules->is_array()) throw ConfigInvalid("synth.planted_rules", "expected an array");
            cfg.synth.planted_rules.clear();
            for (std::size_t i = 0; i < rules->size(); ++i) {
                const auto field = "synth.planted_rules[" + std::to_string(i) + "]";
                Reader pr((*rules)[i], field);
                std::string cls, op;
                PlantedRule rule{};
                pr.get("class", cls);
                pr.get("feature", rule.feature);
                pr.get("op", op);
                pr.get("threshold", rule.threshold);
                pr.finish();
                const auto c = parse_class(cls);
                if (!c) throw ConfigInvalid(field + ".class", "unknown class '" + cls + "'");
                rule.cls = *c;
                if (op == ">") {
                    rule.op = RuleOp::Greater;
                } else if (op == "<=") {
                    rule.op = RuleOp::LessEqual;
                } else {
                    throw ConfigInvalid(field + ".op", "must be '>' or '<='");
                }
                cfg.synth.planted_rules.push_back(rule);
            }
        }
        s.finish();
    }
    if (const auto* p = r.child("model")) {
        Reader s(*p, "model");
        s.get("d_model", cfg.model.d_model);
        s.get("n_layers", cfg.model.n_layers);
        s.get("n_heads", cfg.model.n_heads);
        s.get("d_ff", cfg.model.d_ff);
        s.finish();
    }
    if (const auto* p = r.child("train")) {
        Reader s(*p, "train");
        s.get("batch_size", cfg.train.batch_size);
        s.get("learning_rate", cfg.train.learning_rate);
        s.get("weight_decay", cfg.train.weight_decay);
        s.get("class_weights", cfg.train.class_weights);
        std::string norm = cfg.train.weight_norm == WeightNorm::Mean ? "mean" : "min";
        s.get("weight_norm", norm);
        if (norm == "mean") {
            cfg.train.weight_norm = WeightNorm::Mean;
        } else if (norm == "min") {
            cfg.train.weight_norm = WeightNorm::Min;
        } else {
            throw ConfigInvalid("train.weight_norm", "must be 'mean' or 'min'");
        }
        s.get("max_epochs", cfg.train.max_epochs);
        s.get("patience", cfg.train.patience);
        s.get("beta1", cfg.train.beta1);
        s.get("beta2", cfg.train.beta2);
        s.get("eps", cfg.train.eps);
        s.finish();
    }
    if (const auto* p = r.child("tree")) {
        Reader s(*p, "tree");
        s.get("max_depth", cfg.tree.max_depth);
        s.get("min_samples_leaf", cfg.tree.min_samples_leaf);
        s.finish();
    }
    if (const auto* p = r.child("attribution")) {
        Reader s(*p, "attribution");
        s.get("steps", cfg.attribution.steps);
        s.get("sample_size", cfg.attribution.sample_size);
        s.finish();
    }
    if (const auto* p = r.child("llm")) {
        Reader s(*p, "llm");
        s.get("mock", cfg.llm.mock);
        s.get("mock_judge_score", cfg.llm.mock_judge_score);
        s.get("max_in_flight", cfg.llm.max_in_flight);
        if (const auto* g = s.child("generators")) {
            if (!g->is_array()) throw ConfigInvalid("llm.generators", "expected an array");
            cfg.llm.generators.clear();
            for (std::size_t i = 0; i < g->size(); ++i) {
                cfg.llm.generators.push_back(read_llm((*g)[i], "llm.generators[" + std::to_string(i) + "]"));
            }
        }
        if (const auto* j = s.child("judge")) cfg.llm.judge = read_llm(*j, "llm.judge");
        if (const auto* e = s.child("embedder")) {
            json rest = *e;
            if (rest.is_object() && rest.contains("kind")) {
                if (!rest["kind"].is_string()) throw ConfigInvalid("llm.embedder.kind", "expected a string");
                cfg.llm.embedder_kind = rest["kind"].get<std::string>();
                rest.erase("kind");
            }
            cfg.llm.embedder = read_llm(rest, "llm.embedder");
        }
        s.finish();
    }
    if (const auto* p = r.child("bench")) {
        Reader s(*p, "bench");
        s.get("n", cfg.bench.n);
        s.get("warmup", cfg.bench.warmup);
        s.finish();
    }
    if (const auto* p = r.child("mlp")) {
        Reader s(*p, "mlp");
        s.get("hidden", cfg.mlp.hidden);
        s.get("learning_rate", cfg.mlp.learning_rate);
        s.get("weight_decay", cfg.mlp.weight_decay);
        s.get("batch_size", cfg.mlp.batch_size);
        s.get("max_epochs", cfg.mlp.max_epochs);
        s.get("patience", cfg.mlp.patience);
        s.finish();
    }
    r.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigInvalid("--config", "file not found: " + path.string());
    return parse_run_config(read_text(path));
}

std::string run_config_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["n_runs"] = cfg.n_runs;
    j["n_explain_instances"] = cfg.n_explain_instances;
    j["train_fraction"] = cfg.train_fraction;
    j["run_baselines"] = cfg.run_baselines;
    j["paths"] = {{"out_dir", cfg.paths.out_dir.string()},
                  {"raw_train", cfg.paths.raw_train ? json(cfg.paths.raw_train->string()) : json()},
                  {"raw_test", cfg.paths.raw_test ? json(cfg.paths.raw_test->string()) : json()},
                  {"lexicon", cfg.paths.lexicon ? json(cfg.paths.lexicon->string()) : json()}};
    nlohmann::ordered_json weights;
    for (std::size_t c = 0; c < kNumClasses; ++c) weights[std::string(class_name(int(c)))] = cfg.synth.class_weights[c];
    auto rules = json::array();
    for (const auto& r : cfg.synth.planted_rules) {
        rules.push_back({{"class", class_name(r.cls)}, {"feature", r.feature}, {"op", op_symbol(r.op)},
                         {"threshold", r.threshold}});
    }
    j["synth"] = {{"total_records", cfg.synth.total_records}, {"test_records", cfg.synth_test_records},
                  {"seed", cfg.synth.seed},                   {"geometry_seed", cfg.synth.geometry_seed},
                  {"noise_fraction", cfg.synth.noise_fraction}, {"class_weights", weights},
                  {"planted_rules", rules}};
    j["model"] = {{"d_model", cfg.model.d_model}, {"n_layers", cfg.model.n_layers},
                  {"n_heads", cfg.model.n_heads}, {"d_ff", cfg.model.d_ff}};
    j["train"] = {{"batch_size", cfg.train.batch_size},     {"learning_rate", cfg.train.learning_rate},
                  {"weight_decay", cfg.train.weight_decay}, {"class_weights", cfg.train.class_weights},
                  {"weight_norm", cfg.train.weight_norm == WeightNorm::Mean ? "mean" : "min"},
                  {"max_epochs", cfg.train.max_epochs},     {"patience", cfg.train.patience},
                  {"beta1", cfg.train.beta1},               {"beta2", cfg.train.beta2},
                  {"eps", cfg.train.eps}};
    j["tree"] = {{"max_depth", cfg.tree.max_depth}, {"min_samples_leaf", cfg.tree.min_samples_leaf}};
    j["attribution"] = {{"steps", cfg.attribution.steps}, {"sample_size", cfg.attribution.sample_size}};
    auto gens = json::array();
    for (const auto& g : cfg.llm.generators) gens.push_back(llm_json(g));
    json emb = llm_json(cfg.llm.embedder);
    emb["kind"] = cfg.llm.embedder_kind;
    j["llm"] = {{"mock", cfg.llm.mock},
                {"mock_judge_score", cfg.llm.mock_judge_score},
                {"max_in_flight", cfg.llm.max_in_flight},
                {"generators", gens},
                {"judge", llm_json(cfg.llm.judge)},
                {"embedder", emb}};
    j["bench"] = {{"n", cfg.bench.n}, {"warmup", cfg.bench.warmup}};
    j["mlp"] = {{"hidden", cfg.mlp.hidden},           {"learning_rate", cfg.mlp.learning_rate},
                {"weight_decay", cfg.mlp.weight_decay}, {"batch_size", cfg.mlp.batch_size},
                {"max_epochs", cfg.mlp.max_epochs},   {"patience", cfg.mlp.patience}};
    return j.dump(2);
}

}  // namespace exai5g
