#include "exai5g/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include <openssl/evp.h>

#include "exai5g/attribution.hpp"
#include "exai5g/baselines.hpp"
#include "exai5g/bench.hpp"
#include "exai5g/explain.hpp"
#include "exai5g/ingest.hpp"
#include "exai5g/metrics.hpp"
#include "exai5g/model.hpp"
#include "exai5g/rules.hpp"
#include "exai5g/synth.hpp"
#include "exai5g/train.hpp"
#include "exai5g/tree.hpp"
#include "exai5g/validate.hpp"

namespace exai5g {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 9> kStageNames{"synth",   "ingest",   "train",  "attribute", "rules",
                                                      "explain", "validate", "report", "bench"};

void require(const fs::path& path, std::string_view stage) {
    if (!fs::exists(path)) throw MissingArtifact(std::string(stage), path.string());
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pct_mean_std(const std::vector<double>& values) {
    const auto [m, s] = mean_std(values);
    return fixed(100.0 * m, 2) + "% ± " + fixed(100.0 * s, 2) + "%";
}

std::string padded(std::size_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%08zu", v);
    return buf;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> out;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

ojson read_json(const fs::path& path, std::string_view stage) {
    require(path, stage);
    try {
        return ojson::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

LlmConfig with_endpoint(LlmConfig c, const char* env, const std::string& field) {
    if (c.endpoint_url.empty()) {
        for (const char* name : {env, "EXAI5G_LLM_ENDPOINT"}) {
            if (const char* v = std::getenv(name); v && *v) {
                c.endpoint_url = v;
                break;
            }
        }
    }
    if (c.endpoint_url.empty()) {
        throw ConfigInvalid(field + ".endpoint_url", "not set (config or EXAI5G_LLM_ENDPOINT)");
    }
    return c;
}

std::string markdown_table(const std::string& csv) {
    const RawTable t = parse_csv(csv);
    std::string out = "|";
    for (const auto& h : t.header) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < t.header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& row : t.rows) {
        out += "|";
        for (const auto& c : row) out += " " + c + " |";
        out += "\n";
    }
    return out;
}

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view name) {
    for (std::size_t i = 0; i < kStageNames.size(); ++i) {
        if (kStageNames[i] == name) return static_cast<Stage>(i);
    }
    return std::nullopt;
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> all{Stage::Synth,   Stage::Ingest,   Stage::Train,  Stage::Attribute, Stage::Rules,
                                        Stage::Explain, Stage::Validate, Stage::Report, Stage::Bench};
    return all;
}

std::vector<Stage> parse_stages(std::string_view list) {
    if (list == "all") return all_stages();
    std::vector<Stage> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        auto item = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) {
            const auto s = parse_stage(item);
            if (!s) throw ConfigInvalid("--stages", "unknown stage '" + std::string(item) + "'");
            out.push_back(*s);
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigInvalid("--stages", "no stages given");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> select_explain_instances(const Dataset& test, std::size_t n, std::uint64_t seed) {
    return sample_indices(test.rows(), n, seed);
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("manifest", path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

bool is_volatile_artifact(const fs::path& relative) {
    const auto s = relative.generic_string();
    return s == "metadata.json" || relative.parent_path().filename() == "bench";
}

Pipeline::Pipeline(RunConfig cfg, Logger log) : cfg_(std::move(cfg)), log_(std::move(log)) { cfg_.validate(); }

void Pipeline::note(const std::string& msg) const {
    if (log_) log_(msg);
}

void Pipeline::run(const std::vector<Stage>& stages) {
    std::vector<Stage> ordered = stages;
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
    write_text(cfg_.paths.out_dir / "config.json", run_config_json(cfg_) + "\n");
    for (int r = 0; r < cfg_.n_runs; ++r) {
        for (Stage s : ordered) {
            if (s != Stage::Report) run_stage(s, r);
        }
    }
    if (std::find(ordered.begin(), ordered.end(), Stage::Report) != ordered.end()) run_stage(Stage::Report, 0);
    write_manifest();
}

void Pipeline::run_stage(Stage stage, int run) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    note("[" + std::string(stage_name(stage)) + "] run " + std::to_string(run));
    switch (stage) {
        case Stage::Synth: synth(run); break;
        case Stage::Ingest: ingest(run); break;
        case Stage::Train: train(run); break;
        case Stage::Attribute: attribute(run); break;
        case Stage::Rules: rules(run); break;
        case Stage::Explain: explain(run); break;
        case Stage::Validate: validate(run); break;
        case Stage::Report: report(); break;
        case Stage::Bench: bench(run); break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timings_.push_back({stage == Stage::Report ? -1 : run, std::string(stage_name(stage)), started, secs});
}

void Pipeline::synth(int run) {
    const RunPaths p = paths(run);
    if (cfg_.paths.raw_train) {
        note("  raw data supplied in config; nothing to generate");
        return;
    }
    SynthConfig train_cfg = cfg_.synth;
    SynthConfig test_cfg = cfg_.synth;
    test_cfg.total_records = cfg_.synth_test_records;
    test_cfg.seed = cfg_.synth.seed + 1;
    write_csv(p.raw_train(), to_raw_table(generate(train_cfg)));
    write_csv(p.raw_test(), to_raw_table(generate(test_cfg)));
}

void Pipeline::ingest(int run) {
    const RunPaths p = paths(run);
    const fs::path raw_train = cfg_.paths.raw_train.value_or(p.raw_train());
    const fs::path raw_test = cfg_.paths.raw_test.value_or(p.raw_test());
    require(raw_train, "synth");
    require(raw_test, "synth");
    const auto& schema = FeatureSchema::standard();
    const RawTable train_table = read_csv(raw_train);
    const RawTable test_table = read_csv(raw_test);
    const Vocabulary vocab = Vocabulary::fit(train_table, schema);
    const EncodedTable train_enc = encode(train_table, schema, vocab);
    EncodedTable test_enc = encode(test_table, schema, vocab);
    test_enc.data.provenance = Provenance::Test;
    const auto [tr, va] = stratified_split(train_enc.data, cfg_.train_fraction, cfg_.run_seed(run));
    const ScalerParams scaler = fit_scaler(tr);

    write_text(p.vocab(), vocab.to_json());
    write_text(p.scaler(), scaler.to_json());
    write_dataset(p.train(), tr, schema);
    write_dataset(p.val(), va, schema);
    write_dataset(p.test(), test_enc.data, schema);
    ojson unknown;
    unknown["train"] = train_enc.unknown_counts;
    unknown["test"] = test_enc.unknown_counts;
    write_text(p.dir / "ingest" / "unknown_counts.json", unknown.dump(2) + "\n");
    note("  train " + std::to_string(tr.rows()) + ", val " + std::to_string(va.rows()) + ", test " +
         std::to_string(test_enc.data.rows()));
}

void Pipeline::train(int run) {
    const RunPaths p = paths(run);
    const auto& schema = FeatureSchema::standard();
    for (const auto& f : {p.train(), p.val(), p.test(), p.scaler()}) require(f, "ingest");
    const ScalerParams scaler = ScalerParams::from_json(read_text(p.scaler()));
    const Dataset train_raw = read_dataset(p.train(), schema, Provenance::Train);
    const Dataset val_raw = read_dataset(p.val(), schema, Provenance::Val);
    const Dataset test_raw = read_dataset(p.test(), schema, Provenance::Test);
    const Dataset tr = transform(train_raw, scaler);
    const Dataset va = transform(val_raw, scaler);
    const Dataset te = transform(test_raw, scaler);

    TrainConfig tc = cfg_.train;
    tc.seed = cfg_.run_seed(run);
    auto result = exai5g::train<float>(init_params<float>(cfg_.model, cfg_.run_seed(run)), tc, tr, va,
                                       [&](const EpochRecord& e) {
                                           note("  epoch " + std::to_string(e.epoch) + " loss " + fixed(e.loss, 5) +
                                                " val macro-F1 " + fixed(e.val_macro_f1, 4));
                                       });
    const ModelParams<double> model = cast_params<double>(result.params);
    save_checkpoint(model, p.checkpoint());
    write_text(p.history(), result.history.to_csv());

    const Mat<double> logits = predict_logits_chunked(model, Mat<double>(te.records));
    const std::vector<int> pred = argmax_rows(logits);
    const ClassReport rep = class_report(te.labels, pred);
    const CurveReport curves = roc_pr_points(te.labels, Eigen::MatrixXd(softmax_rows(logits)));
    const double val_f1 = macro_f1(va.labels, exai5g::predict(model, va.records));

    std::string preds = "row,true,pred\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
        preds += std::to_string(i) + "," + std::string(class_name(te.labels[i])) + "," +
                 std::string(class_name(pred[i])) + "\n";
    }
    write_text(p.eval_dir() / "predictions.csv", preds);
    write_text(p.eval_dir() / "class_report.csv", rep.to_csv());
    write_text(p.eval_dir() / "roc_pr.csv", curves.points_csv());
    write_text(p.eval_dir() / "auc.csv", curves.auc_csv());

    ojson m;
    m["test_accuracy"] = rep.accuracy;
    m["test_macro_f1"] = rep.macro.f1;
    m["test_weighted_f1"] = rep.weighted.f1;
    m["val_macro_f1"] = val_f1;
    m["best_epoch"] = result.history.best_epoch;
    m["best_val_macro_f1"] = result.history.best_macro_f1;
    m["epochs_run"] = result.history.epochs.size();
    m["stopped_early"] = result.history.stopped_early;
    m["class_weights"] = result.history.class_weights;
    m["flags"] = rep.flags;
    m["curve_flags"] = curves.flags;
    write_text(p.eval_dir() / "metrics.json", m.dump(2) + "\n");
    note("  best epoch " + std::to_string(result.history.best_epoch) + ", val macro-F1 " + fixed(val_f1, 4) +
         ", test macro-F1 " + fixed(rep.macro.f1, 4));

    if (cfg_.run_baselines) {
        std::vector<BaselineResult> rows;
        rows.push_back(tree_baseline(train_raw, val_raw, test_raw, cfg_.tree));
        MlpConfig mc = cfg_.mlp;
        mc.seed = cfg_.run_seed(run);
        rows.push_back(mlp_baseline(tr, va, te, mc));
        write_text(p.eval_dir() / "baselines.csv", baselines_csv(rows));
    }
}

void Pipeline::attribute(int run) {
    const RunPaths p = paths(run);
    require(p.checkpoint(), "train");
    for (const auto& f : {p.test(), p.scaler()}) require(f, "ingest");
    const auto model = load_checkpoint(p.checkpoint());
    const ScalerParams scaler = ScalerParams::from_json(read_text(p.scaler()));
    const Dataset raw = read_dataset(p.test(), FeatureSchema::standard(), Provenance::Test);
    const Dataset te = transform(raw, scaler);
    AttributionConfig ac = cfg_.attribution;
    ac.seed = cfg_.run_seed(run);
    const ModelTarget target(model);
    const GlobalImportance g = global_importance(target, te, ac);
    write_text(p.attribution_dir() / "global_ranking.csv", g.ranking_csv());
    std::string lines;
    double worst = 0.0;
    for (std::size_t k = 0; k < g.instances.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(g.instances[k]);
        lines += attribution_json(g.attributions[k], g.instances[k], raw.records.row(i).transpose(),
                                  te.records.row(i).transpose()) +
                 "\n";
        worst = std::max(worst, g.attributions[k].completeness_residual);
    }
    write_text(p.attribution_dir() / "instances.jsonl", lines);
    ojson s;
    s["target"] = "pre-softmax logit of the predicted class";
    s["steps"] = ac.steps;
    s["baseline"] = "zeros (standardized space)";
    s["sample_size"] = ac.sample_size;
    s["max_completeness_residual"] = worst;
    write_text(p.attribution_dir() / "summary.json", s.dump(2) + "\n");
    note("  top feature " + g.ranking.front().name);
}

void Pipeline::rules(int run) {
    const RunPaths p = paths(run);
    require(p.checkpoint(), "train");
    for (const auto& f : {p.train(), p.test(), p.scaler()}) require(f, "ingest");
    const auto& schema = FeatureSchema::standard();
    const auto model = load_checkpoint(p.checkpoint());
    const ScalerParams scaler = ScalerParams::from_json(read_text(p.scaler()));
    const Dataset train_raw = read_dataset(p.train(), schema, Provenance::Train);
    const Dataset test_raw = read_dataset(p.test(), schema, Provenance::Test);
    const std::vector<int> pseudo = exai5g::predict(model, transform(train_raw, scaler).records);
    const std::vector<int> model_preds = exai5g::predict(model, transform(test_raw, scaler).records);

    // Thresholds stay in raw feature units: the tree sees unscaled values.
    const DecisionTree tree = fit_tree(train_raw, pseudo, cfg_.tree);
    const RuleSet rs = extract_rules(tree, test_raw.records, model_preds);
    const auto curve = pruning_curve(rs.clauses, model_preds, test_raw.rows());

    write_text(p.tree(), tree.to_json() + "\n");
    write_text(p.rules_dir() / "rules.json", rs.to_json() + "\n");
    write_text(p.rules_dir() / "rules.txt", rs.to_text());
    write_text(p.rules_dir() / "pruning_curve.csv", pruning_curve_csv(curve));

    ojson s;
    s["n_rules"] = rs.metrics.n_rules;
    s["n_nonzero_support"] = rs.metrics.n_nonzero_support;
    s["coverage"] = rs.metrics.coverage;
    s["fidelity"] = rs.metrics.fidelity;
    s["redundancy"] = rs.metrics.redundancy;
    const auto train_pred = tree.predict(train_raw.records);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < pseudo.size(); ++i) agree += train_pred[i] == pseudo[i];
    s["train_fidelity"] = pseudo.empty() ? 0.0 : double(agree) / double(pseudo.size());
    const auto k99 = std::find_if(curve.begin(), curve.end(), [](const PruningPoint& q) { return q.coverage >= 0.99; });
    s["k_coverage_99"] = k99 == curve.end() ? ojson() : ojson(k99->k);
    if (rs.clauses.size() >= 2) {
        RuleSet pruned;
        pruned.clauses = prune_least_supported(rs.clauses);
        pruned.metrics = rule_metrics(pruned.clauses, model_preds, test_raw.rows());
        write_text(p.rules_dir() / "pruned_rules.json", pruned.to_json() + "\n");
        s["pruned"] = {{"n_rules", pruned.metrics.n_rules},
                       {"coverage", pruned.metrics.coverage},
                       {"fidelity", pruned.metrics.fidelity},
                       {"redundancy", pruned.metrics.redundancy}};
    }
    write_text(p.rules_dir() / "summary.json", s.dump(2) + "\n");
    note("  " + std::to_string(rs.metrics.n_rules) + " rules, fidelity " + fixed(rs.metrics.fidelity, 4) +
         ", coverage " + fixed(rs.metrics.coverage, 4));
}

void Pipeline::explain(int run) {
    const RunPaths p = paths(run);
    require(p.checkpoint(), "train");
    require(p.tree(), "rules");
    for (const auto& f : {p.test(), p.scaler()}) require(f, "ingest");
    const auto model = load_checkpoint(p.checkpoint());
    const ScalerParams scaler = ScalerParams::from_json(read_text(p.scaler()));
    const Dataset raw = read_dataset(p.test(), FeatureSchema::standard(), Provenance::Test);
    const Dataset te = transform(raw, scaler);
    const DecisionTree tree = DecisionTree::from_json(read_text(p.tree()));
    const auto clauses = clauses_of(tree);
    const auto seed = cfg_.run_seed(run);

    const auto ids = select_explain_instances(raw, cfg_.n_explain_instances, seed);
    const ModelTarget target(model);
    std::vector<ExplanationRequest> reqs;
    std::string req_lines;
    std::string prompt_lines;
    for (std::size_t id : ids) {
        const auto i = static_cast<Eigen::Index>(id);
        const auto a = integrated_gradients(target, te.records.row(i).transpose(), cfg_.attribution);
        const int leaf = tree.nodes[static_cast<std::size_t>(tree.route(raw.records.row(i)))].leaf_index;
        reqs.push_back(make_request(id, std::string(class_name(a.predicted_class)),
                                    clauses[static_cast<std::size_t>(leaf)].render(), raw.records.row(i).transpose(),
                                    a.values));
        req_lines += reqs.back().to_json() + "\n";
        prompt_lines += ojson{{"record_id", id}, {"prompt", build_generator_prompt(reqs.back())}}.dump() + "\n";
    }
    write_text(p.explain_dir() / "requests.jsonl", req_lines);
    write_text(p.explain_dir() / "prompts.jsonl", prompt_lines);

    AuditLog audit;
    std::string out;
    for (std::size_t g = 0; g < cfg_.llm.generators.size(); ++g) {
        const LlmConfig& gen = cfg_.llm.generators[g];
        const std::string label = gen.label();
        std::optional<LlmConfig> http;
        if (!cfg_.llm.mock) http = with_endpoint(gen, "EXAI5G_LLM_ENDPOINT", "llm.generators[" + std::to_string(g) + "]");
        const auto texts = bounded_map<std::string>(reqs.size(), cfg_.llm.max_in_flight, [&](std::size_t i) {
            const std::string prompt = build_generator_prompt(reqs[i]);
            if (!http) return MockGenerator(fnv1a(label, seed)).complete(prompt);
            return HttpChatClient(*http, &audit, "gen/" + label + "/" + padded(reqs[i].record_id)).complete(prompt);
        });
        for (std::size_t i = 0; i < reqs.size(); ++i) out += parse_explanation(texts[i], reqs[i], label).to_json() + "\n";
        note("  " + label + ": " + std::to_string(texts.size()) + " explanations");
    }
    write_text(p.explain_dir() / "explanations.jsonl", out);
    write_text(p.explain_dir() / "audit.jsonl", audit.dump());
}

void Pipeline::validate(int run) {
    const RunPaths p = paths(run);
    const fs::path req_path = p.explain_dir() / "requests.jsonl";
    const fs::path expl_path = p.explain_dir() / "explanations.jsonl";
    require(req_path, "explain");
    require(expl_path, "explain");
    std::map<std::size_t, ExplanationRequest> reqs;
    for (const auto& line : read_lines(req_path)) {
        auto r = ExplanationRequest::from_json(line);
        reqs.emplace(r.record_id, std::move(r));
    }
    std::vector<Explanation> expls;
    for (const auto& line : read_lines(expl_path)) {
        const auto j = nlohmann::json::parse(line);
        const auto id = j.at("record_id").get<std::size_t>();
        const auto it = reqs.find(id);
        if (it == reqs.end()) throw ParseError("explanation for unknown record " + std::to_string(id));
        expls.push_back(parse_explanation(j.at("raw_text").get<std::string>(), it->second,
                                          j.at("generator").get<std::string>()));
    }

    const DirectionLexicon lex =
        cfg_.paths.lexicon ? DirectionLexicon::from_json(read_text(*cfg_.paths.lexicon)) : DirectionLexicon::standard();
    AuditLog audit;
    std::unique_ptr<EmbeddingProvider> embedder;
    if (cfg_.llm.embedder_kind == "remote") {
        embedder = std::make_unique<HttpEmbedder>(with_endpoint(cfg_.llm.embedder, "EXAI5G_EMBED_ENDPOINT", "llm.embedder"),
                                                  &audit);
    } else {
        embedder = std::make_unique<TfEmbedder>();
    }
    std::optional<LlmConfig> judge_http;
    if (!cfg_.llm.mock) judge_http = with_endpoint(cfg_.llm.judge, "EXAI5G_JUDGE_ENDPOINT", "llm.judge");
    std::vector<std::unique_ptr<ChatProvider>> judges;
    for (const auto& e : expls) {
        if (judge_http) {
            judges.push_back(std::make_unique<HttpChatClient>(
                *judge_http, &audit, "judge/" + e.generator + "/" + padded(e.request.record_id)));
        } else {
            judges.push_back(std::make_unique<MockJudge>(cfg_.llm.mock_judge_score, cfg_.run_seed(run)));
        }
    }
    const auto reports = evaluate_batch(
        expls, [&](std::size_t i) -> ChatProvider& { return *judges[i]; }, *embedder, lex, cfg_.llm.max_in_flight);

    std::string lines;
    for (const auto& r : reports) lines += r.to_json() + "\n";
    const auto summary = summarize(reports);
    write_text(p.validate_dir() / "records.jsonl", lines);
    write_text(p.validate_dir() / "summary.csv", summary_csv(summary));
    write_text(p.validate_dir() / "summary.json", summary_json(summary) + "\n");
    write_text(p.validate_dir() / "audit.jsonl", audit.dump());
    for (const auto& s : summary) {
        note("  " + s.generator + ": struct " + fixed(s.struct_valid_pct, 1) + "%, faithfulness " +
             fixed(s.attribution_faithfulness, 3));
    }
}

void Pipeline::bench(int run) {
    const RunPaths p = paths(run);
    require(p.checkpoint(), "train");
    for (const auto& f : {p.test(), p.scaler()}) require(f, "ingest");
    const auto model = load_checkpoint(p.checkpoint());
    const ScalerParams scaler = ScalerParams::from_json(read_text(p.scaler()));
    const Dataset te = transform(read_dataset(p.test(), FeatureSchema::standard(), Provenance::Test), scaler);
    const LatencyReport lat = latency_bench(model, te, cfg_.bench.n, cfg_.bench.warmup);
    write_text(p.latency(), lat.to_json() + "\n");
    note("  median " + fixed(lat.median_ms, 3) + " ms, p95 " + fixed(lat.p95_ms, 3) + " ms over " +
         std::to_string(lat.samples_ms.size()) + " samples");
}

void Pipeline::report() {
    ojson rep;
    std::string md = "# ExAI5G run report\n\n";
    md += "Runs: " + std::to_string(cfg_.n_runs) + ", base seed " + std::to_string(cfg_.seed) + ", model d_model " +
          std::to_string(cfg_.model.d_model) + " / " + std::to_string(cfg_.model.n_layers) + " layers / " +
          std::to_string(cfg_.model.n_heads) + " heads, tree depth " + std::to_string(cfg_.tree.max_depth) +
          ", min leaf " + std::to_string(cfg_.tree.min_samples_leaf) + ".\n\n";

    std::vector<double> fid, cov, test_f1, val_f1, acc;
    auto runs = ojson::array();
    md += "## Runs\n\n| run | val macro-F1 | test macro-F1 | test accuracy | rules | fidelity | coverage | k for 99% coverage |\n"
          "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
    for (int r = 0; r < cfg_.n_runs; ++r) {
        const RunPaths p = paths(r);
        const ojson m = read_json(p.eval_dir() / "metrics.json", "train");
        const ojson s = read_json(p.rules_dir() / "summary.json", "rules");
        val_f1.push_back(m.at("val_macro_f1").get<double>());
        test_f1.push_back(m.at("test_macro_f1").get<double>());
        acc.push_back(m.at("test_accuracy").get<double>());
        fid.push_back(s.at("fidelity").get<double>());
        cov.push_back(s.at("coverage").get<double>());
        const std::string k99 = s.at("k_coverage_99").is_null() ? "-" : std::to_string(s.at("k_coverage_99").get<int>());
        md += "| " + std::to_string(r) + " | " + fixed(val_f1.back(), 4) + " | " + fixed(test_f1.back(), 4) + " | " +
              fixed(acc.back(), 4) + " | " + std::to_string(s.at("n_rules").get<int>()) + " | " +
              fixed(fid.back(), 4) + " | " + fixed(cov.back(), 4) + " | " + k99 + " |\n";
        runs.push_back({{"run", r}, {"seed", cfg_.run_seed(r)}, {"metrics", m}, {"rules", s}});
    }
    rep["runs"] = std::move(runs);
    const auto ms = [](const std::vector<double>& v) {
        const auto [m, s] = mean_std(v);
        return ojson{{"mean", m}, {"std", s}};
    };
    rep["aggregate"] = {{"val_macro_f1", ms(val_f1)},
                        {"test_macro_f1", ms(test_f1)},
                        {"test_accuracy", ms(acc)},
                        {"fidelity", ms(fid)},
                        {"coverage", ms(cov)}};
    md += "\nAcross " + std::to_string(cfg_.n_runs) + " run(s) (mean ± population std):\n\n";
    md += "- surrogate fidelity: " + pct_mean_std(fid) + "\n";
    md += "- test macro-F1: " + pct_mean_std(test_f1) + "\n";
    md += "- validation macro-F1: " + pct_mean_std(val_f1) + "\n";
    md += "- test accuracy: " + pct_mean_std(acc) + "\n\n";

    const RunPaths p0 = paths(0);
    md += "## Classification report (run 0, test set)\n\n" + markdown_table(read_text(p0.eval_dir() / "class_report.csv"));
    rep["class_report_csv"] = read_text(p0.eval_dir() / "class_report.csv");
    if (fs::exists(p0.eval_dir() / "baselines.csv")) {
        const std::string b = read_text(p0.eval_dir() / "baselines.csv");
        md += "\n## Baselines (run 0)\n\n" + markdown_table(b);
        rep["baselines_csv"] = b;
    }
    if (fs::exists(p0.attribution_dir() / "global_ranking.csv")) {
        RawTable t = parse_csv(read_text(p0.attribution_dir() / "global_ranking.csv"));
        if (t.rows.size() > 10) t.rows.resize(10);
        md += "\n## Global feature importance (run 0, mean |IG|, top 10)\n\n" + markdown_table(format_csv(t));
        rep["global_ranking_top10"] = format_csv(t);
    }
    md += "\n## Surrogate rules (run 0)\n\n```\n" + read_text(p0.rules_dir() / "rules.txt") + "```\n\n";
    const ojson s0 = read_json(p0.rules_dir() / "summary.json", "rules");
    md += "Coverage " + fixed(s0.at("coverage").get<double>(), 4) + ", fidelity " +
          fixed(s0.at("fidelity").get<double>(), 4) + ", redundancy " + fixed(s0.at("redundancy").get<double>(), 4) +
          " (leaf supports of one tree are disjoint, so redundancy is 0 by construction), " +
          std::to_string(s0.at("n_nonzero_support").get<int>()) + " of " + std::to_string(s0.at("n_rules").get<int>()) +
          " rules have nonzero test support.\n";
    if (s0.contains("pruned")) {
        const auto& pr = s0.at("pruned");
        md += "After pruning the least-supported rule: " + std::to_string(pr.at("n_rules").get<int>()) +
              " rules, coverage " + fixed(pr.at("coverage").get<double>(), 4) + ", fidelity " +
              fixed(pr.at("fidelity").get<double>(), 4) + ".\n";
    }
    const std::string curve = read_text(p0.rules_dir() / "pruning_curve.csv");
    md += "\n### Pruning curve (rules added by descending support)\n\n" + markdown_table(curve);
    rep["pruning_curve_csv"] = curve;

    std::vector<ValidationReport> records;
    for (int r = 0; r < cfg_.n_runs; ++r) {
        const fs::path f = paths(r).validate_dir() / "records.jsonl";
        if (!fs::exists(f)) continue;
        for (const auto& line : read_lines(f)) records.push_back(ValidationReport::from_json(line));
    }
    if (!records.empty()) {
        const auto summary = summarize(records);
        md += "\n## Explanation quality per generator\n\n" + markdown_table(summary_csv(summary));
        md += "\nSemantic similarity uses the " +
              std::string(cfg_.llm.embedder_kind == "tf" ? "built-in term-frequency embedder" : "remote embedder") +
              (cfg_.llm.mock ? "; generators and judge are the offline mocks" : "") + ".\n";
        rep["explanations"] = ojson::parse(summary_json(summary));
    }
    md += "\n## Latency\n\nTiming results live in `run_<i>/bench/latency.json`; they vary between runs and are kept out "
          "of this report so that it stays byte-identical under a fixed seed.\n";
    rep["latency_artifacts"] = "run_<i>/bench/latency.json";

    write_text(cfg_.paths.out_dir / "report.md", md);
    write_text(cfg_.paths.out_dir / "report.json", rep.dump(2) + "\n");
}

void Pipeline::write_manifest() const {
    const fs::path root = cfg_.paths.out_dir;
    if (!fs::exists(root)) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

    ojson manifest;
    manifest["format"] = "exai5g-manifest";
    auto stable = ojson::array();
    auto volatile_files = ojson::array();
    for (const auto& rel : files) {
        if (rel == "manifest.json" || rel == "metadata.json") continue;
        ojson entry{{"path", rel.generic_string()},
                    {"sha256", sha256_file(root / rel)},
                    {"bytes", fs::file_size(root / rel)}};
        (is_volatile_artifact(rel) ? volatile_files : stable).push_back(std::move(entry));
    }
    manifest["artifacts"] = std::move(stable);
    write_text(root / "manifest.json", manifest.dump(2) + "\n");

    ojson meta;
    const fs::path meta_path = root / "metadata.json";
    if (fs::exists(meta_path)) meta = ojson::parse(read_text(meta_path), nullptr, false);
    if (!meta.is_object()) meta = ojson::object();
    if (!meta.contains("stages")) meta["stages"] = ojson::array();
    for (const auto& t : timings_) {
        meta["stages"].push_back({{"run", t.run}, {"stage", t.stage}, {"started_utc", t.started_utc}, {"seconds", t.seconds}});
    }
    meta["updated_utc"] = utc_now();
    meta["volatile_artifacts"] = std::move(volatile_files);
    write_text(meta_path, meta.dump(2) + "\n");
}

}  // namespace exai5g
