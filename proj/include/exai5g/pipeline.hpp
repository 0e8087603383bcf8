#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exai5g/config.hpp"
#include "exai5g/dataset.hpp"

namespace exai5g {

enum class Stage { Synth, Ingest, Train, Attribute, Rules, Explain, Validate, Report, Bench };

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);
/// Comma-separated stage names, or "all" for every stage in pipeline order.
std::vector<Stage> parse_stages(std::string_view list);
const std::vector<Stage>& all_stages();

/// Seeded uniform sample of `n` test rows without replacement, ascending.
std::vector<std::size_t> select_explain_instances(const Dataset& test, std::size_t n, std::uint64_t seed);

/// Files every stage writes under a run directory.
struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path raw_train() const { return dir / "data" / "raw_train.csv"; }
    std::filesystem::path raw_test() const { return dir / "data" / "raw_test.csv"; }
    std::filesystem::path vocab() const { return dir / "ingest" / "vocab.json"; }
    std::filesystem::path scaler() const { return dir / "ingest" / "scaler.json"; }
    std::filesystem::path train() const { return dir / "ingest" / "train.csv"; }
    std::filesystem::path val() const { return dir / "ingest" / "val.csv"; }
    std::filesystem::path test() const { return dir / "ingest" / "test.csv"; }
    std::filesystem::path checkpoint() const { return dir / "model" / "checkpoint.json"; }
    std::filesystem::path history() const { return dir / "model" / "history.csv"; }
    std::filesystem::path eval_dir() const { return dir / "eval"; }
    std::filesystem::path attribution_dir() const { return dir / "attribution"; }
    std::filesystem::path rules_dir() const { return dir / "rules"; }
    std::filesystem::path tree() const { return dir / "rules" / "tree.json"; }
    std::filesystem::path explain_dir() const { return dir / "explain"; }
    std::filesystem::path validate_dir() const { return dir / "validate"; }
    std::filesystem::path latency() const { return dir / "bench" / "latency.json"; }
};

/// Runs stages against persisted artifacts under cfg.paths.out_dir.
class Pipeline {
public:
    using Logger = std::function<void(const std::string&)>;

    explicit Pipeline(RunConfig cfg, Logger log = {});

    /// Per run: every listed stage except report, in pipeline order. Then
    /// report once over all runs. Finally refreshes the manifest.
    void run(const std::vector<Stage>& stages);
    /// A single stage for one run (report ignores `run`).
    void run_stage(Stage stage, int run);

    const RunConfig& config() const { return cfg_; }
    RunPaths paths(int run) const { return RunPaths{cfg_.run_dir(run)}; }

    /// Rewrites manifest.json (SHA-256 of every deterministic artifact) and
    /// the metadata.json sidecar (timestamps, volatile files).
    void write_manifest() const;

private:
    void synth(int run);
    void ingest(int run);
    void train(int run);
    void attribute(int run);
    void rules(int run);
    void explain(int run);
    void validate(int run);
    void report();
    void bench(int run);
    void note(const std::string& msg) const;

    RunConfig cfg_;
    Logger log_;
    struct StageTiming {
        int run;
        std::string stage;
        std::string started_utc;
        double seconds;
    };
    std::vector<StageTiming> timings_;
};

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// True for artifacts whose bytes legitimately vary between identical runs.
bool is_volatile_artifact(const std::filesystem::path& relative);

}  // namespace exai5g
