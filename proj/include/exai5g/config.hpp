#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "exai5g/attribution.hpp"
#include "exai5g/baselines.hpp"
#include "exai5g/llm.hpp"
#include "exai5g/model.hpp"
#include "exai5g/synth.hpp"
#include "exai5g/train.hpp"
#include "exai5g/tree.hpp"

namespace exai5g {

struct PathsConfig {
    std::filesystem::path out_dir = "runs/desk";
    /// When set, ingest reads these instead of the synth stage output.
    std::optional<std::filesystem::path> raw_train;
    std::optional<std::filesystem::path> raw_test;
    /// Direction lexicon override; the built-in one is used when empty.
    std::optional<std::filesystem::path> lexicon;
};

struct LlmSection {
    /// Use the in-process mock generator and judge instead of HTTP.
    bool mock = true;
    std::vector<LlmConfig> generators{named_llm("mock-generator")};
    LlmConfig judge = named_llm("mock-judge");
    /// Mock judge reply; 0 derives a score from the explanation text.
    int mock_judge_score = 0;
    int max_in_flight = 4;
    /// "tf" for the built-in embedder, "remote" to use `embedder`.
    std::string embedder_kind = "tf";
    LlmConfig embedder;
};

struct BenchConfig {
    std::size_t n = 200;
    std::size_t warmup = 20;
};

struct RunConfig {
    PathsConfig paths;
    std::uint64_t seed = 0;
    int n_runs = 5;
    std::size_t n_explain_instances = 20;
    double train_fraction = 0.8;
    SynthConfig synth;
    /// Rows in the separately drawn synthetic test file.
    std::size_t synth_test_records = 2222;
    ModelConfig model;
    TrainConfig train;
    TreeConfig tree;
    AttributionConfig attribution;
    LlmSection llm;
    BenchConfig bench;
    bool run_baselines = true;
    MlpConfig mlp;

    void validate() const;

    /// Per-run directory, out_dir/run_<i>.
    std::filesystem::path run_dir(int run) const;
    std::uint64_t run_seed(int run) const { return seed + static_cast<std::uint64_t>(run); }
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& cfg);

}  // namespace exai5g
