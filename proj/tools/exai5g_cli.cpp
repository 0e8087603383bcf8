#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "exai5g/config.hpp"
#include "exai5g/errors.hpp"
#include "exai5g/pipeline.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitExternal = 4;

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_runs;
    std::optional<std::string> out_dir;
    bool mock_llm = false;
    bool quiet = false;
};

exai5g::RunConfig resolve(const GlobalOptions& g) {
    exai5g::RunConfig cfg = g.config.empty() ? exai5g::RunConfig{} : exai5g::load_run_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (g.n_runs) cfg.n_runs = *g.n_runs;
    if (g.out_dir) cfg.paths.out_dir = *g.out_dir;
    if (g.mock_llm) cfg.llm.mock = true;
    cfg.validate();
    return cfg;
}

int execute(const GlobalOptions& g, const std::vector<exai5g::Stage>& stages, std::optional<int> only_run) {
    exai5g::Pipeline pipeline(resolve(g), [&](const std::string& msg) {
        if (!g.quiet) std::cerr << msg << '\n';
    });
    if (only_run) {
        if (*only_run < 0 || *only_run >= pipeline.config().n_runs) {
            throw exai5g::ConfigInvalid("--run", "must be in [0, n_runs)");
        }
        for (auto s : stages) pipeline.run_stage(s, *only_run);
        pipeline.write_manifest();
    } else {
        pipeline.run(stages);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explainable intrusion detection pipeline: transformer classifier, IG attributions, "
                 "surrogate rules and LLM explanations"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Base seed; run i uses seed + i");
    app.add_option("--n-runs", g.n_runs, "Number of repeated runs");
    app.add_option("--out", g.out_dir, "Output directory (overrides paths.out_dir)");
    app.add_flag("--mock-llm", g.mock_llm, "Use the offline mock generator and judge");
    app.add_flag("-q,--quiet", g.quiet, "No progress output");

    std::optional<int> only_run;
    std::vector<exai5g::Stage> stages;
    for (auto s : exai5g::all_stages()) {
        const std::string name(exai5g::stage_name(s));
        auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
        if (s != exai5g::Stage::Report) sub->add_option("--run", only_run, "Only this run index");
        sub->callback([&stages, s] { stages = {s}; });
    }
    std::string stage_list = "all";
    auto* pipe = app.add_subcommand("pipeline", "Run several stages in order");
    pipe->add_option("--stages", stage_list, "Comma-separated stages or 'all'");
    pipe->callback([&] { stages = exai5g::parse_stages(stage_list); });

    try {
        app.parse(argc, argv);
        return execute(g, stages, only_run);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    } catch (const exai5g::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const exai5g::MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << '\n';
        return kExitMissing;
    } catch (const exai5g::ExternalServiceError& e) {
        std::cerr << "external service failure: " << e.what() << '\n';
        return kExitExternal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
}
