// Command-line front end: subcommands mirror the experiment runners, configs
// come from --preset (embedded) or --config (JSON file). Exit codes: 0 on
// success, 2 for configuration errors, 3 for solver failures (with a trace
// file left in the output directory).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "cogjam/experiment.hpp"
#include "cogjam/util.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir = "out";
    int threads = 1;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Path to a JSON config file");
    cmd->add_option("--preset", args.preset, "Named preset (fig2..fig11)");
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--threads", args.threads, "Worker threads for sweep points");
    cmd->add_option("--seed", args.seed, "Override the config seed")
        ->each([&args](const std::string&) { args.has_seed = true; });
}

cogjam::ExperimentConfig resolve_config(const CommonArgs& args) {
    if (args.config_path.empty() == args.preset.empty()) {
        throw cogjam::ConfigError("provide exactly one of --config or --preset");
    }
    if (!args.preset.empty()) {
        return cogjam::load_preset(args.preset);
    }
    std::ifstream in(args.config_path);
    if (!in) {
        throw cogjam::ConfigError("cannot read config file: " + args.config_path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return cogjam::parse_config_json(text.str());
}

cogjam::RunOptions resolve_options(const CommonArgs& args) {
    cogjam::RunOptions options;
    options.out_dir = args.out_dir;
    options.threads = args.threads;
    options.seed_override = args.has_seed;
    options.seed = args.seed;
    return options;
}

void write_error_trace(const CommonArgs& args, const std::string& what) {
    std::error_code ec;
    std::filesystem::create_directories(args.out_dir, ec);
    std::ofstream trace(std::filesystem::path(args.out_dir) / "error_trace.txt");
    trace << what << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cognitive jamming experiment driver"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* sweep_q = app.add_subcommand("sweep-q", "Metrics versus the jamming budget");
    CLI::App* sweep_p = app.add_subcommand("sweep-p", "Relative rates versus transmit power");
    CLI::App* beta_scan = app.add_subcommand("beta-scan", "Relative rate versus the water-level dual");
    CLI::App* online = app.add_subcommand("online", "Online threshold trace and comparison");
    CLI::App* gen_ensemble = app.add_subcommand("gen-ensemble", "Emit the fading ensemble as CSV");
    for (CLI::App* cmd : {sweep_q, sweep_p, beta_scan, online, gen_ensemble}) {
        add_common(cmd, args);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const cogjam::ExperimentConfig config = resolve_config(args);
        const cogjam::RunOptions options = resolve_options(args);
        if (sweep_q->parsed()) {
            cogjam::run_sweep_q(config, options);
        } else if (sweep_p->parsed()) {
            cogjam::run_sweep_p(config, options);
        } else if (beta_scan->parsed()) {
            cogjam::run_beta_scan(config, options);
        } else if (online->parsed()) {
            cogjam::run_online_experiment(config, options);
        } else if (gen_ensemble->parsed()) {
            cogjam::run_gen_ensemble(config, options);
        }
    } catch (const cogjam::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        write_error_trace(args, e.what());
        return 3;
    }
    return 0;
}
