#include "cogjam/experiment.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "json.hpp"

#include "cogjam/online.hpp"
#include "cogjam/solver_fixed.hpp"
#include "cogjam/solver_outage.hpp"
#include "cogjam/solver_wf.hpp"
#include "cogjam/util.hpp"

namespace cogjam {

namespace {

using nlohmann::json;

Scenario scenario_from_name(const std::string& name) {
    if (name == "rayleigh") return Scenario::rayleigh;
    if (name == "geometric-colocated") return Scenario::geometric_colocated;
    if (name == "geometric-separate") return Scenario::geometric_separate;
    throw ConfigError("unknown scenario: " + name);
}

GeometryConfig default_geometry(Scenario scenario) {
    GeometryConfig g;
    g.tx = {0.0, 0.0};
    g.rx = {500.0, 0.0};
    g.jammer = {500.0, 500.0};
    g.eaves = scenario == Scenario::geometric_separate ? Vec2{250.0, 500.0} : Vec2{500.0, 500.0};
    g.iota = db_to_linear(-60.0);
    g.d0 = 10.0;
    g.kappa = 3.0;
    g.sic_db = 110.0;
    g.colocated_loopback_db = -15.0;
    g.loopback = LoopbackModel::fixed_gain;
    return g;
}

Vec2 vec2_from(const json& j, const char* key) {
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 2) {
        throw ConfigError(std::string("geometry field must be a [x, y] pair: ") + key);
    }
    return Vec2{arr[0].get<double>(), arr[1].get<double>()};
}

void apply_geometry(const json& j, GeometryConfig& g) {
    if (j.contains("tx")) g.tx = vec2_from(j, "tx");
    if (j.contains("rx")) g.rx = vec2_from(j, "rx");
    if (j.contains("eaves")) g.eaves = vec2_from(j, "eaves");
    if (j.contains("jammer")) g.jammer = vec2_from(j, "jammer");
    if (j.contains("iota_db")) g.iota = db_to_linear(j.at("iota_db").get<double>());
    g.d0 = j.value("d0", g.d0);
    g.kappa = j.value("kappa", g.kappa);
    g.sic_db = j.value("sic_db", g.sic_db);
    g.colocated_loopback_db = j.value("colocated_loopback_db", g.colocated_loopback_db);
    if (j.contains("loopback")) {
        const std::string model = j.at("loopback").get<std::string>();
        if (model == "fixed") {
            g.loopback = LoopbackModel::fixed_gain;
        } else if (model == "rayleigh") {
            g.loopback = LoopbackModel::rayleigh;
        } else {
            throw ConfigError("unknown loopback model: " + model);
        }
    }
}

const std::map<std::string, std::string>& preset_table() {
    static const std::map<std::string, std::string> presets = {
        {"fig2", R"({
  "scenario": "rayleigh", "n_states": 100000, "seed": 7,
  "p_db": 20.0, "q_sweep_db": [0, 5, 10, 15, 20, 25, 30],
  "solvers": ["outage"], "baselines": true, "out_prefix": "fig2"
})"},
        {"fig3", R"({
  "scenario": "rayleigh", "n_states": 10000, "seed": 7,
  "p_db": 20.0, "q_sweep_db": [0, 5, 10, 15, 20, 25, 30],
  "solvers": ["fixed"], "baselines": true, "out_prefix": "fig3"
})"},
        {"fig4", R"({
  "scenario": "rayleigh", "n_states": 10000, "seed": 7,
  "p_db": 20.0, "q_sweep_db": [0, 5, 10, 15, 20, 25, 30],
  "solvers": ["fixed"], "baselines": true, "out_prefix": "fig4"
})"},
        {"fig5", R"({
  "scenario": "rayleigh", "n_states": 3000, "seed": 7,
  "p_db": 20.0, "q_db": 20.0, "beta_grid": 32, "out_prefix": "fig5"
})"},
        {"fig6", R"({
  "scenario": "rayleigh", "n_states": 3000, "seed": 7,
  "p_db": 20.0, "q_sweep_db": [0, 7.5, 15, 22.5, 30],
  "solvers": ["wf"], "baselines": true, "out_prefix": "fig6"
})"},
        {"fig7", R"({
  "scenario": "rayleigh", "n_states": 3000, "seed": 7,
  "p_db": 20.0, "q_sweep_db": [0, 7.5, 15, 22.5, 30],
  "solvers": ["wf"], "baselines": true, "out_prefix": "fig7"
})"},
        {"fig8", R"({
  "scenario": "rayleigh", "n_states": 3000, "seed": 7,
  "q_db": 20.0, "p_sweep_db": [10, 15, 20, 25, 30], "out_prefix": "fig8"
})"},
        {"fig9", R"({
  "scenario": "geometric-colocated", "n_states": 100000, "seed": 7,
  "p_db": 40.0, "noise0_db": -80.0, "noise1_db": -80.0,
  "q_db": 30.0, "q_sweep_db": [30],
  "online": {"n_blocks": 100000}, "out_prefix": "fig9"
})"},
        {"fig10", R"({
  "scenario": "geometric-colocated", "n_states": 100000, "seed": 7,
  "p_db": 40.0, "noise0_db": -80.0, "noise1_db": -80.0,
  "q_db": 30.0, "q_sweep_db": [20, 25, 30, 35, 40, 45],
  "online": {"n_blocks": 100000}, "out_prefix": "fig10"
})"},
        {"fig11", R"({
  "scenario": "geometric-separate", "n_states": 100000, "seed": 7,
  "p_db": 40.0, "noise0_db": -80.0, "noise1_db": -80.0,
  "q_db": 30.0, "q_sweep_db": [20, 25, 30, 35, 40, 45],
  "online": {"n_blocks": 100000}, "out_prefix": "fig11"
})"},
    };
    return presets;
}

std::filesystem::path output_path(const RunOptions& options, const std::string& name) {
    std::filesystem::create_directories(options.out_dir);
    return std::filesystem::path(options.out_dir) / name;
}

std::ofstream open_output(const RunOptions& options, const std::string& name) {
    const auto path = output_path(options, name);
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open output file: " + path.string());
    }
    return out;
}

ExperimentConfig apply_options(ExperimentConfig config, const RunOptions& options) {
    if (options.seed_override) {
        config.seed = options.seed;
    }
    return config;
}

/// Run fn(0..count-1) on up to `threads` workers; results land by index in
/// the caller-provided vector so completed work survives when the first
/// raised error is rethrown.
template <typename Result, typename Fn>
void parallel_map(std::vector<Result>& results, std::size_t count, int threads, Fn&& fn,
                  std::size_t& completed_prefix) {
    results.assign(count, Result{});
    std::vector<std::exception_ptr> errors(count);
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> futures;
        futures.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) return;
                    try {
                        results[i] = fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            }));
        }
        for (auto& f : futures) f.get();
    }
    completed_prefix = count;
    for (std::size_t i = 0; i < count; ++i) {
        if (errors[i]) {
            completed_prefix = i;
            break;
        }
    }
    if (completed_prefix < count) {
        std::rethrow_exception(errors[completed_prefix]);
    }
}

struct SweepRow {
    std::string label;
    double q_db = 0.0;
    EvalReport report;
    bool carry = false;  // cognitive schemes kept monotone across the sweep
};

EvalReport eval_fixed(const StateEnsemble& ensemble, const JammingPolicy& policy, double P,
                      const NoiseModel& noise) {
    return evaluate_policy(ensemble, policy, TxPowerProfile::fixed_power(P, ensemble.size()),
                           noise);
}

EvalReport eval_waterfilled(const StateEnsemble& ensemble, const JammingPolicy& policy, double P,
                            const NoiseModel& noise) {
    const WaterfillProfile wf = waterfill(ensemble, policy, P, noise);
    TxPowerProfile tx;
    tx.p = wf.p;
    tx.mode = TxMode::waterfilling;
    tx.beta = wf.beta;
    return evaluate_policy(ensemble, policy, tx, noise);
}

std::vector<SweepRow> sweep_q_point(const ExperimentConfig& config,
                                    const StateEnsemble& ensemble,
                                    const StateEnsemble& ensemble_nosi, const NoiseModel& noise,
                                    double q_db) {
    const double P = db_to_linear(config.p_db);
    const double Q = db_to_linear(q_db);
    std::vector<SweepRow> rows;
    for (const std::string& solver : config.solvers) {
        if (solver == "outage") {
            const OutageSolution sol = solve_outage(ensemble_nosi, Q, noise, false);
            rows.push_back({"cognitive", q_db, eval_fixed(ensemble_nosi, sol.policy, P, noise),
                            false});
        } else if (solver == "outage_si") {
            const OutageSolution sol = solve_outage(ensemble, Q, noise, true);
            rows.push_back(
                {"cognitive-si", q_db, eval_fixed(ensemble, sol.policy, P, noise), false});
        } else if (solver == "fixed") {
            const FixedPowerSolution sol = solve_fixed(ensemble, P, noise, Q, config.t_tol);
            rows.push_back({"cognitive-fixed", q_db,
                            eval_fixed(ensemble_nosi, sol.policy, P, noise), true});
        } else if (solver == "wf") {
            const WfSolution sol = solve_wf(ensemble, P, noise, Q, config.beta_grid,
                                            config.beta_refine, config.t_tol);
            rows.push_back({"cognitive-wf", q_db,
                            evaluate_policy(ensemble_nosi, sol.policy, sol.tx, noise), true});
        } else {
            throw ConfigError("unknown solver: " + solver);
        }
        if (!config.baselines) continue;
        const bool under_wf = solver == "wf";
        const bool with_si = solver == "outage_si";
        const StateEnsemble& eval_on = with_si ? ensemble : ensemble_nosi;
        const std::string suffix = under_wf ? "-wf" : "";
        const auto add_baseline = [&](JammingPolicy policy) {
            const EvalReport report = under_wf ? eval_waterfilled(eval_on, policy, P, noise)
                                               : eval_fixed(eval_on, policy, P, noise);
            rows.push_back({policy.label + suffix, q_db, report, false});
        };
        add_baseline(baseline_constant(eval_on, Q));
        add_baseline(baseline_onoff(eval_on, Q, noise));
        add_baseline(baseline_passive(eval_on));
    }
    return rows;
}

void write_sweep_rows(std::ofstream& out, const std::vector<std::vector<SweepRow>>& blocks,
                      std::size_t upto) {
    for (std::size_t i = 0; i < upto; ++i) {
        for (const SweepRow& row : blocks[i]) {
            out << eval_report_csv_row(row.label, row.q_db, row.report) << '\n';
            out.flush();
        }
    }
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig config;
    try {
        config.scenario = scenario_from_name(j.value("scenario", std::string("rayleigh")));
        config.geometry = default_geometry(config.scenario);
        if (config.scenario != Scenario::rayleigh) {
            config.p_db = 40.0;
            config.noise0_db = -80.0;
            config.noise1_db = -80.0;
        }
        config.n_states = j.value("n_states", config.n_states);
        config.seed = j.value("seed", config.seed);
        config.p_db = j.value("p_db", config.p_db);
        config.noise0_db = j.value("noise0_db", config.noise0_db);
        config.noise1_db = j.value("noise1_db", config.noise1_db);
        if (j.contains("q_sweep_db")) {
            config.q_sweep_db = j.at("q_sweep_db").get<std::vector<double>>();
        }
        if (j.contains("p_sweep_db")) {
            config.p_sweep_db = j.at("p_sweep_db").get<std::vector<double>>();
        }
        config.q_db = j.value("q_db", config.q_db);
        if (j.contains("solvers")) {
            config.solvers = j.at("solvers").get<std::vector<std::string>>();
        }
        config.baselines = j.value("baselines", config.baselines);
        config.beta_grid = j.value("beta_grid", config.beta_grid);
        config.beta_refine = j.value("beta_refine", config.beta_refine);
        config.t_tol = j.value("t_tol", config.t_tol);
        if (j.contains("online")) {
            const json& o = j.at("online");
            config.online.n_blocks = o.value("n_blocks", config.online.n_blocks);
            config.online.tau_init_factor =
                o.value("tau_init_factor", config.online.tau_init_factor);
            config.online.chi_factor = o.value("chi_factor", config.online.chi_factor);
            config.online.probe_tol = o.value("probe_tol", config.online.probe_tol);
            config.online.probe_cap_factor =
                o.value("probe_cap_factor", config.online.probe_cap_factor);
        }
        if (j.contains("rayleigh")) {
            const json& r = j.at("rayleigh");
            config.rayleigh.var0 = r.value("var0", config.rayleigh.var0);
            config.rayleigh.var1 = r.value("var1", config.rayleigh.var1);
            config.rayleigh.var2 = r.value("var2", config.rayleigh.var2);
        }
        if (j.contains("geometry")) {
            apply_geometry(j.at("geometry"), config.geometry);
        }
        config.out_prefix = j.value("out_prefix", config.out_prefix);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config field: ") + e.what());
    }
    if (config.n_states < 1) {
        throw ConfigError("n_states must be at least 1");
    }
    if (config.beta_grid < 3) {
        throw ConfigError("beta_grid must be at least 3");
    }
    for (const std::string& solver : config.solvers) {
        if (solver != "outage" && solver != "outage_si" && solver != "fixed" && solver != "wf") {
            throw ConfigError("unknown solver: " + solver);
        }
    }
    return config;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : preset_table()) {
        names.push_back(name);
    }
    return names;
}

bool has_preset(const std::string& name) { return preset_table().count(name) > 0; }

std::string preset_json(const std::string& name) {
    const auto it = preset_table().find(name);
    if (it == preset_table().end()) {
        throw ConfigError("unknown preset: " + name);
    }
    return it->second;
}

ExperimentConfig load_preset(const std::string& name) {
    return parse_config_json(preset_json(name));
}

StateEnsemble build_ensemble(const ExperimentConfig& config) {
    if (config.scenario == Scenario::rayleigh) {
        RayleighConfig rc = config.rayleigh;
        rc.n_states = config.n_states;
        return sample_rayleigh(rc, config.seed);
    }
    return sample_geometric(config.geometry, config.n_states, config.seed);
}

NoiseModel noise_model(const ExperimentConfig& config) {
    return NoiseModel{db_to_linear(config.noise0_db), db_to_linear(config.noise1_db)};
}

void run_sweep_q(const ExperimentConfig& config_in, const RunOptions& options) {
    const ExperimentConfig config = apply_options(config_in, options);
    if (config.q_sweep_db.empty()) {
        throw ConfigError("sweep-q needs a non-empty q_sweep_db");
    }
    if (config.solvers.empty()) {
        throw ConfigError("sweep-q needs at least one solver");
    }
    const StateEnsemble ensemble = build_ensemble(config);
    const StateEnsemble ensemble_nosi = zero_si(ensemble);
    const NoiseModel noise = noise_model(config);

    std::ofstream out = open_output(options, config.out_prefix + "_sweep_q.csv");
    out << "label,Q,non_outage,avg_rate_suspicious,avg_rate_eavesdrop,relative_rate,"
           "avg_jam_power\n";

    std::size_t completed = 0;
    std::vector<std::vector<SweepRow>> blocks;
    try {
        parallel_map(
            blocks, config.q_sweep_db.size(), options.threads,
            [&](std::size_t i) {
                return sweep_q_point(config, ensemble, ensemble_nosi, noise,
                                     config.q_sweep_db[i]);
            },
            completed);
    } catch (...) {
        write_sweep_rows(out, blocks, completed);
        throw;
    }

    // Monotone carry for the cognitive delay-tolerant schemes: a smaller
    // budget's policy stays feasible, so its metrics are a floor.
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        for (std::size_t r = 0; r < blocks[i].size(); ++r) {
            SweepRow& row = blocks[i][r];
            if (!row.carry) continue;
            const SweepRow& prev = blocks[i - 1][r];
            if (prev.report.relative_rate > row.report.relative_rate) {
                row.report = prev.report;
            }
        }
    }
    write_sweep_rows(out, blocks, blocks.size());
}

void run_sweep_p(const ExperimentConfig& config_in, const RunOptions& options) {
    const ExperimentConfig config = apply_options(config_in, options);
    if (config.p_sweep_db.empty()) {
        throw ConfigError("sweep-p needs a non-empty p_sweep_db");
    }
    const StateEnsemble ensemble = build_ensemble(config);
    const NoiseModel noise = noise_model(config);
    const double Q = db_to_linear(config.q_db);

    std::ofstream out = open_output(options, config.out_prefix + "_sweep_p.csv");
    out << "P,relative_rate_fixed,relative_rate_wf\n";

    struct Row {
        double fixed = 0.0;
        double wf = 0.0;
    };
    std::size_t completed = 0;
    std::vector<Row> rows;
    const auto flush_rows = [&](std::size_t upto) {
        for (std::size_t i = 0; i < upto; ++i) {
            out << fmt_float(config.p_sweep_db[i]) << ',' << fmt_float(rows[i].fixed) << ','
                << fmt_float(rows[i].wf) << '\n';
            out.flush();
        }
    };
    try {
        parallel_map(
            rows, config.p_sweep_db.size(), options.threads,
            [&](std::size_t i) {
                const double P = db_to_linear(config.p_sweep_db[i]);
                Row row;
                row.fixed = solve_fixed(ensemble, P, noise, Q, config.t_tol).t_star;
                row.wf = solve_wf(ensemble, P, noise, Q, config.beta_grid, config.beta_refine,
                                  config.t_tol)
                             .t_star;
                return row;
            },
            completed);
    } catch (...) {
        flush_rows(completed);
        throw;
    }
    flush_rows(rows.size());
}

void run_beta_scan(const ExperimentConfig& config_in, const RunOptions& options) {
    const ExperimentConfig config = apply_options(config_in, options);
    const StateEnsemble ensemble = build_ensemble(config);
    const NoiseModel noise = noise_model(config);
    const double P = db_to_linear(config.p_db);
    const double Q = db_to_linear(config.q_db);

    const WfSolution sol =
        solve_wf(ensemble, P, noise, Q, config.beta_grid, config.beta_refine, config.t_tol);

    std::ofstream out = open_output(options, config.out_prefix + "_beta_scan.csv");
    out << "beta,t_achieved,feasible_tmax,avg_jam_power\n";
    for (const BetaScanPoint& point : sol.beta_scan) {
        out << fmt_float(point.beta) << ',' << fmt_float(point.t_achieved) << ','
            << fmt_float(point.feasible_tmax) << ',' << fmt_float(point.avg_jam_power) << '\n';
    }
}

void run_online_experiment(const ExperimentConfig& config_in, const RunOptions& options) {
    const ExperimentConfig config = apply_options(config_in, options);
    if (config.n_states < config.online.n_blocks) {
        throw ConfigError("n_states must cover the online horizon");
    }
    const StateEnsemble ensemble = build_ensemble(config);
    const StateEnsemble ensemble_nosi = zero_si(ensemble);
    const NoiseModel noise = noise_model(config);
    const double P = db_to_linear(config.p_db);

    const auto online_config = [&](double Q) {
        OnlineConfig oc;
        oc.n_blocks = config.online.n_blocks;
        oc.tau_init = config.online.tau_init_factor * Q;
        oc.chi = config.online.chi_factor * Q;
        oc.Q = Q;
        oc.probe_tol = config.online.probe_tol;
        oc.probe_cap = config.online.probe_cap_factor * Q;
        return oc;
    };

    // Threshold trace at the headline budget.
    {
        const double Q = db_to_linear(config.q_db);
        const OnlineTrace trace = run_online(ensemble, noise, online_config(Q));
        std::ofstream out = open_output(options, config.out_prefix + "_online_trace.csv");
        out << online_trace_csv(trace);
    }

    if (config.q_sweep_db.empty()) {
        return;
    }
    std::ofstream out = open_output(options, config.out_prefix + "_online_comparison.csv");
    out << "Q,optimal_si,optimal_nosi,online,constant,onoff,passive\n";

    struct Row {
        double optimal_si = 0.0;
        double optimal_nosi = 0.0;
        double online = 0.0;
        double constant = 0.0;
        double onoff = 0.0;
        double passive = 0.0;
    };
    std::size_t completed = 0;
    std::vector<Row> rows;
    const auto flush_rows = [&](std::size_t upto) {
        for (std::size_t i = 0; i < upto; ++i) {
            const Row& r = rows[i];
            out << fmt_float(config.q_sweep_db[i]) << ',' << fmt_float(r.optimal_si) << ','
                << fmt_float(r.optimal_nosi) << ',' << fmt_float(r.online) << ','
                << fmt_float(r.constant) << ',' << fmt_float(r.onoff) << ','
                << fmt_float(r.passive) << '\n';
            out.flush();
        }
    };
    try {
        parallel_map(
            rows, config.q_sweep_db.size(), options.threads,
            [&](std::size_t i) {
                const double Q = db_to_linear(config.q_sweep_db[i]);
                Row row;
                row.optimal_si =
                    eval_fixed(ensemble, solve_outage(ensemble, Q, noise, true).policy, P, noise)
                        .non_outage_prob;
                row.optimal_nosi =
                    eval_fixed(ensemble_nosi, solve_outage(ensemble_nosi, Q, noise, false).policy,
                               P, noise)
                        .non_outage_prob;
                row.online = run_online(ensemble, noise, online_config(Q)).non_outage;
                row.constant =
                    eval_fixed(ensemble, baseline_constant(ensemble, Q), P, noise)
                        .non_outage_prob;
                row.onoff = eval_fixed(ensemble, baseline_onoff(ensemble, Q, noise), P, noise)
                                .non_outage_prob;
                row.passive =
                    eval_fixed(ensemble, baseline_passive(ensemble), P, noise).non_outage_prob;
                return row;
            },
            completed);
    } catch (...) {
        flush_rows(completed);
        throw;
    }
    flush_rows(rows.size());
}

void run_gen_ensemble(const ExperimentConfig& config_in, const RunOptions& options) {
    const ExperimentConfig config = apply_options(config_in, options);
    const StateEnsemble ensemble = build_ensemble(config);
    std::ofstream out = open_output(options, config.out_prefix + "_ensemble.csv");
    write_ensemble_csv(out, ensemble);
}

}  // namespace cogjam
