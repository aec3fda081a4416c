#include "krf/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_config_flags(CLI::App* app, krf::RunConfig& cfg, std::string& config_path,
                      std::string& cu_spec, std::string& plateaus_csv) {
    app->add_option("--config", config_path, "JSON config file");
    app->add_option("--scenario", cfg.scenario_name,
                    "ke_fixed_point | homogeneous | generic_ample | fibration "
                    "| finite_time")
        ->capture_default_str();
    app->add_option("--n", cfg.n, "complex dimension (1 or 2)")
        ->capture_default_str();
    app->add_option("--N", cfg.N, "grid points per real axis (even, >= 8)")
        ->capture_default_str();
    app->add_option("--a", cfg.a, "homogeneous scenario: omega_0 = a I")
        ->capture_default_str();
    app->add_option("--b", cfg.b, "homogeneous scenario: omega_inf = b I")
        ->capture_default_str();
    app->add_option("--T", cfg.T, "finite_time scenario horizon")
        ->capture_default_str();
    app->add_option("--seed", cfg.seed, "scenario RNG seed")
        ->capture_default_str();
    app->add_option("--t-end", cfg.t_end,
                    "simulation horizon (< 0: scenario default)")
        ->capture_default_str();
    app->add_option("--dt-out", cfg.dt_out, "snapshot cadence")
        ->capture_default_str();
    app->add_option("--times", cfg.times, "explicit snapshot times");
    app->add_option("--integrator", cfg.integrator, "rk4 | ros2")
        ->capture_default_str();
    app->add_option("--sigma", cfg.sigma, "explicit stability margin")
        ->capture_default_str();
    app->add_option("--dt-fixed", cfg.dt_fixed, "fixed explicit step (0: auto)")
        ->capture_default_str();
    app->add_option("--dt-imex", cfg.dt_imex, "ros2 step size")
        ->capture_default_str();
    app->add_option("--eps-T", cfg.eps_T, "stop gap before a finite horizon")
        ->capture_default_str();
    app->add_option("--C-u", cu_spec, "u upper-bound constant (default: auto)");
    app->add_option("--C-v", cfg.C_v, "denominator constant for Psi/Phi")
        ->capture_default_str();
    app->add_option("--plateaus", plateaus_csv,
                    "comma list of phi,R_tw,negLapV,Psi,abs_v");
    app->add_option("--output-dir", cfg.output_dir, "output directory")
        ->capture_default_str();
    app->add_option("--checkpoint-every", cfg.checkpoint_every,
                    "checkpoint every k-th snapshot (0: final only)")
        ->capture_default_str();
    app->add_flag("--no-gradient", [&cfg](std::int64_t) { cfg.mon_gradient = false; },
                  "disable the gradient monitor");
    app->add_flag("--no-laplacian", [&cfg](std::int64_t) { cfg.mon_laplacian = false; },
                  "disable the laplacian monitor");
    app->add_flag("--no-schwarz", [&cfg](std::int64_t) { cfg.mon_schwarz = false; },
                  "disable the schwarz monitor");
    app->add_flag("--no-fiber", [&cfg](std::int64_t) { cfg.mon_fiber = false; },
                  "disable the fiberwise-ratio monitor");
}

krf::RunConfig merge_config(const CLI::App* sub, krf::RunConfig flags,
                            const std::string& config_path,
                            const std::string& cu_spec,
                            const std::string& plateaus_csv) {
    krf::RunConfig cfg =
        config_path.empty() ? krf::RunConfig{} : krf::parse_config_file(config_path);
    // command-line flags override file keys
    auto seen = [&](const std::string& name) { return sub->count(name) > 0; };
    if (seen("--scenario")) cfg.scenario_name = flags.scenario_name;
    if (seen("--n")) cfg.n = flags.n;
    if (seen("--N")) cfg.N = flags.N;
    if (seen("--a")) cfg.a = flags.a;
    if (seen("--b")) cfg.b = flags.b;
    if (seen("--T")) cfg.T = flags.T;
    if (seen("--seed")) cfg.seed = flags.seed;
    if (seen("--t-end")) cfg.t_end = flags.t_end;
    if (seen("--dt-out")) cfg.dt_out = flags.dt_out;
    if (seen("--times")) cfg.times = flags.times;
    if (seen("--integrator")) cfg.integrator = flags.integrator;
    if (seen("--sigma")) cfg.sigma = flags.sigma;
    if (seen("--dt-fixed")) cfg.dt_fixed = flags.dt_fixed;
    if (seen("--dt-imex")) cfg.dt_imex = flags.dt_imex;
    if (seen("--eps-T")) cfg.eps_T = flags.eps_T;
    if (seen("--C-v")) cfg.C_v = flags.C_v;
    if (seen("--output-dir")) cfg.output_dir = flags.output_dir;
    if (seen("--checkpoint-every")) cfg.checkpoint_every = flags.checkpoint_every;
    if (sub->count("--no-gradient")) cfg.mon_gradient = false;
    if (sub->count("--no-laplacian")) cfg.mon_laplacian = false;
    if (sub->count("--no-schwarz")) cfg.mon_schwarz = false;
    if (sub->count("--no-fiber")) cfg.mon_fiber = false;
    if (!cu_spec.empty()) {
        if (cu_spec == "auto") {
            cfg.C_u_auto = true;
        } else {
            cfg.C_u_auto = false;
            cfg.C_u = std::stod(cu_spec);
        }
    }
    if (!plateaus_csv.empty()) {
        cfg.plateaus.clear();
        std::string cur;
        for (char ch : plateaus_csv + ",") {
            if (ch == ',') {
                if (!cur.empty()) cfg.plateaus.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
    }
    if (cfg.integrator != "rk4" && cfg.integrator != "ros2")
        throw krf::ConfigError("integrator must be rk4 or ros2");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"krflab: a numerical laboratory for the normalized "
                 "Kahler-Ricci flow at the metric-potential level"};
    app.require_subcommand(1);

    krf::RunConfig flags_run, flags_verify, flags_sweep;
    std::string cfg_run, cfg_verify, cfg_sweep;
    std::string cu_run, cu_verify, cu_sweep;
    std::string pl_run, pl_verify, pl_sweep;

    CLI::App* run = app.add_subcommand(
        "run", "integrate a scenario, evaluate monitors, emit certificates");
    add_config_flags(run, flags_run, cfg_run, cu_run, pl_run);

    CLI::App* verify = app.add_subcommand(
        "verify", "re-verify stored checkpoints against all monitors");
    std::vector<std::string> checkpoints;
    verify->add_option("checkpoints", checkpoints, "checkpoint files")
        ->required();
    add_config_flags(verify, flags_verify, cfg_verify, cu_verify, pl_verify);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "run a config across an axis and emit convergence ratios");
    std::string axis;
    std::vector<double> values;
    sweep->add_option("--axis", axis, "N | dt | a | b | T | seed")->required();
    sweep->add_option("--values", values, "axis values");
    add_config_flags(sweep, flags_sweep, cfg_sweep, cu_sweep, pl_sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            return krf::cmd_run(
                merge_config(run, flags_run, cfg_run, cu_run, pl_run));
        }
        if (verify->parsed()) {
            return krf::cmd_verify(
                checkpoints,
                merge_config(verify, flags_verify, cfg_verify, cu_verify,
                             pl_verify));
        }
        if (sweep->parsed()) {
            return krf::cmd_sweep(
                merge_config(sweep, flags_sweep, cfg_sweep, cu_sweep, pl_sweep),
                axis, values);
        }
    } catch (const krf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const krf::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const krf::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 2;
    } catch (const krf::GridError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const krf::CertificateError& e) {
        std::cerr << "certificate abort: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
