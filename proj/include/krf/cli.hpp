#ifndef KRF_CLI_HPP
#define KRF_CLI_HPP

#include "krf/estimates.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

// Batch front door: strict config parsing, run orchestration, certificate
// reporting and plot-ready CSV emission. Certificates double as the exit
// code so CI can consume runs directly.

namespace krf {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string scenario_name = "ke_fixed_point";
    int n = 2;
    int N = 16;
    double a = 2.0, b = 1.0, T = 1.0;
    std::uint64_t seed = 7;

    double t_end = -1.0;  // < 0: use the scenario default
    double dt_out = 0.5;
    std::vector<double> times;  // explicit schedule; overrides dt_out

    std::string integrator = "rk4";  // rk4 | ros2
    double sigma = 0.9 * 2.8 / 4.0;
    double dt_fixed = 0.0;
    double dt_imex = 0.02;
    double eps_T = 1e-3;

    bool C_u_auto = true;
    double C_u = 0.0;
    double C_v = 10.0;
    double tol_certificate = 1e-6;
    double tol_schwarz = 1e-4;
    double tol_gradient = 1e-6;
    double tol_laplacian = 1e-5;
    double tol_identity = 1e-8;

    bool mon_gradient = true, mon_laplacian = true, mon_schwarz = true,
         mon_fiber = true;
    std::vector<std::string> plateaus;

    std::string output_dir = ".";
    int checkpoint_every = 0;  // every k-th snapshot (0: final only)
};

// Strict parsers: unknown keys are rejected with the offending key named.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg, bool resolved_C_u,
                              double C_u_value);

// Exit codes: 0 all certificates pass, 1 certificate/tolerance failure,
// 2 config error, 3 solver failure.
int cmd_run(const RunConfig& cfg);
int cmd_verify(const std::vector<std::string>& checkpoint_paths,
               const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg, const std::string& axis,
              const std::vector<double>& values);

// Helpers shared with tests.
std::vector<double> resolve_schedule(const RunConfig& cfg, const Scenario& s);
std::string resolve_output_dir(const std::string& dir);  // honors KRFLAB_OUTPUT_ROOT
Scenario scenario_from_config(const RunConfig& cfg);
StepControl control_from_config(const RunConfig& cfg);
void write_series_csv(const std::string& path, const MonitorReport& rep);
void write_summary_json(const std::string& path, const RunConfig& cfg,
                        const Scenario& s, const MonitorReport& rep,
                        const RunResult& run, double wall_s);

}  // namespace krf

#endif
