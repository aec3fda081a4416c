#include "krf/cli.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace krf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                const std::vector<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) ==
            allowed.end())
            throw ConfigError("unknown config key '" + where + it.key() + "'");
    }
}

double num(const json& j, const char* key, double dflt) {
    return j.contains(key) ? j.at(key).get<double>() : dflt;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

json cert_to_json(const CertificateResult& c) {
    json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["applicable"] = c.applicable;
    j["review_only"] = c.review_only;
    j["margin"] = c.margin;
    j["witness"] = {{"t", c.witness_t},
                    {"point", c.witness_point},
                    {"value", c.witness_value}};
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

void print_certificates(const MonitorReport& rep) {
    for (const auto& c : rep.certificates) {
        std::string status = !c.applicable ? "SKIP"
                             : c.pass      ? "PASS"
                                           : "FAIL";
        if (c.review_only && c.applicable) status += " (review)";
        std::cout << "  [" << status << "] " << c.name;
        if (c.applicable) std::cout << "  margin=" << c.margin;
        if (!c.note.empty()) std::cout << "  (" << c.note << ")";
        std::cout << "\n";
    }
}

MonitorOptions options_from_config(const RunConfig& cfg) {
    MonitorOptions opt;
    opt.gradient = cfg.mon_gradient;
    opt.laplacian = cfg.mon_laplacian;
    opt.schwarz = cfg.mon_schwarz;
    opt.fiber = cfg.mon_fiber;
    opt.plateaus = cfg.plateaus;
    return opt;
}

CertificateConstants constants_for(const RunConfig& cfg, const Scenario& s,
                                   double t_end) {
    CertificateConstants cc;
    cc.C_u = cfg.C_u_auto ? compute_C_u(s, t_end) : cfg.C_u;
    cc.C_v = cfg.C_v;
    cc.tol_certificate = cfg.tol_certificate;
    cc.tol_schwarz = cfg.tol_schwarz;
    cc.tol_gradient = cfg.tol_gradient;
    cc.tol_laplacian = cfg.tol_laplacian;
    cc.tol_identity = cfg.tol_identity;
    return cc;
}

}  // namespace

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    check_keys(j, "",
               {"scenario", "t_end", "schedule", "integrator", "sigma",
                "dt_fixed", "dt_imex", "eps_T", "constants", "monitors",
                "output_dir", "checkpoint_every"});
    if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        check_keys(s, "scenario.", {"name", "n", "N", "a", "b", "T", "seed"});
        if (s.contains("name")) cfg.scenario_name = s.at("name").get<std::string>();
        cfg.n = int(num(s, "n", cfg.n));
        cfg.N = int(num(s, "N", cfg.N));
        cfg.a = num(s, "a", cfg.a);
        cfg.b = num(s, "b", cfg.b);
        cfg.T = num(s, "T", cfg.T);
        if (s.contains("seed")) cfg.seed = s.at("seed").get<std::uint64_t>();
    }
    cfg.t_end = num(j, "t_end", cfg.t_end);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        check_keys(s, "schedule.", {"dt_out", "times"});
        cfg.dt_out = num(s, "dt_out", cfg.dt_out);
        if (s.contains("times"))
            cfg.times = s.at("times").get<std::vector<double>>();
    }
    if (j.contains("integrator"))
        cfg.integrator = j.at("integrator").get<std::string>();
    cfg.sigma = num(j, "sigma", cfg.sigma);
    cfg.dt_fixed = num(j, "dt_fixed", cfg.dt_fixed);
    cfg.dt_imex = num(j, "dt_imex", cfg.dt_imex);
    cfg.eps_T = num(j, "eps_T", cfg.eps_T);
    if (j.contains("constants")) {
        const json& c = j.at("constants");
        check_keys(c, "constants.",
                   {"C_u", "C_v", "tol_certificate", "tol_schwarz",
                    "tol_gradient", "tol_laplacian", "tol_identity"});
        if (c.contains("C_u")) {
            if (c.at("C_u").is_string()) {
                if (c.at("C_u").get<std::string>() != "auto")
                    throw ConfigError("constants.C_u must be a number or \"auto\"");
                cfg.C_u_auto = true;
            } else {
                cfg.C_u_auto = false;
                cfg.C_u = c.at("C_u").get<double>();
            }
        }
        cfg.C_v = num(c, "C_v", cfg.C_v);
        cfg.tol_certificate = num(c, "tol_certificate", cfg.tol_certificate);
        cfg.tol_schwarz = num(c, "tol_schwarz", cfg.tol_schwarz);
        cfg.tol_gradient = num(c, "tol_gradient", cfg.tol_gradient);
        cfg.tol_laplacian = num(c, "tol_laplacian", cfg.tol_laplacian);
        cfg.tol_identity = num(c, "tol_identity", cfg.tol_identity);
    }
    if (j.contains("monitors")) {
        const json& m = j.at("monitors");
        check_keys(m, "monitors.",
                   {"gradient", "laplacian", "schwarz", "fiber", "plateaus"});
        if (m.contains("gradient")) cfg.mon_gradient = m.at("gradient").get<bool>();
        if (m.contains("laplacian")) cfg.mon_laplacian = m.at("laplacian").get<bool>();
        if (m.contains("schwarz")) cfg.mon_schwarz = m.at("schwarz").get<bool>();
        if (m.contains("fiber")) cfg.mon_fiber = m.at("fiber").get<bool>();
        if (m.contains("plateaus"))
            cfg.plateaus = m.at("plateaus").get<std::vector<std::string>>();
    }
    if (j.contains("output_dir"))
        cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.checkpoint_every = int(num(j, "checkpoint_every", 0));
    if (cfg.integrator != "rk4" && cfg.integrator != "ros2")
        throw ConfigError("integrator must be rk4 or ros2");
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const RunConfig& cfg, bool resolved_C_u, double C_u_value) {
    json j;
    j["scenario"] = {{"name", cfg.scenario_name}, {"n", cfg.n}, {"N", cfg.N},
                     {"a", cfg.a},                {"b", cfg.b}, {"T", cfg.T},
                     {"seed", cfg.seed}};
    j["t_end"] = cfg.t_end;
    if (cfg.times.empty())
        j["schedule"] = {{"dt_out", cfg.dt_out}};
    else
        j["schedule"] = {{"times", cfg.times}};
    j["integrator"] = cfg.integrator;
    j["sigma"] = cfg.sigma;
    j["dt_fixed"] = cfg.dt_fixed;
    j["dt_imex"] = cfg.dt_imex;
    j["eps_T"] = cfg.eps_T;
    j["constants"] = {{"C_u", resolved_C_u
                                  ? json(C_u_value)
                                  : (cfg.C_u_auto ? json("auto") : json(cfg.C_u))},
                      {"C_v", cfg.C_v},
                      {"tol_certificate", cfg.tol_certificate},
                      {"tol_schwarz", cfg.tol_schwarz},
                      {"tol_gradient", cfg.tol_gradient},
                      {"tol_laplacian", cfg.tol_laplacian},
                      {"tol_identity", cfg.tol_identity}};
    j["monitors"] = {{"gradient", cfg.mon_gradient},
                     {"laplacian", cfg.mon_laplacian},
                     {"schwarz", cfg.mon_schwarz},
                     {"fiber", cfg.mon_fiber},
                     {"plateaus", cfg.plateaus}};
    j["output_dir"] = cfg.output_dir;
    j["checkpoint_every"] = cfg.checkpoint_every;
    return j;
}

Scenario scenario_from_config(const RunConfig& cfg) {
    return make_scenario(cfg.scenario_name, cfg.n, cfg.N, cfg.a, cfg.b, cfg.T,
                         cfg.seed);
}

StepControl control_from_config(const RunConfig& cfg) {
    StepControl ctl;
    ctl.sigma = cfg.sigma;
    ctl.dt_fixed = cfg.dt_fixed;
    ctl.dt_imex = cfg.dt_imex;
    ctl.eps_T = cfg.eps_T;
    ctl.integrator =
        cfg.integrator == "ros2" ? Integrator::ROS2 : Integrator::RK4;
    return ctl;
}

std::vector<double> resolve_schedule(const RunConfig& cfg, const Scenario& s) {
    if (!cfg.times.empty()) {
        for (std::size_t i = 0; i + 1 < cfg.times.size(); ++i)
            if (!(cfg.times[i] < cfg.times[i + 1]))
                throw ConfigError("schedule.times must be strictly increasing");
        if (cfg.times.front() < 0.0)
            throw ConfigError("schedule.times must start at t >= 0");
        return cfg.times;
    }
    const double t_end = cfg.t_end >= 0.0 ? cfg.t_end : s.t_end_default;
    if (cfg.dt_out <= 0.0) throw ConfigError("schedule.dt_out must be > 0");
    std::vector<double> times;
    for (double t = 0.0; t < t_end - 1e-12; t += cfg.dt_out)
        times.push_back(t);
    times.push_back(t_end);
    return times;
}

std::string resolve_output_dir(const std::string& dir) {
    fs::path p(dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("KRFLAB_OUTPUT_ROOT"))
            p = fs::path(root) / p;
    }
    fs::create_directories(p);
    return p.string();
}

void write_series_csv(const std::string& path, const MonitorReport& rep) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << "# krflab series v1\n";
    f << "t,sup_u,sup_udot,sup_v,min_v,sup_phi,sup_Psi,sup_negLapV,sup_R_tw,"
         "res_first_tderiv,res_v_evolution,res_scalar_id1,res_scalar_id2,"
         "res_scalar_id2_fd,res_gradient_defect,res_laplacian,"
         "schwarz_logphi_margin,fiber_chain_err,spectral_tail,dt\n";
    for (const auto& r : rep.rows) {
        f << fmt(r.t) << ',' << fmt(r.sup_u) << ',' << fmt(r.sup_udot) << ','
          << fmt(r.sup_v) << ',' << fmt(r.min_v) << ',' << fmt(r.sup_phi)
          << ',' << fmt(r.sup_Psi) << ',' << fmt(r.sup_negLapV) << ','
          << fmt(r.sup_R_tw) << ',' << fmt(r.res_first_tderiv) << ','
          << fmt(r.res_v_evolution) << ',' << fmt(r.res_scalar_id1) << ','
          << fmt(r.res_scalar_id2) << ',' << fmt(r.res_scalar_id2_fd) << ','
          << fmt(r.res_gradient_defect) << ',' << fmt(r.res_laplacian) << ','
          << fmt(r.schwarz_logphi_margin) << ',' << fmt(r.fiber_chain_err)
          << ',' << fmt(r.spectral_tail) << ',' << fmt(r.dt) << '\n';
    }
}

void write_summary_json(const std::string& path, const RunConfig& cfg,
                        const Scenario& s, const MonitorReport& rep,
                        const RunResult& run, double wall_s) {
    json j;
    j["format"] = "krflab summary v1";
    RunConfig resolved = cfg;
    resolved.t_end = cfg.t_end >= 0.0 ? cfg.t_end : s.t_end_default;
    j["config"] = config_to_json(resolved, true, rep.constants.C_u);
    j["constants"] = {{"C_u", rep.constants.C_u},
                      {"C_v", rep.constants.C_v},
                      {"tol_certificate", rep.constants.tol_certificate},
                      {"tol_schwarz", rep.constants.tol_schwarz},
                      {"tol_gradient", rep.constants.tol_gradient},
                      {"tol_laplacian", rep.constants.tol_laplacian},
                      {"tol_identity", rep.constants.tol_identity}};
    j["termination"] = run.termination == RunTermination::HorizonReached
                           ? "horizon_reached"
                           : "completed";
    j["total_steps"] = run.total_steps;
    j["wall_time_s"] = wall_s;
    json certs = json::array();
    for (const auto& c : rep.certificates) certs.push_back(cert_to_json(c));
    j["certificates"] = certs;
    j["all_pass"] = rep.all_pass();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

int cmd_run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string outdir = resolve_output_dir(cfg.output_dir);
    const Scenario s = scenario_from_config(cfg);
    validate_scenario(s);
    const std::vector<double> schedule = resolve_schedule(cfg, s);
    const double t_end = schedule.back();
    const CertificateConstants cc = constants_for(cfg, s, t_end);
    const StepControl ctl = control_from_config(cfg);

    RunResult rr;
    try {
        rr = run(s, schedule, ctl);
    } catch (const RunFailure& e) {
        const std::string ckpt = outdir + "/checkpoint_last.krfl";
        if (!e.partial.snapshots.empty())
            write_checkpoint(ckpt, e.partial.snapshots.back());
        std::cerr << "solver failure: " << e.what()
                  << "\nlast checkpoint: " << ckpt << "\n";
        return 3;
    }

    const MonitorReport rep = evaluate_monitors(s, rr, cc, options_from_config(cfg));

    for (std::size_t i = 0; i < rr.snapshots.size(); ++i) {
        const bool cadence = cfg.checkpoint_every > 0 &&
                             (i % std::size_t(cfg.checkpoint_every)) == 0;
        if (cadence)
            write_checkpoint(outdir + "/checkpoint_" + std::to_string(i) +
                                 ".krfl",
                             rr.snapshots[i]);
    }
    if (!rr.snapshots.empty())
        write_checkpoint(outdir + "/checkpoint_final.krfl",
                         rr.snapshots.back());

    write_series_csv(outdir + "/series.csv", rep);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_summary_json(outdir + "/summary.json", cfg, s, rep, rr, wall);

    std::cout << "scenario " << s.name << " (n=" << s.spec.n
              << ", N=" << s.spec.N << "), " << rr.snapshots.size()
              << " snapshots, " << rr.total_steps << " steps, "
              << (rr.termination == RunTermination::HorizonReached
                      ? "horizon reached"
                      : "completed")
              << "\n";
    print_certificates(rep);
    return rep.all_pass() ? 0 : 1;
}

int cmd_verify(const std::vector<std::string>& checkpoint_paths,
               const RunConfig& cfg) {
    const Scenario s = scenario_from_config(cfg);
    validate_scenario(s);

    RunResult rr;
    for (const std::string& path : checkpoint_paths) {
        const CheckpointData data = read_checkpoint(path);
        rr.snapshots.push_back(state_from_checkpoint(s, data));
    }
    std::sort(rr.snapshots.begin(), rr.snapshots.end(),
              [](const FlowState& x, const FlowState& y) { return x.t < y.t; });

    double t_end = rr.snapshots.empty() ? 1.0 : rr.snapshots.back().t;
    const CertificateConstants cc = constants_for(cfg, s, std::max(t_end, 1.0));
    const MonitorReport rep =
        evaluate_monitors(s, rr, cc, options_from_config(cfg));

    std::cout << "t,res_v_evolution,res_scalar_id1,res_scalar_id2,"
                 "res_first_tderiv,res_gradient_defect,res_laplacian\n";
    for (const auto& r : rep.rows)
        std::cout << fmt(r.t) << ',' << fmt(r.res_v_evolution) << ','
                  << fmt(r.res_scalar_id1) << ',' << fmt(r.res_scalar_id2)
                  << ',' << fmt(r.res_first_tderiv) << ','
                  << fmt(r.res_gradient_defect) << ',' << fmt(r.res_laplacian)
                  << "\n";
    print_certificates(rep);
    return rep.all_pass() ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis,
              const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep needs a non-empty value list");
    if (axis != "N" && axis != "dt" && axis != "a" && axis != "b" &&
        axis != "T" && axis != "seed")
        throw ConfigError("sweep axis must be one of N, dt, a, b, T, seed");

    const std::string outdir = resolve_output_dir(cfg.output_dir);
    struct Point {
        double value;
        double res_id1, res_id2, res_id2_fd, res_grad, res_lap, res_first;
        double final_diff;  // sup |u_final - previous u_final| (same grids)
        bool pass;
    };
    std::vector<Point> points;
    Eigen::ArrayXd prev_final;
    int prev_N = -1;
    bool all_ok = true;

    for (double value : values) {
        RunConfig c = cfg;
        std::ostringstream dir;
        dir << outdir << "/sweep_" << axis << "_" << value;
        c.output_dir = dir.str();
        if (axis == "N") {
            c.N = int(value);
            // keep the snapshot cadence matched to each grid's stability step
            const double N0 = values.front();
            c.dt_out = cfg.dt_out * (N0 * N0) / (value * value);
        }
        if (axis == "dt") c.dt_fixed = value;
        if (axis == "a") c.a = value;
        if (axis == "b") c.b = value;
        if (axis == "T") c.T = value;
        if (axis == "seed") c.seed = std::uint64_t(value);

        const Scenario s = scenario_from_config(c);
        validate_scenario(s);
        std::vector<double> schedule = resolve_schedule(c, s);
        const CertificateConstants cc = constants_for(c, s, schedule.back());
        RunResult rr;
        try {
            rr = run(s, schedule, control_from_config(c));
        } catch (const RunFailure& e) {
            std::cerr << "sweep point " << value << " failed: " << e.what()
                      << "\n";
            return 3;
        }
        const MonitorReport rep =
            evaluate_monitors(s, rr, cc, options_from_config(c));
        resolve_output_dir(c.output_dir);
        write_series_csv(c.output_dir + "/series.csv", rep);
        write_summary_json(c.output_dir + "/summary.json", c, s, rep, rr, 0.0);

        Point p{};
        p.value = value;
        p.res_id1 = p.res_id2 = p.res_id2_fd = p.res_grad = p.res_lap =
            p.res_first = 0.0;
        for (const auto& r : rep.rows) {
            auto acc = [](double& dst, double x) {
                if (!std::isnan(x)) dst = std::max(dst, x);
            };
            acc(p.res_id1, r.res_scalar_id1);
            acc(p.res_id2, r.res_scalar_id2);
            acc(p.res_id2_fd, r.res_scalar_id2_fd);
            acc(p.res_grad, r.res_gradient_defect);
            acc(p.res_lap, r.res_laplacian);
            acc(p.res_first, r.res_first_tderiv);
        }
        const Eigen::ArrayXd ufinal = rr.snapshots.back().u.values;
        if (prev_N == s.spec.N && prev_final.size() == ufinal.size())
            p.final_diff = (ufinal - prev_final).abs().maxCoeff();
        else
            p.final_diff = std::numeric_limits<double>::quiet_NaN();
        prev_final = ufinal;
        prev_N = s.spec.N;
        p.pass = rep.all_pass();
        all_ok = all_ok && p.pass;
        points.push_back(p);
    }

    std::ofstream f(outdir + "/sweep.csv", std::ios::trunc);
    f << "# krflab sweep v1\n";
    f << "axis,value,res_scalar_id1,res_scalar_id2,res_scalar_id2_fd,"
         "res_gradient_defect,res_laplacian,res_first_tderiv,final_diff,"
         "ratio_id2_fd,ratio_gradient,ratio_final_diff,pass\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point& p = points[i];
        auto ratio = [&](double prev, double cur) {
            if (i == 0 || std::isnan(prev) || std::isnan(cur) || cur == 0.0)
                return std::numeric_limits<double>::quiet_NaN();
            return prev / cur;
        };
        const Point* q = i > 0 ? &points[i - 1] : nullptr;
        f << axis << ',' << fmt(p.value) << ',' << fmt(p.res_id1) << ','
          << fmt(p.res_id2) << ',' << fmt(p.res_id2_fd) << ','
          << fmt(p.res_grad) << ',' << fmt(p.res_lap) << ','
          << fmt(p.res_first) << ',' << fmt(p.final_diff) << ','
          << fmt(q ? ratio(q->res_id2_fd, p.res_id2_fd) : NAN) << ','
          << fmt(q ? ratio(q->res_grad, p.res_grad) : NAN) << ','
          << fmt(q ? ratio(q->final_diff, p.final_diff) : NAN) << ','
          << (p.pass ? 1 : 0) << "\n";
    }
    std::cout << "sweep over " << axis << " wrote " << outdir << "/sweep.csv\n";
    return all_ok ? 0 : 1;
}

}  // namespace krf
