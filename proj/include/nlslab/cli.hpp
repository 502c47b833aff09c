#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlslab/classifier.hpp"
#include "nlslab/concentration.hpp"
#include "nlslab/errors.hpp"
#include "nlslab/evolver.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/io.hpp"
#include "nlslab/sphere.hpp"

namespace nlslab {

/// Flat, JSON-compatible description of one run. Every flag has a config key
/// of the same name, so `--config run.json` plus command-line overrides and
/// pure command lines describe the same space of runs.
struct RunConfig {
    std::string command;

    // Shared model/grid parameters.
    int N = 3;
    double p = 3.0;
    double r_max = 30.0;
    int n = 2999;
    std::string out_dir = ".";
    std::uint64_t seed = 0;

    // Ground-state grid used by classify/concentrate when they need Q.
    double gs_r_max = 30.0;
    int gs_n = 2999;

    // classify / evolve input field.
    std::string input;
    bool radial = false;
    bool finite_variance = false;

    // evolve stepping.
    double dt = 1e-4;
    double tmax = 1.0;
    double cfl = 1.0;
    double grad_cap = 10.0;
    int sample_every = 10;
    int snapshot_every = 0;
    double resolution_guard = 4.0;
    std::string out;

    // concentrate.
    std::string trace_dir;
    double c1 = 10.0;
    double c2 = 1.0;

    // sphere / exponents.
    double mass = 1.0;
    double T = 1.0;
    double theta = 0.0;
    bool audit = false;
    bool residuals = false;
    double snapshot_tau = 0.0;
    std::string p_rational = "3";
};

/// Thrown (and caught by cli_main) when the user asks for --help; carries the
/// generated help text so the exit code stays 0.
struct HelpRequested {
    std::string text;
};

/// Canonical serialized form: fixed key order, 17-digit floats. Identical
/// configs hash identically; serialize(parse(text)) is idempotent.
inline std::string serialize_config(const RunConfig& c) {
    JsonWriter w;
    w.str("command", c.command)
        .integer("N", c.N)
        .num("p", c.p)
        .num("r_max", c.r_max)
        .integer("n", c.n)
        .str("out_dir", c.out_dir)
        .integer("seed", static_cast<long long>(c.seed))
        .num("gs_r_max", c.gs_r_max)
        .integer("gs_n", c.gs_n)
        .str("input", c.input)
        .boolean("radial", c.radial)
        .boolean("finite_variance", c.finite_variance)
        .num("dt", c.dt)
        .num("tmax", c.tmax)
        .num("cfl", c.cfl)
        .num("grad_cap", c.grad_cap)
        .integer("sample_every", c.sample_every)
        .integer("snapshot_every", c.snapshot_every)
        .num("resolution_guard", c.resolution_guard)
        .str("out", c.out)
        .str("trace_dir", c.trace_dir)
        .num("c1", c.c1)
        .num("c2", c.c2)
        .num("mass", c.mass)
        .num("T", c.T)
        .num("theta", c.theta)
        .boolean("audit", c.audit)
        .boolean("residuals", c.residuals)
        .num("snapshot_tau", c.snapshot_tau)
        .str("p_rational", c.p_rational);
    return w.take();
}

inline std::string config_hash(const RunConfig& c) {
    return fnv1a64_hex(serialize_config(c));
}

namespace detail {

inline void apply_config_json(RunConfig& c, const std::string& text,
                              const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw UsageError("config " + origin + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config " + origin + ": expected an object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "command") c.command = value.get<std::string>();
            else if (key == "N") c.N = value.get<int>();
            else if (key == "p") c.p = value.get<double>();
            else if (key == "r_max") c.r_max = value.get<double>();
            else if (key == "n") c.n = value.get<int>();
            else if (key == "out_dir") c.out_dir = value.get<std::string>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "gs_r_max") c.gs_r_max = value.get<double>();
            else if (key == "gs_n") c.gs_n = value.get<int>();
            else if (key == "input") c.input = value.get<std::string>();
            else if (key == "radial") c.radial = value.get<bool>();
            else if (key == "finite_variance") c.finite_variance = value.get<bool>();
            else if (key == "dt") c.dt = value.get<double>();
            else if (key == "tmax") c.tmax = value.get<double>();
            else if (key == "cfl") c.cfl = value.get<double>();
            else if (key == "grad_cap") c.grad_cap = value.get<double>();
            else if (key == "sample_every") c.sample_every = value.get<int>();
            else if (key == "snapshot_every") c.snapshot_every = value.get<int>();
            else if (key == "resolution_guard") c.resolution_guard = value.get<double>();
            else if (key == "out") c.out = value.get<std::string>();
            else if (key == "trace_dir") c.trace_dir = value.get<std::string>();
            else if (key == "c1") c.c1 = value.get<double>();
            else if (key == "c2") c.c2 = value.get<double>();
            else if (key == "mass") c.mass = value.get<double>();
            else if (key == "T") c.T = value.get<double>();
            else if (key == "theta") c.theta = value.get<double>();
            else if (key == "audit") c.audit = value.get<bool>();
            else if (key == "residuals") c.residuals = value.get<bool>();
            else if (key == "snapshot_tau") c.snapshot_tau = value.get<double>();
            else if (key == "p_rational") c.p_rational = value.get<std::string>();
            else throw UsageError("config " + origin + ": unknown key \"" + key + "\"");
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError("config " + origin + ": " + e.what());
    }
}

inline int env_threads() {
    const char* env = std::getenv("NLS_LAB_THREADS");
    if (env == nullptr) return 1;
    const int v = std::atoi(env);
    return std::clamp(v, 1, 64);
}

inline Rational parse_rational(const std::string& text) {
    try {
        const auto slash = text.find('/');
        if (slash != std::string::npos) {
            const long long num = std::stoll(text.substr(0, slash));
            const long long den = std::stoll(text.substr(slash + 1));
            return Rational(num, den);
        }
        if (text.find('.') != std::string::npos ||
            text.find('e') != std::string::npos)
            return Rational::from_double(std::stod(text));
        return Rational(std::stoll(text));
    } catch (const std::domain_error&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("cannot parse rational value \"" + text + "\"");
    }
}

inline std::string rational_json(const Rational& r) {
    // Integers are valid JSON numbers; proper fractions stay exact as strings.
    return r.den() == 1 ? r.str() : "\"" + r.str() + "\"";
}

inline std::filesystem::path artifact_path(const RunConfig& cfg,
                                           const std::string& stem,
                                           const std::string& ext) {
    return std::filesystem::path(cfg.out_dir) /
           (stem + "_" + config_hash(cfg) + ext);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw UsageError(msg);
}

inline void validate(const RunConfig& cfg) {
    static const std::vector<std::string> known{
        "ground", "classify", "evolve", "concentrate", "sphere", "exponents"};
    require(std::find(known.begin(), known.end(), cfg.command) != known.end(),
            "unknown or missing subcommand");
    require(cfg.N >= 1, "--N must be at least 1");
    require(cfg.p > 1.0, "--p must exceed 1");
    require(cfg.r_max > 0.0 && cfg.n >= 16, "grid needs --r-max > 0 and --n >= 16");
    require(cfg.gs_r_max > 0.0 && cfg.gs_n >= 16,
            "ground-state grid needs --gs-r-max > 0 and --gs-n >= 16");
    if (cfg.command == "classify" || cfg.command == "evolve") {
        require(!cfg.input.empty(), cfg.command + " requires --input");
        require(std::filesystem::exists(cfg.input),
                "input file does not exist: " + cfg.input);
    }
    if (cfg.command == "evolve")
        require(cfg.dt > 0.0 && cfg.tmax > 0.0 && cfg.sample_every >= 1,
                "evolve needs --dt > 0, --tmax > 0, --sample-every >= 1");
    if (cfg.command == "concentrate") {
        require(!cfg.trace_dir.empty(), "concentrate requires --trace-dir");
        require(std::filesystem::is_directory(cfg.trace_dir),
                "trace directory does not exist: " + cfg.trace_dir);
        require(cfg.c1 > 0.0 && cfg.c2 > 0.0, "--c1 and --c2 must be positive");
    }
    if (cfg.command == "sphere") {
        require(cfg.mass > 0.0 && cfg.T > 0.0, "sphere needs --mass > 0 and --T > 0");
        require(cfg.snapshot_tau >= 0.0 && cfg.snapshot_tau < cfg.T,
                "--snapshot-tau must lie in [0, T)");
    }
}

} // namespace detail

/// Parse a full command line (without argv[0]). A `--config file.json` on any
/// subcommand loads defaults first; explicit flags override them.
inline RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;

    // Pre-scan for --config so the file's values become the flag defaults.
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config")
            detail::apply_config_json(cfg, read_text_file(args[i + 1]), args[i + 1]);

    CLI::App app{"numerical laboratory for focusing NLS blow-up"};
    app.require_subcommand(0, 1);
    std::string config_sink;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_sink, "JSON config file with flag defaults");
        sub->add_option("--out-dir", cfg.out_dir, "artifact directory");
        sub->add_option("--seed", cfg.seed, "seed for randomized sweeps");
    };

    auto* ground = app.add_subcommand("ground", "solve the ground state and derived constants");
    ground->add_option("--N", cfg.N, "spatial dimension");
    ground->add_option("--p", cfg.p, "nonlinearity exponent");
    ground->add_option("--r-max", cfg.r_max, "grid radius");
    ground->add_option("--n", cfg.n, "interior grid nodes");
    add_common(ground);

    auto* classify = app.add_subcommand("classify", "global-vs-blowup verdict for an initial field");
    classify->add_option("--input", cfg.input, "field CSV (r,re,im)");
    classify->add_option("--N", cfg.N, "spatial dimension");
    classify->add_option("--p", cfg.p, "nonlinearity exponent");
    classify->add_flag("--radial", cfg.radial, "assert radial symmetry");
    classify->add_flag("--finite-variance", cfg.finite_variance, "assert finite variance");
    classify->add_option("--gs-r-max", cfg.gs_r_max, "ground-state grid radius");
    classify->add_option("--gs-n", cfg.gs_n, "ground-state grid nodes");
    add_common(classify);

    auto* evolve_cmd = app.add_subcommand("evolve", "time-step a field and trace its functionals");
    evolve_cmd->add_option("--input", cfg.input, "field CSV (r,re,im)");
    evolve_cmd->add_option("--N", cfg.N, "spatial dimension");
    evolve_cmd->add_option("--p", cfg.p, "nonlinearity exponent");
    evolve_cmd->add_option("--tmax", cfg.tmax, "time horizon");
    evolve_cmd->add_option("--dt", cfg.dt, "base step size");
    evolve_cmd->add_option("--cfl", cfg.cfl, "amplitude-tracking step control factor");
    evolve_cmd->add_option("--grad-cap", cfg.grad_cap, "gradient growth factor that stops the run");
    evolve_cmd->add_option("--sample-every", cfg.sample_every, "steps per recorded sample");
    evolve_cmd->add_option("--snapshot-every", cfg.snapshot_every,
                           "samples per stored field snapshot (0 = none)");
    evolve_cmd->add_option("--resolution-guard", cfg.resolution_guard,
                           "focal-width/grid-spacing ratio that stops the run");
    evolve_cmd->add_option("--out", cfg.out, "trace CSV path (default hash-named)");
    add_common(evolve_cmd);

    auto* concentrate = app.add_subcommand("concentrate", "window diagnostics over stored snapshots");
    concentrate->add_option("--trace-dir", cfg.trace_dir, "directory of snapshot field CSVs");
    concentrate->add_option("--c1", cfg.c1, "spatial/tight window constant");
    concentrate->add_option("--c2", cfg.c2, "frequency/wide window constant");
    concentrate->add_option("--N", cfg.N, "spatial dimension");
    concentrate->add_option("--p", cfg.p, "nonlinearity exponent");
    concentrate->add_option("--gs-r-max", cfg.gs_r_max, "ground-state grid radius");
    concentrate->add_option("--gs-n", cfg.gs_n, "ground-state grid nodes");
    add_common(concentrate);

    auto* sphere = app.add_subcommand("sphere", "contracting-sphere profile, audits and exports");
    sphere->add_option("--mass", cfg.mass, "mass carried by the shell");
    sphere->add_option("--T", cfg.T, "blow-up time");
    sphere->add_option("--theta", cfg.theta, "global phase");
    sphere->add_flag("--audit", cfg.audit, "run the conservation audit");
    sphere->add_flag("--residuals", cfg.residuals, "include dropped-term scaling");
    sphere->add_option("--snapshot-tau", cfg.snapshot_tau,
                       "export the profile at T−t = this offset");
    sphere->add_option("--r-max", cfg.r_max, "export grid radius");
    sphere->add_option("--n", cfg.n, "export grid nodes");
    sphere->add_option("--out", cfg.out, "snapshot CSV path (default hash-named)");
    add_common(sphere);

    auto* exponents = app.add_subcommand("exponents", "general (p, N) sphere scaling exponents");
    exponents->add_option("--p", cfg.p_rational, "exponent p as integer, fraction a/b, or decimal");
    exponents->add_option("--N", cfg.N, "spatial dimension");
    add_common(exponents);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    for (auto* sub : {ground, classify, evolve_cmd, concentrate, sphere, exponents})
        if (sub->parsed()) cfg.command = sub->get_name();
    detail::validate(cfg);
    return cfg;
}

namespace detail {

inline int cmd_ground(const RunConfig& cfg, std::ostream& os) {
    const auto gs = ground_state(NlsParams{cfg.N, cfg.p}, RadialGrid{cfg.r_max, cfg.n});
    const auto profile_path = artifact_path(cfg, "ground_profile", ".csv");
    write_field_csv(profile_path.string(), gs.profile);

    JsonWriter w;
    w.str("command", "ground").str("config_hash", config_hash(cfg));
    w.begin_obj("params").integer("N", cfg.N).num("p", cfg.p).end();
    w.begin_obj("grid").num("r_max", cfg.r_max).integer("n", cfg.n).end();
    w.num("q0", gs.q0)
        .num("mass", gs.mass_Q)
        .num("grad_sq", gs.grad_Q_sq)
        .num("c_gn", gs.c_gn)
        .num("sigma_pn", gs.sigma_pn)
        .num("lambda_threshold", gs.lambda_threshold)
        .integer("iterations", gs.iterations)
        .num("tail_ratio", gs.tail_ratio)
        .str("profile_csv", profile_path.string());
    const std::string json = w.take();
    write_text_file(artifact_path(cfg, "ground", ".json").string(), json);
    os << json;
    return 0;
}

inline int cmd_classify(const RunConfig& cfg, std::ostream& os) {
    const NlsParams params{cfg.N, cfg.p};
    const auto u0 = read_field_csv(cfg.input, params);
    const auto gs = ground_state(params, RadialGrid{cfg.gs_r_max, cfg.gs_n});
    const auto rep = classify(u0, gs, cfg.finite_variance, cfg.radial);

    JsonWriter w;
    w.str("command", "classify").str("config_hash", config_hash(cfg));
    w.str("input", cfg.input);
    w.str("verdict", to_string(rep.verdict)).str("route", to_string(rep.route));
    w.num("s_c", rep.s_c)
        .num("lambda0", rep.lambda0)
        .num("lambda_threshold", rep.lambda_threshold)
        .num("grad_mass_product", rep.grad_mass_product)
        .num("sigma_pn", rep.sigma_pn)
        .num("x1", rep.x1)
        .num("f_at_x1", rep.f_at_x1)
        .num("f_gap", rep.f_gap)
        .num("energy", rep.energy)
        .num("mass", rep.mass)
        .num("grad_norm", rep.grad_norm)
        .boolean("radial", rep.radial)
        .boolean("finite_variance", rep.finite_variance);
    if (rep.delta) w.num("delta", *rep.delta);
    if (rep.delta_tilde) w.num("delta_tilde", *rep.delta_tilde);
    if (rep.epsilon) w.num("epsilon", *rep.epsilon);
    if (rep.m_threshold) w.num("m_threshold", *rep.m_threshold);
    const std::string json = w.take();
    write_text_file(artifact_path(cfg, "classify", ".json").string(), json);
    os << json;
    return rep.verdict == Verdict::Indeterminate ? 2 : 0;
}

inline int cmd_evolve(const RunConfig& cfg, std::ostream& os) {
    const NlsParams params{cfg.N, cfg.p};
    const auto u0 = read_field_csv(cfg.input, params);

    StepControls controls;
    controls.dt0 = cfg.dt;
    controls.t_max = cfg.tmax;
    controls.cfl_like = cfg.cfl;
    controls.grad_growth_cap = cfg.grad_cap;
    controls.sample_every = cfg.sample_every;
    controls.snapshot_every = cfg.snapshot_every;
    controls.resolution_guard = cfg.resolution_guard;
    const auto trace = evolve(u0, controls);

    const std::string trace_path =
        cfg.out.empty() ? artifact_path(cfg, "trace", ".csv").string() : cfg.out;
    write_trace_csv(trace_path, trace);

    std::string snapshot_dir;
    if (cfg.snapshot_every > 0 && !trace.snapshots.empty()) {
        snapshot_dir =
            (std::filesystem::path(cfg.out_dir) / ("snapshots_" + config_hash(cfg)))
                .string();
        std::string index = "i,t,file\n";
        for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "snap_%04zu.csv", i);
            write_field_csv((std::filesystem::path(snapshot_dir) / name).string(),
                            trace.snapshots[i]);
            index += std::to_string(i) + "," + fmt17(trace.snapshot_times[i]) +
                     "," + name + "\n";
        }
        write_text_file(
            (std::filesystem::path(snapshot_dir) / "index.csv").string(), index);
    }

    JsonWriter w;
    w.str("command", "evolve").str("config_hash", config_hash(cfg));
    w.str("input", cfg.input).str("trace_csv", trace_path);
    if (!snapshot_dir.empty()) w.str("snapshot_dir", snapshot_dir);
    w.str("stop_reason", to_string(trace.stop_reason));
    w.integer("samples", static_cast<long long>(trace.times.size()));
    w.num("t_end", trace.times.empty() ? 0.0 : trace.times.back());
    const auto& f0 = trace.functionals.front();
    const auto& f1 = trace.functionals.back();
    w.begin_obj("initial").num("mass", f0.mass).num("energy", f0.energy)
        .num("grad_sq", f0.grad_sq).num("linf", f0.linf).end();
    w.begin_obj("final").num("mass", f1.mass).num("energy", f1.energy)
        .num("grad_sq", f1.grad_sq).num("linf", f1.linf).end();
    if (trace.stop_reason == StopReason::BlowupDetected) {
        try {
            const auto fit = blowup_rate_fit(trace);
            w.begin_obj("rate_fit")
                .num("T_est", fit.T_est)
                .num("exponent", fit.exponent)
                .num("stderr_exponent", fit.stderr_exponent)
                .boolean("lower_bound_ok", fit.lower_bound_ok)
                .integer("window_size", fit.window_size)
                .end();
        } catch (const Error& e) {
            w.str("rate_fit_error", std::string(e.kind()) + ": " + e.what());
        }
    }
    const std::string json = w.take();
    write_text_file(artifact_path(cfg, "evolve", ".json").string(), json);
    os << json;
    return 0;
}

inline int cmd_concentrate(const RunConfig& cfg, std::ostream& os) {
    const NlsParams params{cfg.N, cfg.p};
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(cfg.trace_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
            entry.path().filename() != "index.csv")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    require(!files.empty(), "no snapshot CSVs in " + cfg.trace_dir);

    std::vector<ComplexField> snapshots;
    for (const auto& f : files) snapshots.push_back(read_field_csv(f, params));
    const auto gs = ground_state(params, RadialGrid{cfg.gs_r_max, cfg.gs_n});
    const Cutoffs cutoffs(cfg.c1, cfg.c2);
    const auto reports = concentration_report(snapshots, gs, cutoffs, env_threads());

    std::string csv =
        "file,R,rho,l3_u1L,l3_u1,l3_tight_window,l3_wide_window,l3_global,"
        "u2_lhs,u2_rhs,u2_ok,u1H_lhs,u1H_rhs,u1H_ok,u1L_lhs,u1L_rhs,u1L_ok\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& rep = reports[i];
        csv += std::filesystem::path(files[i]).filename().string();
        for (double v : {rep.R, rep.rho, rep.l3_u1L, rep.l3_u1,
                         rep.l3_tight_window, rep.l3_wide_window, rep.l3_global})
            csv += "," + fmt17(v);
        for (const char* key : {"u2_quarter", "u1H_quarter", "u1L_lower"}) {
            const auto& bc = rep.bound_checks.at(key);
            csv += "," + fmt17(bc.lhs) + "," + fmt17(bc.rhs) + "," +
                   (bc.ok ? std::string("1") : std::string("0"));
        }
        csv += "\n";
    }
    const auto csv_path = artifact_path(cfg, "concentration", ".csv");
    write_text_file(csv_path.string(), csv);

    JsonWriter w;
    w.str("command", "concentrate").str("config_hash", config_hash(cfg));
    w.str("trace_dir", cfg.trace_dir);
    w.integer("snapshots", static_cast<long long>(reports.size()));
    w.str("csv", csv_path.string());
    if (reports.size() >= 2) {
        const auto verdict = judge_scenario(reports);
        w.begin_obj("judgement")
            .boolean("wide_grows", verdict.wide_grows)
            .boolean("tight_bounded_below", verdict.tight_bounded_below)
            .num("wide_growth_ratio", verdict.wide_growth_ratio)
            .num("tight_min_ratio", verdict.tight_min_ratio)
            .end();
    }
    const std::string json = w.take();
    write_text_file(artifact_path(cfg, "concentrate", ".json").string(), json);
    os << json;
    return 0;
}

inline int cmd_sphere(const RunConfig& cfg, std::ostream& os) {
    const auto sp = derive_params(cfg.mass, cfg.T, cfg.theta);
    int status = 0;

    JsonWriter w;
    w.str("command", "sphere").str("config_hash", config_hash(cfg));
    w.begin_obj("params")
        .num("mass", sp.mass)
        .num("T", sp.T)
        .num("theta", sp.theta)
        .num("alpha", sp.alpha)
        .num("beta", sp.beta)
        .num("kappa", sp.kappa)
        .num("sigma", sp.sigma)
        .num("nu", sp.nu)
        .num("s_coeff", sp.s_coeff)
        .end();

    if (cfg.audit) {
        const auto audit = conservation_audit(sp, false);
        w.begin_obj("audit");
        w.boolean("passed", audit.violations.empty());
        w.begin_obj("closed_form")
            .num("kappa_consistency", audit.kappa_consistency)
            .num("sigma_consistency", audit.sigma_consistency)
            .num("nu_consistency", audit.nu_consistency)
            .num("beta_relation", audit.beta_relation)
            .num("scoeff_consistency", audit.scoeff_consistency)
            .num("mass_law_spread", audit.mass_law_spread)
            .num("mw_closed_dev", audit.mw_closed_dev)
            .num("pw_closed_dev", audit.pw_closed_dev)
            .num("ep_closed_dev", audit.ep_closed_dev)
            .end();
        w.begin_obj("quadrature")
            .num("mw_quad_dev", audit.mw_quad_dev)
            .num("pw_quad_dev", audit.pw_quad_dev)
            .num("dyw_quad_dev", audit.dyw_quad_dev)
            .num("zero_energy_quad", audit.zero_energy_quad)
            .num("ew_tilde_quad_dev", audit.ew_tilde_quad_dev)
            .end();
        w.begin_obj("rates")
            .num("l3_exponent", audit.l3_exponent)
            .num("hhalf_exponent", audit.hhalf_exponent)
            .num("grad_exponent", audit.grad_exponent)
            .integer("fit_points", audit.fit_points)
            .end();
        w.begin_array("rows");
        for (const auto& row : audit.rows) {
            w.begin_item_obj()
                .num("t_offset", row.t_offset)
                .num("lambda_over_r0", row.lambda_over_r0)
                .num("mass_quad", row.mass_quad)
                .num("mass_rel_dev", row.mass_rel_dev)
                .num("boundary_tail", row.boundary_tail)
                .num("l3_norm", row.l3_norm)
                .num("grad_norm", row.grad_norm)
                .num("hhalf_norm", row.hhalf_norm)
                .end();
        }
        w.end();
        w.begin_array("violations");
        for (const auto& v : audit.violations) w.str_item(v);
        w.end();
        w.end();
        if (!audit.violations.empty()) status = 2;
    }

    if (cfg.residuals) {
        const auto rs = residual_scaling(sp);
        w.begin_obj("residual_scaling")
            .num("coefficient_exponent", rs.coefficient_exponent)
            .num("scaling_exponent", rs.scaling_exponent)
            .num("drop_geometric_exponent", rs.drop_geometric_exponent)
            .num("drop_scaling_exponent", rs.drop_scaling_exponent)
            .num("full_residual_exponent", rs.full_residual_exponent)
            .num("retained_residual_max", rs.retained_residual_max);
        w.begin_array("rows");
        for (const auto& row : rs.rows) {
            w.begin_item_obj()
                .num("t_offset", row.t_offset)
                .num("lambda_over_r0", row.lambda_over_r0)
                .num("lambda_s_over_lambda", row.lambda_s_over_lambda)
                .num("drop_geometric", row.drop_geometric)
                .num("drop_scaling", row.drop_scaling)
                .num("full_residual", row.full_residual)
                .end();
        }
        w.end();
        w.end();
    }

    if (cfg.snapshot_tau > 0.0) {
        const auto u = sphere_field(sp, sp.T - cfg.snapshot_tau,
                                    RadialGrid{cfg.r_max, cfg.n});
        const std::string path =
            cfg.out.empty() ? artifact_path(cfg, "sphere_field", ".csv").string()
                            : cfg.out;
        write_field_csv(path, u);
        w.str("snapshot_csv", path).num("snapshot_tau", cfg.snapshot_tau);
    }

    const std::string json = w.take();
    write_text_file(artifact_path(cfg, "sphere", ".json").string(), json);
    os << json;
    return status;
}

inline int cmd_exponents(const RunConfig& cfg, std::ostream& os) {
    const Rational p = parse_rational(cfg.p_rational);
    const auto rec = general_exponents(p, cfg.N);

    JsonWriter w;
    w.str("command", "exponents").str("config_hash", config_hash(cfg));
    w.raw("p", rational_json(p)).integer("N", cfg.N);
    w.raw("gamma", rational_json(rec.gamma));
    w.raw("r0_exponent", rational_json(rec.r0_exponent));
    w.num("gamma_decimal", rec.gamma.to_double());
    w.num("r0_exponent_decimal", rec.r0_exponent.to_double());
    w.str("regime", to_string(rec.regime));
    const std::string json = w.take();
    write_text_file(artifact_path(cfg, "exponents", ".json").string(), json);
    os << json;
    return 0;
}

} // namespace detail

/// Dispatch an already-validated config. Artifacts land in out_dir with
/// config-hash names; the primary JSON report is also streamed to `os`.
inline int run(const RunConfig& cfg, std::ostream& os = std::cout) {
    if (cfg.command == "ground") return detail::cmd_ground(cfg, os);
    if (cfg.command == "classify") return detail::cmd_classify(cfg, os);
    if (cfg.command == "evolve") return detail::cmd_evolve(cfg, os);
    if (cfg.command == "concentrate") return detail::cmd_concentrate(cfg, os);
    if (cfg.command == "sphere") return detail::cmd_sphere(cfg, os);
    if (cfg.command == "exponents") return detail::cmd_exponents(cfg, os);
    throw UsageError("unknown subcommand: " + cfg.command);
}

/// Full command-line entry: returns the process exit code.
///   0 — success;
///   1 — usage error (bad flags, missing files, invalid values);
///   2 — scientific failure (failed audit, unclassifiable field, module errors).
inline int cli_main(const std::vector<std::string>& args,
                    std::ostream& os = std::cout, std::ostream& es = std::cerr) {
    try {
        const RunConfig cfg = parse_args(args);
        return run(cfg, os);
    } catch (const HelpRequested& h) {
        os << h.text;
        return 0;
    } catch (const UsageError& e) {
        es << e.what() << "\n";  // what() already carries the "UsageError:" tag
        return 1;
    } catch (const Error& e) {
        es << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace nlslab
