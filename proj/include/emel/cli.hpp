#pragma once

// Config-driven front end: single runs, studies and field reconstruction.
// Every command returns a process exit code (0 ok, 1 failed assertion,
// 2 validation error, 3 solver failure) and writes its artifacts under a
// directory named by the hash of the canonical config.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emel/experiments.hpp"
#include "emel/fd_oracle.hpp"

namespace emel::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kAssertionFailed = 1, kValidation = 2, kSolver = 3 };

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Hash of the document with the output location removed, so the same run
// written to a different place keeps its name.
inline std::string config_hash(const json& doc) {
    json c = doc;
    if (c.contains("outputs") && c["outputs"].is_object()) c["outputs"].erase("dir");
    return fnv1a_hex(c.dump());
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open \"" + path + "\"");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("\"" + path + "\" is not valid JSON: " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    out << doc.dump(2) << '\n';
}

inline fs::path make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ValidationError("output directory \"" + dir.string() + "\" is not writable");
    return dir;
}

// Problem from one of "manufactured": name, "instance": {...} or "problem": {...}.
inline ProblemSpec resolve_problem(const json& doc, std::optional<std::uint64_t> seed = std::nullopt) {
    if (doc.contains("manufactured")) {
        if (!doc.at("manufactured").is_string()) throw ValidationError("\"manufactured\" must name a case");
        return manufactured_problem(manufactured_case(doc.at("manufactured").get<std::string>()));
    }
    if (doc.contains("instance")) {
        const json& in = doc.at("instance");
        try {
            const std::string kind = in.at("kind").get<std::string>();
            if (kind == "discontinuous") return discontinuous_instance(in.value("variant", 0));
            if (kind == "random") {
                const auto s = seed ? *seed : in.value("seed", std::uint64_t{1});
                ProblemSpec p = random_instance(s, in.value("m", 1), in.value("T", 1.0));
                validate(p);
                return p;
            }
            throw ValidationError("unknown instance kind \"" + kind + "\" (expected discontinuous or random)");
        } catch (const json::exception& e) {
            throw ValidationError(std::string("instance schema violation: ") + e.what());
        }
    }
    if (doc.contains("problem")) return problem_from_json(doc.at("problem"));
    throw ValidationError("config needs one of \"problem\", \"manufactured\" or \"instance\"");
}

struct Discretization {
    int N = 16;
    int panels_per_piece = 0;  // 0: default
    int q = default_gauss_order;
};

struct Outputs {
    std::vector<double> times;
    std::vector<std::string> diagnostics{"eq24", "eq37", "jumps", "weak_residual", "norms"};
    std::string dir = "runs";
    std::vector<double> jump_times;  // empty: final time
    double jump_delta = 0.0;         // 0: default window

    bool wants(const std::string& d) const { return std::find(diagnostics.begin(), diagnostics.end(), d) != diagnostics.end(); }
};

struct RunConfig {
    json doc;
    ProblemSpec problem;
    std::string manufactured;
    Discretization disc;
    IntegratorConfig integrator;
    Outputs outputs;

    std::string hash() const { return config_hash(doc); }

    static RunConfig from_json(const json& doc, std::optional<std::uint64_t> seed = std::nullopt) {
        if (!doc.is_object()) throw ValidationError("run config must be an object");
        RunConfig c;
        c.doc = doc;
        c.problem = resolve_problem(doc, seed);
        if (doc.contains("manufactured")) c.manufactured = doc.at("manufactured").get<std::string>();
        try {
            if (doc.contains("discretization")) {
                const json& d = doc.at("discretization");
                c.disc.N = d.value("N", c.disc.N);
                c.disc.panels_per_piece = d.value("panels_per_piece", c.disc.panels_per_piece);
                c.disc.q = d.value("q", c.disc.q);
            }
            if (doc.contains("outputs")) {
                const json& o = doc.at("outputs");
                c.outputs.times = o.value("times", c.outputs.times);
                c.outputs.diagnostics = o.value("diagnostics", c.outputs.diagnostics);
                c.outputs.dir = o.value("dir", c.outputs.dir);
                c.outputs.jump_times = o.value("jump_times", c.outputs.jump_times);
                c.outputs.jump_delta = o.value("jump_delta", c.outputs.jump_delta);
            }
        } catch (const json::exception& e) {
            throw ValidationError(std::string("run config schema violation: ") + e.what());
        }
        c.integrator = IntegratorConfig::from_json(doc.value("integrator", json()));
        if (c.disc.N < 1) throw ValidationError("discretization.N must be >= 1");
        if (c.disc.q < 1 || c.disc.panels_per_piece < 0) throw ValidationError("invalid quadrature settings");
        static const std::vector<std::string> known{"eq24", "eq37", "jumps", "weak_residual", "norms"};
        for (const auto& d : c.outputs.diagnostics)
            if (std::find(known.begin(), known.end(), d) == known.end())
                throw ValidationError("unknown diagnostic \"" + d + "\"");
        for (double t : c.outputs.times)
            if (!(t >= 0.0 && t <= c.problem.T)) throw ValidationError("output time outside [0, T]");
        for (double t : c.outputs.jump_times)
            if (!(t >= 0.0 && t <= c.problem.T)) throw ValidationError("jump time outside [0, T]");
        return c;
    }
};

struct RunReport {
    std::string hash;
    json config;
    std::string status = "ok";
    int exit_code = kOk;
    json summary;
    json diagnostics;
    fs::path dir;

    json to_json() const {
        return json{{"config_hash", hash}, {"config", config},           {"status", status},
                    {"exit_code", exit_code}, {"summary", summary}, {"diagnostics", diagnostics}};
    }
};

inline std::vector<double> sample_times(const RunConfig& c) {
    std::vector<double> t{0.0};
    t.insert(t.end(), c.outputs.times.begin(), c.outputs.times.end());
    t.push_back(c.problem.T);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

inline void write_trajectory_csv(const fs::path& path, const Trajectory& traj, const std::vector<double>& times) {
    std::ofstream out(path);
    const int n = traj.modes;
    out << "t";
    for (const char* name : {"a1", "a2", "b", "bdot"})
        for (int k = 0; k < n; ++k) out << ',' << name << '_' << k;
    out << '\n';
    for (double t : times) {
        const Vector y = dense_eval(traj, t).pack();
        out << fmt17(t);
        for (Eigen::Index i = 0; i < y.size(); ++i) out << ',' << fmt17(y[i]);
        out << '\n';
    }
}

inline void write_energy_csv(const fs::path& path, const Trajectory& traj, const std::vector<double>& residual,
                             const SlackSeries& slack) {
    std::ofstream out(path);
    out << "t,term_h,term_ut,term_uz,total,dissipation_cum,work_j_cum,work_f_cum,jsq_cum,fsq_cum,"
           "eq24_residual,eq37_slack,eq37_rhs\n";
    for (std::size_t i = 0; i < traj.ledger.size(); ++i) {
        const EnergyRecord& e = traj.ledger[i];
        for (double v : {e.t, e.term_h, e.term_ut, e.term_uz, e.total(), e.dissipation_cum, e.work_j_cum,
                         e.work_f_cum, e.jsq_cum, e.fsq_cum})
            out << fmt17(v) << ',';
        out << fmt17(residual[i]) << ',' << fmt17(slack.slack[i]) << ',' << fmt17(slack.rhs[i]) << '\n';
    }
}

inline json stats_json(const StepStats& s) {
    return json{{"accepted", s.accepted}, {"rejected", s.rejected}, {"rhs_evals", s.rhs_evals}};
}

inline json run_diagnostics(const RunConfig& c, const Trajectory& traj, const GalerkinBasis& basis,
                            const QuadratureGrid& grid, const std::vector<double>& residual, const SlackSeries& slack) {
    json d = json::object();
    if (c.outputs.wants("eq24")) {
        double mx = 0.0;
        for (double r : residual) mx = std::max(mx, std::abs(r));
        const double e0 = initial_total_energy(traj);
        d["eq24_residual"] = {{"max_abs", mx}, {"initial_energy", e0}, {"relative", e0 > 0.0 ? mx / e0 : mx}};
    }
    if (c.outputs.wants("eq37")) {
        double mn = std::numeric_limits<double>::infinity(), rel = mn;
        bool ok = true;
        for (std::size_t i = 0; i < slack.slack.size(); ++i) {
            mn = std::min(mn, slack.slack[i]);
            if (slack.rhs[i] > 0.0) rel = std::min(rel, slack.slack[i] / slack.rhs[i]);
            if (slack.slack[i] < -1e-8 * slack.rhs[i]) ok = false;
        }
        d["eq37_slack"] = {{"min", mn}, {"min_relative", std::isfinite(rel) ? json(rel) : json(nullptr)},
                           {"tolerance", 1e-8}, {"all_within_tolerance", ok}};
    }
    if (c.outputs.wants("jumps")) {
        json arr = json::array();
        if (!c.problem.coefficient_jumps().empty()) {
            const double delta = c.outputs.jump_delta > 0.0 ? c.outputs.jump_delta : default_jump_delta(c.problem);
            const auto times = c.outputs.jump_times.empty() ? std::vector<double>{c.problem.T} : c.outputs.jump_times;
            for (double t : times) arr.push_back(to_json(jump_report(traj, c.problem, t, delta)));
        }
        d["jumps"] = arr;
    }
    if (c.outputs.wants("weak_residual"))
        d["weak_residual"] = to_json(weak_residual(traj, c.problem, basis, grid, WeakTestSpec::standard(c.problem.T)));
    if (c.outputs.wants("norms")) {
        json n = to_json(solution_norms(traj));
        n["max_abs_h"] = max_abs_h(traj, grid);
        d["norms"] = n;
    }
    if (!c.manufactured.empty()) {
        const ManufacturedErrors e = manufactured_errors(manufactured_case(c.manufactured), traj);
        d["manufactured_errors"] = {{"l2_h_T", e.l2_h_T}, {"l2_u_T", e.l2_u_T}, {"l2_ut_T", e.l2_ut_T},
                                    {"V2", e.V2},         {"W11", e.W11},       {"scale", e.scale}};
    }
    return d;
}

// Solves and writes trajectory.csv, energy.csv, diagnostics.json and report.json
// into `root`/run-<hash>. Solver failures leave only report.json behind.
inline RunReport run(const RunConfig& c, const fs::path& root) {
    RunReport rep;
    rep.hash = c.hash();
    rep.config = c.doc;
    rep.dir = make_dir(root / ("run-" + rep.hash));
    const GalerkinBasis basis = build_basis(c.disc.N);
    const QuadratureGrid grid = grid_for(c.problem, c.disc.N, c.disc.panels_per_piece, c.disc.q);
    const auto times = sample_times(c);
    Trajectory traj;
    try {
        traj = integrate(c.problem, c.integrator, basis, grid, times);
    } catch (const SolverError& e) {
        rep.status = "solver_error";
        rep.exit_code = kSolver;
        rep.summary = {{"message", e.what()}, {"last_valid_time", e.last_valid_time()}};
        write_json(rep.dir / "report.json", rep.to_json());
        return rep;
    }
    const auto residual = energy_balance_residual(traj);
    const SlackSeries slack = energy_inequality_slack_series(traj, c.problem);
    write_trajectory_csv(rep.dir / "trajectory.csv", traj, times);
    write_energy_csv(rep.dir / "energy.csv", traj, residual, slack);
    rep.diagnostics = run_diagnostics(c, traj, basis, grid, residual, slack);
    write_json(rep.dir / "diagnostics.json", rep.diagnostics);
    rep.summary = {{"modes", traj.modes}, {"T", traj.T}, {"steps", stats_json(traj.stats)},
                   {"final_norms", to_json(solution_norms(traj))}};
    write_json(rep.dir / "report.json", rep.to_json());
    return rep;
}

struct Options {
    std::string config;
    std::string out;  // empty: the config's own output dir
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

inline int cmd_run(const Options& o, std::ostream& err = std::cerr) {
    try {
        const RunConfig c = RunConfig::from_json(load_json(o.config), o.seed);
        const RunReport rep = run(c, o.out.empty() ? fs::path(c.outputs.dir) : fs::path(o.out));
        if (rep.exit_code == kSolver) err << "solver failure: " << rep.summary.at("message").get<std::string>() << '\n';
        else std::cout << rep.dir.string() << '\n';
        return rep.exit_code;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolver;
    }
}

// ---- studies ----

struct Assertion {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct StudyResult {
    std::string kind;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<Assertion> assertions;
    json extra = json::object();

    bool pass() const {
        return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
    }
};

inline std::vector<int> int_list(const json& doc, const char* key, std::vector<int> fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (v.is_number_integer()) return {v.get<int>()};
    return v.get<std::vector<int>>();
}

inline StudyResult study_convergence(const json& m, const ProblemSpec& spec, const IntegratorConfig& cfg, int threads) {
    StudyResult s{"convergence", {"n_coarse", "n_fine", "d_V2", "d_W11"}, {}, {}, {}};
    const auto ns = int_list(m, "N", {8, 16, 32});
    const ConvergenceStudy cs = convergence_study(spec, ns, cfg, threads);
    double scale = 1.0;
    for (const auto& n : cs.norms) scale = std::max(scale, n.V2 + n.W11);
    bool ok = true;
    for (std::size_t i = 0; i < cs.rows.size(); ++i) {
        const auto& r = cs.rows[i];
        s.rows.push_back({double(r.n_coarse), double(r.n_fine), r.d_V2, r.d_W11});
        if (i == 0) continue;
        const auto& q = cs.rows[i - 1];
        const double floor = 1e-12 * scale;
        const bool v2 = r.d_V2 < q.d_V2 || std::max(r.d_V2, q.d_V2) <= floor;
        const bool w = r.d_W11 < q.d_W11 || std::max(r.d_W11, q.d_W11) <= floor;
        ok = ok && v2 && w;
    }
    s.assertions.push_back({"cauchy_differences_decrease", ok, "pairwise V2 and W11 differences over increasing N"});
    return s;
}

inline StudyResult study_stability(const json& m, const ProblemSpec& spec, const IntegratorConfig& cfg, int threads) {
    StudyResult s{"stability", {"rung", "N", "magnitude", "lhs", "rhs", "ratio"}, {}, {}, {}};
    StabilityLadder ladder;
    ladder.base = spec;
    const int n = m.value("N", 16);
    if (m.contains("ladder")) {
        const json& l = m.at("ladder");
        ladder.target = parse_target(l.value("target", std::string("r")));
        ladder.amplitude = l.value("amplitude", ladder.amplitude);
        ladder.ratio = l.value("ratio", ladder.ratio);
        ladder.rungs = l.value("rungs", ladder.rungs);
    }
    const StabilityReport rep = stability_experiment(ladder, n, cfg, threads);
    for (const auto& r : rep.rungs) s.rows.push_back({double(r.m), double(n), r.magnitude, r.lhs, r.rhs, r.ratio()});
    s.assertions.push_back({"lhs_decreasing", rep.decreasing, "LHS(m+1) <= 0.9 LHS(m)"});
    s.assertions.push_back({"ratio_bounded", rep.bounded, "max/min of LHS/RHS = " + fmt17(rep.ratio_spread)});
    if (ladder.target == PerturbTarget::H0) {
        const bool ok = std::all_of(rep.rungs.begin(), rep.rungs.end(),
                                    [](const StabilityRung& r) { return r.lhs <= 8.0 * r.rhs; });
        s.assertions.push_back({"lhs_within_8_rhs", ok, "initial-data perturbation"});
    }
    s.extra = {{"target", rep.target}, {"discontinuous_base", rep.discontinuous_base}};
    return s;
}

inline StudyResult study_uniqueness(const json& m, const ProblemSpec& spec, const IntegratorConfig& cfg) {
    StudyResult s{"uniqueness", {"N", "d_V2", "d_W11", "scale", "bound"}, {}, {}, {}};
    IntegratorConfig a = cfg, b = cfg;
    b.scheme = "esdirk324";
    if (m.contains("integrator_a")) a = IntegratorConfig::from_json(m.at("integrator_a"));
    if (m.contains("integrator_b")) b = IntegratorConfig::from_json(m.at("integrator_b"));
    if (a.to_json() == b.to_json()) throw ValidationError("uniqueness study needs two distinct integrator configs");
    const int n = m.value("N", 16);
    const UniquenessResult r = uniqueness_crosscheck(spec, a, b, n);
    s.rows.push_back({double(n), r.difference.V2, r.difference.W11, r.scale, r.bound});
    s.assertions.push_back({"within_tolerance_budget", r.pass, "10 (tolA + tolB) scale"});
    return s;
}

inline StudyResult study_oracle(const json& m, const ProblemSpec& spec, const IntegratorConfig& cfg, int threads) {
    StudyResult s{"oracle", {"N", "M", "dt", "h1", "h2", "u", "ut", "max"}, {}, {}, {}};
    std::vector<std::pair<int, int>> rungs{{16, 256}, {32, 512}};
    if (m.contains("rungs")) {
        rungs.clear();
        for (const auto& r : m.at("rungs")) rungs.emplace_back(r.at("N").get<int>(), r.at("M").get<int>());
    }
    const double factor = m.value("dt_factor", 0.5);
    const double tol = m.value("tolerance", 1e-3);
    double numax = 0.0;
    for (int i = 0; i < 4096; ++i) numax = std::max(numax, spec.nu((i + 0.5) / 4096.0));
    for (const auto& [n, cells] : rungs) check_fd_alignment(spec, cells);
    struct Row {
        double dt;
        OracleDiscrepancy d;
    };
    const auto res = parallel_map<Row>(rungs.size(), threads, [&](std::size_t i) {
        const auto [n, cells] = rungs[i];
        const double dt = factor / (cells * numax);
        const Trajectory tr = solve(spec, n, cfg);
        return Row{dt, oracle_discrepancy(dense_eval(tr, spec.T), n, fd_oracle(spec, cells, dt))};
    });
    bool mono = true;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& d = res[i].d;
        s.rows.push_back({double(rungs[i].first), double(rungs[i].second), res[i].dt, d.h1, d.h2, d.u, d.ut, d.max()});
        if (i > 0 && !(d.max() <= 1.2 * res[i - 1].d.max())) mono = false;
    }
    s.assertions.push_back({"finest_within_tolerance", !res.empty() && res.back().d.max() <= tol,
                            "L2 discrepancy <= " + fmt17(tol)});
    if (res.size() > 1) s.assertions.push_back({"refinement_monotone", mono, "each rung <= 1.2 x previous"});
    return s;
}

inline void write_study(const fs::path& dir, const StudyResult& s, const json& manifest, const std::string& hash,
                        const std::string& status) {
    std::ofstream out(dir / "rows.csv");
    for (std::size_t i = 0; i < s.header.size(); ++i) out << (i ? "," : "") << s.header[i];
    out << '\n';
    for (const auto& r : s.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt17(r[i]);
        out << '\n';
    }
    json a = json::array();
    for (const auto& x : s.assertions) a.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    json summary{{"kind", s.kind}, {"config_hash", hash}, {"config", manifest}, {"status", status},
                 {"assertions", a}, {"pass", status == "ok" && s.pass()}};
    for (auto it = s.extra.begin(); it != s.extra.end(); ++it) summary[it.key()] = it.value();
    write_json(dir / "summary.json", summary);
}

inline int cmd_study(const Options& o, std::ostream& err = std::cerr) {
    json manifest;
    fs::path dir;
    std::string kind, hash;
    try {
        manifest = load_json(o.config);
        if (!manifest.is_object() || !manifest.contains("kind") || !manifest.at("kind").is_string())
            throw ValidationError("study manifest needs a \"kind\"");
        kind = manifest.at("kind").get<std::string>();
        if (kind != "convergence" && kind != "stability" && kind != "uniqueness" && kind != "oracle")
            throw ValidationError("unknown study kind \"" + kind +
                                  "\" (expected convergence, stability, uniqueness or oracle)");
        const ProblemSpec spec = resolve_problem(manifest, o.seed);
        const IntegratorConfig cfg = IntegratorConfig::from_json(manifest.value("integrator", json()));
        hash = config_hash(manifest);
        const fs::path root = o.out.empty() ? fs::path(manifest.value("dir", std::string("studies"))) : fs::path(o.out);
        dir = make_dir(root / ("study-" + kind + "-" + hash));
        StudyResult s;
        try {
            if (kind == "convergence") s = study_convergence(manifest, spec, cfg, o.threads);
            else if (kind == "stability") s = study_stability(manifest, spec, cfg, o.threads);
            else if (kind == "uniqueness") s = study_uniqueness(manifest, spec, cfg);
            else s = study_oracle(manifest, spec, cfg, o.threads);
        } catch (const SolverError& e) {
            s.kind = kind;
            write_study(dir, s, manifest, hash, "solver_error");
            err << "solver failure: " << e.what() << '\n';
            return kSolver;
        }
        write_study(dir, s, manifest, hash, "ok");
        std::cout << dir.string() << '\n';
        for (const auto& a : s.assertions) std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << '\n';
        return s.pass() ? kOk : kAssertionFailed;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const json::exception& e) {
        err << "validation error: manifest schema violation: " << e.what() << '\n';
        return kValidation;
    }
}

// ---- reconstruction ----

struct TrajectoryTable {
    int modes = 0;
    std::vector<double> t;
    std::vector<Vector> y;  // packed [a1, a2, b, bdot]
};

inline TrajectoryTable read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open \"" + path + "\"");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("trajectory CSV is empty");
    std::vector<std::string> head;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) head.push_back(cell);
    }
    if (head.empty() || head[0] != "t" || (head.size() - 1) % 4 != 0 || head.size() < 5)
        throw ValidationError("malformed trajectory CSV header");
    TrajectoryTable tab;
    tab.modes = static_cast<int>((head.size() - 1) / 4);
    if (head[1] != "a1_0" || head.back() != "bdot_" + std::to_string(tab.modes - 1))
        throw ValidationError("malformed trajectory CSV header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') throw ValidationError("malformed number on line " + std::to_string(lineno));
            vals.push_back(v);
        }
        if (vals.size() != head.size()) throw ValidationError("wrong column count on line " + std::to_string(lineno));
        if (!tab.t.empty() && !(vals[0] > tab.t.back())) throw ValidationError("trajectory times must increase");
        tab.t.push_back(vals[0]);
        tab.y.push_back(Eigen::Map<const Vector>(vals.data() + 1, static_cast<Eigen::Index>(vals.size() - 1)));
    }
    if (tab.t.empty()) throw ValidationError("trajectory CSV has no rows");
    return tab;
}

// State at t: an exact row when present, otherwise linear interpolation of the
// bracketing rows.
inline SpectralState table_state(const TrajectoryTable& tab, double t) {
    const double eps = 1e-12 * std::max(1.0, std::abs(t));
    if (!(t >= tab.t.front() - eps && t <= tab.t.back() + eps))
        throw ValidationError("time " + fmt17(t) + " outside the trajectory range");
    auto it = std::lower_bound(tab.t.begin(), tab.t.end(), t - eps);
    auto i = static_cast<std::size_t>(it - tab.t.begin());
    if (i < tab.t.size() && std::abs(tab.t[i] - t) <= eps) return SpectralState::unpack(tab.y[i], t);
    const double w = (t - tab.t[i - 1]) / (tab.t[i] - tab.t[i - 1]);
    return SpectralState::unpack((1.0 - w) * tab.y[i - 1] + w * tab.y[i], t);
}

inline void reconstruct(const TrajectoryTable& tab, const std::vector<double>& times, int resolution, std::ostream& out) {
    if (resolution < 1) throw ValidationError("z-resolution must be >= 1");
    if (times.empty()) throw ValidationError("no reconstruction times given");
    const GalerkinBasis b = build_basis(tab.modes);
    std::vector<SpectralState> states;
    for (double t : times) states.push_back(table_state(tab, t));
    out << "t,z,h1,h2,u,u_t,u_z\n";
    for (const auto& s : states)
        for (int k = 0; k < resolution; ++k) {
            const double z = double(k) / resolution;
            out << fmt17(s.t) << ',' << fmt17(z) << ',' << fmt17(detail::synth_value(s.a1, b, z)) << ','
                << fmt17(detail::synth_value(s.a2, b, z)) << ',' << fmt17(detail::synth_value(s.b, b, z)) << ','
                << fmt17(detail::synth_value(s.bdot, b, z)) << ',' << fmt17(detail::synth_derivative(s.b, b, z))
                << '\n';
        }
}

inline int cmd_reconstruct(const std::string& trajectory, const std::vector<double>& times, int resolution,
                           const std::string& out_path, std::ostream& err = std::cerr) {
    try {
        const TrajectoryTable tab = read_trajectory_csv(trajectory);
        std::ostringstream buf;
        reconstruct(tab, times, resolution, buf);
        if (out_path.empty() || out_path == "-") {
            std::cout << buf.str();
        } else {
            std::ofstream out(out_path);
            if (!out) throw ValidationError("cannot write \"" + out_path + "\"");
            out << buf.str();
        }
        return kOk;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace emel::cli
