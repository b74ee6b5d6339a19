#include "fbp/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <atomic>
#include <exception>

namespace fbp {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// NaN and infinities have no JSON number form.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json breakdown_json(const EnergyBreakdown& e) {
    Json j = Json::object();
    j["dirichlet"] = number(e.dirichlet);
    j["indicator"] = number(e.indicator);
    j["potential"] = number(e.potential);
    j["total"] = number(e.total);
    return j;
}

const char* verdict(bool pass) { return pass ? "pass" : "fail"; }

std::string step_field_name(size_t j) { return "u_step" + std::to_string(j + 1) + ".csv"; }
std::string step_jump_name(size_t j) { return "jump_step" + std::to_string(j + 1) + ".csv"; }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_jump_csv(const fs::path& path, const JumpStats& st, int dim) {
    std::ostringstream os;
    for (int a = 0; a < dim; ++a) os << 'x' << (a + 1) << ',';
    os << "jump_value\n";
    for (size_t k = 0; k < st.values.size(); ++k) {
        for (double x : st.locations[k]) os << format_double(x) << ',';
        os << format_double(st.values[k]) << '\n';
    }
    write_text(path, os.str());
}

// Collects the run-level pass/fail/na outcome of each enabled check.
class Verdicts {
public:
    explicit Verdicts(const RunConfig& cfg) {
        const std::pair<const char*, bool> enabled[] = {
            {"energy_inequality", cfg.verify_energy_inequality}, {"max_principle", cfg.verify_max_principle},
            {"subharmonicity", cfg.verify_subharmonicity},       {"jump", cfg.verify_jump},
            {"lipschitz", cfg.verify_lipschitz},                 {"energy_bracket", cfg.verify_energy_bracket}};
        for (const auto& [name, on] : enabled) {
            if (on) items_.emplace_back(name, "na");
        }
    }
    void note(const std::string& name, const std::string& outcome) {
        auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& p) { return p.first == name; });
        if (it == items_.end()) {
            items_.emplace_back(name, outcome);
        } else if (outcome == "fail" || (outcome == "pass" && it->second == "na")) {
            if (it->second != "fail") it->second = outcome;
        }
    }
    Json json() const {
        Json j = Json::object();
        for (const auto& [k, v] : items_) j[k] = v;
        return j;
    }
    bool any_failed() const {
        return std::any_of(items_.begin(), items_.end(), [](const auto& p) { return p.second == "fail"; });
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

void collect_step_verdicts(const Json& v, const RunConfig& cfg, bool final_step, Verdicts& out) {
    if (cfg.verify_energy_inequality) out.note("energy_inequality", v["energy_inequality"]["pass"] ? "pass" : "fail");
    if (cfg.verify_max_principle) out.note("max_principle", v["max_principle"]["pass"] ? "pass" : "fail");
    if (cfg.verify_subharmonicity) out.note("subharmonicity", v["subharmonicity"]["positivity_pass"] ? "pass" : "fail");
    if (cfg.verify_jump && final_step) out.note("jump", v["jump"]["outcome"].get<std::string>());
}

struct Operators {
    explicit Operators(const RunConfig& cfg) : spec(cfg.group_spec()), grid(cfg.grid()), ops(spec, grid) {}
    GroupSpec spec;
    Grid grid;
    HorizontalOperators ops;
};

// Verification blocks that span iterates: Lipschitz profile and energy bracket.
void verify_sequence(const std::vector<std::pair<double, ScalarField>>& iterates, const RunConfig& cfg,
                     const HorizontalOperators& ops, Json& report, Verdicts& verdicts) {
    if (cfg.verify_lipschitz) {
        std::vector<ScalarField> fields;
        for (const auto& it : iterates) fields.push_back(it.second);
        const LipschitzProfile p = lipschitz_profile(fields, ops);
        Json j = Json::object();
        j["center"] = p.center;
        j["radius"] = number(p.radius);
        Json sups = Json::array();
        for (double s : p.sups) sups.push_back(number(s));
        j["sups"] = sups;
        j["ratio"] = number(p.ratio);
        if (iterates.size() < 2) {
            j["outcome"] = "na";
        } else {
            j["outcome"] = verdict(p.pass);
        }
        verdicts.note("lipschitz", j["outcome"].get<std::string>());
        report["lipschitz"] = j;
    }
    if (cfg.verify_energy_bracket) {
        Json j = Json::object();
        if (iterates.size() < 3) {
            j["outcome"] = "na";
            j["reason"] = "needs at least three continuation steps";
        } else {
            const EnergyBracketReport b = energy_bracket_check(iterates, cfg.lambda, cfg.nonlinearity(), ops);
            j["energy_limit_final"] = number(b.energy_limit);
            j["band"] = number(b.band);
            j["band_measure"] = number(b.band_measure);
            j["delta"] = number(b.delta);
            Json entries = Json::array();
            for (const BracketEntry& e : b.entries) {
                Json r = Json::object();
                r["eps"] = number(e.eps);
                r["energy_eps"] = number(e.energy_eps);
                r["lower"] = number(e.lower);
                r["upper"] = number(e.upper);
                r["pass"] = e.pass;
                if (!e.violation.empty()) r["violation"] = e.violation;
                entries.push_back(r);
            }
            j["entries"] = entries;
            j["energy_eps_final"] = number(b.smoothed_final);
            j["energy_eps_below_limit"] = b.smoothed_below_limit;
            j["outcome"] = verdict(b.pass);
        }
        verdicts.note("energy_bracket", j["outcome"].get<std::string>());
        report["energy_bracket"] = j;
    }
}

ProgressSink quiet(const ProgressSink& p) { return p ? p : [](const std::string&) {}; }

std::function<void(int, double, double)> solver_progress(const ProgressSink& sink, const std::string& tag) {
    if (!sink) return {};
    return [sink, tag](int it, double e, double r) {
        if (it >= 0 && it % 10 != 0) return;
        std::ostringstream os;
        os << tag << (it >= 0 ? " path " : " newton ") << (it >= 0 ? it : -it) << ": peak " << e << ", max|R| " << r;
        sink(os.str());
    };
}

Json step_json(const ContinuationStep& s, size_t j) {
    Json st = Json::object();
    st["eps"] = number(s.eps);
    st["method"] = s.method;
    st["converged"] = s.converged;
    st["residual_norm"] = number(s.residual_norm);
    st["c_eps"] = number(s.saddle.c_eps);
    Json mp = Json::object();
    mp["iterations"] = s.saddle.iterations;
    mp["status"] = s.saddle.status;
    if (!s.saddle.peak_history.empty()) {
        mp["peak_first"] = number(s.saddle.peak_history.front());
        mp["peak_last"] = number(s.saddle.peak_history.back());
    }
    st["mountain_pass"] = mp;
    st["energy_eps"] = breakdown_json(s.energy_eps);
    st["energy_limit"] = breakdown_json(s.energy_limit);
    st["field"] = step_field_name(j);
    return st;
}

void write_timing(const fs::path& dir, const std::vector<double>& seconds) {
    Json t = Json::object();
    t["seconds"] = seconds;
    write_text(dir / "timing.json", t.dump(2) + "\n");
}

Json base_report(const char* mode, const RunConfig& cfg) {
    Json r = Json::object();
    r["fbp_version"] = kVersion;
    r["mode"] = mode;
    r["config"] = cfg.to_json();
    return r;
}

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("FBP_THREADS")) {
        const int n = std::atoi(env);
        return std::max(1, n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

Json verify_iterate(const ScalarField& u, double eps, const RunConfig& cfg, const HorizontalOperators& ops,
                    bool final_step) {
    const NonlinearitySpec nl = cfg.nonlinearity();
    const SmoothedEnergy energy(ops, nl, cfg.lambda, eps);
    Json v = Json::object();
    const SetMeasures m = set_measures(u, ops.grid(), eps);
    v["measures"] = {{"super_level", number(m.super_level)}, {"band", number(m.band)}};
    if (cfg.verify_energy_inequality) {
        const double e_eps = energy.energy(u).total;
        const double e = energy_limit(u, cfg.lambda, nl, ops).total;
        v["energy_inequality"] = {{"energy_eps", number(e_eps)}, {"energy_limit", number(e)}, {"pass", e_eps <= e}};
    }
    if (cfg.verify_max_principle) {
        const MaxPrincipleReport mp = max_principle_check(u, energy, cfg.solve_config());
        v["max_principle"] = {{"A0", number(mp.A0)},
                              {"min_u", number(mp.min_u)},
                              {"max_excess", number(mp.max_excess)},
                              {"pass", mp.pass}};
    }
    if (cfg.verify_subharmonicity) {
        const SubharmonicityReport s = subharmonicity_check(u, ops, eps);
        v["subharmonicity"] = {{"positivity_nodes", s.positivity_nodes}, {"min_Lu", number(s.min_Lu)},
                               {"tol", number(s.tol)},
                               {"positivity_pass", s.positivity_pass},
                               {"harmonic_nodes", s.harmonic_nodes},
                               {"max_abs_Lu", number(s.max_abs_Lu)},
                               {"harmonic_bound", number(s.harmonic_bound)},
                               {"harmonic_within_bound", s.harmonic_pass}};
    }
    if (cfg.verify_jump && final_step) {
        Json j = Json::object();
        try {
            const JumpStats st = jump_statistics(u, ops);
            j["count"] = st.count;
            j["dropped"] = st.dropped;
            if (st.empty) {
                j["status"] = "no free boundary";
                j["outcome"] = "fail";
            } else {
                j["median"] = number(st.median);
                j["mean"] = number(st.mean);
                j["iqr"] = number(st.iqr);
                j["status"] = "ok";
                const bool pass = st.median >= cfg.jump_min && st.median <= cfg.jump_max &&
                                  st.count >= static_cast<size_t>(cfg.jump_min_samples);
                j["outcome"] = verdict(pass);
            }
        } catch (const UnresolvedFreeBoundary& e) {
            j["count"] = 0;
            j["status"] = e.what();
            j["outcome"] = "fail";
        }
        j["median_range"] = {number(cfg.jump_min), number(cfg.jump_max)};
        j["min_samples"] = cfg.jump_min_samples;
        v["jump"] = j;
    }
    return v;
}

RunOutcome run_solve(const RunConfig& cfg, const ProgressSink& progress) {
    const auto sink = quiet(progress);
    const Operators o(cfg);
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    RunOutcome out;
    out.report = base_report("solve", cfg);
    SolveConfig sc = cfg.solve_config();
    sc.progress = solver_progress(progress, "eps " + format_double(sc.eps));
    const NonlinearitySpec nl = cfg.nonlinearity();
    const SmoothedEnergy energy(o.ops, nl, cfg.lambda, sc.eps);
    const auto t0 = std::chrono::steady_clock::now();
    Verdicts verdicts(cfg);
    try {
        const ScalarField u_end = find_negative_endpoint(energy);
        sink("negative endpoint found, E_eps = " + format_double(energy.energy(u_end).total));
        ContinuationStep step;
        step.eps = sc.eps;
        step.saddle = mountain_pass(u_end, energy, sc);
        step.u = step.saddle.u_mp;
        step.method = "mountain_pass";
        step.residual_norm = step.saddle.residual_norm;
        step.converged = step.saddle.converged;
        step.energy_eps = energy.energy(step.u);
        step.energy_limit = energy_limit(step.u, cfg.lambda, nl, o.ops);
        write_field_csv((dir / step_field_name(0)).string(), o.grid, step.u);
        Json st = step_json(step, 0);
        st["verification"] = verify_iterate(step.u, step.eps, cfg, o.ops, true);
        collect_step_verdicts(st["verification"], cfg, true, verdicts);
        if (cfg.verify_jump) {
            try {
                write_jump_csv(dir / step_jump_name(0), jump_statistics(step.u, o.ops), o.grid.dim());
            } catch (const UnresolvedFreeBoundary&) {
            }
        }
        out.report["steps"] = Json::array({st});
        out.report["status"] = step.converged ? "converged" : "solver_failure";
        if (!step.converged) out.report["failure"] = "mountain pass: " + step.saddle.status;
    } catch (const InoperableLambda& e) {
        out.report["steps"] = Json::array();
        out.report["status"] = "inoperable";
        out.report["failure"] = e.what();
    } catch (const SolverError& e) {
        out.report["steps"] = Json::array();
        out.report["status"] = "solver_failure";
        out.report["failure"] = e.what();
    }
    out.report["verifications"] = verdicts.json();
    const bool solved = out.report["status"] == "converged";
    out.exit_code = (!solved || verdicts.any_failed()) ? 1 : 0;
    write_timing(dir, {std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    write_text(dir / "report.json", dump_report(out.report));
    return out;
}

RunOutcome run_continuation(const RunConfig& cfg, const ProgressSink& progress) {
    const Operators o(cfg);
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    RunOutcome out;
    out.report = base_report("continue", cfg);
    SolveConfig sc = cfg.solve_config();
    const std::vector<double> schedule = cfg.schedule();
    const NonlinearitySpec nl = cfg.nonlinearity();

    if (progress) {
        sc.progress = solver_progress(progress, "continuation");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const ContinuationResult res = eps_continuation(schedule, o.ops, nl, sc);
    const std::vector<double> seconds{std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};

    Verdicts verdicts(cfg);
    Json steps = Json::array();
    std::vector<std::pair<double, ScalarField>> iterates;
    for (size_t j = 0; j < res.steps.size(); ++j) {
        const ContinuationStep& s = res.steps[j];
        write_field_csv((dir / step_field_name(j)).string(), o.grid, s.u);
        const bool final_step = j + 1 == res.steps.size();
        Json st = step_json(s, j);
        st["verification"] = verify_iterate(s.u, s.eps, cfg, o.ops, final_step);
        collect_step_verdicts(st["verification"], cfg, final_step, verdicts);
        if (cfg.verify_jump && final_step) {
            try {
                write_jump_csv(dir / step_jump_name(j), jump_statistics(s.u, o.ops), o.grid.dim());
            } catch (const UnresolvedFreeBoundary&) {
            }
        }
        steps.push_back(st);
        iterates.emplace_back(s.eps, s.u);
    }
    out.report["schedule"] = schedule;
    out.report["steps"] = steps;
    out.report["status"] = res.completed ? "completed" : "solver_failure";
    if (!res.completed) out.report["failure"] = res.failure;
    verify_sequence(iterates, cfg, o.ops, out.report, verdicts);
    out.report["verifications"] = verdicts.json();
    out.exit_code = (!res.completed || verdicts.any_failed()) ? 1 : 0;
    write_timing(dir, seconds);
    write_text(dir / "report.json", dump_report(out.report));
    return out;
}

RunOutcome run_lambda_sweep(const RunConfig& cfg, const std::vector<double>& lambdas, const ProgressSink& progress) {
    if (lambdas.empty()) throw ConfigError("sweep.lambda", "empty lambda list");
    for (double l : lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("sweep.lambda", "entries must be finite and nonnegative");
    }
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    std::vector<Json> rows(lambdas.size());
    std::vector<std::string> notes(lambdas.size());

    auto run_one = [&](size_t i) {
        RunConfig c = cfg;
        c.lambda = lambdas[i];
        const Operators o(c);
        const SolveConfig sc = c.solve_config();
        const SmoothedEnergy energy(o.ops, c.nonlinearity(), c.lambda, sc.eps);
        const fs::path sub = dir / ("lambda_" + std::to_string(i + 1));
        fs::create_directories(sub);
        Json row = Json::object();
        row["lambda"] = number(c.lambda);
        row["dir"] = sub.filename().string();
        try {
            const ScalarField u_end = find_negative_endpoint(energy);
            row["operable"] = true;
            const SaddleResult s = mountain_pass(u_end, energy, sc);
            row["mountain_pass_converged"] = s.converged;
            row["c_eps"] = number(s.c_eps);
            row["residual_norm"] = number(s.residual_norm);
            row["super_level_measure"] = number(set_measures(s.u_mp, o.grid, sc.eps).super_level);
            row["status"] = s.status;
            write_field_csv((sub / "u.csv").string(), o.grid, s.u_mp);
        } catch (const InoperableLambda& e) {
            row["operable"] = false;
            row["mountain_pass_converged"] = false;
            row["status"] = e.what();
        } catch (const SolverError& e) {
            row["operable"] = true;
            row["mountain_pass_converged"] = false;
            row["status"] = e.what();
        }
        rows[i] = row;
        notes[i] = "lambda " + format_double(c.lambda) + ": " + row["status"].get<std::string>();
    };

    const size_t workers = std::min(lambdas.size(), static_cast<size_t>(worker_count()));
    std::vector<size_t> order(lambdas.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (size_t i = next++; i < lambdas.size(); i = next++) run_one(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    if (progress) {
        for (const std::string& n : notes) progress(n);
    }

    // Rows are presented in increasing lambda.
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return lambdas[a] < lambdas[b]; });
    RunOutcome out;
    out.report = base_report("sweep", cfg);
    out.report["lambdas"] = lambdas;
    Json table = Json::array();
    for (size_t i : order) table.push_back(rows[i]);
    out.report["rows"] = table;
    out.exit_code = 0;
    write_text(dir / "report.json", dump_report(out.report));
    return out;
}

RunOutcome run_verify(const std::string& dir_name) {
    const fs::path dir(dir_name);
    if (!fs::is_directory(dir)) throw ConfigError("", "not a directory: " + dir_name);
    const fs::path report_path = dir / "report.json";
    if (!fs::exists(report_path)) throw ConfigError("", "no report.json in " + dir_name);
    Json source;
    try {
        std::ifstream in(report_path);
        source = Json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("", "malformed report.json: " + std::string(e.what()));
    }
    if (!source.contains("config") || !source.contains("steps")) {
        throw ConfigError("", "report.json lacks config or steps");
    }
    std::map<std::string, std::string> entries;
    for (const auto& [k, v] : source["config"].items()) entries[k] = v.get<std::string>();
    const RunConfig cfg = parse_config_map(entries);
    const Operators o(cfg);

    RunOutcome out;
    out.report = base_report("verify", cfg);
    out.report["source_mode"] = source.value("mode", "");
    Verdicts verdicts(cfg);
    Json steps = Json::array();
    std::vector<std::pair<double, ScalarField>> iterates;
    const Json& src_steps = source["steps"];
    if (src_steps.empty()) throw ConfigError("", "report.json lists no fields");
    for (size_t j = 0; j < src_steps.size(); ++j) {
        const std::string name = src_steps[j].at("field").get<std::string>();
        const double eps = src_steps[j].at("eps").get<double>();
        CsvField f = [&] {
            try {
                return read_field_csv((dir / name).string());
            } catch (const std::exception& e) {
                throw ConfigError("", e.what());
            }
        }();
        if (!(f.grid == o.grid)) throw ConfigError("", name + ": grid differs from the configured grid");
        const bool final_step = j + 1 == src_steps.size();
        Json st = Json::object();
        st["eps"] = number(eps);
        st["field"] = name;
        st["verification"] = verify_iterate(f.values, eps, cfg, o.ops, final_step);
        collect_step_verdicts(st["verification"], cfg, final_step, verdicts);
        steps.push_back(st);
        iterates.emplace_back(eps, std::move(f.values));
    }
    out.report["steps"] = steps;
    verify_sequence(iterates, cfg, o.ops, out.report, verdicts);
    out.report["verifications"] = verdicts.json();
    out.exit_code = verdicts.any_failed() ? 1 : 0;
    return out;
}

}  // namespace fbp
