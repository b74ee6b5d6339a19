#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbp/verify.hpp"

namespace fbp {

using Json = nlohmann::ordered_json;

/// Bad or unknown configuration entry; `key()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Flat `key = value` run configuration. Every key has a default; see
/// config_keys() for the accepted set.
struct RunConfig {
    std::string group = "heisenberg1";
    std::vector<double> lower{-1.0};
    std::vector<double> upper{1.0};
    std::vector<int> nodes{33};
    double lambda = 50.0;

    std::string g_family = "constant";
    double g_a = 1.0;
    double g_m = 1.5;
    double g_alpha = 1.0;
    double g_beta = 0.0;
    std::vector<double> g_knots;
    std::vector<double> g_values;

    double eps_start = 0.4;
    double eps_factor = 0.5;
    int eps_steps = 4;

    double cg_tol = 1e-10;
    int cg_max_iter = 20000;
    double descent_tol = 1e-8;
    int descent_max_iter = 500;
    int mp_path_nodes = 17;
    int mp_max_iter = 400;
    int newton_max_iter = 60;

    std::string output = "fbp_out";
    std::uint64_t seed = 0;

    bool verify_max_principle = true;
    bool verify_energy_inequality = true;
    bool verify_subharmonicity = true;
    bool verify_jump = true;
    bool verify_lipschitz = true;
    bool verify_energy_bracket = true;
    double jump_min = 1.6;
    double jump_max = 2.4;
    int jump_min_samples = 30;

    std::vector<double> sweep_lambda;

    GroupSpec group_spec() const;
    Grid grid() const;
    NonlinearitySpec nonlinearity() const;
    SolveConfig solve_config() const;
    /// eps.start * eps.factor^j, j < eps.steps.
    std::vector<double> schedule() const;

    /// Canonical `key -> value` strings; parse_config_map inverts it.
    std::map<std::string, std::string> to_map() const;
    Json to_json() const;
};

const std::vector<std::string>& config_keys();

/// Builds and validates a configuration; throws ConfigError.
RunConfig parse_config_map(const std::map<std::string, std::string>& entries);
/// `key = value` lines, `#` comments, blank lines ignored.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

struct RunOutcome {
    Json report;
    /// 0 = verifications pass or report-only, 1 = solver failure or a failed
    /// verification, 2 = configuration or input error.
    int exit_code = 0;
};

/// Progress sink for long runs; may be empty.
using ProgressSink = std::function<void(const std::string&)>;

/// Writes report.json and CSV fields under cfg.output.
RunOutcome run_solve(const RunConfig& cfg, const ProgressSink& progress = {});
RunOutcome run_continuation(const RunConfig& cfg, const ProgressSink& progress = {});
/// One subdirectory per lambda; workers capped by FBP_THREADS.
RunOutcome run_lambda_sweep(const RunConfig& cfg, const std::vector<double>& lambdas,
                            const ProgressSink& progress = {});
/// Recomputes the verification blocks from a run directory's report.json and
/// field CSVs. Throws ConfigError on a missing or malformed directory.
RunOutcome run_verify(const std::string& dir);

/// Verification block of one iterate, shared by runs and run_verify.
Json verify_iterate(const ScalarField& u, double eps, const RunConfig& cfg, const HorizontalOperators& ops,
                    bool final_step);

/// Serialized report text (two-space indent, trailing newline).
std::string dump_report(const Json& report);

/// Worker count from FBP_THREADS (at least 1), else the hardware concurrency.
int worker_count();

}  // namespace fbp
