#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fbp/report.hpp"

namespace fbp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const char* first = v.data();
    const char* last = v.data() + v.size();
    const auto [p, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || p != last || !std::isfinite(x)) throw ConfigError(key, "expected a real number, got '" + v + "'");
    return x;
}

long long to_integer(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(key, "integer out of range");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    for (const std::string& part : split(v, ',')) out.push_back(to_double(key, part));
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
    return s;
}

std::string join(const std::vector<int>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

template <class T>
std::vector<T> broadcast(const std::string& key, std::vector<T> v, int dim) {
    if (v.size() == 1) v.assign(static_cast<size_t>(dim), v.front());
    if (static_cast<int>(v.size()) != dim) {
        throw ConfigError(key, "expected 1 or " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
    }
    return v;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "group",          "domain.lower",     "domain.upper",        "nodes",
        "lambda",         "g.family",         "g.a",                 "g.m",
        "g.alpha",        "g.beta",           "g.table",             "eps.start",
        "eps.factor",     "eps.steps",        "cg.tol",              "cg.max_iter",
        "descent.tol",    "descent.max_iter", "mp.path_nodes",       "mp.max_iter",
        "newton.max_iter", "output",          "seed",                "verify.max_principle",
        "verify.energy_inequality", "verify.subharmonicity", "verify.jump", "verify.lipschitz",
        "verify.energy_bracket", "verify.jump.min", "verify.jump.max", "verify.jump.min_samples",
        "sweep.lambda"};
    return keys;
}

GroupSpec RunConfig::group_spec() const {
    try {
        return group_by_name(group);
    } catch (const std::exception& e) {
        throw ConfigError("group", e.what());
    }
}

Grid RunConfig::grid() const {
    const int dim = group_spec().ambient_dim();
    const auto lo = broadcast("domain.lower", lower, dim);
    const auto hi = broadcast("domain.upper", upper, dim);
    const auto n = broadcast("nodes", nodes, dim);
    BoxDomain box = [&] {
        try {
            return BoxDomain(lo, hi);
        } catch (const std::exception& e) {
            throw ConfigError("domain.lower", e.what());
        }
    }();
    try {
        return Grid(std::move(box), n);
    } catch (const std::exception& e) {
        throw ConfigError("nodes", e.what());
    }
}

NonlinearitySpec RunConfig::nonlinearity() const {
    try {
        if (g_family == "constant") return NonlinearitySpec::constant(g_a, g_alpha, g_beta, g_m);
        if (g_family == "power") return NonlinearitySpec::power(g_m, g_alpha, g_beta);
        if (g_family == "table") return NonlinearitySpec::table(g_knots, g_values, g_alpha, g_beta, g_m);
    } catch (const std::exception& e) {
        throw ConfigError("g." + std::string(g_family == "table" ? "table" : "family"), e.what());
    }
    throw ConfigError("g.family", "unknown family '" + g_family + "' (constant | power | table)");
}

SolveConfig RunConfig::solve_config() const {
    SolveConfig c;
    c.lambda = lambda;
    c.eps = eps_start;
    c.cg_tol = cg_tol;
    c.cg_max_iter = cg_max_iter;
    c.descent_tol = descent_tol;
    c.max_outer_iter = descent_max_iter;
    c.path_nodes = mp_path_nodes;
    c.mp_max_iter = mp_max_iter;
    c.newton_max_iter = newton_max_iter;
    return c;
}

std::vector<double> RunConfig::schedule() const {
    std::vector<double> s;
    double e = eps_start;
    for (int j = 0; j < eps_steps; ++j) {
        s.push_back(e);
        e *= eps_factor;
    }
    return s;
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["group"] = group;
    m["domain.lower"] = join(lower);
    m["domain.upper"] = join(upper);
    m["nodes"] = join(nodes);
    m["lambda"] = format_double(lambda);
    m["g.family"] = g_family;
    m["g.a"] = format_double(g_a);
    m["g.m"] = format_double(g_m);
    m["g.alpha"] = format_double(g_alpha);
    m["g.beta"] = format_double(g_beta);
    std::string table;
    for (size_t k = 0; k < g_knots.size(); ++k) {
        table += (k ? "," : "") + format_double(g_knots[k]) + ":" + format_double(g_values[k]);
    }
    m["g.table"] = table;
    m["eps.start"] = format_double(eps_start);
    m["eps.factor"] = format_double(eps_factor);
    m["eps.steps"] = std::to_string(eps_steps);
    m["cg.tol"] = format_double(cg_tol);
    m["cg.max_iter"] = std::to_string(cg_max_iter);
    m["descent.tol"] = format_double(descent_tol);
    m["descent.max_iter"] = std::to_string(descent_max_iter);
    m["mp.path_nodes"] = std::to_string(mp_path_nodes);
    m["mp.max_iter"] = std::to_string(mp_max_iter);
    m["newton.max_iter"] = std::to_string(newton_max_iter);
    m["output"] = output;
    m["seed"] = std::to_string(seed);
    m["verify.max_principle"] = bool_str(verify_max_principle);
    m["verify.energy_inequality"] = bool_str(verify_energy_inequality);
    m["verify.subharmonicity"] = bool_str(verify_subharmonicity);
    m["verify.jump"] = bool_str(verify_jump);
    m["verify.lipschitz"] = bool_str(verify_lipschitz);
    m["verify.energy_bracket"] = bool_str(verify_energy_bracket);
    m["verify.jump.min"] = format_double(jump_min);
    m["verify.jump.max"] = format_double(jump_max);
    m["verify.jump.min_samples"] = std::to_string(jump_min_samples);
    m["sweep.lambda"] = join(sweep_lambda);
    return m;
}

Json RunConfig::to_json() const {
    Json j = Json::object();
    const auto m = to_map();
    for (const std::string& k : config_keys()) j[k] = m.at(k);
    return j;
}

RunConfig parse_config_map(const std::map<std::string, std::string>& entries) {
    const auto& keys = config_keys();
    for (const auto& [k, v] : entries) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(k, "unknown key");
    }
    RunConfig c;
    auto get = [&](const std::string& k) -> const std::string* {
        const auto it = entries.find(k);
        return it == entries.end() ? nullptr : &it->second;
    };
    if (auto v = get("group")) c.group = *v;
    if (auto v = get("domain.lower")) c.lower = to_doubles("domain.lower", *v);
    if (auto v = get("domain.upper")) c.upper = to_doubles("domain.upper", *v);
    if (auto v = get("nodes")) {
        c.nodes.clear();
        for (const std::string& p : split(*v, ',')) c.nodes.push_back(to_int("nodes", p));
    }
    if (auto v = get("lambda")) c.lambda = to_double("lambda", *v);
    if (auto v = get("g.family")) c.g_family = *v;
    if (auto v = get("g.a")) c.g_a = to_double("g.a", *v);
    if (auto v = get("g.m")) c.g_m = to_double("g.m", *v);
    if (auto v = get("g.alpha")) c.g_alpha = to_double("g.alpha", *v);
    if (auto v = get("g.beta")) c.g_beta = to_double("g.beta", *v);
    if (auto v = get("g.table"); v && !v->empty()) {
        for (const std::string& pair : split(*v, ',')) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos) throw ConfigError("g.table", "expected knot:value pairs, got '" + pair + "'");
            c.g_knots.push_back(to_double("g.table", trim(pair.substr(0, colon))));
            c.g_values.push_back(to_double("g.table", trim(pair.substr(colon + 1))));
        }
    }
    if (auto v = get("eps.start")) c.eps_start = to_double("eps.start", *v);
    if (auto v = get("eps.factor")) c.eps_factor = to_double("eps.factor", *v);
    if (auto v = get("eps.steps")) c.eps_steps = to_int("eps.steps", *v);
    if (auto v = get("cg.tol")) c.cg_tol = to_double("cg.tol", *v);
    if (auto v = get("cg.max_iter")) c.cg_max_iter = to_int("cg.max_iter", *v);
    if (auto v = get("descent.tol")) c.descent_tol = to_double("descent.tol", *v);
    if (auto v = get("descent.max_iter")) c.descent_max_iter = to_int("descent.max_iter", *v);
    if (auto v = get("mp.path_nodes")) c.mp_path_nodes = to_int("mp.path_nodes", *v);
    if (auto v = get("mp.max_iter")) c.mp_max_iter = to_int("mp.max_iter", *v);
    if (auto v = get("newton.max_iter")) c.newton_max_iter = to_int("newton.max_iter", *v);
    if (auto v = get("output")) c.output = *v;
    if (auto v = get("seed")) {
        const long long s = to_integer("seed", *v);
        if (s < 0) throw ConfigError("seed", "must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("verify.max_principle")) c.verify_max_principle = to_bool("verify.max_principle", *v);
    if (auto v = get("verify.energy_inequality")) c.verify_energy_inequality = to_bool("verify.energy_inequality", *v);
    if (auto v = get("verify.subharmonicity")) c.verify_subharmonicity = to_bool("verify.subharmonicity", *v);
    if (auto v = get("verify.jump")) c.verify_jump = to_bool("verify.jump", *v);
    if (auto v = get("verify.lipschitz")) c.verify_lipschitz = to_bool("verify.lipschitz", *v);
    if (auto v = get("verify.energy_bracket")) c.verify_energy_bracket = to_bool("verify.energy_bracket", *v);
    if (auto v = get("verify.jump.min")) c.jump_min = to_double("verify.jump.min", *v);
    if (auto v = get("verify.jump.max")) c.jump_max = to_double("verify.jump.max", *v);
    if (auto v = get("verify.jump.min_samples")) c.jump_min_samples = to_int("verify.jump.min_samples", *v);
    if (auto v = get("sweep.lambda")) c.sweep_lambda = to_doubles("sweep.lambda", *v);

    // Validation through the owning modules.
    (void)c.grid();
    (void)c.nonlinearity();
    if (!(c.lambda >= 0.0)) throw ConfigError("lambda", "must be nonnegative");
    if (!(c.eps_start > 0.0)) throw ConfigError("eps.start", "must be positive");
    if (!(c.eps_factor > 0.0 && c.eps_factor < 1.0)) throw ConfigError("eps.factor", "must lie in (0, 1)");
    if (c.eps_steps < 1) throw ConfigError("eps.steps", "must be at least 1");
    if (c.output.empty()) throw ConfigError("output", "must not be empty");
    if (c.jump_min_samples < 0) throw ConfigError("verify.jump.min_samples", "must be nonnegative");
    for (double l : c.sweep_lambda) {
        if (!(l >= 0.0)) throw ConfigError("sweep.lambda", "entries must be nonnegative");
    }
    try {
        c.solve_config().validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        std::string key;
        for (const char* k : {"cg.tol", "descent.tol", "mp.path_nodes"}) {
            if (msg.find(k) != std::string::npos) key = k;
        }
        throw ConfigError(key, msg);
    }
    return c;
}

RunConfig parse_config(std::istream& is) {
    std::map<std::string, std::string> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
        if (!entries.emplace(key, value).second) throw ConfigError(key, "duplicate key at line " + std::to_string(lineno));
    }
    return parse_config_map(entries);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    return parse_config(in);
}

}  // namespace fbp
