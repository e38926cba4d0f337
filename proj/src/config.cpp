#include "tdfreq/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tdfreq {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

struct Ctx {
    std::size_t line;
    std::string key;

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::invalid_argument("config line " + std::to_string(line) + " (" + key + "): " + msg);
    }
};

double as_double(const std::string& v, const Ctx& c) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        c.fail("expected a number, got '" + v + "'");
    }
    if (pos != v.size()) c.fail("expected a number, got '" + v + "'");
    return d;
}

long as_long(const std::string& v, const Ctx& c) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        c.fail("expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) c.fail("expected an integer, got '" + v + "'");
    return x;
}

std::uint64_t as_u64(const std::string& v, const Ctx& c) {
    long x = as_long(v, c);
    if (x < 0) c.fail("expected a nonnegative integer");
    return static_cast<std::uint64_t>(x);
}

bool as_bool(const std::string& v, const Ctx& c) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    c.fail("expected true or false, got '" + v + "'");
}

std::string one_of(const std::string& v, std::initializer_list<const char*> allowed, const Ctx& c) {
    std::string list;
    for (const char* a : allowed) {
        if (v == a) return v;
        list += list.empty() ? a : std::string(" | ") + a;
    }
    c.fail("expected one of " + list + ", got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const Ctx&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"system",
         {
             {"kind", [](auto& c, auto& v, auto& x) { c.system.kind = one_of(v, {"random", "heat", "penzl", "file"}, x); }},
             {"n", [](auto& c, auto& v, auto& x) { c.system.n = static_cast<int>(as_long(v, x)); }},
             {"dt", [](auto& c, auto& v, auto& x) { c.system.dt = as_double(v, x); }},
             {"seed", [](auto& c, auto& v, auto& x) { c.system.seed = as_u64(v, x); }},
             {"file", [](auto& c, auto& v, auto&) { c.system.file = v; }},
         }},
        {"trajectory",
         {
             {"T", [](auto& c, auto& v, auto& x) { c.trajectory.T = as_long(v, x); }},
             {"input", [](auto& c, auto& v, auto& x) { c.trajectory.input = one_of(v, {"gaussian", "file"}, x); }},
             {"input_seed", [](auto& c, auto& v, auto& x) { c.trajectory.input_seed = as_u64(v, x); }},
             {"x0",
              [](auto& c, auto& v, auto& x) {
                  c.trajectory.x0.clear();
                  if (v == "zero") return;
                  std::stringstream ss(v);
                  std::string cell;
                  while (std::getline(ss, cell, ',')) c.trajectory.x0.push_back(as_double(trim(cell), x));
              }},
             {"file", [](auto& c, auto& v, auto&) { c.trajectory.file = v; }},
         }},
        {"recovery",
         {
             {"count", [](auto& c, auto& v, auto& x) { c.recovery.count = static_cast<int>(as_long(v, x)); }},
             {"omega_min", [](auto& c, auto& v, auto& x) { c.recovery.omega_min = as_double(v, x); }},
             {"omega_max", [](auto& c, auto& v, auto& x) { c.recovery.omega_max = as_double(v, x); }},
             {"spacing", [](auto& c, auto& v, auto& x) { c.recovery.spacing = one_of(v, {"log", "linear"}, x); }},
             {"n_used",
              [](auto& c, auto& v, auto& x) {
                  if (v == "auto")
                      c.recovery.n_used.reset();
                  else
                      c.recovery.n_used = as_long(v, x);
              }},
             {"t",
              [](auto& c, auto& v, auto& x) {
                  if (v == "auto")
                      c.recovery.t.reset();
                  else
                      c.recovery.t = as_long(v, x);
              }},
             {"K", [](auto& c, auto& v, auto& x) { c.recovery.K = as_long(v, x); }},
             {"W", [](auto& c, auto& v, auto& x) { c.recovery.W = as_long(v, x); }},
             {"selection", [](auto& c, auto& v, auto& x) { c.recovery.selection = one_of(v, {"even", "random"}, x); }},
             {"window_seed", [](auto& c, auto& v, auto& x) { c.recovery.window_seed = as_u64(v, x); }},
             {"tau1", [](auto& c, auto& v, auto& x) { c.recovery.tau1 = as_double(v, x); }},
             {"tau2", [](auto& c, auto& v, auto& x) { c.recovery.tau2 = as_double(v, x); }},
             {"rank_tol", [](auto& c, auto& v, auto& x) { c.recovery.rank_tol = as_double(v, x); }},
             {"s_target", [](auto& c, auto& v, auto& x) { c.recovery.s_target = as_double(v, x); }},
             {"min_informative", [](auto& c, auto& v, auto& x) { c.recovery.min_informative = as_double(v, x); }},
             {"derivatives", [](auto& c, auto& v, auto& x) { c.recovery.derivatives = as_bool(v, x); }},
         }},
        {"rom",
         {
             {"method", [](auto& c, auto& v, auto& x) { c.rom.method = one_of(v, {"loewner", "hermite", "vf"}, x); }},
             {"r",
              [](auto& c, auto& v, auto& x) {
                  if (v == "auto")
                      c.rom.r.reset();
                  else
                      c.rom.r = as_long(v, x);
              }},
             {"vf_iters", [](auto& c, auto& v, auto& x) { c.rom.vf_iters = static_cast<int>(as_long(v, x)); }},
             {"vf_weights", [](auto& c, auto& v, auto& x) { c.rom.vf_weights = one_of(v, {"none", "indicator"}, x); }},
             {"vf_weight_exponent", [](auto& c, auto& v, auto& x) { c.rom.vf_weight_exponent = as_double(v, x); }},
             {"stable", [](auto& c, auto& v, auto& x) { c.rom.stable = as_bool(v, x); }},
             {"recovery_file", [](auto& c, auto& v, auto&) { c.rom.recovery_file = v; }},
         }},
        {"output",
         {
             {"dir", [](auto& c, auto& v, auto&) { c.output.dir = v; }},
             {"system", [](auto& c, auto& v, auto&) { c.output.system = v; }},
             {"trajectory", [](auto& c, auto& v, auto&) { c.output.trajectory = v; }},
             {"recovery", [](auto& c, auto& v, auto&) { c.output.recovery = v; }},
             {"rom", [](auto& c, auto& v, auto&) { c.output.rom = v; }},
             {"sweep", [](auto& c, auto& v, auto&) { c.output.sweep = v; }},
             {"sweep_points", [](auto& c, auto& v, auto& x) { c.output.sweep_points = static_cast<int>(as_long(v, x)); }},
             {"eval_file", [](auto& c, auto& v, auto&) { c.output.eval_file = v; }},
         }},
    };
    return s;
}

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
    throw std::invalid_argument("config " + field + ": " + msg);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (system.kind != "file" && system.kind != "penzl" && system.n < 1) bad("system.n", "must be at least 1");
    if (system.kind == "file" && system.file.empty()) bad("system.file", "required when kind = file");
    if (system.dt < 0.0 || !std::isfinite(system.dt)) bad("system.dt", "must be positive (or 0 for the default)");
    if (trajectory.T < 1) bad("trajectory.T", "must be at least 1");
    if (trajectory.input == "file" && trajectory.file.empty()) bad("trajectory.file", "required when input = file");
    if (recovery.count < 1) bad("recovery.count", "must be at least 1");
    if (!(recovery.omega_max > recovery.omega_min)) bad("recovery.omega_max", "must exceed omega_min");
    if (recovery.spacing == "log" && !(recovery.omega_min > 0.0)) bad("recovery.omega_min", "must be positive for log spacing");
    if (recovery.omega_max > 3.141592653589793 + 1e-12 || recovery.omega_min < -3.141592653589793 - 1e-12)
        bad("recovery.omega_max", "frequencies must lie in [-pi, pi]");
    if (recovery.n_used && *recovery.n_used < 1) bad("recovery.n_used", "must be at least 1");
    if (recovery.t && *recovery.t < 1) bad("recovery.t", "must be at least 1");
    if (recovery.W < 2) bad("recovery.W", "must be at least 2");
    if (recovery.K < recovery.W) bad("recovery.K", "must be at least W");
    for (auto [name, v] : {std::pair{"tau1", recovery.tau1}, std::pair{"tau2", recovery.tau2},
                           std::pair{"rank_tol", recovery.rank_tol}, std::pair{"s_target", recovery.s_target}})
        if (!(v > 0.0) || !std::isfinite(v)) bad(std::string("recovery.") + name, "must be positive");
    if (!(recovery.min_informative >= 0.0 && recovery.min_informative <= 1.0))
        bad("recovery.min_informative", "must lie in [0, 1]");
    if (rom.r && *rom.r < 1) bad("rom.r", "must be at least 1");
    if (rom.method == "vf" && !rom.r) bad("rom.r", "vector fitting needs an explicit order");
    if (rom.vf_iters < 1) bad("rom.vf_iters", "must be at least 1");
    if (!std::isfinite(rom.vf_weight_exponent)) bad("rom.vf_weight_exponent", "must be finite");
    if (output.sweep_points < 2) bad("output.sweep_points", "must be at least 2");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section))
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = unquote(trim(line.substr(eq + 1)));
        if (section.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": key '" + key +
                                        "' appears before any section");
        const auto& keys = schema().at(section);
        auto it = keys.find(key);
        if (it == keys.end())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key +
                                        "' in [" + section + "]");
        it->second(cfg, value, Ctx{lineno, section + "." + key});
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace tdfreq
