#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tdfreq {

struct SystemSpec {
    std::string kind = "random";  // random | heat | penzl | file
    int n = 5;
    double dt = 0.0;  // 0: the generator's default
    std::uint64_t seed = 1;
    std::filesystem::path file;
};

struct TrajectorySpec {
    long T = 100;
    std::string input = "gaussian";  // gaussian | file
    std::uint64_t input_seed = 2;
    std::vector<double> x0;  // empty: zero initial state
    std::filesystem::path file;  // trajectory CSV read by `recover`
};

struct RecoverySpec {
    int count = 20;
    double omega_min = 1e-3;
    double omega_max = 3.141592653589793;
    std::string spacing = "log";  // log | linear
    std::optional<long> n_used;   // empty: estimate and adapt
    std::optional<long> t;
    long K = 20;
    long W = 10;
    std::string selection = "even";  // even | random
    std::uint64_t window_seed = 0;
    double tau1 = 1e-10;
    double tau2 = 1e-10;
    double rank_tol = 1e-10;
    double s_target = 1e-2;
    double min_informative = 0.0;
    bool derivatives = true;
};

struct RomSpec {
    std::string method = "loewner";  // loewner | hermite | vf
    std::optional<long> r;
    int vf_iters = 20;
    std::string vf_weights = "none";  // none | indicator
    double vf_weight_exponent = 0.25;
    bool stable = true;
    std::filesystem::path recovery_file;  // recovery JSON read by `rom`
};

struct OutputSpec {
    std::filesystem::path dir = "out";
    std::string system = "system.json";
    std::string trajectory = "trajectory.csv";
    std::string recovery = "recovery";  // writes recovery.json and recovery.csv
    std::string rom = "rom.json";
    std::string sweep = "sweep.csv";
    int sweep_points = 512;
    std::filesystem::path eval_file;  // system or ROM JSON read by `eval`
};

struct ExperimentConfig {
    SystemSpec system;
    TrajectorySpec trajectory;
    RecoverySpec recovery;
    RomSpec rom;
    OutputSpec output;

    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;
};

/// Parses "[section]" headers and "key = value" lines; '#' starts a comment.
/// Unknown sections and keys are rejected with their line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace tdfreq
