#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tdfreq/config.hpp"
#include "tdfreq/informativity.hpp"
#include "tdfreq/lti.hpp"
#include "tdfreq/rom.hpp"

namespace tdfreq {

namespace fs = std::filesystem;

// Building blocks shared by the subcommands and the reproduction runs.

StateSpaceSystem make_system(const SystemSpec& spec);
TimeSeries make_trajectory(const StateSpaceSystem& sys, const TrajectorySpec& spec);
std::vector<double> frequency_grid(const RecoverySpec& spec);
PlanOptions plan_options(const RecoverySpec& spec);
RecoveryOptions recovery_options(const RecoverySpec& spec, unsigned threads);

struct RecoveryRun {
    std::optional<Eigen::Index> order_estimate;  // set when n_used was chosen automatically
    Eigen::Index n_used = 0;
    bool converged = true;
    std::vector<AdaptStep> history;
    std::vector<RecoveryResult> results;
};

/// Fixed n_used, or MOESP estimate followed by adapt_order when n_used is unset.
RecoveryRun run_recovery(const TimeSeries& ts, const std::vector<cplx>& sigmas, const RecoverySpec& spec,
                         unsigned threads);

/// Informative results (plus conjugates) as interpolation data. Derivatives are
/// attached when every kept point has one; weights are sW^exponent if requested.
InterpolationData recovered_data(const std::vector<RecoveryResult>& results, bool with_derivs,
                                 std::optional<double> weight_exponent = std::nullopt);

struct RomBuild {
    DescriptorROM rom;
    std::optional<VectorFitResult> vf;
    Eigen::Index discarded = 0;  // unstable modes removed by stable_part
    std::string json;
};

RomBuild build_rom(const InterpolationData& data, const RomSpec& spec);

// Subcommands. Each writes into cfg.output.dir and returns the main file written.
fs::path cmd_generate(const ExperimentConfig& cfg);
fs::path cmd_simulate(const ExperimentConfig& cfg);
fs::path cmd_recover(const ExperimentConfig& cfg, unsigned threads);
fs::path cmd_rom(const ExperimentConfig& cfg, unsigned threads);
fs::path cmd_eval(const ExperimentConfig& cfg);

// Reproduction runs.

struct ReproOptions {
    std::uint64_t seed = 7;
    fs::path out = "repro";
    bool full = false;
    unsigned threads = 1;
};

struct ReproReport {
    std::string name;
    bool pass = false;
    fs::path dir;
};

const std::vector<std::string>& repro_names();

/// Runs one experiment and writes CSVs plus summary.json under opts.out/name.
/// Failures are rethrown with the stage name and the configuration echoed.
ReproReport cmd_repro(const std::string& name, const ReproOptions& opts);

// Results of the individual experiments, also used by the acceptance suite.

struct ErrorTriple {
    double loewner = 0.0;
    double hermite = 0.0;
    double vf = 0.0;
};

struct PipelineResult {
    Eigen::Index order_estimate = 0;
    Eigen::Index n_used = 0;
    bool converged = true;
    std::vector<AdaptStep> history;
    std::vector<double> omegas;
    std::vector<RecoveryResult> results;
    std::vector<cplx> truth;
    std::vector<cplx> truth_deriv;
    double eps0 = 0.0;
    double eps1 = 0.0;
    ErrorTriple recovered;    // ||H - H_hat|| / ||H||
    ErrorTriple exact;        // ||H - H_tilde|| / ||H||
    ErrorTriple between;      // ||H_tilde - H_hat|| / ||H_tilde||
    ErrorTriple discarded;    // unstable modes removed from the recovered-data ROMs
};

struct PipelineSettings {
    int omega_count = 100;
    double omega_min = 1e-3;
    Eigen::Index r = 10;
    std::optional<Eigen::Index> n_used;  // empty: MOESP estimate, then adapt_order
    double s_target = 1e-2;
    double min_informative = 0.0;
    Eigen::Index K = 20;
    double rank_tol = 1e-10;
    std::optional<double> vf_weight_exponent;
    bool build_roms = true;
    unsigned threads = 1;
};

PipelineResult run_pipeline(const StateSpaceSystem& sys, const TimeSeries& ts, const PipelineSettings& s);

struct ConditioningResult {
    Eigen::VectorXd sv_G;   // singular values of [G z]
    Eigen::VectorXd sv_Uc;  // of [U_c z], U_c truncated at rank_tol
    Eigen::VectorXd sv_U;   // of [U z], U all left singular vectors of the thin SVD
    double kappa_G = 0.0, kappa_Uc = 0.0, kappa_U = 0.0;
};

ConditioningResult run_conditioning(int n, Eigen::Index T, cplx sigma, std::uint64_t seed, double rank_tol);

struct WindowSweepResult {
    std::vector<Eigen::Index> K;
    std::vector<double> abs_error;
    std::vector<double> sW;
};

WindowSweepResult run_window_sweep(int n, Eigen::Index T, cplx sigma, const std::vector<Eigen::Index>& Ks,
                                   Eigen::Index W, std::uint64_t seed, double rank_tol);

struct OrderSweepResult {
    std::vector<Eigen::Index> n_used;
    std::vector<double> max_rel_error;
    std::vector<double> median_sW;
};

OrderSweepResult run_order_sweep(int n, Eigen::Index T, const std::vector<Eigen::Index>& orders, int omega_count,
                                 std::uint64_t seed, double rank_tol, unsigned threads);

/// Cutoff used by the order-100 windowing experiments, close to max(size) * eps.
/// The module default 1e-10 truncates the fast modes there and every sigma fails
/// the existence test.
inline constexpr double kFineRankTol = 1e-13;

}  // namespace tdfreq
