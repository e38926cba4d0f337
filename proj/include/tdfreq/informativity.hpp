#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tdfreq/lti.hpp"

namespace tdfreq {

/// Hankel matrix of depth n: entry (i, j) = seq[i + j], shape (n+1) x (T-n+1).
Eigen::MatrixXd build_hankel(const Eigen::Ref<const Eigen::VectorXd>& seq, Eigen::Index depth);

/// G = [H_n(U_k); H_n(Y_k)] for the window of samples k..k+t.
struct HankelStack {
    Eigen::MatrixXd matrix;
    Eigen::Index depth = 0;
    Eigen::Index window_start = 0;
    Eigen::Index window_length = 0;  // t + 1
};

HankelStack build_gn(const TimeSeries& ts, Eigen::Index depth, Eigen::Index window_start, Eigen::Index t);

/// gamma = [1, s, ..., s^n], gamma1 = d gamma / ds, z = [0; -gamma], b = [gamma; 0].
struct MomentVectors {
    cplx sigma;
    Eigen::VectorXcd gamma;
    Eigen::VectorXcd gamma1;
    Eigen::VectorXcd z_sigma;
    Eigen::VectorXcd b_sigma;

    /// Right-hand side [gamma1; m0 * gamma1] used to recover the derivative.
    Eigen::VectorXcd derivative_rhs(cplx m0) const;
};

MomentVectors moment_vectors(cplx sigma, Eigen::Index depth);

struct Tolerances {
    double tau1 = 1e-10;      // uniqueness
    double tau2 = 1e-10;      // existence
    double rank_tol = 1e-10;  // relative singular value cutoff for the range basis
};

void validate(const Tolerances& tol);

/// Orthonormal basis of the numerical range of G (left singular vectors
/// whose singular values are >= rank_tol * largest).
struct OrthBasis {
    Eigen::MatrixXd U;
    Eigen::VectorXd singular_values;  // full spectrum of G, non-increasing

    Eigen::Index rank() const { return U.cols(); }
    bool empty() const { return U.cols() == 0; }
};

OrthBasis orth_basis(const HankelStack& G, double rank_tol);
OrthBasis orth_basis(const Eigen::MatrixXd& G, double rank_tol);

struct InformativityCheck {
    bool unique = false;
    bool exists = false;
    double unique_ratio = 0.0;  // ||v|| / ||z||
    double exist_ratio = 0.0;   // ||(I - v v^H / ||v||^2) b_perp|| / ||b||
    Eigen::VectorXcd v;         // (I - U U^H) z
    Eigen::VectorXcd b_perp;    // (I - U U^H) b
};

/// Tolerance-based uniqueness and existence tests using only products with U.
InformativityCheck check_informativity(const OrthBasis& basis, const MomentVectors& mv, const Tolerances& tol);

/// Same test against an arbitrary right-hand side (e.g. the derivative one).
InformativityCheck check_informativity(const OrthBasis& basis, const Eigen::VectorXcd& z,
                                       const Eigen::VectorXcd& rhs, const Tolerances& tol);

struct DirectCheck {
    bool unique = false;
    bool exists = false;
    Eigen::Index rank_g = 0;
    Eigen::Index rank_gz = 0;
    Eigen::Index rank_gzb = 0;
};

/// Rank-condition form of the test, computed with full SVDs. Meant for small
/// instances and as an independent check of check_informativity.
DirectCheck check_informativity_direct(const HankelStack& G, const MomentVectors& mv);

struct WindowSolve {
    cplx moment{0.0, 0.0};
    double residual = std::numeric_limits<double>::infinity();
    bool ok = false;  // false when [U z] is numerically rank deficient
};

/// Least squares over [U z] x = b, returning the last component of x and the residual.
WindowSolve solve_window(const OrthBasis& basis, const MomentVectors& mv);

/// Same, with right-hand side [gamma1; m0 * gamma1].
WindowSolve solve_window_deriv(const OrthBasis& basis, const MomentVectors& mv, cplx m0);

/// Least squares with an arbitrary right-hand side.
WindowSolve solve_window(const OrthBasis& basis, const Eigen::VectorXcd& z, const Eigen::VectorXcd& rhs);

enum class WindowSelection { Even, Random };

struct WindowPlan {
    Eigen::Index t = 0;  // window covers t+1 samples
    Eigen::Index K = 0;
    Eigen::Index W = 0;
    std::vector<Eigen::Index> starts;
};

struct PlanOptions {
    double t_factor = 3.0;  // t = ceil(t_factor * n_used) unless t is set
    std::optional<Eigen::Index> t;
    Eigen::Index K = 20;
    Eigen::Index W = 10;
    WindowSelection selection = WindowSelection::Even;
    std::uint64_t seed = 0;
};

/// Throws InsufficientDataError when the plan cannot fit in T+1 samples.
WindowPlan make_window_plan(Eigen::Index T, Eigen::Index n_used, const PlanOptions& opts = {});
void validate(const WindowPlan& plan, Eigen::Index T, Eigen::Index n_used);

struct WindowEstimate {
    Eigen::Index window = 0;  // index into plan.starts
    Eigen::Index start = 0;
    bool unique = false;
    bool exists = false;
    double unique_ratio = 0.0;
    double exist_ratio = 0.0;
    cplx m0{0.0, 0.0};
    double residual0 = std::numeric_limits<double>::infinity();
    bool passed = false;  // usable for the value estimate
    bool deriv_exists = false;
    double deriv_exist_ratio = 0.0;
    cplx m1{0.0, 0.0};
    double residual1 = std::numeric_limits<double>::infinity();
    bool deriv_passed = false;
};

struct RecoveryResult {
    cplx sigma{0.0, 0.0};
    cplx M0{0.0, 0.0};
    std::optional<cplx> M1;
    std::vector<WindowEstimate> per_window;
    double sW0 = std::numeric_limits<double>::infinity();
    std::optional<double> sW1;
    bool sW0_normalized = true;
    bool sW1_normalized = true;
    Eigen::Index n_used = 0;
    std::vector<Eigen::Index> kept;        // windows averaged into M0
    std::vector<Eigen::Index> kept_deriv;  // windows averaged into M1
    bool informative = false;              // at least 2 windows passed
    bool deriv_informative = false;
};

struct RecoveryOptions {
    Tolerances tol;
    bool want_deriv = false;
    unsigned threads = 1;
    // Bases are cached between the value and derivative passes while their
    // total size stays under this many bytes; otherwise they are recomputed.
    std::size_t basis_cache_bytes = std::size_t{1} << 30;
};

/// Windowed recovery of H(sigma) (and optionally H'(sigma)) at every sigma.
std::vector<RecoveryResult> recover(const TimeSeries& ts, const std::vector<cplx>& sigmas, Eigen::Index n_used,
                                    const WindowPlan& plan, const RecoveryOptions& opts = {});

/// Normalized sample standard deviation of estimates around their mean.
/// Falls back to the unnormalized value when the mean is (numerically) zero.
struct Spread {
    cplx mean{0.0, 0.0};
    double value = std::numeric_limits<double>::infinity();
    bool normalized = true;
};
Spread normalized_spread(const std::vector<cplx>& estimates);

struct AdaptStep {
    Eigen::Index n_used = 0;
    double median_sW0 = std::numeric_limits<double>::infinity();
};

struct AdaptResult {
    Eigen::Index n_used = 0;
    std::vector<RecoveryResult> results;
    bool converged = false;
    std::vector<AdaptStep> history;
};

struct AdaptOptions {
    double s_target = 1e-2;
    Eigen::Index n_init = 1;
    Eigen::Index n_max = 0;  // 0: largest order the data can support
    double growth = 1.5;
    // Also escalate while fewer than this fraction of sigmas are informative.
    // 0 gates on the median alone.
    double min_informative = 0.0;
};

/// Median of sW0 over informative results (+inf if none).
double median_indicator(const std::vector<RecoveryResult>& results);

/// Grows the working order by `growth` until the median indicator drops to s_target.
AdaptResult adapt_order(const TimeSeries& ts, const std::vector<cplx>& sigmas, const PlanOptions& plan_template,
                        const RecoveryOptions& rec, const AdaptOptions& adapt);

/// Largest n_used for which make_window_plan(T, n_used, opts) is feasible.
Eigen::Index max_feasible_order(Eigen::Index T, const PlanOptions& opts);

}  // namespace tdfreq
