#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace tdfreq {

using cplx = std::complex<double>;

/// Discrete-time SISO system
///
///     x[k+1] = A x[k] + b u[k],   y[k] = c^T x[k]
///
/// with transfer function H(z) = c^T (zI - A)^{-1} b. There is no feedthrough
/// term. An order-0 system is allowed and represents H = 0.
class StateSpaceSystem {
public:
    StateSpaceSystem() = default;
    StateSpaceSystem(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::VectorXd c);

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::VectorXd& b() const { return b_; }
    const Eigen::VectorXd& c() const { return c_; }
    Eigen::Index order() const { return A_.rows(); }

    double spectral_radius() const;
    bool is_stable() const { return spectral_radius() < 1.0; }

private:
    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;
    Eigen::VectorXd c_;
};

/// H(z) = Q(z) / P(z) with P(z) = z^n + p[n-1] z^{n-1} + ... + p[0] and
/// Q(z) = q[n] z^n + ... + q[0]. q[n] may be nonzero (proper, not strictly).
struct RationalTransferFunction {
    Eigen::VectorXd p;
    Eigen::VectorXd q;

    Eigen::Index order() const { return p.size(); }
    cplx denominator(cplx z) const;
    cplx numerator(cplx z) const;
    cplx operator()(cplx z) const;
};

/// Input/output samples u[0..T], y[0..T].
struct TimeSeries {
    Eigen::VectorXd u;
    Eigen::VectorXd y;

    TimeSeries() = default;
    TimeSeries(Eigen::VectorXd u_, Eigen::VectorXd y_);

    /// Index of the last sample (length - 1).
    Eigen::Index T() const { return u.size() - 1; }
};

TimeSeries simulate(const StateSpaceSystem& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& x0);
TimeSeries simulate(const StateSpaceSystem& sys, const Eigen::VectorXd& u);

/// c^T (zI - A)^{-1} b by an LU solve. Throws SingularResolventError near an eigenvalue.
cplx eval_tf(const StateSpaceSystem& sys, cplx z);

/// H'(z) = -c^T (zI - A)^{-2} b. Rejects order-0 systems.
cplx eval_tf_deriv(const StateSpaceSystem& sys, cplx z);

/// Coefficient form of H built from characteristic polynomials:
/// P = det(zI - A), Q = det(zI - A + b c^T) - P. Only meaningful for small n.
RationalTransferFunction rational_form(const StateSpaceSystem& sys);

/// Bulk evaluator for frequency sweeps. Reduces A to Hessenberg form once so
/// that every later evaluation costs O(n^2).
class FrequencyResponse {
public:
    explicit FrequencyResponse(const StateSpaceSystem& sys);

    cplx value(cplx z) const;
    cplx derivative(cplx z) const;
    cplx operator()(cplx z) const { return value(z); }

private:
    Eigen::VectorXcd hessenberg_solve(cplx z, const Eigen::VectorXcd& rhs) const;

    Eigen::MatrixXd H_;
    Eigen::VectorXd b_;  // Q^T b
    Eigen::VectorXd c_;  // Q^T c
};

/// Real block-diagonal realization of sum_k r_k / (z - lambda_k).
/// Non-real poles must come in conjugate pairs with conjugate residues; each
/// pair becomes a 2x2 rotation block with b = [1, 0] and c = [2 Re r, 2 Im r].
StateSpaceSystem realize_pole_residue(const std::vector<cplx>& poles, const std::vector<cplx>& residues,
                                      double pair_tol = 1e-9);

/// Poles uniform in the open unit disc (conjugate-closed), standard normal
/// residues. Deterministic for a given seed.
StateSpaceSystem random_stable_system(int n, std::uint64_t seed);

/// 1-D heat equation on [0,1] with Dirichlet ends, n interior nodes, input at
/// the node nearest n/3, output at the node nearest 2n/3, Crank-Nicolson in time.
StateSpaceSystem heat_rod_system(int n, double dt = 1e-2);

/// Penzl's order-1006 benchmark discretized with implicit Euler.
StateSpaceSystem penzl_system(double dt = 1e-4);

/// Continuous-time Penzl matrices (A_c, b_c, c_c) packed in a StateSpaceSystem.
StateSpaceSystem penzl_continuous();

/// I.i.d. standard normal samples, length T+1.
Eigen::VectorXd gaussian_input(Eigen::Index T, std::uint64_t seed);

}  // namespace tdfreq
