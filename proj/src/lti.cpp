#include "tdfreq/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "tdfreq/errors.hpp"

namespace tdfreq {

namespace {

std::string dim_message(const std::string& what, Eigen::Index got, Eigen::Index want) {
    std::ostringstream os;
    os << what << " has length " << got << ", expected " << want;
    return os.str();
}

// Coefficients (lowest degree first) of prod_k (z - roots[k]).
Eigen::VectorXcd poly_from_roots(const Eigen::VectorXcd& roots) {
    Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(roots.size() + 1);
    coeffs(0) = 1.0;
    for (Eigen::Index k = 0; k < roots.size(); ++k) {
        // multiply by (z - r): shift up, subtract r * old
        for (Eigen::Index j = k + 1; j > 0; --j) coeffs(j) = coeffs(j - 1) - roots(k) * coeffs(j);
        coeffs(0) = -roots(k) * coeffs(0);
    }
    return coeffs;
}

bool is_upper_hessenberg(const Eigen::MatrixXd& A) {
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = j + 2; i < A.rows(); ++i)
            if (A(i, j) != 0.0) return false;
    return true;
}

Eigen::PartialPivLU<Eigen::MatrixXcd> resolvent_lu(const Eigen::MatrixXd& A, cplx z) {
    Eigen::MatrixXcd M = -A.cast<cplx>();
    M.diagonal().array() += z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    if (!(lu.rcond() > 1e-14)) {
        std::ostringstream os;
        os << "zI - A is singular at z = " << z << " (rcond " << lu.rcond() << ")";
        throw SingularResolventError(os.str());
    }
    return lu;
}

}  // namespace

StateSpaceSystem::StateSpaceSystem(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::VectorXd c)
    : A_(std::move(A)), b_(std::move(b)), c_(std::move(c)) {
    if (A_.rows() != A_.cols()) {
        std::ostringstream os;
        os << "A must be square, got " << A_.rows() << "x" << A_.cols();
        throw std::invalid_argument(os.str());
    }
    if (b_.size() != A_.rows()) throw std::invalid_argument(dim_message("b", b_.size(), A_.rows()));
    if (c_.size() != A_.rows()) throw std::invalid_argument(dim_message("c", c_.size(), A_.rows()));
}

double StateSpaceSystem::spectral_radius() const {
    if (order() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A_, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

cplx RationalTransferFunction::denominator(cplx z) const {
    cplx acc = 1.0;
    for (Eigen::Index k = p.size() - 1; k >= 0; --k) acc = acc * z + p(k);
    return acc;
}

cplx RationalTransferFunction::numerator(cplx z) const {
    cplx acc = 0.0;
    for (Eigen::Index k = q.size() - 1; k >= 0; --k) acc = acc * z + q(k);
    return acc;
}

cplx RationalTransferFunction::operator()(cplx z) const { return numerator(z) / denominator(z); }

TimeSeries::TimeSeries(Eigen::VectorXd u_, Eigen::VectorXd y_) : u(std::move(u_)), y(std::move(y_)) {
    if (u.size() != y.size()) throw std::invalid_argument(dim_message("output sequence Y", y.size(), u.size()));
    if (u.size() < 2) throw std::invalid_argument("time series needs at least 2 samples");
}

TimeSeries simulate(const StateSpaceSystem& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& x0) {
    const Eigen::Index n = sys.order();
    if (x0.size() != n) throw std::invalid_argument(dim_message("initial state x0", x0.size(), n));
    if (u.size() == 0) throw std::invalid_argument("input sequence U is empty");

    Eigen::VectorXd y(u.size());
    Eigen::VectorXd x = x0;

    const Eigen::Index nnz = (sys.A().array() != 0.0).count();
    if (n > 64 && nnz * 8 < n * n) {
        // Block-structured benchmarks (random, Penzl) are mostly zeros.
        Eigen::SparseMatrix<double> As = sys.A().sparseView();
        for (Eigen::Index k = 0; k < u.size(); ++k) {
            y(k) = sys.c().dot(x);
            x = As * x + sys.b() * u(k);
        }
    } else {
        Eigen::VectorXd next(n);
        for (Eigen::Index k = 0; k < u.size(); ++k) {
            y(k) = sys.c().dot(x);
            next.noalias() = sys.A() * x;
            next += sys.b() * u(k);
            x.swap(next);
        }
    }
    if (u.size() < 2) {
        // A single sample is a valid simulation but not a valid TimeSeries.
        TimeSeries ts;
        ts.u = u;
        ts.y = y;
        return ts;
    }
    return TimeSeries(u, std::move(y));
}

TimeSeries simulate(const StateSpaceSystem& sys, const Eigen::VectorXd& u) {
    return simulate(sys, u, Eigen::VectorXd::Zero(sys.order()));
}

cplx eval_tf(const StateSpaceSystem& sys, cplx z) {
    if (sys.order() == 0) return 0.0;
    auto lu = resolvent_lu(sys.A(), z);
    Eigen::VectorXcd x = lu.solve(sys.b().cast<cplx>());
    return sys.c().cast<cplx>().dot(x);  // dot conjugates the first argument; c is real
}

cplx eval_tf_deriv(const StateSpaceSystem& sys, cplx z) {
    if (sys.order() == 0) throw std::invalid_argument("derivative of an order-0 (constant) system is not defined");
    auto lu = resolvent_lu(sys.A(), z);
    Eigen::VectorXcd x1 = lu.solve(sys.b().cast<cplx>());
    Eigen::VectorXcd x2 = lu.solve(x1);
    return -sys.c().cast<cplx>().dot(x2);
}

RationalTransferFunction rational_form(const StateSpaceSystem& sys) {
    const Eigen::Index n = sys.order();
    RationalTransferFunction tf;
    if (n == 0) {
        tf.q = Eigen::VectorXd::Zero(1);
        return tf;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es_a(sys.A(), false);
    Eigen::MatrixXd Ab = sys.A() - sys.b() * sys.c().transpose();
    Eigen::EigenSolver<Eigen::MatrixXd> es_ab(Ab, false);
    Eigen::VectorXd P = poly_from_roots(es_a.eigenvalues()).real();
    Eigen::VectorXd PQ = poly_from_roots(es_ab.eigenvalues()).real();
    tf.p = P.head(n);
    tf.q = PQ - P;
    tf.q(n) = 0.0;
    return tf;
}

FrequencyResponse::FrequencyResponse(const StateSpaceSystem& sys) {
    if (sys.order() == 0) return;
    if (is_upper_hessenberg(sys.A())) {
        H_ = sys.A();
        b_ = sys.b();
        c_ = sys.c();
        return;
    }
    Eigen::HessenbergDecomposition<Eigen::MatrixXd> hd(sys.A());
    H_ = hd.matrixH();
    Eigen::MatrixXd Q = hd.matrixQ();
    b_ = Q.transpose() * sys.b();
    c_ = Q.transpose() * sys.c();
}

Eigen::VectorXcd FrequencyResponse::hessenberg_solve(cplx z, const Eigen::VectorXcd& rhs) const {
    const Eigen::Index n = H_.rows();
    Eigen::MatrixXcd M = -H_.cast<cplx>();
    M.diagonal().array() += z;
    Eigen::VectorXcd x = rhs;
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    // Gaussian elimination with adjacent-row pivoting; only the subdiagonal needs clearing.
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (std::abs(M(k + 1, k)) > std::abs(M(k, k))) {
            M.row(k).segment(k, n - k).swap(M.row(k + 1).segment(k, n - k));
            std::swap(x(k), x(k + 1));
        }
        if (M(k + 1, k) == 0.0) continue;
        const cplx f = M(k + 1, k) / M(k, k);
        M.row(k + 1).segment(k, n - k) -= f * M.row(k).segment(k, n - k);
        x(k + 1) -= f * x(k);
    }
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        if (std::abs(M(k, k)) <= 1e-15 * scale) {
            std::ostringstream os;
            os << "zI - A is singular at z = " << z;
            throw SingularResolventError(os.str());
        }
        cplx acc = x(k);
        for (Eigen::Index j = k + 1; j < n; ++j) acc -= M(k, j) * x(j);
        x(k) = acc / M(k, k);
    }
    return x;
}

cplx FrequencyResponse::value(cplx z) const {
    if (H_.rows() == 0) return 0.0;
    Eigen::VectorXcd x = hessenberg_solve(z, b_.cast<cplx>());
    return (c_.cast<cplx>().transpose() * x)(0);
}

cplx FrequencyResponse::derivative(cplx z) const {
    if (H_.rows() == 0) throw std::invalid_argument("derivative of an order-0 (constant) system is not defined");
    Eigen::VectorXcd x1 = hessenberg_solve(z, b_.cast<cplx>());
    Eigen::VectorXcd x2 = hessenberg_solve(z, x1);
    return -(c_.cast<cplx>().transpose() * x2)(0);
}

StateSpaceSystem realize_pole_residue(const std::vector<cplx>& poles, const std::vector<cplx>& residues,
                                      double pair_tol) {
    if (poles.size() != residues.size())
        throw std::invalid_argument(dim_message("residues", static_cast<Eigen::Index>(residues.size()),
                                                static_cast<Eigen::Index>(poles.size())));
    const auto m = static_cast<Eigen::Index>(poles.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    std::vector<bool> used(poles.size(), false);

    Eigen::Index row = 0;
    for (std::size_t k = 0; k < poles.size(); ++k) {
        if (used[k]) continue;
        const cplx lam = poles[k];
        const double tol = pair_tol * std::max(1.0, std::abs(lam));
        if (std::abs(lam.imag()) <= tol) {
            used[k] = true;
            A(row, row) = lam.real();
            b(row) = 1.0;
            c(row) = residues[k].real();
            ++row;
            continue;
        }
        // closest unused conjugate partner
        std::size_t partner = poles.size();
        double best = tol * 1e3;
        for (std::size_t j = 0; j < poles.size(); ++j) {
            if (j == k || used[j]) continue;
            const double d = std::abs(poles[j] - std::conj(lam));
            if (d < best) {
                best = d;
                partner = j;
            }
        }
        if (partner == poles.size()) {
            std::ostringstream os;
            os << "pole " << lam << " has no conjugate partner";
            throw std::invalid_argument(os.str());
        }
        used[k] = used[partner] = true;
        const cplx up = lam.imag() > 0 ? lam : poles[partner];
        const cplx r = lam.imag() > 0 ? residues[k] : residues[partner];
        A(row, row) = up.real();
        A(row, row + 1) = up.imag();
        A(row + 1, row) = -up.imag();
        A(row + 1, row + 1) = up.real();
        b(row) = 1.0;
        c(row) = 2.0 * r.real();
        c(row + 1) = 2.0 * r.imag();
        row += 2;
    }
    return StateSpaceSystem(std::move(A), std::move(b), std::move(c));
}

StateSpaceSystem random_stable_system(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("random_stable_system: order must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<cplx> poles;
    std::vector<cplx> residues;
    poles.reserve(n);
    residues.reserve(n);
    if (n % 2 == 1) {
        double a = 0.0;
        do a = 2.0 * unif(rng) - 1.0;
        while (std::abs(a) >= 1.0);
        poles.emplace_back(a, 0.0);
        residues.emplace_back(normal(rng), 0.0);
    }
    for (int k = 0; k < n / 2; ++k) {
        double radius = 0.0, angle = 0.0;
        do {
            radius = std::sqrt(unif(rng));
            angle = std::numbers::pi * unif(rng);
        } while (radius >= 1.0 || angle <= 0.0);
        const cplx lam = std::polar(radius, angle);
        const double re = normal(rng);
        const double im = normal(rng);
        poles.push_back(lam);
        poles.push_back(std::conj(lam));
        residues.emplace_back(re, im);
        residues.emplace_back(re, -im);
    }
    return realize_pole_residue(poles, residues);
}

StateSpaceSystem heat_rod_system(int n, double dt) {
    if (n < 3) throw std::invalid_argument("heat_rod_system: order must be >= 3");
    if (!(dt > 0.0)) throw std::invalid_argument("heat_rod_system: dt must be positive");
    const double h = 1.0 / (n + 1);
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Ac(i, i) = -2.0 / (h * h);
        if (i > 0) Ac(i, i - 1) = 1.0 / (h * h);
        if (i + 1 < n) Ac(i, i + 1) = 1.0 / (h * h);
    }
    // nodes are 1..n; convert to 0-based rows
    const int in_node = std::clamp(static_cast<int>(std::lround(n / 3.0)), 1, n) - 1;
    const int out_node = std::clamp(static_cast<int>(std::lround(2.0 * n / 3.0)), 1, n) - 1;
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd cc = Eigen::VectorXd::Zero(n);
    bc(in_node) = 1.0;
    cc(out_node) = 1.0;

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lhs(I - 0.5 * dt * Ac);
    Eigen::MatrixXd Ad = lhs.solve(I + 0.5 * dt * Ac);
    Eigen::VectorXd bd = lhs.solve(dt * bc);
    return StateSpaceSystem(std::move(Ad), std::move(bd), std::move(cc));
}

StateSpaceSystem penzl_continuous() {
    constexpr int n = 1006;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    const double offdiag[3] = {100.0, 200.0, 400.0};
    for (int blk = 0; blk < 3; ++blk) {
        const int i = 2 * blk;
        A(i, i) = -1.0;
        A(i + 1, i + 1) = -1.0;
        A(i, i + 1) = offdiag[blk];
        A(i + 1, i) = -offdiag[blk];
    }
    for (int k = 0; k < 1000; ++k) A(6 + k, 6 + k) = -(k + 1.0);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(n);
    b.head(6).setConstant(10.0);
    Eigen::VectorXd c = b;
    return StateSpaceSystem(std::move(A), std::move(b), std::move(c));
}

StateSpaceSystem penzl_system(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("penzl_system: dt must be positive");
    const StateSpaceSystem cont = penzl_continuous();
    const Eigen::Index n = cont.order();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    // (I - dt A_c)^{-1} as n solves against the identity
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(I - dt * cont.A());
    Eigen::MatrixXd Ad = lu.solve(I);
    Eigen::VectorXd bd = dt * (Ad * cont.b());
    return StateSpaceSystem(std::move(Ad), std::move(bd), cont.c());
}

Eigen::VectorXd gaussian_input(Eigen::Index T, std::uint64_t seed) {
    if (T < 0) throw std::invalid_argument("gaussian_input: T must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd u(T + 1);
    for (Eigen::Index k = 0; k <= T; ++k) u(k) = normal(rng);
    return u;
}

}  // namespace tdfreq
