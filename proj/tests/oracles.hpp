// Reference computations used only by the tests. Each one avoids the code path
// it is checking: plain loops, full-pivot solves, brute-force grids.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tdfreq/lti.hpp"

namespace oracle {

using tdfreq::cplx;

// x[k+1] = A x[k] + b u[k], y[k] = c^T x[k] with explicit scalar loops.
inline std::vector<double> recurrence(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                      const std::vector<double>& u, std::vector<double> x) {
    const std::size_t n = x.size();
    std::vector<double> y(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += c(i) * x[i];
        y[k] = acc;
        std::vector<double> nx(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) nx[i] += A(i, j) * x[j];
            nx[i] += b(i) * u[k];
        }
        x = nx;
    }
    return y;
}

// c^T (zI - A)^{-1} b with a dense LU (full pivoting for small n).
inline cplx resolvent(const tdfreq::StateSpaceSystem& s, cplx z) {
    const auto n = s.order();
    Eigen::MatrixXcd M = z * Eigen::MatrixXcd::Identity(n, n) - s.A().cast<cplx>();
    Eigen::VectorXcd rhs = s.b().cast<cplx>();
    Eigen::VectorXcd x = n > 200 ? Eigen::VectorXcd(M.partialPivLu().solve(rhs)) : Eigen::VectorXcd(M.fullPivLu().solve(rhs));
    return s.c().cast<cplx>().dot(x);
}

inline cplx pole_residue(const std::vector<cplx>& poles, const std::vector<cplx>& res, cplx z, cplx d = 0.0) {
    cplx h = d;
    for (std::size_t k = 0; k < poles.size(); ++k) h += res[k] / (z - poles[k]);
    return h;
}

inline cplx pole_residue_deriv(const std::vector<cplx>& poles, const std::vector<cplx>& res, cplx z) {
    cplx h = 0.0;
    for (std::size_t k = 0; k < poles.size(); ++k) h -= res[k] / ((z - poles[k]) * (z - poles[k]));
    return h;
}

// max |H| over a dense uniform grid on [-pi, pi].
template <class F>
double grid_max(const F& H, int points) {
    double best = 0.0;
    for (int i = 0; i < points; ++i) {
        double w = -std::numbers::pi + 2.0 * std::numbers::pi * i / points;
        best = std::max(best, std::abs(H(std::polar(1.0, w))));
    }
    return best;
}

inline Eigen::Index rank(const Eigen::MatrixXcd& M, double rel = 1e-10) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel * s(0)) ++r;
    return r;
}

// Conjugate-closed stable poles with conjugate residues, for rational test data.
struct Rational {
    std::vector<cplx> poles;
    std::vector<cplx> residues;
    cplx operator()(cplx z) const { return pole_residue(poles, residues, z); }
    cplx deriv(cplx z) const { return pole_residue_deriv(poles, residues, z); }
};

inline Rational random_rational(int order, unsigned seed, double max_radius = 0.9) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> rad(0.2, max_radius), ang(0.2, 2.8), val(-1.0, 1.0);
    Rational r;
    if (order % 2 == 1) {
        r.poles.emplace_back(val(rng) * max_radius, 0.0);
        r.residues.emplace_back(val(rng) + 1.5, 0.0);
    }
    for (int k = 0; k < order / 2; ++k) {
        cplx p = std::polar(rad(rng), ang(rng));
        cplx q(val(rng), val(rng));
        r.poles.push_back(p);
        r.poles.push_back(std::conj(p));
        r.residues.push_back(q);
        r.residues.push_back(std::conj(q));
    }
    return r;
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace oracle
