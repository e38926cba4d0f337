#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tdfreq/lti.hpp"

namespace tdfreq {

/// Frequency samples H(points[i]) = values[i], optionally with derivatives and
/// per-sample least-squares weights.
struct InterpolationData {
    std::vector<cplx> points;
    std::vector<cplx> values;
    std::optional<std::vector<cplx>> derivs;
    std::optional<std::vector<double>> weights;
    // Non-real points appear together with their conjugates (and conjugate values).
    bool conjugate_closed = false;

    std::size_t size() const { return points.size(); }
    void validate() const;
};

/// Appends (conj(p), conj(H), conj(H')) for every point with nonzero imaginary part.
InterpolationData with_conjugates(std::vector<cplx> points, std::vector<cplx> values,
                                  std::optional<std::vector<cplx>> derivs = std::nullopt,
                                  std::optional<std::vector<double>> weights = std::nullopt);

struct Partition {
    InterpolationData left;
    InterpolationData right;
};

/// Sorts by imaginary part (conjugate pairs kept together) and assigns groups
/// alternately to the left and right sets.
Partition partition_interweave(const InterpolationData& data);

/// Same ordering, but the first half of the groups goes left and the rest right.
Partition partition_contiguous(const InterpolationData& data);

/// L[i][j] = (v_i - w_j) / (mu_i - lambda_j), Ls[i][j] = (mu_i v_i - lambda_j w_j) / (mu_i - lambda_j)
/// with left data (mu, v) and right data (lambda, w).
struct LoewnerPencil {
    Eigen::MatrixXcd L;
    Eigen::MatrixXcd Ls;
    Eigen::VectorXcd V;   // right values w
    Eigen::VectorXcd Wv;  // left values v
};

LoewnerPencil loewner_pencil(const InterpolationData& left, const InterpolationData& right);
LoewnerPencil hermite_loewner_pencil(const InterpolationData& data);

/// H_r(z) = c^T (zE - A)^{-1} b. E may be singular.
struct DescriptorROM {
    Eigen::MatrixXd E;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;

    Eigen::Index order() const { return A.rows(); }
    void validate() const;
};

cplx eval_rom(const DescriptorROM& rom, cplx z);
cplx eval_rom_deriv(const DescriptorROM& rom, cplx z);

/// Standard-form system as a descriptor (E = I), plus an optional constant term
/// realized by one extra state with E = 0.
DescriptorROM to_descriptor(const StateSpaceSystem& sys, double feedthrough = 0.0);

struct LoewnerOptions {
    std::optional<Eigen::Index> r;  // forced order; reduced (with a warning) if above numerical rank
    double sv_cutoff = 1e-12;       // relative, used to decide numerical rank
};

DescriptorROM loewner_rom(const InterpolationData& data, const LoewnerOptions& opts = {});
DescriptorROM hermite_loewner_rom(const InterpolationData& data, const LoewnerOptions& opts = {});

struct VectorFitOptions {
    Eigen::Index r = 1;
    int max_iters = 20;
    double pole_tol = 1e-10;
    double init_radius = 0.9;
    std::optional<std::vector<cplx>> initial_poles;
    bool fit_constant = true;
};

struct VectorFitResult {
    RationalTransferFunction tf;
    std::vector<cplx> poles;
    std::vector<cplx> residues;
    double d = 0.0;
    double objective = 0.0;  // sum_i |w_i (H_i - H_r(z_i))|^2
    std::vector<double> objective_history;
    int iterations = 0;
    bool converged = false;

    cplx operator()(cplx z) const;
    DescriptorROM descriptor() const;
};

VectorFitResult vector_fitting(const InterpolationData& data, const VectorFitOptions& opts);

/// Per-sample weights sW^exponent; non-finite or flagged samples get weight 0.
std::vector<double> indicator_weights(const std::vector<double>& sW, double exponent, double floor = 1e-16);

struct StablePart {
    DescriptorROM rom;
    Eigen::Index discarded = 0;
    std::vector<cplx> kept_poles;
    std::vector<cplx> discarded_poles;
};

/// Keeps the modes with |lambda| < 1 (and any constant part of the pencil).
StablePart stable_part(const DescriptorROM& rom);

/// Finite poles of the pencil (E, A).
std::vector<cplx> rom_poles(const DescriptorROM& rom);

}  // namespace tdfreq
