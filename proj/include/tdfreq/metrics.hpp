#pragma once

#include <functional>
#include <vector>

#include "tdfreq/lti.hpp"

namespace tdfreq {

using Evaluator = std::function<cplx(cplx)>;

/// Samples H(e^{i omega}) on a strictly increasing omega grid in [-pi, pi].
struct FrequencySweep {
    std::vector<double> omegas;
    std::vector<cplx> values;

    void validate() const;
};

FrequencySweep sweep(const Evaluator& H, const std::vector<double>& omegas);

/// count points log-spaced in [lo, hi): lo * (hi/lo)^(i/count).
std::vector<double> logspace_halfopen(double lo, double hi, int count);

/// e^{i omega} for every omega.
std::vector<cplx> unit_circle(const std::vector<double>& omegas);

struct HinfResult {
    double value = 0.0;
    double omega = 0.0;
    int failed_points = 0;
};

/// max |H(e^{i omega})| over [-pi, pi]: uniform grid, then golden-section
/// refinement around the best grid cell.
HinfResult hinf_norm(const Evaluator& H, int grid_size = 4096, int refine_iters = 40);

/// ||H - H_r||_inf / ||H||_inf.
double relative_hinf_error(const Evaluator& H, const Evaluator& Hr, int grid_size = 4096, int refine_iters = 40);

/// ||truth - estimate||_2 / ||truth||_2.
double vector_errors(const std::vector<cplx>& truth, const std::vector<cplx>& estimate);

struct PointwiseErrors {
    std::vector<double> errors;
    std::vector<bool> absolute;  // true where truth is zero and the error is absolute
};

PointwiseErrors pointwise_errors(const std::vector<cplx>& truth, const std::vector<cplx>& estimate);

struct IndicatorFidelity {
    double median_log_gap = 0.0;
    double fraction_within_2_decades = 0.0;
    std::size_t count = 0;  // pairs left after filtering
};

/// Compares log10 sW with log10 eps_rel over pairs where both are positive and finite.
IndicatorFidelity indicator_fidelity(const std::vector<double>& sW, const std::vector<double>& eps_rel);

}  // namespace tdfreq
