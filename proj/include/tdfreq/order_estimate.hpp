#pragma once

#include <optional>

#include <Eigen/Core>

#include "tdfreq/lti.hpp"

namespace tdfreq {

struct OrderEstimate {
    Eigen::Index N = 0;
    Eigen::VectorXd singular_values;  // non-increasing
    double threshold_used = 0.0;      // relative cutoff
    Eigen::Index depth = 0;           // block-row depth s that was used
};

/// MOESP-style order estimate: LQ-factorize the stacked input/output Hankel
/// matrices, take the block of the output rows orthogonal to the input row
/// space and count its singular values >= sv_tol * largest.
///
/// Default depth is min(floor((T+1)/4), 150). Requires T+1 >= 4 * depth.
OrderEstimate estimate_order(const TimeSeries& ts, std::optional<Eigen::Index> depth = std::nullopt,
                             double sv_tol = 1e-6);

Eigen::Index default_order_depth(Eigen::Index samples);

}  // namespace tdfreq
