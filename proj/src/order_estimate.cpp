#include "tdfreq/order_estimate.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tdfreq/errors.hpp"
#include "tdfreq/informativity.hpp"

namespace tdfreq {

Eigen::Index default_order_depth(Eigen::Index samples) { return std::min<Eigen::Index>(samples / 4, 150); }

OrderEstimate estimate_order(const TimeSeries& ts, std::optional<Eigen::Index> depth, double sv_tol) {
    const Eigen::Index samples = ts.u.size();
    const Eigen::Index s = depth ? *depth : default_order_depth(samples);
    if (s < 1) throw InsufficientDataError("estimate_order: need at least 4 samples");
    if (samples < 4 * s) {
        std::ostringstream os;
        os << "estimate_order: depth " << s << " needs at least " << 4 * s << " samples, got " << samples;
        throw InsufficientDataError(os.str());
    }
    if (!(sv_tol > 0.0)) throw std::invalid_argument("estimate_order: sv_tol must be positive");

    // Hankel matrices with s block rows; build_hankel depth is rows - 1.
    const Eigen::MatrixXd Hu = build_hankel(ts.u, s - 1);
    const Eigen::MatrixXd Hy = build_hankel(ts.y, s - 1);
    const Eigen::Index j = Hu.cols();

    // [Hu; Hy] = L Q^T, computed as the QR of the transpose.
    Eigen::MatrixXd stacked(j, 2 * s);
    stacked.leftCols(s) = Hu.transpose();
    stacked.rightCols(s) = Hy.transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(2 * s).triangularView<Eigen::Upper>();
    // L22^T is the lower-right block of R.
    const Eigen::MatrixXd L22 = R.bottomRightCorner(s, s).transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L22);
    OrderEstimate out;
    out.depth = s;
    out.singular_values = svd.singularValues();
    out.threshold_used = sv_tol;
    const Eigen::VectorXd& sv = out.singular_values;
    if (sv.size() == 0 || !(sv(0) > 0.0)) {
        out.N = 0;
        return out;
    }
    out.N = (sv.array() >= sv_tol * sv(0)).count();
    return out;
}

}  // namespace tdfreq
