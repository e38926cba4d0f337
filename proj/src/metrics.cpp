#include "tdfreq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "tdfreq/errors.hpp"
#include "tdfreq/log.hpp"

namespace tdfreq {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        std::ostringstream os;
        os << "estimate has length " << b << ", expected " << a;
        throw std::invalid_argument(os.str());
    }
}

double median(std::vector<double> v) {
    std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void FrequencySweep::validate() const {
    if (omegas.size() != values.size()) throw std::invalid_argument("sweep omegas and values differ in length");
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (!(std::abs(omegas[i]) <= std::numbers::pi)) throw std::invalid_argument("sweep omega outside [-pi, pi]");
        if (i > 0 && !(omegas[i] > omegas[i - 1])) throw std::invalid_argument("sweep omegas must be strictly increasing");
    }
}

FrequencySweep sweep(const Evaluator& H, const std::vector<double>& omegas) {
    FrequencySweep s;
    s.omegas = omegas;
    s.values.resize(omegas.size());
    s.validate();
    for (std::size_t i = 0; i < omegas.size(); ++i) s.values[i] = H(std::polar(1.0, omegas[i]));
    return s;
}

std::vector<double> logspace_halfopen(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 1) throw std::invalid_argument("logspace needs 0 < lo < hi and count >= 1");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / count);
    return out;
}

std::vector<cplx> unit_circle(const std::vector<double>& omegas) {
    std::vector<cplx> out;
    out.reserve(omegas.size());
    for (double w : omegas) out.push_back(std::polar(1.0, w));
    return out;
}

HinfResult hinf_norm(const Evaluator& H, int grid_size, int refine_iters) {
    if (grid_size < 16) throw std::invalid_argument("hinf_norm needs grid_size >= 16");
    if (refine_iters < 0) throw std::invalid_argument("hinf_norm needs refine_iters >= 0");
    const double pi = std::numbers::pi;
    const double step = 2.0 * pi / grid_size;
    HinfResult res;
    std::string first_error;
    auto mag = [&](double w) -> double {
        try {
            double m = std::abs(H(std::polar(1.0, w)));
            if (std::isfinite(m)) return m;
            if (first_error.empty()) first_error = "non-finite value";
        } catch (const std::exception& e) {
            if (first_error.empty()) first_error = e.what();
        }
        return -1.0;
    };
    int best = -1;
    double best_val = -1.0;
    for (int i = 0; i < grid_size; ++i) {
        double m = mag(-pi + step * i);
        if (m < 0.0) {
            ++res.failed_points;
            continue;
        }
        if (m > best_val) {
            best_val = m;
            best = i;
        }
    }
    if (best < 0) throw NumericalError("hinf_norm: evaluation failed at every grid point (" + first_error + ")");
    if (res.failed_points > 0) {
        std::ostringstream os;
        os << "hinf_norm skipped " << res.failed_points << " grid points (" << first_error << ")";
        log::warn(os.str());
    }
    res.value = best_val;
    res.omega = -pi + step * best;

    double a = std::max(-pi, res.omega - step), b = std::min(pi, res.omega + step);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = mag(x1), f2 = mag(x2);
    for (int it = 0; it < refine_iters; ++it) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = mag(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = mag(x2);
        }
    }
    for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
        if (f > res.value) {
            res.value = f;
            res.omega = x;
        }
    }
    return res;
}

double relative_hinf_error(const Evaluator& H, const Evaluator& Hr, int grid_size, int refine_iters) {
    double num = hinf_norm([&](cplx z) { return H(z) - Hr(z); }, grid_size, refine_iters).value;
    double den = hinf_norm(H, grid_size, refine_iters).value;
    if (!(den > 0.0)) throw std::invalid_argument("reference transfer function has zero H-infinity norm");
    return num / den;
}

double vector_errors(const std::vector<cplx>& truth, const std::vector<cplx>& estimate) {
    check_lengths(truth.size(), estimate.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        num += std::norm(truth[i] - estimate[i]);
        den += std::norm(truth[i]);
    }
    if (!(den > 0.0)) throw std::invalid_argument("truth vector has zero norm");
    return std::sqrt(num / den);
}

PointwiseErrors pointwise_errors(const std::vector<cplx>& truth, const std::vector<cplx>& estimate) {
    check_lengths(truth.size(), estimate.size());
    PointwiseErrors out;
    out.errors.resize(truth.size());
    out.absolute.assign(truth.size(), false);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double diff = std::abs(truth[i] - estimate[i]);
        if (truth[i] == cplx(0.0, 0.0)) {
            out.errors[i] = diff;
            out.absolute[i] = true;
        } else {
            out.errors[i] = diff / std::abs(truth[i]);
        }
    }
    return out;
}

IndicatorFidelity indicator_fidelity(const std::vector<double>& sW, const std::vector<double>& eps_rel) {
    check_lengths(sW.size(), eps_rel.size());
    std::vector<double> gaps;
    for (std::size_t i = 0; i < sW.size(); ++i) {
        bool ok = sW[i] > 0.0 && std::isfinite(sW[i]) && eps_rel[i] > 0.0 && std::isfinite(eps_rel[i]);
        if (ok) gaps.push_back(std::abs(std::log10(sW[i]) - std::log10(eps_rel[i])));
    }
    if (gaps.empty()) throw std::invalid_argument("indicator_fidelity: no positive finite pairs");
    IndicatorFidelity f;
    f.count = gaps.size();
    f.median_log_gap = median(gaps);
    std::size_t within = std::count_if(gaps.begin(), gaps.end(), [](double g) { return g <= 2.0; });
    f.fraction_within_2_decades = static_cast<double>(within) / static_cast<double>(gaps.size());
    return f;
}

}  // namespace tdfreq
