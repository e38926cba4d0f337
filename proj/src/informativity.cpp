#include "tdfreq/informativity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tdfreq/errors.hpp"
#include "tdfreq/log.hpp"
#include "tdfreq/parallel.hpp"

namespace tdfreq {

namespace {

// x - U (U^T x), applied twice to keep the result orthogonal to range(U).
Eigen::VectorXcd project_out(const Eigen::MatrixXd& U, const Eigen::VectorXcd& x) {
    Eigen::VectorXcd r = x;
    if (U.cols() == 0) return r;
    for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd re = r.real();
        Eigen::VectorXd im = r.imag();
        Eigen::VectorXd cr = U.transpose() * re;
        Eigen::VectorXd ci = U.transpose() * im;
        re.noalias() -= U * cr;
        im.noalias() -= U * ci;
        r.real() = re;
        r.imag() = im;
    }
    return r;
}

// Numerical rank with the conventional max(rows, cols) * eps * s_max threshold.
Eigen::Index numerical_rank(const Eigen::MatrixXcd& M) {
    if (M.size() == 0) return 0;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double thresh =
        static_cast<double>(std::max(M.rows(), M.cols())) * std::numeric_limits<double>::epsilon() * s(0);
    return (s.array() > thresh).count();
}

struct Projected {
    Eigen::VectorXcd v;
    Eigen::VectorXcd b_perp;
    double v_norm = 0.0;
};

Projected project(const OrthBasis& basis, const Eigen::VectorXcd& z, const Eigen::VectorXcd& rhs) {
    Projected p;
    p.v = project_out(basis.U, z);
    p.b_perp = project_out(basis.U, rhs);
    p.v_norm = p.v.norm();
    return p;
}

InformativityCheck make_check(Projected&& pr, double z_norm, double rhs_norm, const Tolerances& tol) {
    InformativityCheck chk;
    chk.unique_ratio = z_norm > 0.0 ? pr.v_norm / z_norm : 0.0;
    chk.unique = pr.v_norm > 0.0 && pr.v_norm >= tol.tau1 * z_norm;
    double resid = 0.0;
    if (pr.v_norm > 0.0) {
        const cplx coef = pr.v.dot(pr.b_perp) / (pr.v_norm * pr.v_norm);
        resid = (pr.b_perp - coef * pr.v).norm();
    } else {
        resid = pr.b_perp.norm();
    }
    chk.exist_ratio = rhs_norm > 0.0 ? resid / rhs_norm : resid;
    chk.exists = resid <= tol.tau2 * rhs_norm;
    chk.v = std::move(pr.v);
    chk.b_perp = std::move(pr.b_perp);
    return chk;
}

// Last component of the least-squares solution of [U z] x = rhs using the
// QR factorization [U q] [[I, U^T z], [0, ||v||]] with q = v / ||v||.
WindowSolve solve_projected(const Projected& pr, double z_norm) {
    WindowSolve out;
    if (!(pr.v_norm > 1e-13 * z_norm)) return out;
    out.moment = pr.v.dot(pr.b_perp) / (pr.v_norm * pr.v_norm);
    out.residual = (pr.b_perp - out.moment * pr.v).norm();
    out.ok = std::isfinite(out.moment.real()) && std::isfinite(out.moment.imag());
    return out;
}

}  // namespace

Eigen::MatrixXd build_hankel(const Eigen::Ref<const Eigen::VectorXd>& seq, Eigen::Index depth) {
    if (depth < 0) throw std::invalid_argument("build_hankel: depth must be >= 0");
    const Eigen::Index T = seq.size() - 1;
    if (T < depth) {
        std::ostringstream os;
        os << "build_hankel: depth " << depth << " needs at least " << depth + 1 << " samples, got " << seq.size();
        throw InsufficientDataError(os.str());
    }
    const Eigen::Index cols = T - depth + 1;
    Eigen::MatrixXd H(depth + 1, cols);
    for (Eigen::Index j = 0; j < cols; ++j) H.col(j) = seq.segment(j, depth + 1);
    return H;
}

HankelStack build_gn(const TimeSeries& ts, Eigen::Index depth, Eigen::Index window_start, Eigen::Index t) {
    if (t < depth) {
        std::ostringstream os;
        os << "build_gn: window parameter t = " << t << " is smaller than depth " << depth;
        throw std::invalid_argument(os.str());
    }
    if (window_start < 0 || window_start + t > ts.T()) {
        std::ostringstream os;
        os << "build_gn: window [" << window_start << ", " << window_start + t << "] outside data [0, " << ts.T()
           << "]";
        throw InsufficientDataError(os.str());
    }
    HankelStack G;
    G.depth = depth;
    G.window_start = window_start;
    G.window_length = t + 1;
    const Eigen::Index cols = t - depth + 1;
    G.matrix.resize(2 * (depth + 1), cols);
    G.matrix.topRows(depth + 1) = build_hankel(ts.u.segment(window_start, t + 1), depth);
    G.matrix.bottomRows(depth + 1) = build_hankel(ts.y.segment(window_start, t + 1), depth);
    return G;
}

Eigen::VectorXcd MomentVectors::derivative_rhs(cplx m0) const {
    const Eigen::Index m = gamma1.size();
    Eigen::VectorXcd rhs(2 * m);
    rhs.head(m) = gamma1;
    rhs.tail(m) = m0 * gamma1;
    return rhs;
}

MomentVectors moment_vectors(cplx sigma, Eigen::Index depth) {
    if (depth < 1) throw std::invalid_argument("moment_vectors: depth must be >= 1");
    MomentVectors mv;
    mv.sigma = sigma;
    const Eigen::Index m = depth + 1;
    mv.gamma.resize(m);
    mv.gamma1.resize(m);
    cplx power = 1.0;
    mv.gamma1(0) = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        mv.gamma(j) = power;
        if (j + 1 < m) mv.gamma1(j + 1) = static_cast<double>(j + 1) * power;
        power *= sigma;
    }
    mv.z_sigma = Eigen::VectorXcd::Zero(2 * m);
    mv.z_sigma.tail(m) = -mv.gamma;
    mv.b_sigma = Eigen::VectorXcd::Zero(2 * m);
    mv.b_sigma.head(m) = mv.gamma;
    return mv;
}

void validate(const Tolerances& tol) {
    if (!(tol.tau1 > 0.0) || !(tol.tau2 > 0.0) || !(tol.rank_tol > 0.0))
        throw std::invalid_argument("tolerances tau1, tau2 and rank_tol must be strictly positive");
}

OrthBasis orth_basis(const HankelStack& G, double rank_tol) { return orth_basis(G.matrix, rank_tol); }

OrthBasis orth_basis(const Eigen::MatrixXd& G, double rank_tol) {
    if (G.size() == 0) throw std::invalid_argument("orth_basis: empty matrix");
    OrthBasis out;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU);
    out.singular_values = svd.singularValues();
    const Eigen::VectorXd& s = out.singular_values;
    if (s.size() == 0 || s(0) == 0.0) {
        out.U.resize(G.rows(), 0);
        return out;
    }
    const Eigen::Index p = (s.array() >= rank_tol * s(0)).count();
    out.U = svd.matrixU().leftCols(p);
    return out;
}

InformativityCheck check_informativity(const OrthBasis& basis, const MomentVectors& mv, const Tolerances& tol) {
    return check_informativity(basis, mv.z_sigma, mv.b_sigma, tol);
}

InformativityCheck check_informativity(const OrthBasis& basis, const Eigen::VectorXcd& z,
                                       const Eigen::VectorXcd& rhs, const Tolerances& tol) {
    if (z.size() != basis.U.rows() || rhs.size() != basis.U.rows())
        throw std::invalid_argument("check_informativity: vector length does not match basis rows");
    return make_check(project(basis, z, rhs), z.norm(), rhs.norm(), tol);
}

DirectCheck check_informativity_direct(const HankelStack& G, const MomentVectors& mv) {
    const Eigen::MatrixXd& M = G.matrix;
    if (mv.z_sigma.size() != M.rows())
        throw std::invalid_argument("check_informativity_direct: moment vectors do not match depth");
    const Eigen::Index c = M.cols();
    Eigen::MatrixXcd gz(M.rows(), c + 1);
    gz.leftCols(c) = M.cast<cplx>();
    gz.col(c) = mv.z_sigma;
    Eigen::MatrixXcd gzb(M.rows(), c + 2);
    gzb.leftCols(c + 1) = gz;
    gzb.col(c + 1) = mv.b_sigma;

    DirectCheck out;
    out.rank_g = numerical_rank(M.cast<cplx>());
    out.rank_gz = numerical_rank(gz);
    out.rank_gzb = numerical_rank(gzb);
    out.exists = out.rank_gzb == out.rank_gz;
    out.unique = out.rank_gz == out.rank_g + 1;
    return out;
}

WindowSolve solve_window(const OrthBasis& basis, const Eigen::VectorXcd& z, const Eigen::VectorXcd& rhs) {
    if (z.size() != basis.U.rows() || rhs.size() != basis.U.rows())
        throw std::invalid_argument("solve_window: vector length does not match basis rows");
    return solve_projected(project(basis, z, rhs), z.norm());
}

WindowSolve solve_window(const OrthBasis& basis, const MomentVectors& mv) {
    return solve_window(basis, mv.z_sigma, mv.b_sigma);
}

WindowSolve solve_window_deriv(const OrthBasis& basis, const MomentVectors& mv, cplx m0) {
    return solve_window(basis, mv.z_sigma, mv.derivative_rhs(m0));
}

WindowPlan make_window_plan(Eigen::Index T, Eigen::Index n_used, const PlanOptions& opts) {
    if (n_used < 1) throw std::invalid_argument("window plan: working order must be >= 1");
    WindowPlan plan;
    plan.t = opts.t ? *opts.t : static_cast<Eigen::Index>(std::ceil(opts.t_factor * static_cast<double>(n_used)));
    plan.K = opts.K;
    plan.W = opts.W;
    validate(plan, T, n_used);  // checked before starts exist; starts validated below

    const Eigen::Index last = T - plan.t;
    plan.starts.resize(plan.K);
    if (opts.selection == WindowSelection::Even) {
        if (plan.K == 1) {
            plan.starts[0] = 0;
        } else {
            const double step = static_cast<double>(last) / static_cast<double>(plan.K - 1);
            for (Eigen::Index i = 0; i < plan.K; ++i)
                plan.starts[i] = static_cast<Eigen::Index>(std::lround(step * static_cast<double>(i)));
        }
    } else {
        std::vector<Eigen::Index> all(last + 1);
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        std::mt19937_64 rng(opts.seed);
        std::vector<Eigen::Index> picked;
        std::sample(all.begin(), all.end(), std::back_inserter(picked), plan.K, rng);
        std::sort(picked.begin(), picked.end());
        plan.starts = std::move(picked);
    }
    validate(plan, T, n_used);
    return plan;
}

void validate(const WindowPlan& plan, Eigen::Index T, Eigen::Index n_used) {
    std::ostringstream os;
    if (plan.t < n_used) {
        os << "window plan: t = " << plan.t << " must be >= working order " << n_used;
        throw InsufficientDataError(os.str());
    }
    if (plan.t > T) {
        os << "window plan: t = " << plan.t << " exceeds data length T = " << T << " (need T >= " << plan.t << ")";
        throw InsufficientDataError(os.str());
    }
    if (plan.K < 1 || plan.W < 1 || plan.W > plan.K) {
        os << "window plan: need 1 <= W <= K, got W = " << plan.W << ", K = " << plan.K;
        throw std::invalid_argument(os.str());
    }
    if (plan.K > T - plan.t + 1) {
        os << "window plan: K = " << plan.K << " windows of length " << plan.t + 1 << " need T >= "
           << plan.t + plan.K - 1 << ", got T = " << T;
        throw InsufficientDataError(os.str());
    }
    if (!plan.starts.empty()) {
        if (static_cast<Eigen::Index>(plan.starts.size()) != plan.K)
            throw std::invalid_argument("window plan: number of starts differs from K");
        for (Eigen::Index s : plan.starts)
            if (s < 0 || s > T - plan.t) throw InsufficientDataError("window plan: window start out of range");
    }
}

Spread normalized_spread(const std::vector<cplx>& estimates) {
    Spread out;
    if (estimates.empty()) return out;
    cplx sum = 0.0;
    double max_abs = 0.0;
    for (const cplx& e : estimates) {
        sum += e;
        max_abs = std::max(max_abs, std::abs(e));
    }
    out.mean = sum / static_cast<double>(estimates.size());
    if (estimates.size() < 2) return out;
    double ss = 0.0;
    for (const cplx& e : estimates) ss += std::norm(e - out.mean);
    const double s = std::sqrt(ss / static_cast<double>(estimates.size() - 1));
    const double mean_abs = std::abs(out.mean);
    if (max_abs < 1e-30 || mean_abs < 1e-14 * max_abs) {
        out.value = s;
        out.normalized = false;
    } else {
        out.value = s / mean_abs;
    }
    return out;
}

namespace {

// Keeps the W passing windows with the smallest residuals (ties: lower index).
template <typename Pass, typename Residual>
std::vector<Eigen::Index> select_kept(const std::vector<WindowEstimate>& est, Eigen::Index W, Pass pass,
                                      Residual residual) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index w = 0; w < static_cast<Eigen::Index>(est.size()); ++w)
        if (pass(est[w])) idx.push_back(w);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return residual(est[a]) < residual(est[b]); });
    if (static_cast<Eigen::Index>(idx.size()) > W) idx.resize(W);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

std::vector<RecoveryResult> recover(const TimeSeries& ts, const std::vector<cplx>& sigmas, Eigen::Index n_used,
                                    const WindowPlan& plan, const RecoveryOptions& opts) {
    validate(opts.tol);
    if (plan.starts.empty()) throw std::invalid_argument("recover: window plan has no starts");
    validate(plan, ts.T(), n_used);

    const auto m = sigmas.size();
    const auto K = static_cast<std::size_t>(plan.K);
    std::vector<MomentVectors> mvs;
    mvs.reserve(m);
    for (cplx s : sigmas) mvs.push_back(moment_vectors(s, n_used));
    std::vector<double> z_norms(m), b_norms(m);
    for (std::size_t j = 0; j < m; ++j) {
        z_norms[j] = mvs[j].z_sigma.norm();
        b_norms[j] = mvs[j].b_sigma.norm();
    }

    const std::size_t rows = static_cast<std::size_t>(2 * (n_used + 1));
    const std::size_t cols = static_cast<std::size_t>(plan.t - n_used + 1);
    const bool cache = opts.want_deriv && K * rows * std::min(rows, cols) * sizeof(double) <= opts.basis_cache_bytes;
    std::vector<OrthBasis> bases(cache ? K : 0);

    auto basis_for = [&](std::size_t w) {
        HankelStack G = build_gn(ts, n_used, plan.starts[w], plan.t);
        return orth_basis(G, opts.tol.rank_tol);
    };

    // est[j][w]: window w's estimate at sigma j
    std::vector<std::vector<WindowEstimate>> est(m, std::vector<WindowEstimate>(K));
    parallel_for(K, opts.threads, [&](std::size_t w) {
        OrthBasis basis = basis_for(w);
        for (std::size_t j = 0; j < m; ++j) {
            WindowEstimate& e = est[j][w];
            e.window = static_cast<Eigen::Index>(w);
            e.start = plan.starts[w];
            Projected pr = project(basis, mvs[j].z_sigma, mvs[j].b_sigma);
            WindowSolve sol = solve_projected(pr, z_norms[j]);
            InformativityCheck chk = make_check(std::move(pr), z_norms[j], b_norms[j], opts.tol);
            e.unique = chk.unique;
            e.exists = chk.exists;
            e.unique_ratio = chk.unique_ratio;
            e.exist_ratio = chk.exist_ratio;
            if (chk.unique && chk.exists && sol.ok) {
                e.m0 = sol.moment;
                e.residual0 = sol.residual;
                e.passed = true;
            }
        }
        if (cache) bases[w] = std::move(basis);
    });

    std::vector<RecoveryResult> results(m);
    for (std::size_t j = 0; j < m; ++j) {
        RecoveryResult& r = results[j];
        r.sigma = sigmas[j];
        r.n_used = n_used;
        r.kept = select_kept(est[j], plan.W, [](const WindowEstimate& e) { return e.passed; },
                             [](const WindowEstimate& e) { return e.residual0; });
        std::vector<cplx> vals;
        for (Eigen::Index w : r.kept) vals.push_back(est[j][w].m0);
        Spread sp = normalized_spread(vals);
        r.M0 = sp.mean;
        r.sW0 = sp.value;
        r.sW0_normalized = sp.normalized;
        r.informative = r.kept.size() >= 2;
    }

    if (opts.want_deriv) {
        parallel_for(K, opts.threads, [&](std::size_t w) {
            const OrthBasis basis = cache ? std::move(bases[w]) : basis_for(w);
            for (std::size_t j = 0; j < m; ++j) {
                if (!results[j].informative) continue;
                WindowEstimate& e = est[j][w];
                if (!e.unique) continue;
                const Eigen::VectorXcd rhs = mvs[j].derivative_rhs(results[j].M0);
                Projected pr = project(basis, mvs[j].z_sigma, rhs);
                WindowSolve sol = solve_projected(pr, z_norms[j]);
                InformativityCheck chk = make_check(std::move(pr), z_norms[j], rhs.norm(), opts.tol);
                e.deriv_exists = chk.exists;
                e.deriv_exist_ratio = chk.exist_ratio;
                if (chk.exists && sol.ok) {
                    e.m1 = sol.moment;
                    e.residual1 = sol.residual;
                    e.deriv_passed = true;
                }
            }
        });
        for (std::size_t j = 0; j < m; ++j) {
            RecoveryResult& r = results[j];
            if (!r.informative) continue;
            r.kept_deriv = select_kept(est[j], plan.W, [](const WindowEstimate& e) { return e.deriv_passed; },
                                       [](const WindowEstimate& e) { return e.residual1; });
            std::vector<cplx> vals;
            for (Eigen::Index w : r.kept_deriv) vals.push_back(est[j][w].m1);
            Spread sp = normalized_spread(vals);
            r.deriv_informative = r.kept_deriv.size() >= 2;
            if (!vals.empty()) r.M1 = sp.mean;
            r.sW1 = sp.value;
            r.sW1_normalized = sp.normalized;
        }
    }

    for (std::size_t j = 0; j < m; ++j) results[j].per_window = std::move(est[j]);
    return results;
}

double median_indicator(const std::vector<RecoveryResult>& results) {
    std::vector<double> vals;
    for (const auto& r : results)
        if (r.informative && std::isfinite(r.sW0)) vals.push_back(r.sW0);
    if (vals.empty()) return std::numeric_limits<double>::infinity();
    const auto mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
    if (vals.size() % 2 == 1) return vals[mid];
    const double hi = vals[mid];
    const double lo = *std::max_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

Eigen::Index max_feasible_order(Eigen::Index T, const PlanOptions& opts) {
    Eigen::Index best = 0;
    for (Eigen::Index n = 1; n <= T; ++n) {
        const Eigen::Index t =
            opts.t ? *opts.t : static_cast<Eigen::Index>(std::ceil(opts.t_factor * static_cast<double>(n)));
        if (t < n || t > T || opts.K > T - t + 1) break;
        best = n;
    }
    return best;
}

AdaptResult adapt_order(const TimeSeries& ts, const std::vector<cplx>& sigmas, const PlanOptions& plan_template,
                        const RecoveryOptions& rec, const AdaptOptions& adapt) {
    if (adapt.n_init < 1) throw std::invalid_argument("adapt_order: n_init must be >= 1");
    if (!(adapt.growth > 1.0)) throw std::invalid_argument("adapt_order: growth factor must exceed 1");
    if (!(adapt.min_informative >= 0.0 && adapt.min_informative <= 1.0))
        throw std::invalid_argument("adapt_order: min_informative must lie in [0, 1]");
    const Eigen::Index feasible = max_feasible_order(ts.T(), plan_template);
    if (feasible < 1) throw InsufficientDataError("adapt_order: data too short for any window plan");
    Eigen::Index n_max = adapt.n_max > 0 ? adapt.n_max : feasible;
    if (n_max > feasible) {
        std::ostringstream os;
        os << "adapt_order: n_max " << n_max << " reduced to " << feasible << " to fit the data length";
        log::warn(os.str());
        n_max = feasible;
    }
    Eigen::Index n = std::min(adapt.n_init, n_max);

    AdaptResult best;
    double best_median = std::numeric_limits<double>::infinity();
    bool have_best = false;
    while (true) {
        WindowPlan plan = make_window_plan(ts.T(), n, plan_template);
        std::vector<RecoveryResult> results = recover(ts, sigmas, n, plan, rec);
        const double med = median_indicator(results);
        std::size_t informative = 0;
        for (const auto& r : results) informative += r.informative ? 1 : 0;
        const bool enough = static_cast<double>(informative) >= adapt.min_informative * static_cast<double>(results.size());
        best.history.push_back({n, med});
        if (med <= adapt.s_target && enough) {
            best.n_used = n;
            best.results = std::move(results);
            best.converged = true;
            return best;
        }
        if (!have_best || med < best_median) {
            have_best = true;
            best_median = med;
            best.n_used = n;
            best.results = std::move(results);
        }
        if (n >= n_max) break;
        n = std::min(n_max, std::max(n + 1, static_cast<Eigen::Index>(std::ceil(adapt.growth * static_cast<double>(n)))));
    }
    best.converged = false;
    return best;
}

}  // namespace tdfreq
