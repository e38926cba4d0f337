#include "tdfreq/rom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tdfreq/errors.hpp"
#include "tdfreq/log.hpp"

namespace tdfreq {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double kConjTol = 1e-12;

bool is_real_point(cplx p) { return std::abs(p.imag()) <= kConjTol * std::max(1.0, std::abs(p)); }

bool conj_match(cplx a, cplx b) { return std::abs(a - std::conj(b)) <= kConjTol * std::max(1.0, std::abs(a)); }

// A group is a real point or an adjacent (p, conj p) pair.
struct Group {
    Index first;
    Index size;
};

// Walks the points in order and pairs each non-real point with its conjugate
// neighbour. Returns nothing if that is impossible.
std::optional<std::vector<Group>> adjacent_groups(const std::vector<cplx>& pts) {
    std::vector<Group> groups;
    Index n = static_cast<Index>(pts.size());
    for (Index i = 0; i < n;) {
        if (is_real_point(pts[i])) {
            groups.push_back({i, 1});
            ++i;
        } else if (i + 1 < n && conj_match(pts[i], pts[i + 1])) {
            groups.push_back({i, 2});
            i += 2;
        } else {
            return std::nullopt;
        }
    }
    return groups;
}

// Groups points of arbitrarily ordered data: each non-real point is matched
// with a later conjugate. Pairs are returned upper half-plane member first.
std::vector<std::vector<Index>> conjugate_groups(const InterpolationData& data) {
    Index n = static_cast<Index>(data.size());
    std::vector<bool> used(n, false);
    std::vector<std::vector<Index>> groups;
    for (Index i = 0; i < n; ++i) {
        if (used[i]) continue;
        used[i] = true;
        if (is_real_point(data.points[i])) {
            groups.push_back({i});
            continue;
        }
        Index partner = -1;
        if (data.conjugate_closed) {
            for (Index j = i + 1; j < n; ++j)
                if (!used[j] && conj_match(data.points[i], data.points[j])) {
                    partner = j;
                    break;
                }
        }
        if (partner < 0) {
            groups.push_back({i});
            continue;
        }
        used[partner] = true;
        if (data.points[i].imag() > 0)
            groups.push_back({i, partner});
        else
            groups.push_back({partner, i});
    }
    return groups;
}

double group_angle(const InterpolationData& data, const std::vector<Index>& g) {
    cplx p = data.points[g[0]];
    return std::atan2(std::abs(p.imag()), p.real());
}

InterpolationData take(const InterpolationData& data, const std::vector<Index>& idx, bool closed) {
    InterpolationData out;
    out.conjugate_closed = closed;
    if (data.derivs) out.derivs.emplace();
    if (data.weights) out.weights.emplace();
    for (Index i : idx) {
        out.points.push_back(data.points[i]);
        out.values.push_back(data.values[i]);
        if (data.derivs) out.derivs->push_back((*data.derivs)[i]);
        if (data.weights) out.weights->push_back((*data.weights)[i]);
    }
    return out;
}

std::vector<std::vector<Index>> sorted_groups(const InterpolationData& data) {
    data.validate();
    if (data.size() < 2) throw std::invalid_argument("partition needs at least 2 points");
    auto groups = conjugate_groups(data);
    std::stable_sort(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
        return group_angle(data, a) < group_angle(data, b);
    });
    if (groups.size() < 2) {
        // a single conjugate pair: split it
        std::vector<std::vector<Index>> split;
        for (Index i : groups.front()) split.push_back({i});
        return split;
    }
    return groups;
}

bool groups_closed(const std::vector<std::vector<Index>>& groups, const InterpolationData& data) {
    for (const auto& g : groups)
        if (g.size() == 1 && !is_real_point(data.points[g[0]])) return false;
    return true;
}

// Blockwise unitary J with J^H X J real for conjugate-structured X.
MatrixXcd real_transform(const std::vector<cplx>& pts, const std::vector<Group>& groups) {
    Index n = static_cast<Index>(pts.size());
    MatrixXcd J = MatrixXcd::Zero(n, n);
    const double s = 1.0 / std::numbers::sqrt2;
    const cplx i1(0.0, 1.0);
    for (const auto& g : groups) {
        if (g.size == 1) {
            J(g.first, g.first) = 1.0;
        } else {
            J(g.first, g.first) = s;
            J(g.first, g.first + 1) = -i1 * s;
            J(g.first + 1, g.first) = s;
            J(g.first + 1, g.first + 1) = i1 * s;
        }
    }
    return J;
}

MatrixXd real_part_checked(const MatrixXcd& M, const char* what) {
    double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    double imag = M.imag().cwiseAbs().maxCoeff();
    if (imag > 1e-10 * scale) {
        std::ostringstream os;
        os << what << " keeps an imaginary part of relative size " << imag / scale << " after the real transformation";
        log::warn(os.str());
    }
    return M.real();
}

Index numerical_rank(const VectorXd& sv, double cutoff) {
    if (sv.size() == 0 || !(sv(0) > 0.0)) return 0;
    Index r = 0;
    while (r < sv.size() && sv(r) >= cutoff * sv(0)) ++r;
    return r;
}

Eigen::PartialPivLU<MatrixXcd> pencil_lu(const DescriptorROM& rom, cplx z) {
    MatrixXcd M = z * rom.E.cast<cplx>() - rom.A.cast<cplx>();
    Eigen::PartialPivLU<MatrixXcd> lu(M);
    if (!(lu.rcond() > 1e-14)) {
        std::ostringstream os;
        os << "zE - A is singular at z = " << z << " (rcond " << lu.rcond() << ")";
        throw SingularResolventError(os.str());
    }
    return lu;
}

// Poles, residues and constant term of a descriptor system via a real shift z0:
// with M = (z0 E - A)^{-1} and M E = X diag(theta) X^{-1},
// H(z) = sum_k g_k / (1 + (z - z0) theta_k), g = (c^T X) .* (X^{-1} M b).
struct ModalForm {
    std::vector<cplx> poles;
    std::vector<cplx> residues;
    double d = 0.0;
};

ModalForm modal_form(const DescriptorROM& rom) {
    Index r = rom.order();
    ModalForm out;
    if (r == 0) return out;
    const double shifts[] = {0.318309886, -0.7071, 1.3737, 0.05, -1.9, 2.71828, -3.3, 7.1};
    double best_rcond = -1.0;
    double z0 = 0.0;
    Eigen::PartialPivLU<MatrixXd> best;
    for (double s : shifts) {
        Eigen::PartialPivLU<MatrixXd> lu(s * rom.E - rom.A);
        double rc = lu.rcond();
        if (rc > best_rcond) {
            best_rcond = rc;
            z0 = s;
            best = lu;
        }
        if (rc > 1e-3) break;
    }
    if (!(best_rcond > 1e-14)) throw NumericalError("pencil (E, A) appears singular at every trial shift");
    MatrixXd K = best.solve(rom.E);
    VectorXd Mb = best.solve(rom.b);

    Eigen::EigenSolver<MatrixXd> es(K, true);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the shifted pencil failed");
    VectorXcd theta = es.eigenvalues();
    MatrixXcd X = es.eigenvectors();

    Eigen::JacobiSVD<MatrixXcd> svd(X);
    const VectorXd& xs = svd.singularValues();
    double condX = xs(xs.size() - 1) > 0.0 ? xs(0) / xs(xs.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(condX < 1e12)) {
        std::ostringstream os;
        os << "pencil is defective beyond tolerance (eigenvector condition " << condX << "); eigenvalues:";
        for (Index k = 0; k < theta.size(); ++k) {
            if (std::abs(theta(k)) > 0.0)
                os << ' ' << (z0 - 1.0 / theta(k));
            else
                os << " inf";
        }
        throw NumericalError(os.str());
    }
    Eigen::PartialPivLU<MatrixXcd> xlu(X);
    VectorXcd right = xlu.solve(Mb.cast<cplx>());
    VectorXcd left = X.transpose() * rom.c.cast<cplx>();

    double theta_max = theta.cwiseAbs().maxCoeff();
    cplx dsum = 0.0;
    for (Index k = 0; k < r; ++k) {
        cplx g = left(k) * right(k);
        if (std::abs(theta(k)) <= 1e-10 * theta_max) {
            dsum += g;
            continue;
        }
        out.poles.push_back(z0 - 1.0 / theta(k));
        out.residues.push_back(g / theta(k));
    }
    out.d = dsum.real();
    return out;
}

// Makes non-real poles come in exact conjugate pairs, as realize_pole_residue expects.
void symmetrize_pairs(std::vector<cplx>& poles, std::vector<cplx>& residues) {
    Index n = static_cast<Index>(poles.size());
    std::vector<bool> done(n, false);
    for (Index i = 0; i < n; ++i) {
        if (done[i]) continue;
        done[i] = true;
        if (poles[i].imag() == 0.0) {
            residues[i] = residues[i].real();
            continue;
        }
        Index best = -1;
        double dist = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) {
            if (done[j]) continue;
            double dj = std::abs(poles[j] - std::conj(poles[i]));
            if (dj < dist) {
                dist = dj;
                best = j;
            }
        }
        if (best < 0 || dist > 1e-6 * std::max(1.0, std::abs(poles[i]))) {
            // unpaired; treat as real
            poles[i] = poles[i].real();
            residues[i] = residues[i].real();
            continue;
        }
        done[best] = true;
        poles[best] = std::conj(poles[i]);
        residues[best] = std::conj(residues[i]);
    }
}

}  // namespace

void InterpolationData::validate() const {
    if (values.size() != points.size()) {
        std::ostringstream os;
        os << "values has length " << values.size() << ", expected " << points.size();
        throw std::invalid_argument(os.str());
    }
    if (derivs && derivs->size() != points.size()) {
        std::ostringstream os;
        os << "derivs has length " << derivs->size() << ", expected " << points.size();
        throw std::invalid_argument(os.str());
    }
    if (weights) {
        if (weights->size() != points.size()) {
            std::ostringstream os;
            os << "weights has length " << weights->size() << ", expected " << points.size();
            throw std::invalid_argument(os.str());
        }
        for (double w : *weights)
            if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and nonnegative");
    }
}

InterpolationData with_conjugates(std::vector<cplx> points, std::vector<cplx> values,
                                  std::optional<std::vector<cplx>> derivs, std::optional<std::vector<double>> weights) {
    InterpolationData in{std::move(points), std::move(values), std::move(derivs), std::move(weights), false};
    in.validate();
    InterpolationData out;
    out.conjugate_closed = true;
    if (in.derivs) out.derivs.emplace();
    if (in.weights) out.weights.emplace();
    for (std::size_t i = 0; i < in.size(); ++i) {
        out.points.push_back(in.points[i]);
        out.values.push_back(in.values[i]);
        if (in.derivs) out.derivs->push_back((*in.derivs)[i]);
        if (in.weights) out.weights->push_back((*in.weights)[i]);
        if (is_real_point(in.points[i])) continue;
        out.points.push_back(std::conj(in.points[i]));
        out.values.push_back(std::conj(in.values[i]));
        if (in.derivs) out.derivs->push_back(std::conj((*in.derivs)[i]));
        if (in.weights) out.weights->push_back((*in.weights)[i]);
    }
    return out;
}

Partition partition_interweave(const InterpolationData& data) {
    auto groups = sorted_groups(data);
    std::vector<std::vector<Index>> lg, rg;
    for (std::size_t k = 0; k < groups.size(); ++k) (k % 2 == 0 ? lg : rg).push_back(groups[k]);
    std::vector<Index> li, ri;
    for (const auto& g : lg) li.insert(li.end(), g.begin(), g.end());
    for (const auto& g : rg) ri.insert(ri.end(), g.begin(), g.end());
    return {take(data, li, groups_closed(lg, data)), take(data, ri, groups_closed(rg, data))};
}

Partition partition_contiguous(const InterpolationData& data) {
    auto groups = sorted_groups(data);
    std::size_t half = (groups.size() + 1) / 2;
    std::vector<std::vector<Index>> lg(groups.begin(), groups.begin() + static_cast<long>(half));
    std::vector<std::vector<Index>> rg(groups.begin() + static_cast<long>(half), groups.end());
    std::vector<Index> li, ri;
    for (const auto& g : lg) li.insert(li.end(), g.begin(), g.end());
    for (const auto& g : rg) ri.insert(ri.end(), g.begin(), g.end());
    return {take(data, li, groups_closed(lg, data)), take(data, ri, groups_closed(rg, data))};
}

LoewnerPencil loewner_pencil(const InterpolationData& left, const InterpolationData& right) {
    left.validate();
    right.validate();
    Index kl = static_cast<Index>(left.size());
    Index kr = static_cast<Index>(right.size());
    if (kl == 0 || kr == 0) throw std::invalid_argument("Loewner pencil needs nonempty left and right sets");
    LoewnerPencil P;
    P.L.resize(kl, kr);
    P.Ls.resize(kl, kr);
    P.Wv = Eigen::Map<const VectorXcd>(left.values.data(), kl);
    P.V = Eigen::Map<const VectorXcd>(right.values.data(), kr);
    for (Index i = 0; i < kl; ++i) {
        cplx mu = left.points[i], v = left.values[i];
        for (Index j = 0; j < kr; ++j) {
            cplx lam = right.points[j], w = right.values[j];
            cplx den = mu - lam;
            if (std::abs(den) <= 1e-14 * std::max(1.0, std::abs(mu))) {
                std::ostringstream os;
                os << "left and right sets share the point " << mu;
                throw std::invalid_argument(os.str());
            }
            P.L(i, j) = (v - w) / den;
            P.Ls(i, j) = (mu * v - lam * w) / den;
        }
    }
    return P;
}

LoewnerPencil hermite_loewner_pencil(const InterpolationData& data) {
    data.validate();
    if (!data.derivs) throw std::invalid_argument("Hermite Loewner needs derivative data");
    Index k = static_cast<Index>(data.size());
    if (k == 0) throw std::invalid_argument("Hermite Loewner needs at least one point");
    LoewnerPencil P;
    P.L.resize(k, k);
    P.Ls.resize(k, k);
    P.V = Eigen::Map<const VectorXcd>(data.values.data(), k);
    P.Wv = P.V;
    for (Index i = 0; i < k; ++i) {
        cplx si = data.points[i], hi = data.values[i];
        for (Index j = 0; j < k; ++j) {
            if (i == j) {
                cplx d = (*data.derivs)[i];
                P.L(i, i) = d;
                P.Ls(i, i) = hi + si * d;
                continue;
            }
            cplx sj = data.points[j], hj = data.values[j];
            cplx den = si - sj;
            if (std::abs(den) <= 1e-14 * std::max(1.0, std::abs(si))) {
                std::ostringstream os;
                os << "repeated interpolation point " << si;
                throw std::invalid_argument(os.str());
            }
            P.L(i, j) = (hi - hj) / den;
            P.Ls(i, j) = (si * hi - sj * hj) / den;
        }
    }
    return P;
}

void DescriptorROM::validate() const {
    Index r = A.rows();
    if (A.cols() != r || E.rows() != r || E.cols() != r) throw std::invalid_argument("E and A must be square of equal size");
    if (b.size() != r) throw std::invalid_argument("b length does not match the ROM order");
    if (c.size() != r) throw std::invalid_argument("c length does not match the ROM order");
}

cplx eval_rom(const DescriptorROM& rom, cplx z) {
    if (rom.order() == 0) return 0.0;
    auto lu = pencil_lu(rom, z);
    VectorXcd x = lu.solve(rom.b.cast<cplx>());
    return rom.c.cast<cplx>().dot(x);
}

cplx eval_rom_deriv(const DescriptorROM& rom, cplx z) {
    if (rom.order() == 0) return 0.0;
    auto lu = pencil_lu(rom, z);
    VectorXcd x = lu.solve(rom.b.cast<cplx>());
    VectorXcd y = lu.solve(rom.E.cast<cplx>() * x);
    return -rom.c.cast<cplx>().dot(y);
}

DescriptorROM to_descriptor(const StateSpaceSystem& sys, double feedthrough) {
    Index n = sys.order();
    Index r = n + (feedthrough != 0.0 ? 1 : 0);
    DescriptorROM rom;
    rom.E = MatrixXd::Zero(r, r);
    rom.A = MatrixXd::Zero(r, r);
    rom.b = VectorXd::Zero(r);
    rom.c = VectorXd::Zero(r);
    rom.E.topLeftCorner(n, n).setIdentity();
    rom.A.topLeftCorner(n, n) = sys.A();
    rom.b.head(n) = sys.b();
    rom.c.head(n) = sys.c();
    if (r > n) {
        // 0 * x' = -x + 1 * u gives x = u, output d * x
        rom.A(n, n) = -1.0;
        rom.b(n) = 1.0;
        rom.c(n) = feedthrough;
    }
    return rom;
}

namespace {

struct RealPencil {
    MatrixXd L, Ls;
    VectorXd left_values;   // becomes b
    VectorXd right_values;  // becomes c
};

RealPencil to_real(const LoewnerPencil& P, const std::vector<cplx>& left_pts, const std::vector<cplx>& right_pts) {
    auto lg = adjacent_groups(left_pts);
    auto rg = adjacent_groups(right_pts);
    if (!lg || !rg)
        throw std::invalid_argument(
            "interpolation data with non-real points must be conjugate-closed to give a real model");
    MatrixXcd JL = real_transform(left_pts, *lg);
    MatrixXcd JR = real_transform(right_pts, *rg);
    RealPencil R;
    R.L = real_part_checked(JL.adjoint() * P.L * JR, "Loewner matrix");
    R.Ls = real_part_checked(JL.adjoint() * P.Ls * JR, "shifted Loewner matrix");
    R.left_values = real_part_checked(JL.adjoint() * P.Wv, "left values");
    R.right_values = real_part_checked((P.V.transpose() * JR).transpose(), "right values");
    return R;
}

DescriptorROM truncate(const RealPencil& R, const LoewnerOptions& opts) {
    Index kl = R.L.rows(), kr = R.L.cols();
    MatrixXd row(kl, 2 * kr);
    row << R.L, R.Ls;
    MatrixXd col(2 * kl, kr);
    col << R.L, R.Ls;
    Eigen::BDCSVD<MatrixXd> s_row(row, Eigen::ComputeThinU);
    Eigen::BDCSVD<MatrixXd> s_col(col, Eigen::ComputeThinV);
    Index rank = std::min(numerical_rank(s_row.singularValues(), opts.sv_cutoff),
                          numerical_rank(s_col.singularValues(), opts.sv_cutoff));
    Index r = rank;
    if (opts.r) {
        if (*opts.r < 1) throw std::invalid_argument("ROM order r must be at least 1");
        r = *opts.r;
        if (r > rank) {
            std::ostringstream os;
            os << "requested order " << r << " exceeds the numerical rank " << rank << " of the Loewner pencil; using "
               << rank;
            log::warn(os.str());
            r = rank;
        }
    }
    if (r == 0) throw NumericalError("Loewner pencil is numerically zero");
    MatrixXd Y = s_row.matrixU().leftCols(r);
    MatrixXd X = s_col.matrixV().leftCols(r);
    DescriptorROM rom;
    rom.E = -Y.transpose() * R.L * X;
    rom.A = -Y.transpose() * R.Ls * X;
    rom.b = Y.transpose() * R.left_values;
    rom.c = X.transpose() * R.right_values;
    return rom;
}

}  // namespace

DescriptorROM loewner_rom(const InterpolationData& data, const LoewnerOptions& opts) {
    Partition part = partition_interweave(data);
    LoewnerPencil P = loewner_pencil(part.left, part.right);
    return truncate(to_real(P, part.left.points, part.right.points), opts);
}

DescriptorROM hermite_loewner_rom(const InterpolationData& data, const LoewnerOptions& opts) {
    data.validate();
    // conjugates must be adjacent for the real transformation
    InterpolationData ordered = data;
    if (!adjacent_groups(data.points)) {
        std::vector<Index> idx;
        for (const auto& g : conjugate_groups(data)) idx.insert(idx.end(), g.begin(), g.end());
        ordered = take(data, idx, data.conjugate_closed);
    }
    LoewnerPencil P = hermite_loewner_pencil(ordered);
    return truncate(to_real(P, ordered.points, ordered.points), opts);
}

std::vector<double> indicator_weights(const std::vector<double>& sW, double exponent, double floor) {
    std::vector<double> w(sW.size());
    for (std::size_t i = 0; i < sW.size(); ++i) {
        if (!std::isfinite(sW[i]) || sW[i] < 0.0) {
            w[i] = 0.0;
            continue;
        }
        w[i] = std::pow(std::max(sW[i], floor), exponent);
        if (!std::isfinite(w[i])) w[i] = 0.0;
    }
    return w;
}

namespace {

// Real pole set: real poles and upper members of conjugate pairs.
struct PoleSet {
    std::vector<double> real;
    std::vector<cplx> pairs;

    Index order() const { return static_cast<Index>(real.size() + 2 * pairs.size()); }

    std::vector<cplx> all() const {
        std::vector<cplx> out;
        for (double a : real) out.emplace_back(a, 0.0);
        for (cplx a : pairs) {
            out.push_back(a);
            out.push_back(std::conj(a));
        }
        return out;
    }
};

PoleSet initial_poles(const InterpolationData& data, const VectorFitOptions& opts) {
    PoleSet ps;
    if (opts.initial_poles) {
        std::vector<cplx> given = *opts.initial_poles;
        std::vector<cplx> dummy(given.size(), 0.0);
        symmetrize_pairs(given, dummy);
        for (cplx p : given) {
            if (p.imag() == 0.0)
                ps.real.push_back(p.real());
            else if (p.imag() > 0.0)
                ps.pairs.push_back(p);
        }
        if (ps.order() != opts.r) {
            std::ostringstream os;
            os << "initial pole set has " << ps.order() << " conjugate-closed poles, expected " << opts.r;
            throw std::invalid_argument(os.str());
        }
        return ps;
    }
    double lo = std::numbers::pi, hi = 0.0;
    for (cplx p : data.points) {
        double a = std::abs(std::arg(p));
        if (a <= 0.0) continue;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    if (!(hi > 0.0)) {
        lo = 1e-2;
        hi = std::numbers::pi;
    }
    lo = std::max(lo, 1e-4);
    hi = std::min(std::max(hi, lo), std::numbers::pi * 0.999);
    Index npairs = opts.r / 2;
    if (opts.r % 2 == 1) ps.real.push_back(opts.init_radius);
    for (Index k = 0; k < npairs; ++k) {
        double frac = npairs == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(npairs - 1);
        double ang = lo * std::pow(hi / lo, frac);
        ps.pairs.push_back(std::polar(opts.init_radius, ang));
    }
    return ps;
}

// Real basis functions for every sample: one column per real pole, two per pair.
MatrixXcd basis_matrix(const std::vector<cplx>& z, const PoleSet& ps) {
    Index m = static_cast<Index>(z.size());
    MatrixXcd Phi(m, ps.order());
    const cplx i1(0.0, 1.0);
    for (Index i = 0; i < m; ++i) {
        Index col = 0;
        for (double a : ps.real) Phi(i, col++) = 1.0 / (z[i] - a);
        for (cplx a : ps.pairs) {
            cplx f = 1.0 / (z[i] - a), g = 1.0 / (z[i] - std::conj(a));
            Phi(i, col++) = f + g;
            Phi(i, col++) = i1 * f - i1 * g;
        }
    }
    return Phi;
}

// Solves min || diag(w) (C x - h) || over real x, with complex C and h.
VectorXd real_lsq(const MatrixXcd& C, const VectorXcd& h, const VectorXd& w) {
    Index m = C.rows(), k = C.cols();
    MatrixXd R(2 * m, k);
    VectorXd rhs(2 * m);
    for (Index i = 0; i < m; ++i) {
        R.row(i) = w(i) * C.row(i).real();
        R.row(m + i) = w(i) * C.row(i).imag();
        rhs(i) = w(i) * h(i).real();
        rhs(m + i) = w(i) * h(i).imag();
    }
    VectorXd scale = R.colwise().norm();
    for (Index j = 0; j < k; ++j) {
        if (!(scale(j) > 0.0)) scale(j) = 1.0;
        R.col(j) /= scale(j);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(R);
    VectorXd x = qr.solve(rhs);
    return x.cwiseQuotient(scale);
}

struct ResidueFit {
    std::vector<cplx> poles;
    std::vector<cplx> residues;
    double d = 0.0;
    double objective = 0.0;
};

ResidueFit fit_residues(const std::vector<cplx>& z, const VectorXcd& h, const VectorXd& w, const PoleSet& ps,
                        bool fit_constant) {
    MatrixXcd Phi = basis_matrix(z, ps);
    Index r = ps.order();
    MatrixXcd C(Phi.rows(), r + (fit_constant ? 1 : 0));
    C.leftCols(r) = Phi;
    if (fit_constant) C.col(r).setOnes();
    VectorXd x = real_lsq(C, h, w);
    ResidueFit out;
    Index col = 0;
    for (double a : ps.real) {
        out.poles.emplace_back(a, 0.0);
        out.residues.emplace_back(x(col++), 0.0);
    }
    for (cplx a : ps.pairs) {
        cplx res(x(col), x(col + 1));
        col += 2;
        out.poles.push_back(a);
        out.residues.push_back(res);
        out.poles.push_back(std::conj(a));
        out.residues.push_back(std::conj(res));
    }
    out.d = fit_constant ? x(r) : 0.0;
    VectorXcd fitted = C.cast<cplx>() * x.cast<cplx>();
    out.objective = (w.cast<cplx>().asDiagonal() * (h - fitted)).squaredNorm();
    return out;
}

double pole_movement(const std::vector<cplx>& before, const std::vector<cplx>& after) {
    double worst = 0.0;
    for (cplx a : after) {
        double best = std::numeric_limits<double>::infinity();
        for (cplx b : before) best = std::min(best, std::abs(a - b));
        worst = std::max(worst, best);
    }
    return worst;
}

RationalTransferFunction coefficient_form(const std::vector<cplx>& poles, const std::vector<cplx>& residues, double d) {
    Index r = static_cast<Index>(poles.size());
    auto poly = [](const std::vector<cplx>& roots) {
        std::vector<cplx> c{1.0};
        for (cplx z0 : roots) {
            std::vector<cplx> next(c.size() + 1, 0.0);
            for (std::size_t k = 0; k < c.size(); ++k) {
                next[k + 1] += c[k];
                next[k] -= z0 * c[k];
            }
            c = std::move(next);
        }
        return c;
    };
    std::vector<cplx> P = poly(poles);
    std::vector<cplx> Q(r + 1, 0.0);
    for (Index k = 0; k <= r; ++k) Q[k] = d * P[k];
    for (Index k = 0; k < r; ++k) {
        std::vector<cplx> others;
        for (Index j = 0; j < r; ++j)
            if (j != k) others.push_back(poles[j]);
        std::vector<cplx> Pk = poly(others);
        for (std::size_t j = 0; j < Pk.size(); ++j) Q[j] += residues[k] * Pk[j];
    }
    RationalTransferFunction tf;
    tf.p.resize(r);
    tf.q.resize(r + 1);
    for (Index k = 0; k < r; ++k) tf.p(k) = P[k].real();
    for (Index k = 0; k <= r; ++k) tf.q(k) = Q[k].real();
    return tf;
}

}  // namespace

cplx VectorFitResult::operator()(cplx z) const {
    cplx acc = d;
    for (std::size_t k = 0; k < poles.size(); ++k) acc += residues[k] / (z - poles[k]);
    return acc;
}

DescriptorROM VectorFitResult::descriptor() const { return to_descriptor(realize_pole_residue(poles, residues), d); }

VectorFitResult vector_fitting(const InterpolationData& data, const VectorFitOptions& opts) {
    data.validate();
    if (opts.r < 1) throw std::invalid_argument("vector fitting order r must be at least 1");
    if (opts.max_iters < 1) throw std::invalid_argument("vector fitting needs max_iters >= 1");
    Index m = static_cast<Index>(data.size());
    if (m <= opts.r) {
        std::ostringstream os;
        os << "vector fitting needs more than r = " << opts.r << " samples, got " << m;
        throw std::invalid_argument(os.str());
    }
    const std::vector<cplx>& z = data.points;
    VectorXcd h = Eigen::Map<const VectorXcd>(data.values.data(), m);
    VectorXd w = VectorXd::Ones(m);
    if (data.weights) w = Eigen::Map<const VectorXd>(data.weights->data(), m);

    PoleSet ps = initial_poles(data, opts);
    VectorFitResult out;
    ResidueFit fit;
    std::ostringstream trace;
    for (int it = 1; it <= opts.max_iters; ++it) {
        Index r = ps.order();
        MatrixXcd Phi = basis_matrix(z, ps);
        Index nc = opts.fit_constant ? 1 : 0;
        MatrixXcd C(m, 2 * r + nc);
        C.leftCols(r) = Phi;
        if (nc) C.col(r).setOnes();
        C.rightCols(r) = -(h.asDiagonal() * Phi);
        VectorXd x = real_lsq(C, h, w);
        VectorXd ct = x.tail(r);

        // zeros of sigma(z) = 1 + ct^T (zI - Ahat)^{-1} bhat
        MatrixXd Ahat = MatrixXd::Zero(r, r);
        VectorXd bhat = VectorXd::Zero(r);
        Index col = 0;
        for (double a : ps.real) {
            Ahat(col, col) = a;
            bhat(col) = 1.0;
            ++col;
        }
        for (cplx a : ps.pairs) {
            Ahat(col, col) = a.real();
            Ahat(col, col + 1) = a.imag();
            Ahat(col + 1, col) = -a.imag();
            Ahat(col + 1, col + 1) = a.real();
            bhat(col) = 2.0;
            col += 2;
        }
        Eigen::EigenSolver<MatrixXd> es(Ahat - bhat * ct.transpose(), false);
        VectorXcd lam = es.eigenvalues();
        bool finite = es.info() == Eigen::Success && lam.allFinite();

        PoleSet next;
        if (finite) {
            for (Index k = 0; k < lam.size(); ++k) {
                if (lam(k).imag() == 0.0)
                    next.real.push_back(lam(k).real());
                else if (lam(k).imag() > 0.0)
                    next.pairs.push_back(lam(k));
            }
            finite = next.order() == r;
        }
        if (!finite) {
            trace << "iteration " << it << ": pole relocation produced a degenerate pole set";
            throw NumericalError("vector fitting aborted; " + trace.str());
        }
        double move = pole_movement(ps.all(), next.all());
        ps = next;
        fit = fit_residues(z, h, w, ps, opts.fit_constant);
        out.objective_history.push_back(fit.objective);
        trace << "iteration " << it << ": objective " << fit.objective << ", pole movement " << move << "; ";
        out.iterations = it;
        if (!std::isfinite(fit.objective)) throw NumericalError("vector fitting aborted; " + trace.str());
        if (move < opts.pole_tol) {
            out.converged = true;
            break;
        }
    }
    out.poles = fit.poles;
    out.residues = fit.residues;
    out.d = fit.d;
    out.objective = fit.objective;
    out.tf = coefficient_form(out.poles, out.residues, out.d);
    return out;
}

std::vector<cplx> rom_poles(const DescriptorROM& rom) {
    rom.validate();
    return modal_form(rom).poles;
}

StablePart stable_part(const DescriptorROM& rom) {
    rom.validate();
    ModalForm mf = modal_form(rom);
    std::vector<cplx> kp, kr;
    StablePart out;
    for (std::size_t k = 0; k < mf.poles.size(); ++k) {
        if (std::abs(mf.poles[k]) < 1.0) {
            kp.push_back(mf.poles[k]);
            kr.push_back(mf.residues[k]);
        } else {
            out.discarded_poles.push_back(mf.poles[k]);
        }
    }
    symmetrize_pairs(kp, kr);
    out.discarded = static_cast<Index>(out.discarded_poles.size());
    out.kept_poles = kp;
    out.rom = to_descriptor(realize_pole_residue(kp, kr, 1e-6), mf.d);
    return out;
}

}  // namespace tdfreq
