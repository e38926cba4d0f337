#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "tdfreq/errors.hpp"
#include "tdfreq/metrics.hpp"
#include "tdfreq/rom.hpp"

using namespace tdfreq;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

InterpolationData sample(const oracle::Rational& H, const std::vector<double>& omegas, bool derivs) {
    std::vector<cplx> pts = unit_circle(omegas), vals, ders;
    for (cplx z : pts) {
        vals.push_back(H(z));
        ders.push_back(H.deriv(z));
    }
    if (derivs) return with_conjugates(pts, vals, ders);
    return with_conjugates(pts, vals);
}

// Largest relative error of the ROM against H on a grid that avoids the samples.
template <class F>
double grid_error(const F& rom, const oracle::Rational& H, int points = 100) {
    double e = 0.0;
    for (int i = 0; i < points; ++i) {
        cplx z = std::polar(1.0, -3.1 + 6.2 * (i + 0.37) / points);
        e = std::max(e, oracle::rel_err(rom(z), H(z)));
    }
    return e;
}

double cond(const Eigen::MatrixXcd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& s = svd.singularValues();
    return s(0) / s(s.size() - 1);
}

bool is_closed(const InterpolationData& d) {
    for (cplx p : d.points) {
        if (std::abs(p.imag()) < 1e-12) continue;
        bool found = false;
        for (cplx q : d.points) found = found || std::abs(q - std::conj(p)) < 1e-12;
        if (!found) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("rom") {
    TEST_CASE("conjugate completion") {
        InterpolationData d = with_conjugates({cplx(0.0, 1.0), cplx(0.5, 0.0)}, {cplx(1.0, 2.0), cplx(3.0, 0.0)});
        CHECK(d.size() == 3);
        CHECK(d.conjugate_closed);
        CHECK(d.points[1] == cplx(0.0, -1.0));
        CHECK(d.values[1] == cplx(1.0, -2.0));
        CHECK_THROWS_AS(with_conjugates({cplx(0.0, 1.0)}, {}), std::invalid_argument);
    }

    TEST_CASE("interweaved split alternates by angle") {
        oracle::Rational H = oracle::random_rational(4, 1);
        InterpolationData d = sample(H, {0.3, 0.9, 1.5, 2.4}, false);
        Partition p = partition_interweave(d);
        REQUIRE(p.left.size() == 4);
        REQUIRE(p.right.size() == 4);
        CHECK(is_closed(p.left));
        CHECK(is_closed(p.right));
        auto has_angle = [](const InterpolationData& s, double w) {
            for (cplx z : s.points)
                if (std::abs(std::abs(std::arg(z)) - w) < 1e-12) return true;
            return false;
        };
        CHECK(has_angle(p.left, 0.3));
        CHECK(has_angle(p.right, 0.9));
        CHECK(has_angle(p.left, 1.5));
        CHECK(has_angle(p.right, 2.4));

        Partition c = partition_contiguous(d);
        CHECK(has_angle(c.left, 0.3));
        CHECK(has_angle(c.left, 0.9));
        CHECK(has_angle(c.right, 1.5));
    }

    TEST_CASE("two points go one to each side") {
        InterpolationData reals{{cplx(0.2), cplx(0.7)}, {cplx(1.0), cplx(2.0)}, std::nullopt, std::nullopt, true};
        Partition p = partition_interweave(reals);
        CHECK(p.left.size() == 1);
        CHECK(p.right.size() == 1);
        Partition q = partition_interweave(with_conjugates({std::polar(1.0, 0.5)}, {cplx(1.0, 1.0)}));
        CHECK(q.left.size() == 1);
        CHECK(q.right.size() == 1);
        CHECK_THROWS_AS(partition_interweave(InterpolationData{{cplx(0.5)}, {cplx(1.0)}, std::nullopt, std::nullopt, true}),
                        std::invalid_argument);
    }

    TEST_CASE("interweaving conditions the Loewner matrix better than a contiguous split") {
        int better = 0;
        for (int seed = 0; seed < 20; ++seed) {
            StateSpaceSystem sys = random_stable_system(30, 300 + seed);
            std::vector<cplx> pts = unit_circle(logspace_halfopen(1e-2, 3.14159, 50)), vals;
            for (cplx z : pts) vals.push_back(eval_tf(sys, z));
            InterpolationData d = with_conjugates(pts, vals);
            Partition iw = partition_interweave(d), ct = partition_contiguous(d);
            if (cond(loewner_pencil(iw.left, iw.right).L) < cond(loewner_pencil(ct.left, ct.right).L)) ++better;
        }
        CHECK(better >= 16);
    }

    TEST_CASE("Loewner entries") {
        InterpolationData left{{cplx(0.1, 0.2), cplx(-0.3, 0.5)}, {cplx(1.0, 1.0), cplx(2.0, -1.0)}, std::nullopt, std::nullopt, false};
        InterpolationData right{{cplx(0.7, -0.1), cplx(0.2, 0.9), cplx(-0.5, -0.5)},
                                {cplx(0.5, 0.0), cplx(-1.0, 3.0), cplx(0.0, 2.0)},
                                std::nullopt,
                                std::nullopt,
                                false};
        LoewnerPencil P = loewner_pencil(left, right);
        REQUIRE(P.L.rows() == 2);
        REQUIRE(P.L.cols() == 3);
        for (Index i = 0; i < 2; ++i)
            for (Index j = 0; j < 3; ++j) {
                cplx mu = left.points[i], v = left.values[i], la = right.points[j], w = right.values[j];
                CHECK(std::abs(P.L(i, j) - (v - w) / (mu - la)) < 1e-14);
                CHECK(std::abs(P.Ls(i, j) - (mu * v - la * w) / (mu - la)) < 1e-14);
            }
        CHECK(P.V(2) == right.values[2]);
        CHECK(P.Wv(1) == left.values[1]);
    }

    TEST_CASE("Hermite Loewner diagonal uses the derivative") {
        oracle::Rational H = oracle::random_rational(3, 5);
        std::vector<cplx> pts = {cplx(1.2, 0.0), cplx(-1.1, 0.0), cplx(0.0, 1.3)}, v, d;
        for (cplx z : pts) {
            v.push_back(H(z));
            d.push_back(H.deriv(z));
        }
        LoewnerPencil P = hermite_loewner_pencil({pts, v, d, std::nullopt, false});
        for (Index i = 0; i < 3; ++i) {
            CHECK(std::abs(P.L(i, i) - d[i]) < 1e-14);
            CHECK(std::abs(P.Ls(i, i) - (v[i] + pts[i] * d[i])) < 1e-13);
        }
        CHECK(std::abs(P.L(0, 1) - (v[0] - v[1]) / (pts[0] - pts[1])) < 1e-14);
    }

    TEST_CASE("Loewner recovers an order-4 rational from 8 points") {
        oracle::Rational H = oracle::random_rational(4, 7);
        InterpolationData d = sample(H, {0.2, 0.8, 1.6, 2.5}, false);
        REQUIRE(d.size() == 8);
        LoewnerOptions lo;
        lo.r = 4;
        DescriptorROM rom = loewner_rom(d, lo);
        CHECK(rom.order() == 4);
        CHECK(grid_error([&](cplx z) { return eval_rom(rom, z); }, H) < 1e-8);
        // real matrices reproduce conjugate symmetry
        cplx z = std::polar(1.0, 0.77);
        CHECK(std::abs(eval_rom(rom, std::conj(z)) - std::conj(eval_rom(rom, z))) < 1e-12);
    }

    TEST_CASE("Loewner minimal case") {
        auto H = [](cplx z) { return 1.0 / (z - 0.5); };
        InterpolationData d{{cplx(1.5), cplx(-1.0)}, {H(1.5), H(-1.0)}, std::nullopt, std::nullopt, true};
        LoewnerOptions lo;
        lo.r = 1;
        DescriptorROM rom = loewner_rom(d, lo);
        for (cplx z : {cplx(2.0), cplx(0.0, 1.0), cplx(-0.3, 0.4)}) CHECK(oracle::rel_err(eval_rom(rom, z), H(z)) < 1e-12);
    }

    TEST_CASE("untruncated square Loewner interpolates every sample") {
        oracle::Rational H = oracle::random_rational(12, 9);
        InterpolationData d = sample(H, {0.1, 0.4, 0.9, 1.4, 2.0, 2.8}, false);
        DescriptorROM rom = loewner_rom(d);
        CHECK(rom.order() == 6);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(oracle::rel_err(eval_rom(rom, d.points[i]), d.values[i]) < 1e-8);
    }

    TEST_CASE("forced order above the numerical rank is reduced") {
        oracle::Rational H = oracle::random_rational(2, 3);
        InterpolationData d = sample(H, {0.2, 0.6, 1.0, 1.5, 2.0, 2.6}, false);
        LoewnerOptions lo;
        lo.r = 5;
        DescriptorROM rom = loewner_rom(d, lo);
        CHECK(rom.order() == 2);
        CHECK(grid_error([&](cplx z) { return eval_rom(rom, z); }, H) < 1e-8);
    }

    TEST_CASE("complex data must be conjugate-closed") {
        InterpolationData d{{cplx(0.0, 1.0), cplx(0.5, 0.5)}, {cplx(1.0), cplx(2.0)}, std::nullopt, std::nullopt, false};
        CHECK_THROWS_AS(loewner_rom(d), std::invalid_argument);
    }

    TEST_CASE("Hermite Loewner recovers an order-4 rational from 4 points") {
        oracle::Rational H = oracle::random_rational(4, 11);
        InterpolationData d = sample(H, {0.5, 1.9}, true);
        REQUIRE(d.size() == 4);
        LoewnerOptions lo;
        lo.r = 4;
        DescriptorROM rom = hermite_loewner_rom(d, lo);
        CHECK(grid_error([&](cplx z) { return eval_rom(rom, z); }, H) < 1e-8);
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(oracle::rel_err(eval_rom(rom, d.points[i]), d.values[i]) < 1e-8);
            CHECK(oracle::rel_err(eval_rom_deriv(rom, d.points[i]), (*d.derivs)[i]) < 1e-8);
        }
    }

    TEST_CASE("Hermite single point") {
        auto H = [](cplx z) { return 2.0 / (z - 0.3); };
        auto dH = [](cplx z) { return -2.0 / ((z - 0.3) * (z - 0.3)); };
        cplx p(1.4);
        LoewnerOptions lo;
        lo.r = 1;
        DescriptorROM rom = hermite_loewner_rom({{p}, {H(p)}, std::vector<cplx>{dH(p)}, std::nullopt, true}, lo);
        CHECK(oracle::rel_err(eval_rom(rom, p), H(p)) < 1e-12);
        CHECK(oracle::rel_err(eval_rom_deriv(rom, p), dH(p)) < 1e-10);
        CHECK_THROWS_AS(hermite_loewner_rom({{p}, {H(p)}, std::nullopt, std::nullopt, true}, lo), std::invalid_argument);
    }

    TEST_CASE("Hermite interpolation checked by finite differences") {
        oracle::Rational H = oracle::random_rational(10, 13);
        InterpolationData d = sample(H, {0.3, 1.1, 1.7, 2.2, 2.9}, true);
        DescriptorROM rom = hermite_loewner_rom(d);
        const double h = 1e-6;
        for (std::size_t i = 0; i < d.size(); ++i) {
            cplx z = d.points[i];
            cplx fd = (eval_rom(rom, z + h) - eval_rom(rom, z - h)) / (2.0 * h);
            CHECK(oracle::rel_err(eval_rom(rom, z), d.values[i]) < 1e-8);
            CHECK(oracle::rel_err(fd, (*d.derivs)[i]) < 1e-6);
        }
    }

    TEST_CASE("descriptor evaluation") {
        StateSpaceSystem sys = random_stable_system(6, 4);
        DescriptorROM rom = to_descriptor(sys);
        CHECK(rom.E == MatrixXd::Identity(6, 6));
        cplx z = std::polar(1.0, 1.2);
        CHECK(oracle::rel_err(eval_rom(rom, z), eval_tf(sys, z)) < 1e-12);
        CHECK(oracle::rel_err(eval_rom_deriv(rom, z), eval_tf_deriv(sys, z)) < 1e-10);
        DescriptorROM with_d = to_descriptor(sys, 0.75);
        CHECK(with_d.order() == 7);
        CHECK(oracle::rel_err(eval_rom(with_d, z), eval_tf(sys, z) + 0.75) < 1e-12);
        CHECK(oracle::rel_err(eval_rom_deriv(with_d, z), eval_tf_deriv(sys, z)) < 1e-10);

        DescriptorROM bad = rom;
        bad.b = VectorXd::Ones(3);
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        CHECK_THROWS_AS(eval_rom(to_descriptor(StateSpaceSystem(MatrixXd::Constant(1, 1, 0.5), VectorXd::Ones(1), VectorXd::Ones(1))), 0.5),
                        SingularResolventError);
    }

    TEST_CASE("vector fitting on exact order-3 data") {
        oracle::Rational H = oracle::random_rational(3, 17);
        std::vector<double> om;
        for (int i = 0; i < 10; ++i) om.push_back(0.1 + 0.3 * i);
        InterpolationData d = sample(H, om, false);
        REQUIRE(d.size() == 20);
        VectorFitOptions vo;
        vo.r = 3;
        VectorFitResult vf = vector_fitting(d, vo);
        CHECK(vf.objective < 1e-16);
        CHECK(vf.iterations <= 20);
        CHECK(vf.objective <= vf.objective_history.front());
        CHECK(grid_error(vf, H) < 1e-8);

        // the three representations agree
        DescriptorROM rom = vf.descriptor();
        for (double w : {0.05, 1.3, 3.0}) {
            cplx z = std::polar(1.0, w);
            CHECK(oracle::rel_err(eval_rom(rom, z), vf(z)) < 1e-10);
            CHECK(oracle::rel_err(vf.tf(z), vf(z)) < 1e-8);
        }

        vo.max_iters = 5;
        CHECK(grid_error(vector_fitting(d, vo), H) < 1e-8);
    }

    TEST_CASE("vector fitting preconditions") {
        oracle::Rational H = oracle::random_rational(3, 17);
        InterpolationData d = sample(H, {0.5, 1.0}, false);
        VectorFitOptions vo;
        vo.r = 0;
        CHECK_THROWS_AS(vector_fitting(d, vo), std::invalid_argument);
        vo.r = 4;
        CHECK_THROWS_AS(vector_fitting(d, vo), std::invalid_argument);
    }

    TEST_CASE("weights multiply the residual rows") {
        oracle::Rational H = oracle::random_rational(4, 23);
        std::vector<double> om;
        for (int i = 0; i < 12; ++i) om.push_back(0.1 + 0.25 * i);
        InterpolationData d = sample(H, om, false);
        // corrupt one conjugate pair and give it zero weight
        d.values[4] += 5.0;
        d.values[5] += 5.0;
        std::vector<double> w(d.size(), 1.0);
        w[4] = w[5] = 0.0;
        d.weights = w;
        VectorFitOptions vo;
        vo.r = 4;
        VectorFitResult vf = vector_fitting(d, vo);
        CHECK(grid_error(vf, H) < 1e-8);
        d.weights.reset();
        CHECK(grid_error(vector_fitting(d, vo), H) > 1e-3);
    }

    TEST_CASE("indicator weights") {
        auto w = indicator_weights({16.0, 1e-4, std::numeric_limits<double>::infinity(), 0.0}, 0.25);
        CHECK(w[0] == doctest::Approx(2.0));
        CHECK(w[1] == doctest::Approx(0.1));
        CHECK(w[2] == 0.0);
        CHECK(w[3] == doctest::Approx(1e-4));  // floor 1e-16
        auto inv = indicator_weights({16.0}, -0.25);
        CHECK(inv[0] == doctest::Approx(0.5));
    }

    TEST_CASE("stable part") {
        StateSpaceSystem sys = random_stable_system(8, 31);
        StablePart same = stable_part(to_descriptor(sys));
        CHECK(same.discarded == 0);
        for (double w : {0.1, 1.0, 2.5}) {
            cplx z = std::polar(1.0, w);
            CHECK(oracle::rel_err(eval_rom(same.rom, z), eval_tf(sys, z)) < 1e-10);
        }

        StateSpaceSystem mixed(MatrixXd{{0.5, 0.0}, {0.0, 1.5}}, VectorXd{{1.0, 1.0}}, VectorXd{{2.0, 3.0}});
        StablePart sp = stable_part(to_descriptor(mixed));
        CHECK(sp.discarded == 1);
        REQUIRE(sp.kept_poles.size() == 1);
        CHECK(std::abs(sp.kept_poles[0] - cplx(0.5)) < 1e-12);
        cplx z(0.0, 1.0);
        CHECK(oracle::rel_err(eval_rom(sp.rom, z), 2.0 / (z - 0.5)) < 1e-10);

        // a Loewner model with an unstable pair: kept part has spectral radius < 1
        oracle::Rational H{{cplx(0.5, 0.3), cplx(0.5, -0.3), cplx(-1.2, 0.0), cplx(0.1, 0.0)},
                           {cplx(1.0, 0.5), cplx(1.0, -0.5), cplx(0.7, 0.0), cplx(-0.4, 0.0)}};
        InterpolationData d = sample(H, {0.3, 1.0, 1.8, 2.6}, false);
        LoewnerOptions lo;
        lo.r = 4;
        DescriptorROM rom = loewner_rom(d, lo);
        StablePart lp = stable_part(rom);
        CHECK(lp.discarded == 1);
        for (cplx p : rom_poles(lp.rom)) CHECK(std::abs(p) < 1.0);
        oracle::Rational kept{{cplx(0.5, 0.3), cplx(0.5, -0.3), cplx(0.1, 0.0)}, {cplx(1.0, 0.5), cplx(1.0, -0.5), cplx(-0.4, 0.0)}};
        CHECK(grid_error([&](cplx s) { return eval_rom(lp.rom, s); }, kept) < 1e-7);
    }

    TEST_CASE("poles of a descriptor") {
        StateSpaceSystem sys(MatrixXd{{0.5, 0.0}, {0.0, -0.25}}, VectorXd{{1.0, 1.0}}, VectorXd{{1.0, 1.0}});
        auto poles = rom_poles(to_descriptor(sys, 2.0));
        REQUIRE(poles.size() == 2);
        std::sort(poles.begin(), poles.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
        CHECK(std::abs(poles[0] - cplx(-0.25)) < 1e-12);
        CHECK(std::abs(poles[1] - cplx(0.5)) < 1e-12);
    }
}
