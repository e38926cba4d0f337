#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tdfreq/errors.hpp"
#include "tdfreq/lti.hpp"

using namespace tdfreq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

StateSpaceSystem scalar(double a, double b, double c) {
    return StateSpaceSystem(MatrixXd::Constant(1, 1, a), VectorXd::Constant(1, b), VectorXd::Constant(1, c));
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Continuous Penzl transfer function written out block by block.
cplx penzl_continuous_tf(cplx s) {
    cplx h = 0.0;
    for (double w : {100.0, 200.0, 400.0}) h += 100.0 * 2.0 * (s + 1.0) / ((s + 1.0) * (s + 1.0) + w * w);
    for (int k = 1; k <= 1000; ++k) h += 1.0 / (s + static_cast<double>(k));
    return h;
}

}  // namespace

TEST_SUITE("lti") {
    TEST_CASE("delay with A = 0") {
        TimeSeries ts = simulate(scalar(0.0, 1.0, 1.0), VectorXd{{1.0, 2.0, 3.0}}, VectorXd::Zero(1));
        CHECK(ts.y(0) == 0.0);
        CHECK(ts.y(1) == 1.0);
        CHECK(ts.y(2) == 2.0);
    }

    TEST_CASE("zero input and zero state give zero output") {
        StateSpaceSystem sys = random_stable_system(7, 3);
        TimeSeries ts = simulate(sys, VectorXd::Zero(50));
        CHECK(ts.y.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("order-2 system against a hand-rolled recurrence") {
        MatrixXd A{{0.5, 0.0}, {0.0, 0.25}};
        VectorXd b{{1.0, 1.0}}, c{{1.0, 1.0}};
        StateSpaceSystem sys(A, b, c);
        TimeSeries ts = simulate(sys, VectorXd{{1.0, 0.0, 0.0, 0.0}}, VectorXd::Zero(2));
        auto ref = oracle::recurrence(A, b, c, {1.0, 0.0, 0.0, 0.0}, {0.0, 0.0});
        for (int k = 0; k < 4; ++k) CHECK(ts.y(k) == doctest::Approx(ref[k]).epsilon(1e-15));
        // y = [0, 2, 0.75, 0.3125]
        CHECK(ts.y(1) == doctest::Approx(2.0));
        CHECK(ts.y(3) == doctest::Approx(0.3125));
    }

    TEST_CASE("simulate with a nonzero initial state") {
        StateSpaceSystem sys = random_stable_system(6, 11);
        VectorXd u = gaussian_input(40, 2);
        VectorXd x0 = VectorXd::LinSpaced(6, -1.0, 1.0);
        TimeSeries ts = simulate(sys, u, x0);
        auto ref = oracle::recurrence(sys.A(), sys.b(), sys.c(), to_std(u), to_std(x0));
        for (int k = 0; k <= 40; ++k) CHECK(ts.y(k) == doctest::Approx(ref[k]).epsilon(1e-12));
    }

    TEST_CASE("simulate is linear") {
        StateSpaceSystem sys = random_stable_system(12, 5);
        VectorXd u1 = gaussian_input(200, 1), u2 = gaussian_input(200, 2);
        const double a = 0.7, b = -2.3;
        VectorXd lhs = simulate(sys, a * u1 + b * u2).y;
        VectorXd rhs = a * simulate(sys, u1).y + b * simulate(sys, u2).y;
        CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }

    TEST_CASE("dimension errors name the offending argument") {
        StateSpaceSystem sys = random_stable_system(3, 1);
        try {
            simulate(sys, VectorXd::Ones(5), VectorXd::Zero(2));
            FAIL("expected an exception");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("x0") != std::string::npos);
        }
        CHECK_THROWS_AS(StateSpaceSystem(MatrixXd::Zero(2, 2), VectorXd::Zero(3), VectorXd::Zero(2)),
                        std::invalid_argument);
        CHECK_THROWS_AS(TimeSeries(VectorXd::Zero(3), VectorXd::Zero(4)), std::invalid_argument);
        CHECK_THROWS_AS(TimeSeries(VectorXd::Zero(1), VectorXd::Zero(1)), std::invalid_argument);
    }

    TEST_CASE("scalar resolvent and derivative") {
        StateSpaceSystem sys = scalar(0.5, 2.0, 3.0);
        CHECK(std::abs(eval_tf(sys, 1.0) - cplx(12.0)) < 1e-12);
        CHECK(std::abs(eval_tf_deriv(sys, 1.0) - cplx(-24.0)) < 1e-12);
    }

    TEST_CASE("strictly proper at large z") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) CHECK(std::abs(eval_tf(random_stable_system(5, seed), 1e8)) < 1e-6);
    }

    TEST_CASE("resolvent matches the dense oracle") {
        StateSpaceSystem sys = random_stable_system(60, 9);
        FrequencyResponse fr(sys);
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> w(-3.1, 3.1), r(0.95, 1.5);
        for (int i = 0; i < 20; ++i) {
            cplx z = std::polar(r(rng), w(rng));
            cplx ref = oracle::resolvent(sys, z);
            CHECK(oracle::rel_err(eval_tf(sys, z), ref) < 1e-10);
            CHECK(oracle::rel_err(fr.value(z), ref) < 1e-10);
            CHECK(oracle::rel_err(fr.derivative(z), eval_tf_deriv(sys, z)) < 1e-9);
        }
    }

    TEST_CASE("rational form agrees with the resolvent for n <= 30") {
        std::mt19937 rng(8);
        std::uniform_real_distribution<double> w(-3.1, 3.1);
        for (int n : {1, 2, 3, 8, 15, 30}) {
            StateSpaceSystem sys = random_stable_system(n, 100 + n);
            RationalTransferFunction tf = rational_form(sys);
            CHECK(tf.order() == n);
            for (int i = 0; i < 50; ++i) {
                cplx z = std::polar(1.0, w(rng));
                CHECK(oracle::rel_err(tf(z), eval_tf(sys, z)) < 1e-8);
            }
        }
    }

    TEST_CASE("derivative matches central differences on the benchmark systems") {
        std::vector<StateSpaceSystem> systems = {random_stable_system(5, 21), heat_rod_system(60), penzl_system()};
        std::mt19937 rng(6);
        std::uniform_real_distribution<double> w(0.1, 3.0);
        const double h = 1e-6;
        for (const auto& sys : systems) {
            FrequencyResponse fr(sys);
            for (int i = 0; i < 20; ++i) {
                cplx z = std::polar(1.0, w(rng));
                cplx fd = (fr.value(z + h) - fr.value(z - h)) / (2.0 * h);
                CHECK(oracle::rel_err(fd, fr.derivative(z)) < 1e-5);
            }
        }
        CHECK(oracle::rel_err((eval_tf(systems[0], cplx(0.3, 1.1) + h) - eval_tf(systems[0], cplx(0.3, 1.1) - h)) /
                                  (2.0 * h),
                              eval_tf_deriv(systems[0], cplx(0.3, 1.1))) < 1e-6);
    }

    TEST_CASE("evaluation at an eigenvalue is rejected") {
        StateSpaceSystem sys = scalar(0.5, 1.0, 1.0);
        CHECK_THROWS_AS(eval_tf(sys, 0.5), SingularResolventError);
        CHECK_THROWS_AS(eval_tf_deriv(sys, 0.5), SingularResolventError);
        CHECK_THROWS_AS(FrequencyResponse(sys).value(0.5), SingularResolventError);
    }

    TEST_CASE("derivative of an order-0 system is rejected") {
        StateSpaceSystem empty(MatrixXd(0, 0), VectorXd(0), VectorXd(0));
        CHECK(eval_tf(empty, 2.0) == cplx(0.0));
        CHECK_THROWS_AS(eval_tf_deriv(empty, 2.0), std::invalid_argument);
    }

    TEST_CASE("pole-residue realization") {
        oracle::Rational rat = oracle::random_rational(7, 3);
        StateSpaceSystem sys = realize_pole_residue(rat.poles, rat.residues);
        CHECK(sys.order() == 7);
        for (double w : {0.01, 0.5, 1.7, 3.0}) {
            cplx z = std::polar(1.0, w);
            CHECK(oracle::rel_err(eval_tf(sys, z), rat(z)) < 1e-12);
        }
        // a lone non-real pole cannot be realized with real matrices
        CHECK_THROWS_AS(realize_pole_residue({cplx(0.1, 0.5)}, {cplx(1.0, 0.0)}), std::invalid_argument);
    }

    TEST_CASE("random stable systems") {
        StateSpaceSystem one = random_stable_system(1, 42);
        CHECK(one.order() == 1);
        CHECK(std::abs(one.A()(0, 0)) < 1.0);
        StateSpaceSystem big = random_stable_system(100, 7);
        CHECK(big.order() == 100);
        CHECK(big.spectral_radius() < 1.0);
        StateSpaceSystem again = random_stable_system(100, 7);
        CHECK(big.A() == again.A());
        CHECK(big.b() == again.b());
        CHECK(big.c() == again.c());
        CHECK(random_stable_system(100, 8).A() != big.A());
        CHECK_THROWS_AS(random_stable_system(0, 1), std::invalid_argument);
    }

    TEST_CASE("heat rod") {
        StateSpaceSystem sys = heat_rod_system(200);
        CHECK(sys.order() == 200);
        CHECK(sys.is_stable());
        for (double dt : {1e-3, 1e-2, 1e-1}) CHECK(heat_rod_system(50, dt).spectral_radius() < 1.0);
        CHECK(simulate(sys, VectorXd::Zero(30)).y.cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(heat_rod_system(2), std::invalid_argument);
        CHECK_THROWS_AS(heat_rod_system(10, 0.0), std::invalid_argument);
    }

    TEST_CASE("penzl benchmark") {
        StateSpaceSystem sys = penzl_system();
        CHECK(sys.order() == 1006);
        CHECK(sys.is_stable());
        CHECK_THROWS_AS(penzl_system(-1.0), std::invalid_argument);

        // implicit Euler: eigenvalues 1/(1 - dt lambda) approach 1 from inside as dt shrinks
        StateSpaceSystem fine = penzl_system(1e-8);
        Eigen::VectorXcd ev = fine.A().eigenvalues();
        CHECK(ev.cwiseAbs().maxCoeff() < 1.0);
        CHECK(ev.cwiseAbs().minCoeff() > 0.99999);

        const double dt = 1e-4;
        FrequencyResponse fr(sys);
        // implicit Euler maps H_c exactly: z H_d(z) = H_c((z - 1) / (dt z))
        for (double w : {1e-4, 1e-2, 0.3, 2.0}) {
            cplx z = std::polar(1.0, w);
            cplx s = (z - 1.0) / (dt * z);
            CHECK(oracle::rel_err(z * fr.value(z), penzl_continuous_tf(s)) < 1e-10);
        }
        // the dense continuous realization agrees with the block formula
        CHECK(oracle::rel_err(oracle::resolvent(penzl_continuous(), cplx(0.0, 150.0)), penzl_continuous_tf(cplx(0.0, 150.0))) <
              1e-10);
        // low frequency: H_d(e^{iw}) ~ H_c(i w / dt)
        const double w = 1e-4;
        CHECK(oracle::rel_err(fr.value(std::polar(1.0, w)), penzl_continuous_tf(cplx(0.0, w / dt))) < 1e-3);
    }

    TEST_CASE("gaussian input") {
        VectorXd u = gaussian_input(999, 5);
        CHECK(u.size() == 1000);
        CHECK(u == gaussian_input(999, 5));
        CHECK(std::abs(u.mean()) < 0.15);
        CHECK(std::abs(u.squaredNorm() / 1000.0 - 1.0) < 0.15);
    }
}
