#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nlac/fracderiv.hpp"

using namespace nlac;

namespace {

std::vector<double> sample(double t_final, std::size_t n_steps, double (*f)(double)) {
    std::vector<double> s(n_steps + 1);
    for (std::size_t n = 0; n <= n_steps; ++n)
        s[n] = f(t_final * static_cast<double>(n) / static_cast<double>(n_steps));
    return s;
}

double ident(double t) { return t; }
double square(double t) { return t * t; }

}  // namespace

TEST_CASE("half-derivative of t is exact at every step") {
    // d^alpha t = t^(1-alpha) / Gamma(2-alpha); the kernel integrates the
    // piecewise slope exactly, so this holds for any step size.
    const std::size_t N = 40;
    const double dt = 1.0 / static_cast<double>(N);
    const std::vector<double> s = sample(1.0, N, ident);

    const std::vector<double> d050 = caputo_l1(s, 0.5, dt);
    CHECK(d050[N] == doctest::Approx(1.1283791670955126).epsilon(1e-13));
    const std::vector<double> d025 = caputo_l1(s, 0.25, dt);
    CHECK(d025[N] == doctest::Approx(1.0880652521310172).epsilon(1e-13));
    const std::vector<double> d075 = caputo_l1(s, 0.75, dt);
    CHECK(d075[N] == doctest::Approx(1.103262651320837).epsilon(1e-13));

    // interior samples too: t_n^(1-alpha)/Gamma(2-alpha)
    for (std::size_t n = 1; n <= N; ++n) {
        const double t = dt * static_cast<double>(n);
        CHECK(d050[n] ==
              doctest::Approx(std::pow(t, 0.5) / std::tgamma(1.5)).epsilon(1e-12));
    }
}

TEST_CASE("derivative of a constant is exactly zero") {
    const std::vector<double> s(33, 4.25);
    for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
        const std::vector<double> d = caputo_l1(s, alpha, 0.01);
        for (double v : d) CHECK(v == 0.0);
    }
}

TEST_CASE("half-derivative of t^2 converges at rate 2 - alpha") {
    // d^alpha t^2 = 2 t^(2-alpha) / Gamma(3-alpha)
    const double exact[3] = {1.243503145292591, 1.50450555612735, 1.7652202421133398};
    const double alphas[3] = {0.25, 0.5, 0.75};
    for (int a = 0; a < 3; ++a) {
        double err_prev = 0.0;
        for (int lvl = 0; lvl < 4; ++lvl) {
            const std::size_t N = 16u << lvl;
            const double dt = 1.0 / static_cast<double>(N);
            const std::vector<double> d = caputo_l1(sample(1.0, N, square), alphas[a], dt);
            const double err = std::abs(d[N] - exact[a]);
            if (lvl > 0) {
                const double order = std::log2(err_prev / err);
                CHECK(order >= 2.0 - alphas[a] - 0.1);
            }
            err_prev = err;
        }
    }
}

TEST_CASE("order one is the plain backward difference") {
    const CaputoL1Kernel k(1.0, 0.25);
    CHECK(k.backward_difference_limit());
    CHECK(k.weight(0) == 1.0);
    CHECK(k.weight(1) == 0.0);
    CHECK(k.weight(7) == 0.0);
    CHECK(k.scale() == doctest::Approx(4.0).epsilon(1e-15));

    const std::vector<double> s = sample(1.0, 4, square);
    const std::vector<double> d = caputo_l1(s, 1.0, 0.25);
    for (std::size_t n = 1; n <= 4; ++n) {
        const double tn = 0.25 * static_cast<double>(n);
        CHECK(d[n] == doctest::Approx(tn + (tn - 0.25)).epsilon(1e-14));
    }
}

TEST_CASE("fractional integral is exact on constants") {
    // I^gamma 1 (t) = t^gamma / Gamma(1+gamma)
    const std::size_t N = 32;
    const double dt = 1.0 / static_cast<double>(N);
    const std::vector<double> ones(N + 1, 1.0);

    const std::vector<double> i050 = abel_integral(ones, 0.5, dt);
    CHECK(i050[N] == doctest::Approx(1.1283791670955126).epsilon(1e-13));
    const std::vector<double> i025 = abel_integral(ones, 0.25, dt);
    CHECK(i025[N] == doctest::Approx(1.103262651320837).epsilon(1e-13));
    const std::vector<double> i075 = abel_integral(ones, 0.75, dt);
    CHECK(i075[N] == doctest::Approx(1.0880652521310172).epsilon(1e-13));

    for (std::size_t n = 1; n <= N; ++n) {
        const double t = dt * static_cast<double>(n);
        CHECK(i050[n] ==
              doctest::Approx(std::pow(t, 0.5) / std::tgamma(1.5)).epsilon(1e-12));
    }
}

TEST_CASE("fractional integral of t approaches the analytic value") {
    // I^0.5 t (1) = 1 / Gamma(2.5); the right-endpoint rule is first order
    double err_prev = 0.0;
    for (int lvl = 0; lvl < 3; ++lvl) {
        const std::size_t N = 32u << lvl;
        const double dt = 1.0 / static_cast<double>(N);
        const std::vector<double> i = abel_integral(sample(1.0, N, ident), 0.5, dt);
        const double err = std::abs(i[N] - 0.752252778063675);
        CHECK(err < 2.0 * dt);
        if (lvl > 0) CHECK(err < 0.7 * err_prev);
        err_prev = err;
    }
}

TEST_CASE("abel cell weights are positive, decreasing, convex") {
    for (double gamma : {0.1, 0.5, 0.9}) {
        const AbelKernel k(gamma, 0.02);
        for (std::size_t j = 0; j < 64; ++j) {
            CHECK(k.weight(j) > 0.0);
            CHECK(k.weight(j + 1) < k.weight(j));
            CHECK(k.weight(j) - 2.0 * k.weight(j + 1) + k.weight(j + 2) > 0.0);
        }
    }
}

TEST_CASE("product inequality margin is nonnegative on random series") {
    std::mt19937 rng(20240811u);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double alpha = 0.1 + 0.8 * (trial % 9) / 8.0;
        std::vector<double> w(65);
        for (double& v : w) v = g(rng);
        const ChainRuleReport rep = check_chain_rule_inequality(w, alpha, 0.05);
        CHECK(rep.min_margin >= -1e-12 * rep.max_abs_sq);
    }
}

TEST_CASE("product inequality margin on a two-sample ramp is half the scale") {
    // w = {0, 1}: margin at n=1 is w1 * D w1 - 0.5 * D (w^2)_1 = scale/2
    const std::vector<double> w{0.0, 1.0};
    const double dt = 0.1;
    const ChainRuleReport rep = check_chain_rule_inequality(w, 0.5, dt);
    const double scale = std::pow(dt, -0.5) / std::tgamma(1.5);
    CHECK(rep.min_margin == doctest::Approx(0.5 * scale).epsilon(1e-13));
    CHECK(rep.argmin == 1);
    CHECK(rep.max_abs_sq == 1.0);
}

TEST_CASE("integral pairing is nonnegative on random series") {
    std::mt19937 rng(905117u);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double alpha = 0.15 + 0.7 * (trial % 7) / 6.0;
        std::vector<double> w(80);
        for (double& v : w) v = g(rng);
        const CoercivityReport rep = check_abel_coercivity(w, alpha, 0.025);
        CHECK(rep.value >= -1e-12 * rep.series_norm_sq);
        CHECK(rep.series_norm_sq > 0.0);
    }
}

TEST_CASE("kernel parameter validation") {
    CHECK_THROWS_AS(CaputoL1Kernel(0.0, 0.1), InvalidParameter);
    CHECK_THROWS_AS(CaputoL1Kernel(1.5, 0.1), InvalidParameter);
    CHECK_THROWS_AS(CaputoL1Kernel(0.5, 0.0), InvalidParameter);
    CHECK_THROWS_AS(AbelKernel(0.0, 0.1), InvalidParameter);
    CHECK_THROWS_AS(AbelKernel(1.0, 0.1), InvalidParameter);

    const CaputoL1Kernel k(0.5, 0.1);
    CHECK_THROWS_AS(k.evaluate(std::vector<double>{1.0, 2.0}, 5), InvalidParameter);
    CHECK_THROWS_AS(check_chain_rule_inequality({1.0, 2.0}, 1.0, 0.1), InvalidParameter);
    CHECK_THROWS_AS(check_abel_coercivity({1.0}, 0.5, 0.1), InvalidParameter);
}
