#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rlw/problems.hpp"

using namespace rlw;

namespace {

// fourth-order central differences
template <class F>
double d1(const F& f, double h) {
    return (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h);
}
template <class F>
double d2(const F& f, double h) {
    return (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) /
           (12.0 * h * h);
}

// residual of u_t + alpha u_x + beta u_y + gamma u^p u_x + delta u^p u_y
//             - mu u_xxt - mu u_yyt  at (x, t)
double pde_residual(const ProblemSpec& s, const Eigen::Vector2d& x, double t,
                    double hx, double ht) {
    auto u = [&](double dx, double dy, double dt) {
        return s.exact(Eigen::Vector2d(x.x() + dx * hx, x.y() + dy * hx),
                       t + dt * ht);
    };
    const double u0 = u(0, 0, 0);
    const double ut = d1([&](int i) { return u(0, 0, i); }, ht);
    const double ux = d1([&](int i) { return u(i, 0, 0); }, hx);
    const double uxxt =
        d1([&](int j) { return d2([&](int i) { return u(i, 0, j); }, hx); }, ht);
    double r = ut + s.alpha * ux + s.gamma * std::pow(u0, s.p) * ux - s.mu * uxxt;
    if (s.dim == 2) {
        const double uy = d1([&](int i) { return u(0, i, 0); }, hx);
        const double uyyt = d1(
            [&](int j) { return d2([&](int i) { return u(0, i, j); }, hx); }, ht);
        r += s.beta * uy + s.delta * std::pow(u0, s.p) * uy - s.mu * uyyt;
    }
    return r;
}

// Richardson-extrapolated residual: kills the O(h^4) truncation term.
double pde_residual_rx(const ProblemSpec& s, const Eigen::Vector2d& x, double t,
                       double h) {
    const double r1 = pde_residual(s, x, t, h, h);
    const double r2 = pde_residual(s, x, t, 0.5 * h, 0.5 * h);
    return r2 + (r2 - r1) / 15.0;
}

}  // namespace

TEST_CASE("catalog is complete and consistent") {
    for (const auto& name : catalog_names()) {
        const auto s = catalog(name);
        CHECK(s.name == name);
        CHECK(s.t_final > 0.0);
        CHECK((s.hi - s.lo).x() > 0.0);
        CHECK(bool(s.initial));
        CHECK(bool(s.boundary));
        if (s.has_exact()) {
            // initial data and boundary data agree with the exact solution
            std::mt19937 rng(1);
            std::uniform_real_distribution<double> dx(s.lo.x(), s.hi.x());
            std::uniform_real_distribution<double> dy(s.lo.y(), s.hi.y());
            for (int trial = 0; trial < 20; ++trial) {
                Eigen::Vector2d x(dx(rng), s.dim == 2 ? dy(rng) : 0.0);
                CHECK(s.initial(x) == doctest::Approx(s.exact(x, 0.0)));
                CHECK(s.boundary(x, 3.7) == doctest::Approx(s.exact(x, 3.7)));
            }
        }
    }
    CHECK_THROWS_AS(catalog("no_such_problem"), UnknownProblem);
}

TEST_CASE("single solitary wave satisfies the equation") {
    const auto s = catalog("soliton1d");
    REQUIRE(s.has_exact());
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dx(20.0, 80.0);  // around the core
    std::uniform_real_distribution<double> dt(0.0, 20.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Vector2d x(dx(rng), 0.0);
        const double t = dt(rng);
        CHECK(std::abs(pde_residual_rx(s, x, t, 0.1)) < 1e-8);
    }
    // amplitude 3c/2 at the crest, speed 1 + c
    const double c = 0.1;
    CHECK(s.exact({40.0, 0.0}, 0.0) == doctest::Approx(1.5 * c));
    CHECK(s.exact({40.0 + (1.0 + c) * 5.0, 0.0}, 5.0) == doctest::Approx(1.5 * c));
}

TEST_CASE("each component of the two-wave initial data is a solitary wave") {
    const auto s = catalog("two_soliton1d");
    // an isolated component: amplitude 3c, width k = sqrt(gc/(4 mu (gc+1))),
    // speed 1 + gc; check it against the equation directly
    for (double c : {0.2, 0.1}) {
        ProblemSpec one = s;
        const double k =
            0.5 * std::sqrt(s.gamma * c / (s.mu * (s.gamma * c + 1.0)));
        const double v = 1.0 + s.gamma * c;
        one.exact = [=](const Eigen::Vector2d& x, double t) {
            const double z = std::cosh(k * (x.x() - v * t));
            return 3.0 * c / (z * z);
        };
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> dx(-30.0, 30.0);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Vector2d x(dx(rng), 0.0);
            CHECK(std::abs(pde_residual_rx(one, x, 1.0, 0.1)) < 1e-8);
        }
    }
    // superposed initial profile: crests at the prescribed centers
    CHECK(s.initial({-177.0, 0.0}) == doctest::Approx(0.6).epsilon(1e-3));
    CHECK(s.initial({-147.0, 0.0}) == doctest::Approx(0.3).epsilon(2e-2));
}

TEST_CASE("oblique two-wave solution satisfies the 2d equation") {
    const auto s = catalog("two_wave2d");
    REQUIRE(s.has_exact());

    // each oblique wave alone is an exact solution
    for (double c : {0.2, 0.4}) {
        ProblemSpec one = s;
        const double k = 0.5 * std::sqrt(c / (2.0 * (1.0 + c)));
        const double v = 2.0 * (1.0 + c);
        one.exact = [=](const Eigen::Vector2d& x, double t) {
            const double z = std::cosh(k * (x.x() + x.y() - v * t - 70.0));
            return 3.0 * c / (z * z);
        };
        std::mt19937 rng(29);
        std::uniform_real_distribution<double> d(20.0, 50.0);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Vector2d x(d(rng), d(rng));
            CHECK(std::abs(pde_residual_rx(one, x, 1.0, 0.06)) < 1e-8);
        }
    }

    // the catalog entry superposes the two waves; the nonlinear cross terms
    // are exponentially small at the initial separation
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> d(10.0, 60.0);
    std::uniform_real_distribution<double> dt(0.0, 10.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Vector2d x(d(rng), d(rng));
        CHECK(std::abs(pde_residual_rx(s, x, dt(rng), 0.1)) < 1e-4);
    }
    // wave j moves along x + y = const with speed 2(1 + c_j); its crest
    // starts on x + y = 2 x_j
    const double c0 = 0.2;
    CHECK(s.exact({35.0, 35.0}, 0.0) == doctest::Approx(3.0 * c0).epsilon(1e-3));
}

TEST_CASE("bore and pulse initial data") {
    const auto bore = catalog("undular_bore1d");
    CHECK(bore.initial({-60.0, 0.0}) == doctest::Approx(0.1));
    CHECK(bore.initial({300.0, 0.0}) == doctest::Approx(0.0));
    CHECK(bore.initial({0.0, 0.0}) == doctest::Approx(0.05));
    CHECK(bore.boundary({-60.0, 0.0}, 100.0) == doctest::Approx(0.1));
    CHECK(bore.boundary({300.0, 0.0}, 100.0) == doctest::Approx(0.0));
    CHECK(bore.mu == doctest::Approx(1.0 / 6.0));

    const auto d5 = catalog("undular_bore1d_d5");
    CHECK(d5.initial({2.5, 0.0}) ==
          doctest::Approx(0.05 * (1.0 - std::tanh(0.5))));

    const auto pulse = catalog("maxwellian_mrlw1d");
    CHECK(pulse.p == 2);
    CHECK(pulse.initial({40.0, 0.0}) == doctest::Approx(1.0));
    CHECK(pulse.initial({41.0, 0.0}) == doctest::Approx(std::exp(-1.0)));
    CHECK(catalog("maxwellian_mrlw1d_mu05").mu == doctest::Approx(0.5));

    const auto pulse2 = catalog("maxwellian_mrlw2d");
    CHECK(pulse2.p == 2);
    CHECK(pulse2.gamma == doctest::Approx(6.0));
    CHECK(pulse2.delta == doctest::Approx(6.0));
    CHECK(pulse2.initial({40.0, 41.0}) == doctest::Approx(std::exp(-1.0)));

    const auto bore2 = catalog("undular_bore2d");
    CHECK(bore2.initial({0.0, 0.0}) ==
          doctest::Approx(0.05 * (1.0 - std::tanh(-4.0))));
}

TEST_CASE("exact_solution accessor") {
    const auto s = catalog("soliton1d");
    CHECK(exact_solution(s, {40.0, 0.0}, 0.0) == doctest::Approx(0.15));
    const auto b = catalog("undular_bore1d");
    CHECK_THROWS_AS(exact_solution(b, {0.0, 0.0}, 0.0), NoExactSolution);
}
