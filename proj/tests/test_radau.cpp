#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlw/radau.hpp"

using namespace rlw;

namespace {

// y' = -y + sin(t), y(0) = 1; exact y = (sin t - cos t)/2 + (3/2) e^{-t}
struct ScalarOde : DaeSystem {
    int size() const override { return 1; }
    int n_differential() const override { return 1; }
    void mass(double, Eigen::SparseMatrix<double>& M) const override {
        M.resize(1, 1);
        M.setIdentity();
    }
    void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& phi) const override {
        phi.resize(1);
        phi[0] = -y[0] + std::sin(t);
    }
    void jacobian(double, const Eigen::VectorXd&,
                  Eigen::SparseMatrix<double>& J) const override {
        J.resize(1, 1);
        J.coeffRef(0, 0) = -1.0;
        J.makeCompressed();
    }
    static double exact(double t) {
        return 0.5 * (std::sin(t) - std::cos(t)) + 1.5 * std::exp(-t);
    }
};

// stiff nonlinear test (Prothero-Robinson): y' = L(y - g(t)) + g'(t),
// g = cos t, L = -1e4; exact solution y = g for y(0) = g(0)
struct ProtheroRobinson : DaeSystem {
    double L = -1e4;
    int size() const override { return 1; }
    int n_differential() const override { return 1; }
    void mass(double, Eigen::SparseMatrix<double>& M) const override {
        M.resize(1, 1);
        M.setIdentity();
    }
    void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& phi) const override {
        phi.resize(1);
        phi[0] = L * (y[0] - std::cos(t)) - std::sin(t);
    }
    void jacobian(double, const Eigen::VectorXd&,
                  Eigen::SparseMatrix<double>& J) const override {
        J.resize(1, 1);
        J.coeffRef(0, 0) = L;
        J.makeCompressed();
    }
};

// index-1 DAE:  y0' = -y0 + z,  0 = z - cos(t); exact from the linear ODE
// y' = -y + cos t:  y = (cos t + sin t)/2 + C e^{-t}
struct SimpleDae : DaeSystem {
    int size() const override { return 2; }
    int n_differential() const override { return 1; }
    void mass(double, Eigen::SparseMatrix<double>& M) const override {
        M.resize(2, 2);
        M.coeffRef(0, 0) = 1.0;
        M.makeCompressed();
    }
    void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& phi) const override {
        phi.resize(2);
        phi[0] = -y[0] + y[1];
        phi[1] = y[1] - std::cos(t);
    }
    void jacobian(double, const Eigen::VectorXd&,
                  Eigen::SparseMatrix<double>& J) const override {
        J.resize(2, 2);
        J.coeffRef(0, 0) = -1.0;
        J.coeffRef(0, 1) = 1.0;
        J.coeffRef(1, 1) = 1.0;
        J.makeCompressed();
    }
    static double exact(double t) {
        return 0.5 * (std::cos(t) + std::sin(t)) + 0.5 * std::exp(-t);
    }
};

double fixed_step_error(const DaeSystem& sys, Eigen::VectorXd y0, double t_end,
                        int n_steps, double exact_end) {
    RadauOptions opts;
    opts.rtol = 1e-14;
    opts.atol = 1e-14;
    opts.newton_max_iter = 50;
    opts.newton_tol = 1e-5;
    const double dt = t_end / n_steps;
    double t = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        const auto r = radau_step(sys, t, dt, y0, opts);
        REQUIRE(r.converged);
        y0 = r.y_new;
        t += dt;
    }
    return std::abs(y0[0] - exact_end);
}

}  // namespace

TEST_CASE("tableau satisfies the collocation conditions") {
    const auto& tab = RadauTableau::iia5();

    // abscissae are the roots of 10 x^3 - 18 x^2 + 9 x - 1
    for (int i = 0; i < 3; ++i) {
        const double c = tab.c[i];
        CHECK(10.0 * c * c * c - 18.0 * c * c + 9.0 * c - 1.0 ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(tab.c[2] == doctest::Approx(1.0));

    // C(q): sum_j a_ij c_j^{k-1} = c_i^k / k for k = 1..3
    for (int k = 1; k <= 3; ++k)
        for (int i = 0; i < 3; ++i) {
            double s = 0.0;
            for (int j = 0; j < 3; ++j) s += tab.a(i, j) * std::pow(tab.c[j], k - 1);
            CHECK(s == doctest::Approx(std::pow(tab.c[i], k) / k).epsilon(1e-12));
        }

    // B(q): sum_j b_j c_j^{k-1} = 1/k for k = 1..5 (order 5 quadrature)
    for (int k = 1; k <= 5; ++k) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += tab.b[j] * std::pow(tab.c[j], k - 1);
        CHECK(s == doctest::Approx(1.0 / k).epsilon(1e-12));
    }

    // stiffly accurate: b is the last row of a
    for (int j = 0; j < 3; ++j) CHECK(tab.b[j] == doctest::Approx(tab.a(2, j)));

    CHECK((tab.a_inv * tab.a - Eigen::Matrix3d::Identity()).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));

    // gamma is the real eigenvalue of a^{-1}
    const Eigen::Vector3cd ev = tab.a_inv.eigenvalues();
    double real_ev = 0.0;
    for (int i = 0; i < 3; ++i)
        if (std::abs(ev[i].imag()) < 1e-10) real_ev = ev[i].real();
    CHECK(tab.gamma_real == doctest::Approx(real_ev).epsilon(1e-12));
}

TEST_CASE("fifth order convergence on a smooth problem") {
    ScalarOde ode;
    Eigen::VectorXd y0(1);
    y0[0] = 1.0;
    const double T = 2.0;
    const double exact = ScalarOde::exact(T);

    std::vector<double> errs;
    for (int n : {4, 8, 16, 32, 64})
        errs.push_back(fixed_step_error(ode, y0, T, n, exact));
    for (size_t i = 1; i < errs.size(); ++i) {
        const double order = std::log2(errs[i - 1] / errs[i]);
        CHECK(order >= 4.7);
    }
}

TEST_CASE("no order reduction catastrophe on a stiff problem") {
    ProtheroRobinson ode;
    Eigen::VectorXd y0(1);
    y0[0] = 1.0;
    const double T = 1.0;
    const double exact = std::cos(T);

    const double e16 = fixed_step_error(ode, y0, T, 16, exact);
    const double e32 = fixed_step_error(ode, y0, T, 32, exact);
    CHECK(e16 < 1e-8);
    CHECK(std::log2(e16 / e32) > 2.5);  // stage order bound
}

TEST_CASE("index-1 dae step and algebraic consistency") {
    SimpleDae dae;
    Eigen::VectorXd y0(2);
    y0[0] = 1.0;
    y0[1] = 1.0;
    const double T = 1.5;
    const double exact = SimpleDae::exact(T);

    std::vector<double> errs;
    for (int n : {4, 8, 16, 32})
        errs.push_back(fixed_step_error(dae, y0, T, n, exact));
    for (size_t i = 1; i < errs.size(); ++i)
        CHECK(std::log2(errs[i - 1] / errs[i]) >= 4.5);

    // algebraic component is satisfied exactly at the step end
    RadauOptions opts;
    opts.rtol = 1e-12;
    opts.atol = 1e-12;
    opts.newton_max_iter = 50;
    opts.newton_tol = 1e-5;
    const auto r = radau_step(dae, 0.0, 0.1, y0, opts);
    REQUIRE(r.converged);
    CHECK(r.y_new[1] == doctest::Approx(std::cos(0.1)).epsilon(1e-10));
}

TEST_CASE("error estimate tracks the true local error") {
    ScalarOde ode;
    Eigen::VectorXd y0(1);
    y0[0] = 1.0;
    RadauOptions opts;
    opts.rtol = 1e-6;
    opts.atol = 1e-8;

    const auto r = radau_step(ode, 0.0, 0.5, y0, opts);
    REQUIRE(r.converged);
    CHECK(r.error_norm > 1.0);  // too large a step for these tolerances

    const auto r2 = radau_step(ode, 0.0, 1e-2, y0, opts);
    REQUIRE(r2.converged);
    CHECK(r2.error_norm < 1.0);
    CHECK(r2.error_norm < r.error_norm);
}

TEST_CASE("step controller") {
    StepController ctl;
    ctl.dt = 1.0;

    // err = 64 with no history: dt * 0.9 * 64^{-1/6} = 0.45 dt
    auto d = control_step(ctl, 64.0);
    CHECK(!d.accept);
    CHECK(d.dt_next == doctest::Approx(0.45));

    auto a = control_step(ctl, 1e-12);
    CHECK(a.accept);
    CHECK(a.dt_next == doctest::Approx(5.0));  // capped growth

    ctl.err_prev = 0.5;
    auto b = control_step(ctl, 0.5);
    CHECK(b.accept);
    CHECK(b.dt_next == doctest::Approx(0.9 * std::pow(0.5, -1.0 / 6.0)));

    ctl.dt_max = 1.2;
    auto c = control_step(ctl, 1e-12);
    CHECK(c.dt_next == doctest::Approx(1.2));
}

TEST_CASE("one accepted macro step respects the interval end") {
    ScalarOde ode;
    Eigen::VectorXd y0(1);
    y0[0] = 1.0;
    StepController ctl;
    ctl.dt = 10.0;  // deliberately larger than the interval
    RadauOptions opts;

    const auto r = integrate_one_accepted_step(ode, 0.0, 0.25, y0, ctl, opts);
    CHECK(r.t_new <= 0.25 + 1e-14);
    CHECK(r.dt_taken <= 0.25 + 1e-14);
    CHECK(std::abs(r.y[0] - ScalarOde::exact(r.t_new)) < 1e-5);
}
