#include "rlw/radau.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>

namespace rlw {

const RadauTableau& RadauTableau::iia5() {
    static const RadauTableau tab = [] {
        RadauTableau t;
        const double s6 = std::sqrt(6.0);
        t.c << (4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0;
        t.a << (88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0,
            (-2.0 + 3.0 * s6) / 225.0, (296.0 + 169.0 * s6) / 1800.0,
            (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0,
            (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
        t.b = t.a.row(2);
        t.a_inv = t.a.inverse();
        Eigen::EigenSolver<Eigen::Matrix3d> es(t.a_inv);
        double gamma = 0.0;
        for (int i = 0; i < 3; ++i)
            if (std::abs(es.eigenvalues()(i).imag()) < 1e-12)
                gamma = es.eigenvalues()(i).real();
        t.gamma_real = gamma;
        t.err_d << -(13.0 + 7.0 * s6) / 3.0, (-13.0 + 7.0 * s6) / 3.0, -1.0 / 3.0;
        return t;
    }();
    return tab;
}

namespace {

double scaled_rms(const Eigen::VectorXd& e, const Eigen::VectorXd& scale, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = e(i) / scale(i);
        s += w * w;
    }
    return std::sqrt(s / n);
}

}  // namespace

RadauStepResult radau_step(const DaeSystem& dae, double t, double dt,
                           const Eigen::VectorXd& y, const RadauOptions& opts) {
    const RadauTableau& tab = RadauTableau::iia5();
    const int n = dae.size();
    const int nd = dae.n_differential();

    Eigen::VectorXd scale(n);
    for (int i = 0; i < n; ++i)
        scale(i) = opts.atol + opts.rtol * std::abs(y(i));

    std::array<double, 3> ts;
    std::array<Eigen::SparseMatrix<double>, 3> M;
    std::array<Eigen::SparseMatrix<double>, 3> J;
    for (int i = 0; i < 3; ++i) {
        ts[i] = t + tab.c(i) * dt;
        dae.mass(ts[i], M[i]);
        dae.jacobian(ts[i], y, J[i]);
    }

    // Stacked simplified-Newton matrix: block (i,j) = (a^{-1})_ij/dt M_i - d_ij J_i.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(3 * (3 * M[0].nonZeros() + J[0].nonZeros()));
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double w = tab.a_inv(i, j) / dt;
            for (int col = 0; col < n; ++col)
                for (Eigen::SparseMatrix<double>::InnerIterator it(M[i], col); it;
                     ++it)
                    trips.emplace_back(i * n + it.row(), j * n + col, w * it.value());
        }
        for (int col = 0; col < n; ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(J[i], col); it; ++it)
                trips.emplace_back(i * n + it.row(), i * n + col, -it.value());
    }
    Eigen::SparseMatrix<double> big(3 * n, 3 * n);
    big.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(big);
    if (lu.info() != Eigen::Success)
        throw LinearSolveFailure("Radau stage matrix factorization failed");

    RadauStepResult result;
    std::array<Eigen::VectorXd, 3> Z;
    for (auto& z : Z) z = Eigen::VectorXd::Zero(n);

    Eigen::VectorXd R(3 * n), phi(n), ytmp(n);
    double nu_prev = -1.0;
    bool converged = false;
    for (int iter = 0; iter < opts.newton_max_iter; ++iter) {
        for (int i = 0; i < 3; ++i) {
            ytmp = y + Z[i];
            dae.rhs(ts[i], ytmp, phi);
            Eigen::VectorXd r = -phi;
            for (int j = 0; j < 3; ++j)
                r += (tab.a_inv(i, j) / dt) * (M[i] * Z[j]);
            R.segment(i * n, n) = r;
        }
        const Eigen::VectorXd dz = lu.solve(-R);
        if (lu.info() != Eigen::Success)
            throw LinearSolveFailure("Radau stage solve failed");
        for (int i = 0; i < 3; ++i) Z[i] += dz.segment(i * n, n);

        double nu = 0.0;
        for (int i = 0; i < 3; ++i)
            nu = std::max(nu, scaled_rms(dz.segment(i * n, n), scale, n));
        result.newton_iters = iter + 1;

        double theta = 0.0;
        if (nu_prev >= 0.0) {
            theta = nu / std::max(nu_prev, 1e-300);
            if (theta >= 1.0) break;  // diverging
        }
        const double eta = theta > 0.0 ? theta / (1.0 - theta) : 1.0;
        if (eta * nu < opts.newton_tol || nu < 0.01 * opts.newton_tol) {
            converged = true;
            break;
        }
        nu_prev = nu;
    }
    result.converged = converged;
    if (!converged) return result;

    result.y_new = y + Z[2];

    // Stabilized embedded error estimate on the differential components.
    Eigen::SparseMatrix<double> M0, J0;
    dae.mass(t, M0);
    dae.jacobian(t, y, J0);
    Eigen::SparseMatrix<double> E1 = (tab.gamma_real / dt) * M0 - J0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu1(E1);
    if (lu1.info() != Eigen::Success)
        throw LinearSolveFailure("error-estimate matrix factorization failed");
    dae.rhs(t, y, phi);
    Eigen::VectorXd zsum = (tab.err_d(0) / dt) * Z[0] +
                           (tab.err_d(1) / dt) * Z[1] +
                           (tab.err_d(2) / dt) * Z[2];
    Eigen::VectorXd est_rhs = phi + M0 * zsum;
    const Eigen::VectorXd est = lu1.solve(est_rhs);
    result.error_norm = std::max(scaled_rms(est, scale, nd), 1e-10);
    return result;
}

ControlDecision control_step(const StepController& ctl, double error_norm) {
    const double err = std::max(error_norm, 1e-10);
    double ratio = ctl.safety * std::pow(err, -1.0 / 6.0);
    if (ctl.err_prev > 0.0)
        ratio *= std::pow(ctl.err_prev / err, ctl.kappa);
    ratio = std::clamp(ratio, ctl.min_ratio, ctl.max_ratio);
    ControlDecision d;
    d.dt_next = std::clamp(ctl.dt * ratio, ctl.dt_min, ctl.dt_max);
    d.accept = err <= 1.0;
    return d;
}

MacroStepResult integrate_one_accepted_step(const DaeSystem& dae, double t,
                                            double t_max, const Eigen::VectorXd& y,
                                            StepController& ctl,
                                            const RadauOptions& opts) {
    MacroStepResult out;
    double dt = std::min(ctl.dt, t_max - t);
    if (!(dt > 0.0)) throw StepTooSmall("no time left in the interval");

    RadauOptions ropts = opts;
    ropts.rtol = ctl.rtol;
    ropts.atol = ctl.atol;

    while (true) {
        if (dt < ctl.dt_min)
            throw StepTooSmall("step size fell below dt_min at t = " +
                               std::to_string(t));
        RadauStepResult step = radau_step(dae, t, dt, y, ropts);
        if (!step.converged) {
            ++out.rejections;
            dt *= 0.5;
            continue;
        }
        StepController probe = ctl;
        probe.dt = dt;
        const ControlDecision d = control_step(probe, step.error_norm);
        if (!d.accept) {
            ++out.rejections;
            dt = d.dt_next;
            continue;
        }
        ctl.err_prev = std::max(step.error_norm, 1e-10);
        ctl.dt = d.dt_next;
        out.y = std::move(step.y_new);
        out.t_new = t + dt;
        out.dt_taken = dt;
        return out;
    }
}

}  // namespace rlw
