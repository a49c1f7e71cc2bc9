#ifndef RLW_RADAU_HPP
#define RLW_RADAU_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <vector>

namespace rlw {

struct NewtonDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LinearSolveFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Index-1 DAE in the form  M(t) y' = phi(t, y)  with the differential
// components first; the mass matrix has zero rows for the algebraic
// equations. M(t) is known a priori (prescribed mesh motion), phi and its
// Jacobian are evaluated on demand.
class DaeSystem {
  public:
    virtual ~DaeSystem() = default;
    virtual int size() const = 0;
    virtual int n_differential() const = 0;
    virtual void mass(double t, Eigen::SparseMatrix<double>& M) const = 0;
    virtual void rhs(double t, const Eigen::VectorXd& y,
                     Eigen::VectorXd& phi) const = 0;
    virtual void jacobian(double t, const Eigen::VectorXd& y,
                          Eigen::SparseMatrix<double>& J) const = 0;
};

// 3-stage Radau IIA (order 5): c are the roots of the right Radau
// polynomial, the weights are the last row of a (stiffly accurate).
struct RadauTableau {
    Eigen::Vector3d c;
    Eigen::Matrix3d a;
    Eigen::Vector3d b;
    Eigen::Matrix3d a_inv;
    double gamma_real;      // real eigenvalue of a^{-1}
    Eigen::Vector3d err_d;  // embedded error weights on the stage increments

    static const RadauTableau& iia5();
};

struct RadauOptions {
    double rtol = 1e-7;
    double atol = 1e-9;
    int newton_max_iter = 7;
    double newton_tol = 0.03;  // in units of the step error norm
};

struct RadauStepResult {
    Eigen::VectorXd y_new;
    double error_norm = 0.0;  // accept iff <= 1
    int newton_iters = 0;
    bool converged = false;
};

// One step of the 3-stage Radau IIA method with simplified Newton stage
// solves. The error estimate is the stabilized embedded estimate, measured
// on the differential components only.
RadauStepResult radau_step(const DaeSystem& dae, double t, double dt,
                           const Eigen::VectorXd& y, const RadauOptions& opts);

// Predictive two-step controller: dt * safety * err^{-1/6} * (err_prev/err)^kappa.
struct StepController {
    double dt = 1e-2;
    double rtol = 1e-7;
    double atol = 1e-9;
    double safety = 0.9;
    double kappa = 0.08;
    double min_ratio = 0.2;
    double max_ratio = 5.0;
    double dt_min = 1e-12;
    double dt_max = 1e30;
    double err_prev = -1.0;  // < 0 until a step has been accepted
};

struct ControlDecision {
    bool accept = false;
    double dt_next = 0.0;
};

ControlDecision control_step(const StepController& ctl, double error_norm);

struct MacroStepResult {
    Eigen::VectorXd y;
    double t_new = 0.0;
    double dt_taken = 0.0;
    int rejections = 0;
};

// Advances exactly one accepted step starting at t = controller.dt, with the
// step never exceeding t_max - t. Updates the controller (next step size and
// error history) in place.
MacroStepResult integrate_one_accepted_step(const DaeSystem& dae, double t,
                                            double t_max, const Eigen::VectorXd& y,
                                            StepController& ctl,
                                            const RadauOptions& opts);

}  // namespace rlw

#endif
