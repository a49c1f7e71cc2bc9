#ifndef RLW_PROBLEMS_HPP
#define RLW_PROBLEMS_HPP

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlw {

struct UnknownProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoExactSolution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coefficients and data of u_t + alpha u_x + beta u_y + gamma u^p u_x
// + delta u^p u_y - mu u_xxt - mu u_yyt = 0 on a rectangular domain,
// with Dirichlet data g and initial condition u0. p = 1 is the RLW
// equation, p = 2 the modified (MRLW) equation.
struct ProblemSpec {
    std::string name;
    int dim = 1;
    double alpha = 0.0, beta = 0.0, gamma = 0.0, delta = 0.0, mu = 1.0;
    int p = 1;
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = Eigen::Vector2d::Zero();
    double t_final = 0.0;
    std::function<double(const Eigen::Vector2d&)> initial;
    std::function<double(const Eigen::Vector2d&, double)> boundary;
    std::function<double(const Eigen::Vector2d&, double)> exact;  // optional

    bool has_exact() const { return static_cast<bool>(exact); }
};

// Built-in problems:
//   soliton1d, two_soliton1d, undular_bore1d, undular_bore1d_d5,
//   maxwellian_mrlw1d, maxwellian_mrlw1d_mu05, two_wave2d,
//   undular_bore2d, maxwellian_mrlw2d, maxwellian_mrlw2d_mu1
std::vector<std::string> catalog_names();
ProblemSpec catalog(const std::string& name);

double exact_solution(const ProblemSpec& spec, const Eigen::Vector2d& x, double t);

}  // namespace rlw

#endif
