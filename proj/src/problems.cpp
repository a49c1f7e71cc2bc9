#include "rlw/problems.hpp"

#include <cmath>

namespace rlw {

namespace {

double sech2(double z) {
    const double c = std::cosh(z);
    return 1.0 / (c * c);
}

// Single solitary wave of u_t + u_x + gamma u u_x - mu u_xxt = 0 with
// amplitude 3c/2 and speed v = c + 1. The sech^2 ansatz fixes the width:
// k^2 = (v - 1)/(4 mu v), i.e. k = (1/2) sqrt(c/(mu(c+1))).
ProblemSpec soliton1d() {
    ProblemSpec s;
    s.name = "soliton1d";
    s.dim = 1;
    s.alpha = 1.0;
    s.gamma = 2.0;
    s.mu = 1.0;
    s.lo = {-100.0, 0.0};
    s.hi = {150.0, 0.0};
    s.t_final = 20.0;
    const double c = 0.1, x0 = 40.0, mu = s.mu;
    const double v = c + 1.0;
    const double k = 0.5 * std::sqrt(c / (mu * (c + 1.0)));
    s.exact = [=](const Eigen::Vector2d& x, double t) {
        return 1.5 * c * sech2(k * (x.x() - v * t - x0));
    };
    s.initial = [ex = s.exact](const Eigen::Vector2d& x) { return ex(x, 0.0); };
    s.boundary = s.exact;
    return s;
}

ProblemSpec two_soliton1d() {
    ProblemSpec s;
    s.name = "two_soliton1d";
    s.dim = 1;
    s.alpha = 1.0;
    s.gamma = 1.0;
    s.mu = 1.0;
    s.lo = {-400.0, 0.0};
    s.hi = {500.0, 0.0};
    s.t_final = 400.0;
    const double gamma = s.gamma, mu = s.mu;
    const double cs[2] = {0.2, 0.1};
    const double xs[2] = {-177.0, -147.0};
    s.initial = [=](const Eigen::Vector2d& x) {
        double u = 0.0;
        // True solitary-wave widths (amplitude 3c_j, speed 1 + gamma c_j):
        // k_j^2 = gamma c_j / (4 mu (gamma c_j + 1)).
        for (int j = 0; j < 2; ++j) {
            const double kj =
                0.5 * std::sqrt(gamma * cs[j] / (mu * (gamma * cs[j] + 1.0)));
            u += 3.0 * cs[j] * sech2(kj * (x.x() - xs[j]));
        }
        return u;
    };
    s.boundary = [](const Eigen::Vector2d&, double) { return 0.0; };
    return s;
}

ProblemSpec undular_bore1d(double d) {
    ProblemSpec s;
    s.name = d == 2.0 ? "undular_bore1d" : "undular_bore1d_d5";
    s.dim = 1;
    s.alpha = 1.0;
    s.gamma = 1.5;
    s.mu = 1.0 / 6.0;
    s.lo = {-60.0, 0.0};
    s.hi = {300.0, 0.0};
    s.t_final = 250.0;
    const double u0 = 0.1, x0 = 0.0;
    s.initial = [=](const Eigen::Vector2d& x) {
        return 0.5 * u0 * (1.0 - std::tanh((x.x() - x0) / d));
    };
    s.boundary = [=](const Eigen::Vector2d& x, double) {
        return x.x() < 0.0 ? u0 : 0.0;
    };
    return s;
}

ProblemSpec maxwellian_mrlw1d(double mu) {
    ProblemSpec s;
    s.name = mu == 1.0 ? "maxwellian_mrlw1d" : "maxwellian_mrlw1d_mu05";
    s.dim = 1;
    s.alpha = 1.0;
    s.gamma = 6.0;
    s.mu = mu;
    s.p = 2;
    s.lo = {0.0, 0.0};
    s.hi = {100.0, 0.0};
    s.t_final = 10.0;
    s.initial = [](const Eigen::Vector2d& x) {
        const double z = x.x() - 40.0;
        return std::exp(-z * z);
    };
    s.boundary = [](const Eigen::Vector2d&, double) { return 0.0; };
    return s;
}

// Two oblique solitary waves travelling along x + y.
ProblemSpec two_wave2d() {
    ProblemSpec s;
    s.name = "two_wave2d";
    s.dim = 2;
    s.alpha = s.beta = s.gamma = s.delta = s.mu = 1.0;
    s.lo = {0.0, 0.0};
    s.hi = {120.0, 120.0};
    s.t_final = 15.0;
    const double cs[2] = {0.2, 0.4};
    const double xs[2] = {35.0, 55.0};  // x_j = y_j
    s.exact = [=](const Eigen::Vector2d& x, double t) {
        double u = 0.0;
        for (int j = 0; j < 2; ++j) {
            const double kj = 0.5 * std::sqrt(cs[j] / (2.0 * (1.0 + cs[j])));
            const double vj = 2.0 * (1.0 + cs[j]);
            u += 3.0 * cs[j] *
                 sech2(kj * (x.x() + x.y() - vj * t - xs[j] - xs[j]));
        }
        return u;
    };
    s.initial = [ex = s.exact](const Eigen::Vector2d& x) { return ex(x, 0.0); };
    s.boundary = s.exact;
    return s;
}

ProblemSpec undular_bore2d() {
    ProblemSpec s;
    s.name = "undular_bore2d";
    s.dim = 2;
    s.alpha = s.beta = 1.0;
    s.gamma = s.delta = 1.5;
    s.mu = 1.0 / 6.0;
    s.lo = {-60.0, -60.0};
    s.hi = {300.0, 300.0};
    s.t_final = 250.0;
    const double u0 = 0.1, d = 2.0;
    s.initial = [=](const Eigen::Vector2d& x) {
        return 0.5 * u0 *
               (1.0 - std::tanh(x.x() * x.x() + x.y() * x.y() - d * d));
    };
    s.boundary = [](const Eigen::Vector2d&, double) { return 0.0; };
    return s;
}

ProblemSpec maxwellian_mrlw2d(double mu) {
    ProblemSpec s;
    s.name = mu == 0.5 ? "maxwellian_mrlw2d" : "maxwellian_mrlw2d_mu1";
    s.dim = 2;
    s.alpha = s.beta = 1.0;
    s.gamma = s.delta = 6.0;
    s.mu = mu;
    s.p = 2;
    s.lo = {0.0, 0.0};
    s.hi = {100.0, 100.0};
    s.t_final = 10.0;
    s.initial = [](const Eigen::Vector2d& x) {
        const double zx = x.x() - 40.0, zy = x.y() - 40.0;
        return std::exp(-(zx * zx + zy * zy));
    };
    s.boundary = [](const Eigen::Vector2d&, double) { return 0.0; };
    return s;
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"soliton1d",          "two_soliton1d",
            "undular_bore1d",     "undular_bore1d_d5",
            "maxwellian_mrlw1d",  "maxwellian_mrlw1d_mu05",
            "two_wave2d",         "undular_bore2d",
            "maxwellian_mrlw2d",  "maxwellian_mrlw2d_mu1"};
}

ProblemSpec catalog(const std::string& name) {
    if (name == "soliton1d") return soliton1d();
    if (name == "two_soliton1d") return two_soliton1d();
    if (name == "undular_bore1d") return undular_bore1d(2.0);
    if (name == "undular_bore1d_d5") return undular_bore1d(5.0);
    if (name == "maxwellian_mrlw1d") return maxwellian_mrlw1d(1.0);
    if (name == "maxwellian_mrlw1d_mu05") return maxwellian_mrlw1d(0.5);
    if (name == "two_wave2d") return two_wave2d();
    if (name == "undular_bore2d") return undular_bore2d();
    if (name == "maxwellian_mrlw2d") return maxwellian_mrlw2d(0.5);
    if (name == "maxwellian_mrlw2d_mu1") return maxwellian_mrlw2d(1.0);
    throw UnknownProblem("unknown problem: " + name);
}

double exact_solution(const ProblemSpec& spec, const Eigen::Vector2d& x,
                      double t) {
    if (!spec.has_exact())
        throw NoExactSolution("problem " + spec.name + " has no exact solution");
    return spec.exact(x, t);
}

}  // namespace rlw
