#ifndef RLW_METRIC_HPP
#define RLW_METRIC_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "rlw/mesh.hpp"

namespace rlw {

struct SingularFit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FlatField : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension-aware helpers: 1D "matrices" live in the (0,0) entry of a
// Matrix2d (other entries zero); the helpers read only that entry in 1D.
double det_d(const Eigen::Matrix2d& m, int dim);
double trace_d(const Eigen::Matrix2d& m, int dim);
Eigen::Matrix2d inverse_d(const Eigen::Matrix2d& m, int dim);

struct MetricOptions {
    // Exponent in the regularization equation: 2/(d+4) keeps the equation
    // consistent with det(M)^{1/2}; the alternative 2/(d+2) family
    // (2/3 in 2D) is available for comparison.
    bool det_m_consistent_exponent = true;
    // Eigenvalue floor added to |H| as a fraction of its local trace. For
    // ridge-like data the smaller Hessian eigenvalue vanishes identically,
    // which collapses det(|H|) and drives the regularization parameter to
    // zero; the floor keeps the determinant equation well posed and caps the
    // metric anisotropy near 1/hessian_floor.
    double hessian_floor = 1e-2;
};

// Per-vertex SPD metric tensor field.
struct MetricField {
    int dim = 1;
    double alpha_h = 0.0;
    std::vector<Eigen::Matrix2d> vertex;

    Eigen::Matrix2d element_average(const SimplicialMesh& mesh, int k) const;
    double vertex_density(int i) const;  // det(M(x_i))^{1/2}

    static MetricField identity(const SimplicialMesh& mesh);
};

// Least-squares quadratic fit over the vertex and its neighbors; the
// second ring is added when the first ring underdetermines the fit.
std::vector<Eigen::Matrix2d> recover_hessian(const SimplicialMesh& mesh,
                                             const Eigen::VectorXd& nodal_values);

// |H| = Q diag(|lambda_i|) Q^T.
Eigen::Matrix2d absolute_hessian(const Eigen::Matrix2d& H, int dim);

// Root of sum |K| det(a I + |H_K|)^q = 2 sum |K| det(|H_K|)^q by
// bisection to relative tolerance 1e-10. Throws FlatField when the
// right-hand side vanishes.
double solve_alpha(const SimplicialMesh& mesh,
                   const std::vector<Eigen::Matrix2d>& abs_hessian,
                   const MetricOptions& opts = {});

MetricField build_metric(const SimplicialMesh& mesh, const Eigen::VectorXd& nodal_u,
                         const MetricOptions& opts = {});

}  // namespace rlw

#endif
