#ifndef RLW_MMPDE_HPP
#define RLW_MMPDE_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "rlw/mesh.hpp"
#include "rlw/metric.hpp"

namespace rlw {

struct PointLocationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MmpdeOptions {
    double tau = 1e-2;
    double substep_safety = 0.4;  // max vertex move per substep, in edge lengths
    int max_substeps = 8000;
    bool fixed_boundary = false;  // 2D: pin all boundary vertices instead of sliding
};

// Energy density G(J, det J) of one element in the mesh energy; J is the
// Jacobian of the affine map K -> K_c, M_K the element-averaged metric.
double energy_density_G(const Eigen::Matrix2d& J, double detJ,
                        const Eigen::Matrix2d& Mk, int dim);

void energy_gradients(const Eigen::Matrix2d& J, double detJ,
                      const Eigen::Matrix2d& Mk, int dim, Eigen::Matrix2d& dG_dJ,
                      double& dG_ddetJ);

// Local velocities of the computational vertices of one element; row i of
// the result is v_i^K (rows 0..dim used).
Eigen::Matrix<double, 3, 2> local_velocities(const Eigen::Matrix2d& Ek,
                                             const Eigen::Matrix2d& Ekc,
                                             const Eigen::Matrix2d& Mk, int dim);

// Mesh energy I_h(phys, comp): Riemann sum of |K| G_K over elements.
double mesh_energy(const SimplicialMesh& phys, const SimplicialMesh& comp,
                   const MetricField& metric);

// Nodal velocities d xi_i/dt = det(M(x_i))^{1/2}/tau * sum_{K in omega_i}
// |K| v_{i_K}^K, with boundary vertices constrained to the boundary
// (endpoints fixed in 1D; sliding with fixed corners in 2D).
std::vector<Eigen::Vector2d> assemble_mesh_velocities(const SimplicialMesh& phys,
                                                      const SimplicialMesh& comp,
                                                      const MetricField& metric,
                                                      const MmpdeOptions& opts);

// Barycentric point location with a walking search and exhaustive fallback.
// Returns the host element and fills the barycentric coordinates; points
// slightly outside are clamped (beyond `tol` this throws).
int locate_point(const SimplicialMesh& mesh, const Eigen::Vector2d& p, int guess,
                 Eigen::Vector3d& bary, double tol = 1e-8);

// One mesh-movement interval of the xi-formulation: integrate the
// computational vertices from the reference mesh over [t0, t1], then map
// the reference vertices back through the physical mesh by linear
// interpolation. Throws MeshTangled if the result is singular.
SimplicialMesh move_mesh(const SimplicialMesh& phys, const SimplicialMesh& ref_comp,
                         const MetricField& metric, const MmpdeOptions& opts,
                         double t0, double t1);

// max_K |K| det(M_K)^{1/2} divided by its mean; 1 for an equidistributed mesh.
double equidistribution_residual(const SimplicialMesh& mesh,
                                 const MetricField& metric);

// x-formulation with a frozen per-vertex metric, driven by finite
// differences of the mesh energy. Debug cross-check only; O(N^2) per substep.
SimplicialMesh move_mesh_x_debug(const SimplicialMesh& phys,
                                 const SimplicialMesh& ref_comp,
                                 const MetricField& metric,
                                 const MmpdeOptions& opts, double t0, double t1);

}  // namespace rlw

#endif
