#ifndef RLW_FEM_HPP
#define RLW_FEM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rlw/mesh.hpp"
#include "rlw/problems.hpp"
#include "rlw/radau.hpp"

namespace rlw {

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Nodal unknowns of the coupled system: v is differential, u algebraic.
struct SolutionState {
    double t = 0.0;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
};

using SparseMat = Eigen::SparseMatrix<double>;

// M_ij = int phi_i phi_j, exact for linear elements.
SparseMat assemble_mass(const SimplicialMesh& mesh);

// A_ij = mu int grad phi_i . grad phi_j.
SparseMat assemble_stiffness(const SimplicialMesh& mesh, double mu);

// f_i = int (alpha u_x + beta u_y + gamma u^p u_x + delta u^p u_y
//            - grad v . Xdot) phi_i, Gaussian quadrature per element.
// The mesh-motion term advects the auxiliary variable v (the time
// derivative being rewritten is that of v_h).
Eigen::VectorXd assemble_convection(const SimplicialMesh& mesh,
                                    const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& v,
                                    const std::vector<Eigen::Vector2d>& mesh_velocity,
                                    const ProblemSpec& problem);

// d f_i / d u_j (the mesh-motion term does not depend on u).
SparseMat assemble_convection_jacobian_u(const SimplicialMesh& mesh,
                                         const Eigen::VectorXd& u,
                                         const ProblemSpec& problem);

// d f_i / d v_j = -int (grad phi_j . Xdot) phi_i.
SparseMat assemble_convection_jacobian_v(const SimplicialMesh& mesh,
                                         const std::vector<Eigen::Vector2d>& mesh_velocity,
                                         const ProblemSpec& problem);

// Residual of the coupled system at time t on the moving mesh:
// rows [0, N_v)          M dv/dt + f
// rows [N_v, N_v+N_vi)   [M_II M_IB](v - u) - [A_II A_IB] u
// rows [N_v+N_vi, 2N_v)  u_B - g_B
Eigen::VectorXd dae_residual(const MovingMeshInterval& interval,
                             const SolutionState& state,
                             const Eigen::VectorXd& dv_dt,
                             const ProblemSpec& problem);

// u_I = (M_II + A_II)^{-1} (M_II v_I + M_IB v_B - (M_IB + A_IB) g_B).
Eigen::VectorXd recover_u(const SparseMat& M, const SparseMat& A,
                          const Eigen::VectorXd& v, const Eigen::VectorXd& g_B,
                          int n_interior);

// Forward map used for initialization: full-system solve of
// M v = (M + A_full) u, consistent with the interior weak equation.
Eigen::VectorXd initial_v(const SimplicialMesh& mesh, const Eigen::VectorXd& u,
                          double mu);

// Reduced fixed-mesh right-hand side (M_II + A_II) du_I/dt = -f_I.
Eigen::VectorXd fixed_mesh_rhs(const SimplicialMesh& mesh,
                               const SolutionState& state,
                               const ProblemSpec& problem);

struct ConservedQuantities {
    double E1 = 0.0;  // int u
    double E2 = 0.0;  // int (u^2 + mu |grad u|^2)
};

ConservedQuantities conserved_quantities(const SimplicialMesh& mesh,
                                         const Eigen::VectorXd& u, double mu);

struct SpatialErrorNorms {
    double l2 = 0.0;
    double linf = 0.0;
};

SpatialErrorNorms spatial_error_norms(
    const SimplicialMesh& mesh, const Eigen::VectorXd& u,
    const std::function<double(const Eigen::Vector2d&, double)>& exact, double t);

// Interpolate nodal values of a scalar function.
Eigen::VectorXd interpolate(const SimplicialMesh& mesh,
                            const std::function<double(const Eigen::Vector2d&)>& f);

// The coupled system as an index-1 DAE over y = [v; u] on one mesh-motion
// interval. Matrices are assembled at the prescribed stage-time meshes.
class RlwDae : public DaeSystem {
  public:
    RlwDae(const MovingMeshInterval& interval, const ProblemSpec& problem);

    int size() const override;
    int n_differential() const override;
    void mass(double t, SparseMat& M) const override;
    void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& phi) const override;
    void jacobian(double t, const Eigen::VectorXd& y, SparseMat& J) const override;

  private:
    struct Assembled {
        double t;
        SimplicialMesh mesh;
        SparseMat M, A;
        Eigen::VectorXd g_B;
    };
    const Assembled& at(double t) const;

    const MovingMeshInterval& interval_;
    const ProblemSpec& problem_;
    int nv_, ni_;
    mutable std::vector<Assembled> cache_;
};

// Fixed-mesh reduction as a plain ODE in u_I, for cross-validation.
class FixedMeshOde : public DaeSystem {
  public:
    FixedMeshOde(const SimplicialMesh& mesh, const ProblemSpec& problem);

    int size() const override { return ni_; }
    int n_differential() const override { return ni_; }
    void mass(double t, SparseMat& M) const override;
    void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& phi) const override;
    void jacobian(double t, const Eigen::VectorXd& y, SparseMat& J) const override;

  private:
    const SimplicialMesh& mesh_;
    const ProblemSpec& problem_;
    int nv_, ni_;
    SparseMat mass_ode_;  // M_II + A_II
};

}  // namespace rlw

#endif
