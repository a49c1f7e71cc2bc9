#ifndef RLW_DRIVER_HPP
#define RLW_DRIVER_HPP

#include <optional>
#include <string>
#include <vector>

#include "rlw/fem.hpp"
#include "rlw/mesh.hpp"
#include "rlw/metric.hpp"
#include "rlw/mmpde.hpp"
#include "rlw/problems.hpp"
#include "rlw/radau.hpp"

namespace rlw {

struct RunConfig {
    std::string problem = "soliton1d";
    int n = 100;           // element count (1D) or total-element target (2D)
    bool moving = true;
    double t_final = -1.0;  // < 0: problem default
    double rtol = 1e-7;
    double atol = 1e-9;
    double dt0 = 1e-2;
    double dt_min = 1e-12;
    double dt_max = 1e30;
    double tau = -1.0;  // < 0: 1e-4 in 1D, 1e-2 in 2D
    double mmpde_substep_safety = 0.4;
    bool fixed_boundary_2d = false;
    int newton_max_iter = 7;
    double newton_tol = 0.03;
    long max_steps = 5000000;
    int initial_adapt_iters = 20;
    int snapshot_count = 0;  // extra solution snapshots between t0 and T
    std::string out_dir;     // empty: no file output
    MetricOptions metric;
};

// Everything that evolves between macro steps.
struct SimulationState {
    SimplicialMesh mesh;
    SimplicialMesh ref_comp;  // fixed reference computational mesh
    Eigen::VectorXd u, v;
    double t = 0.0;
    StepController ctl;
    long steps = 0;
    long rejections = 0;
};

struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    int rejections = 0;
    double E1 = 0.0, E2 = 0.0;
    double min_volume = 0.0;
    double min_height = 0.0;
    double equidistribution = 0.0;
    double l2 = 0.0, linf = 0.0;  // vs exact solution; 0 when unavailable
    double exact_l2 = 0.0;        // ||u_exact(t)|| on the current mesh quadrature
};

struct RunResult {
    RunConfig config;
    ProblemSpec problem;
    SimplicialMesh mesh;
    Eigen::VectorXd u, v;
    double t = 0.0;
    ConservedQuantities q0, qT;
    double max_dE1 = 0.0, max_dE2 = 0.0;  // sup_t |E(t) - E(0)|
    std::optional<SpatialErrorNorms> final_error;
    std::optional<SpatialErrorNorms> sup_error;  // sup over accepted steps
    // int_0^T ||e(t)|| dt by the trapezoidal rule over accepted steps;
    // the table metric of the convergence studies.
    std::optional<SpatialErrorNorms> time_integrated_error;
    // int_0^T ||u_exact(t)|| dt, the denominator of relative error measures
    double time_integrated_exact_l2 = 0.0;
    std::vector<StepRecord> history;
    long steps = 0;
    long rejections = 0;
    double min_volume_seen = 0.0;
    double min_height_seen = 0.0;
};

// 2D meshes are built as k x k squares, two triangles each, with k chosen
// so the element count is closest to the requested total.
int cells_per_side(int n_elements_target);
SimplicialMesh make_initial_mesh(const ProblemSpec& problem, int n);

double default_tau(const RunConfig& cfg, int dim);
MmpdeOptions mmpde_options(const RunConfig& cfg, int dim);

// Adapt the initial mesh to u0 by iterating metric -> move -> exact
// re-interpolation of u0, then attach nodal u and the auxiliary variable.
SimulationState prepare_initial_state(const ProblemSpec& problem,
                                      const RunConfig& cfg);

// One macro step: build the metric from the current solution, move the mesh
// over the planned step, then take one accepted implicit step of the coupled
// system on that interval. Fixed-mesh runs use a stationary interval and the
// reduced formulation.
void advance_one_step(SimulationState& state, const ProblemSpec& problem,
                      const RunConfig& cfg);

RunResult run_simulation(const RunConfig& cfg);
RunResult run_simulation(const RunConfig& cfg, const ProblemSpec& problem);

// Runs with an on-disk cache of the final state, keyed by the configuration.
RunResult run_with_cache(const RunConfig& cfg, const std::string& cache_file);

struct StudyRow {
    int n = 0;
    double l2 = 0.0;
    double linf = 0.0;
    double order_l2 = 0.0;  // vs the previous row; 0 for the first
    double dE1 = 0.0, dE2 = 0.0;
    long steps = 0;
};

// Refinement study against the exact solution at t_final. The order column
// uses the mesh-size ratio between consecutive rows.
std::vector<StudyRow> run_convergence_study(const RunConfig& base,
                                            const std::vector<int>& ns);

// Invariant-drift sweep (no exact solution needed).
std::vector<StudyRow> run_conservation_sweep(const RunConfig& base,
                                             const std::vector<int>& ns);

// Exact binary snapshot of a simulation, for bit-identical restarts.
void save_checkpoint(const std::string& path, const SimulationState& state);
SimulationState load_checkpoint(const std::string& path);

// Local maxima of a 1D nodal field above min_height, refined by a parabola
// through the peak vertex and its neighbors. Returns (x, u) pairs sorted by x.
std::vector<std::pair<double, double>> find_peaks(const SimplicialMesh& mesh,
                                                  const Eigen::VectorXd& u,
                                                  double min_height);

}  // namespace rlw

#endif
