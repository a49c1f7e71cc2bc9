#ifndef RLW_MESH_HPP
#define RLW_MESH_HPP

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlw {

struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonpositiveVolume : MeshError {
    using MeshError::MeshError;
};

struct MeshTangled : MeshError {
    using MeshError::MeshError;
};

// Boundary classification bits for vertices of a rectangular domain.
// A corner vertex carries two bits.
enum BoundarySide : int {
    BndLeft = 1,
    BndRight = 2,
    BndBottom = 4,
    BndTop = 8,
};

// Simplicial mesh: intervals in 1D, triangles in 2D. Vertex indices
// 0..n_interior-1 are interior; connectivity is immutable once built,
// only coordinates change during a simulation.
//
// 1D meshes store coordinates in the x component (y = 0) and use only
// the first two entries of each element tuple (the third is -1).
struct SimplicialMesh {
    int dim = 1;
    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> elements;
    int n_interior = 0;
    std::vector<int> boundary_tag;  // 0 = interior, else BoundarySide mask
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();  // domain bounding box
    Eigen::Vector2d hi = Eigen::Vector2d::Zero();

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_elements() const { return static_cast<int>(elements.size()); }
    int nodes_per_element() const { return dim + 1; }
    int n_boundary() const { return n_vertices() - n_interior; }
    bool is_boundary(int i) const { return boundary_tag[i] != 0; }
    double domain_volume() const;
};

// Uniform meshes used as initial meshes: equal intervals in 1D, squares
// split into two right triangles in 2D. Interior vertices come first.
SimplicialMesh uniform_interval(double a, double b, int n_elements);
SimplicialMesh uniform_triangles(double xlo, double ylo, double xhi, double yhi,
                                 int nx, int ny);

// Edge matrix E_K = [x_1-x_0, ..., x_d-x_0], columns in local vertex order.
// In 1D the unused diagonal entry is set to 1 so det(E_K) works in both
// dimensions.
Eigen::Matrix2d edge_matrix(const SimplicialMesh& mesh, int k);

// |K| = det(E_K)/d!. Throws NonpositiveVolume when det(E_K) <= 0.
double element_volume(const SimplicialMesh& mesh, int k);

// Elements containing each vertex, in increasing element order.
std::vector<std::vector<int>> vertex_element_patches(const SimplicialMesh& mesh);
std::vector<int> element_patch(const SimplicialMesh& mesh, int i);

// Vertex-to-vertex adjacency (1-ring neighbors), sorted.
std::vector<std::vector<int>> vertex_neighbors(const SimplicialMesh& mesh);

struct NonsingularityReport {
    double min_volume = 0.0;
    double min_height = 0.0;
    bool ok = false;
};

NonsingularityReport check_nonsingular(const SimplicialMesh& mesh);

// Mesh motion over one time interval: linear-in-time vertex positions,
// constant vertex velocities.
struct MovingMeshInterval {
    SimplicialMesh start;
    std::vector<Eigen::Vector2d> velocity;
    double t_start = 0.0;
    double t_end = 0.0;

    MovingMeshInterval() = default;
    MovingMeshInterval(const SimplicialMesh& mesh_start,
                       const SimplicialMesh& mesh_end, double t0, double t1);
    static MovingMeshInterval stationary(const SimplicialMesh& mesh, double t0,
                                         double t1);

    bool is_stationary() const;
    SimplicialMesh mesh_at(double t) const;
};

}  // namespace rlw

#endif
