#include "rlw/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rlw {

double SimplicialMesh::domain_volume() const {
    if (dim == 1) return hi.x() - lo.x();
    return (hi.x() - lo.x()) * (hi.y() - lo.y());
}

namespace {

// Renumber so that interior vertices come first; tags and elements follow.
void apply_interior_first(SimplicialMesh& mesh) {
    const int nv = mesh.n_vertices();
    std::vector<int> old_to_new(nv, -1);
    int next = 0;
    for (int i = 0; i < nv; ++i)
        if (mesh.boundary_tag[i] == 0) old_to_new[i] = next++;
    mesh.n_interior = next;
    for (int i = 0; i < nv; ++i)
        if (mesh.boundary_tag[i] != 0) old_to_new[i] = next++;

    std::vector<Eigen::Vector2d> verts(nv);
    std::vector<int> tags(nv);
    for (int i = 0; i < nv; ++i) {
        verts[old_to_new[i]] = mesh.vertices[i];
        tags[old_to_new[i]] = mesh.boundary_tag[i];
    }
    mesh.vertices = std::move(verts);
    mesh.boundary_tag = std::move(tags);
    for (auto& e : mesh.elements)
        for (int j = 0; j < mesh.nodes_per_element(); ++j) e[j] = old_to_new[e[j]];
}

}  // namespace

SimplicialMesh uniform_interval(double a, double b, int n_elements) {
    if (n_elements < 1 || b <= a) throw MeshError("uniform_interval: bad input");
    SimplicialMesh mesh;
    mesh.dim = 1;
    mesh.lo = {a, 0.0};
    mesh.hi = {b, 0.0};
    const int nv = n_elements + 1;
    mesh.vertices.resize(nv);
    mesh.boundary_tag.assign(nv, 0);
    const double h = (b - a) / n_elements;
    for (int i = 0; i < nv; ++i) mesh.vertices[i] = {a + i * h, 0.0};
    mesh.boundary_tag[0] = BndLeft;
    mesh.boundary_tag[nv - 1] = BndRight;
    mesh.elements.resize(n_elements);
    for (int k = 0; k < n_elements; ++k) mesh.elements[k] = {k, k + 1, -1};
    apply_interior_first(mesh);
    return mesh;
}

SimplicialMesh uniform_triangles(double xlo, double ylo, double xhi, double yhi,
                                 int nx, int ny) {
    if (nx < 1 || ny < 1 || xhi <= xlo || yhi <= ylo)
        throw MeshError("uniform_triangles: bad input");
    SimplicialMesh mesh;
    mesh.dim = 2;
    mesh.lo = {xlo, ylo};
    mesh.hi = {xhi, yhi};
    const int nvx = nx + 1, nvy = ny + 1;
    const double hx = (xhi - xlo) / nx, hy = (yhi - ylo) / ny;
    mesh.vertices.resize(nvx * nvy);
    mesh.boundary_tag.assign(nvx * nvy, 0);
    auto vid = [nvx](int i, int j) { return j * nvx + i; };
    for (int j = 0; j < nvy; ++j) {
        for (int i = 0; i < nvx; ++i) {
            mesh.vertices[vid(i, j)] = {xlo + i * hx, ylo + j * hy};
            int tag = 0;
            if (i == 0) tag |= BndLeft;
            if (i == nx) tag |= BndRight;
            if (j == 0) tag |= BndBottom;
            if (j == ny) tag |= BndTop;
            mesh.boundary_tag[vid(i, j)] = tag;
        }
    }
    mesh.elements.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            // counterclockwise split along the (i+1,j)-(i,j+1) diagonal
            mesh.elements.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
            mesh.elements.push_back(
                {vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    apply_interior_first(mesh);
    return mesh;
}

Eigen::Matrix2d edge_matrix(const SimplicialMesh& mesh, int k) {
    const auto& e = mesh.elements[k];
    Eigen::Matrix2d E = Eigen::Matrix2d::Identity();
    const Eigen::Vector2d& x0 = mesh.vertices[e[0]];
    if (mesh.dim == 1) {
        E(0, 0) = mesh.vertices[e[1]].x() - x0.x();
    } else {
        E.col(0) = mesh.vertices[e[1]] - x0;
        E.col(1) = mesh.vertices[e[2]] - x0;
    }
    return E;
}

double element_volume(const SimplicialMesh& mesh, int k) {
    const double det = edge_matrix(mesh, k).determinant();
    const double vol = mesh.dim == 1 ? det : det / 2.0;
    if (vol <= 0.0)
        throw NonpositiveVolume("element " + std::to_string(k) +
                                " has nonpositive volume " + std::to_string(vol));
    return vol;
}

std::vector<std::vector<int>> vertex_element_patches(const SimplicialMesh& mesh) {
    std::vector<std::vector<int>> patches(mesh.n_vertices());
    for (int k = 0; k < mesh.n_elements(); ++k)
        for (int j = 0; j < mesh.nodes_per_element(); ++j)
            patches[mesh.elements[k][j]].push_back(k);
    return patches;
}

std::vector<int> element_patch(const SimplicialMesh& mesh, int i) {
    std::vector<int> patch;
    for (int k = 0; k < mesh.n_elements(); ++k)
        for (int j = 0; j < mesh.nodes_per_element(); ++j)
            if (mesh.elements[k][j] == i) {
                patch.push_back(k);
                break;
            }
    return patch;
}

std::vector<std::vector<int>> vertex_neighbors(const SimplicialMesh& mesh) {
    std::vector<std::vector<int>> nbrs(mesh.n_vertices());
    const int npe = mesh.nodes_per_element();
    for (const auto& e : mesh.elements)
        for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b)
                if (a != b) nbrs[e[a]].push_back(e[b]);
    for (auto& v : nbrs) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return nbrs;
}

NonsingularityReport check_nonsingular(const SimplicialMesh& mesh) {
    NonsingularityReport rep;
    rep.min_volume = std::numeric_limits<double>::infinity();
    rep.min_height = std::numeric_limits<double>::infinity();
    rep.ok = true;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        const double det = edge_matrix(mesh, k).determinant();
        const double vol = mesh.dim == 1 ? det : det / 2.0;
        rep.min_volume = std::min(rep.min_volume, vol);
        if (vol <= 0.0) {
            rep.ok = false;
            rep.min_height = std::min(rep.min_height, 0.0);
            continue;
        }
        double height = vol;
        if (mesh.dim == 2) {
            const auto& e = mesh.elements[k];
            double max_edge = 0.0;
            for (int a = 0; a < 3; ++a) {
                const Eigen::Vector2d d =
                    mesh.vertices[e[(a + 1) % 3]] - mesh.vertices[e[a]];
                max_edge = std::max(max_edge, d.norm());
            }
            height = 2.0 * vol / max_edge;
        }
        rep.min_height = std::min(rep.min_height, height);
    }
    if (!(rep.min_volume > 0.0) || !(rep.min_height > 0.0)) rep.ok = false;
    return rep;
}

MovingMeshInterval::MovingMeshInterval(const SimplicialMesh& mesh_start,
                                       const SimplicialMesh& mesh_end, double t0,
                                       double t1)
    : start(mesh_start), t_start(t0), t_end(t1) {
    if (!(t1 > t0)) throw MeshError("MovingMeshInterval: t_end <= t_start");
    if (mesh_end.n_vertices() != mesh_start.n_vertices() ||
        mesh_end.n_elements() != mesh_start.n_elements())
        throw MeshError("MovingMeshInterval: meshes do not share connectivity");
    const double dt = t1 - t0;
    velocity.resize(start.n_vertices());
    for (int i = 0; i < start.n_vertices(); ++i)
        velocity[i] = (mesh_end.vertices[i] - mesh_start.vertices[i]) / dt;
}

MovingMeshInterval MovingMeshInterval::stationary(const SimplicialMesh& mesh,
                                                  double t0, double t1) {
    MovingMeshInterval iv;
    iv.start = mesh;
    iv.t_start = t0;
    iv.t_end = t1;
    iv.velocity.assign(mesh.n_vertices(), Eigen::Vector2d::Zero());
    return iv;
}

bool MovingMeshInterval::is_stationary() const {
    for (const auto& v : velocity)
        if (v.squaredNorm() != 0.0) return false;
    return true;
}

SimplicialMesh MovingMeshInterval::mesh_at(double t) const {
    SimplicialMesh mesh = start;
    const double s = t - t_start;
    if (s != 0.0)
        for (int i = 0; i < mesh.n_vertices(); ++i)
            mesh.vertices[i] += s * velocity[i];
    return mesh;
}

}  // namespace rlw
