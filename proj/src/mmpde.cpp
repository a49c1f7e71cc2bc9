#include "rlw/mmpde.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <unordered_map>

namespace rlw {

double energy_density_G(const Eigen::Matrix2d& J, double detJ,
                        const Eigen::Matrix2d& Mk, int dim) {
    const double detM = det_d(Mk, dim);
    const Eigen::Matrix2d Minv = inverse_d(Mk, dim);
    const double tr = trace_d(J * Minv * J.transpose(), dim);
    return (1.0 / 3.0) * std::sqrt(detM) * tr * tr +
           (4.0 / 3.0) * detJ * detJ / std::sqrt(detM);
}

void energy_gradients(const Eigen::Matrix2d& J, double detJ,
                      const Eigen::Matrix2d& Mk, int dim, Eigen::Matrix2d& dG_dJ,
                      double& dG_ddetJ) {
    const double detM = det_d(Mk, dim);
    const Eigen::Matrix2d Minv = inverse_d(Mk, dim);
    const double tr = trace_d(J * Minv * J.transpose(), dim);
    dG_dJ = (4.0 / 3.0) * std::sqrt(detM) * tr * (Minv * J.transpose());
    if (dim == 1) {
        dG_dJ(1, 1) = 0.0;
    }
    dG_ddetJ = (8.0 / 3.0) * detJ / std::sqrt(detM);
}

Eigen::Matrix<double, 3, 2> local_velocities(const Eigen::Matrix2d& Ek,
                                             const Eigen::Matrix2d& Ekc,
                                             const Eigen::Matrix2d& Mk, int dim) {
    const double detEk = det_d(Ek, dim);
    if (detEk <= 0.0)
        throw NonpositiveVolume("local_velocities: nonpositive det(E_K)");
    const Eigen::Matrix2d EkInv = inverse_d(Ek, dim);
    const Eigen::Matrix2d J = dim == 1 ? Eigen::Matrix2d(Ekc * EkInv)
                                       : Eigen::Matrix2d(Ekc * Ek.inverse());
    const double detJ = det_d(J, dim);

    Eigen::Matrix2d dG_dJ;
    double dG_ddetJ;
    energy_gradients(J, detJ, Mk, dim, dG_dJ, dG_ddetJ);

    const double detEkc = det_d(Ekc, dim);
    const Eigen::Matrix2d V =
        -EkInv * dG_dJ - dG_ddetJ * (detEkc / detEk) * inverse_d(Ekc, dim);

    Eigen::Matrix<double, 3, 2> out = Eigen::Matrix<double, 3, 2>::Zero();
    for (int i = 0; i < dim; ++i) out.row(i + 1) = V.row(i).head<2>();
    if (dim == 1) out(1, 1) = 0.0;
    out.row(0) = -(out.row(1) + out.row(2));
    return out;
}

double mesh_energy(const SimplicialMesh& phys, const SimplicialMesh& comp,
                   const MetricField& metric) {
    const int dim = phys.dim;
    double energy = 0.0;
    for (int k = 0; k < phys.n_elements(); ++k) {
        const Eigen::Matrix2d Ek = edge_matrix(phys, k);
        const Eigen::Matrix2d Ekc = edge_matrix(comp, k);
        const Eigen::Matrix2d J =
            dim == 1 ? Eigen::Matrix2d(Ekc * inverse_d(Ek, dim))
                     : Eigen::Matrix2d(Ekc * Ek.inverse());
        const Eigen::Matrix2d Mk = metric.element_average(phys, k);
        energy += element_volume(phys, k) *
                  energy_density_G(J, det_d(J, dim), Mk, dim);
    }
    return energy;
}

namespace {

// Zero or project velocities so that boundary vertices stay on the boundary.
void constrain_boundary_velocities(const SimplicialMesh& mesh,
                                   std::vector<Eigen::Vector2d>& vel,
                                   const MmpdeOptions& opts) {
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        const int tag = mesh.boundary_tag[i];
        if (tag == 0) continue;
        if (mesh.dim == 1 || opts.fixed_boundary) {
            vel[i].setZero();
            continue;
        }
        const bool on_x = tag & (BndLeft | BndRight);
        const bool on_y = tag & (BndBottom | BndTop);
        if (on_x && on_y) {
            vel[i].setZero();  // corner
        } else if (on_x) {
            vel[i].x() = 0.0;  // slide along a vertical edge
        } else {
            vel[i].y() = 0.0;
        }
    }
}

void snap_boundary(SimplicialMesh& mesh) {
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        const int tag = mesh.boundary_tag[i];
        if (tag == 0) continue;
        if (tag & BndLeft) mesh.vertices[i].x() = mesh.lo.x();
        if (tag & BndRight) mesh.vertices[i].x() = mesh.hi.x();
        if (mesh.dim == 2) {
            if (tag & BndBottom) mesh.vertices[i].y() = mesh.lo.y();
            if (tag & BndTop) mesh.vertices[i].y() = mesh.hi.y();
        }
    }
}

double min_incident_edge(const SimplicialMesh& mesh,
                         const std::vector<std::vector<int>>& nbrs, int i) {
    double m = std::numeric_limits<double>::infinity();
    for (int j : nbrs[i])
        m = std::min(m, (mesh.vertices[i] - mesh.vertices[j]).norm());
    return m;
}

}  // namespace

std::vector<Eigen::Vector2d> assemble_mesh_velocities(const SimplicialMesh& phys,
                                                      const SimplicialMesh& comp,
                                                      const MetricField& metric,
                                                      const MmpdeOptions& opts) {
    const int dim = phys.dim;
    const int npe = phys.nodes_per_element();
    std::vector<Eigen::Vector2d> vel(phys.n_vertices(), Eigen::Vector2d::Zero());
    for (int k = 0; k < phys.n_elements(); ++k) {
        const Eigen::Matrix2d Ek = edge_matrix(phys, k);
        const Eigen::Matrix2d Ekc = edge_matrix(comp, k);
        const Eigen::Matrix2d Mk = metric.element_average(phys, k);
        const double vol = element_volume(phys, k);
        const Eigen::Matrix<double, 3, 2> v = local_velocities(Ek, Ekc, Mk, dim);
        for (int j = 0; j < npe; ++j)
            vel[phys.elements[k][j]] += vol * v.row(j).transpose();
    }
    for (int i = 0; i < phys.n_vertices(); ++i)
        vel[i] *= metric.vertex_density(i) / opts.tau;
    constrain_boundary_velocities(phys, vel, opts);
    return vel;
}

// ---------------------------------------------------------------------------
// Point location

class PointLocator {
  public:
    explicit PointLocator(const SimplicialMesh& mesh) : mesh_(mesh) {
        if (mesh.dim == 1) {
            order_.resize(mesh.n_elements());
            for (int k = 0; k < mesh.n_elements(); ++k) order_[k] = k;
            std::sort(order_.begin(), order_.end(), [&](int a, int b) {
                return left(a) < left(b);
            });
        } else {
            build_neighbors();
        }
    }

    // Returns the host element; bary holds (possibly negative) barycentric
    // coordinates, min_bary the smallest one before clamping.
    int find(const Eigen::Vector2d& p, int guess, Eigen::Vector3d& bary,
             double& min_bary) const {
        if (mesh_.dim == 1) return find_1d(p.x(), bary, min_bary);
        return find_2d(p, guess, bary, min_bary);
    }

  private:
    double left(int k) const {
        const auto& e = mesh_.elements[k];
        return std::min(mesh_.vertices[e[0]].x(), mesh_.vertices[e[1]].x());
    }

    int find_1d(double x, Eigen::Vector3d& bary, double& min_bary) const {
        auto it = std::upper_bound(order_.begin(), order_.end(), x,
                                   [&](double v, int k) { return v < left(k); });
        int k = order_[it == order_.begin() ? 0 : (it - order_.begin() - 1)];
        const auto& e = mesh_.elements[k];
        double a = mesh_.vertices[e[0]].x(), b = mesh_.vertices[e[1]].x();
        double lam = (x - a) / (b - a);
        bary = {1.0 - lam, lam, 0.0};
        min_bary = std::min(bary(0), bary(1));
        return k;
    }

    void build_neighbors() {
        // opposite-vertex ordering: neighbor_[k][j] shares the edge opposite
        // local vertex j of element k
        neighbor_.assign(mesh_.n_elements(), {-1, -1, -1});
        std::unordered_map<long long, std::pair<int, int>> edge_owner;
        const long long nv = mesh_.n_vertices();
        for (int k = 0; k < mesh_.n_elements(); ++k) {
            const auto& e = mesh_.elements[k];
            for (int j = 0; j < 3; ++j) {
                int a = e[(j + 1) % 3], b = e[(j + 2) % 3];
                if (a > b) std::swap(a, b);
                const long long key = a * nv + b;
                auto it = edge_owner.find(key);
                if (it == edge_owner.end()) {
                    edge_owner[key] = {k, j};
                } else {
                    neighbor_[k][j] = it->second.first;
                    neighbor_[it->second.first][it->second.second] = k;
                }
            }
        }
    }

    void barycentric(int k, const Eigen::Vector2d& p, Eigen::Vector3d& bary) const {
        const auto& e = mesh_.elements[k];
        const Eigen::Matrix2d E = edge_matrix(mesh_, k);
        const Eigen::Vector2d lam = E.inverse() * (p - mesh_.vertices[e[0]]);
        bary = {1.0 - lam.sum(), lam(0), lam(1)};
    }

    int find_2d(const Eigen::Vector2d& p, int guess, Eigen::Vector3d& bary,
                double& min_bary) const {
        int k = (guess >= 0 && guess < mesh_.n_elements()) ? guess : 0;
        for (int step = 0; step < mesh_.n_elements(); ++step) {
            barycentric(k, p, bary);
            int worst;
            min_bary = bary.minCoeff(&worst);
            if (min_bary >= -1e-12) return k;
            const int next = neighbor_[k][worst];
            if (next < 0) break;  // walked out of the mesh
            k = next;
        }
        // exhaustive fallback: element with the largest minimal coordinate
        int best = -1;
        double best_min = -std::numeric_limits<double>::infinity();
        Eigen::Vector3d b;
        for (int kk = 0; kk < mesh_.n_elements(); ++kk) {
            barycentric(kk, p, b);
            const double m = b.minCoeff();
            if (m > best_min) {
                best_min = m;
                best = kk;
                bary = b;
            }
        }
        min_bary = best_min;
        return best;
    }

    const SimplicialMesh& mesh_;
    std::vector<int> order_;                        // 1D
    std::vector<std::array<int, 3>> neighbor_;      // 2D
};

int locate_point(const SimplicialMesh& mesh, const Eigen::Vector2d& p, int guess,
                 Eigen::Vector3d& bary, double tol) {
    PointLocator loc(mesh);
    double min_bary;
    const int k = loc.find(p, guess, bary, min_bary);
    if (min_bary < -tol)
        throw PointLocationFailed("point outside mesh, min barycentric " +
                                  std::to_string(min_bary));
    return k;
}

// ---------------------------------------------------------------------------
// Mesh movement

namespace {

// Explicit Euler on the computational vertices with a displacement cap and
// an energy backtracking guard.
void integrate_comp_mesh(const SimplicialMesh& phys, SimplicialMesh& comp,
                         const MetricField& metric, const MmpdeOptions& opts,
                         double duration) {
    const auto nbrs = vertex_neighbors(comp);
    double t = 0.0;
    double energy = mesh_energy(phys, comp, metric);
    const double length_scale = (comp.hi - comp.lo).norm();

    for (int sub = 0; sub < opts.max_substeps && t < duration; ++sub) {
        const auto vel = assemble_mesh_velocities(phys, comp, metric, opts);

        double step = duration - t;
        double vmax = 0.0;
        for (int i = 0; i < comp.n_vertices(); ++i) {
            const double speed = vel[i].norm();
            vmax = std::max(vmax, speed);
            if (speed > 0.0) {
                const double cap =
                    opts.substep_safety * min_incident_edge(comp, nbrs, i) / speed;
                step = std::min(step, cap);
            }
        }
        if (vmax * (duration - t) < 1e-14 * length_scale) break;  // stationary

        const std::vector<Eigen::Vector2d> saved = comp.vertices;
        bool accepted = false;
        for (int halving = 0; halving < 25; ++halving) {
            for (int i = 0; i < comp.n_vertices(); ++i)
                comp.vertices[i] = saved[i] + step * vel[i];
            snap_boundary(comp);
            const double trial = mesh_energy(phys, comp, metric);
            if (trial <= energy * (1.0 + 1e-12)) {
                energy = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            comp.vertices = saved;
            break;  // at a discrete minimum
        }
        t += step;
    }
}

}  // namespace

SimplicialMesh move_mesh(const SimplicialMesh& phys, const SimplicialMesh& ref_comp,
                         const MetricField& metric, const MmpdeOptions& opts,
                         double t0, double t1) {
    if (!(t1 > t0)) throw MeshError("move_mesh: empty time interval");
    SimplicialMesh comp = ref_comp;
    integrate_comp_mesh(phys, comp, metric, opts, t1 - t0);

    if (!check_nonsingular(comp).ok)
        throw MeshTangled("computational mesh tangled during MMPDE integration");

    // Phi_h maps comp (= T_c^{n+1}) onto the fixed physical mesh; evaluate it
    // at the reference vertices by barycentric interpolation.
    SimplicialMesh out = phys;
    PointLocator locator(comp);
    const auto patches = vertex_element_patches(comp);
    int warned = 0;
    int guess = 0;
    for (int i = 0; i < phys.n_vertices(); ++i) {
        if (!patches[i].empty()) guess = patches[i].front();
        Eigen::Vector3d bary;
        double min_bary;
        const int k = locator.find(ref_comp.vertices[i], guess, bary, min_bary);
        guess = k;
        if (min_bary < -1e-8 && warned++ == 0)
            std::cerr << "move_mesh: reference vertex " << i
                      << " outside computational mesh (min bary " << min_bary
                      << "), clamping\n";
        if (min_bary < 0.0) {
            bary = bary.cwiseMax(0.0);
            bary /= bary.sum();
        }
        Eigen::Vector2d x = Eigen::Vector2d::Zero();
        for (int j = 0; j < phys.nodes_per_element(); ++j)
            x += bary(j) * phys.vertices[comp.elements[k][j]];
        out.vertices[i] = x;
    }
    snap_boundary(out);

    if (!check_nonsingular(out).ok)
        throw MeshTangled("interpolated physical mesh is singular");
    return out;
}

double equidistribution_residual(const SimplicialMesh& mesh,
                                 const MetricField& metric) {
    double maxq = 0.0, sum = 0.0;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        const double q = element_volume(mesh, k) *
                         std::sqrt(det_d(metric.element_average(mesh, k), mesh.dim));
        maxq = std::max(maxq, q);
        sum += q;
    }
    return maxq / (sum / mesh.n_elements());
}

SimplicialMesh move_mesh_x_debug(const SimplicialMesh& phys,
                                 const SimplicialMesh& ref_comp,
                                 const MetricField& metric,
                                 const MmpdeOptions& opts, double t0, double t1) {
    SimplicialMesh mesh = phys;
    const auto nbrs = vertex_neighbors(mesh);
    const double duration = t1 - t0;
    double t = 0.0;

    auto gradient = [&](std::vector<Eigen::Vector2d>& g) {
        const double eps = 1e-6;
        for (int i = 0; i < mesh.n_vertices(); ++i) {
            g[i].setZero();
            for (int c = 0; c < mesh.dim; ++c) {
                const double saved = mesh.vertices[i](c);
                mesh.vertices[i](c) = saved + eps;
                const double ep = mesh_energy(mesh, ref_comp, metric);
                mesh.vertices[i](c) = saved - eps;
                const double em = mesh_energy(mesh, ref_comp, metric);
                mesh.vertices[i](c) = saved;
                g[i](c) = (ep - em) / (2.0 * eps);
            }
        }
    };

    std::vector<Eigen::Vector2d> vel(mesh.n_vertices());
    for (int sub = 0; sub < opts.max_substeps && t < duration; ++sub) {
        gradient(vel);
        for (int i = 0; i < mesh.n_vertices(); ++i)
            vel[i] *= -metric.vertex_density(i) / opts.tau;
        constrain_boundary_velocities(mesh, vel, opts);

        double step = duration - t;
        double vmax = 0.0;
        for (int i = 0; i < mesh.n_vertices(); ++i) {
            const double speed = vel[i].norm();
            vmax = std::max(vmax, speed);
            if (speed > 0.0)
                step = std::min(step, opts.substep_safety *
                                          min_incident_edge(mesh, nbrs, i) / speed);
        }
        if (vmax * (duration - t) < 1e-14) break;
        for (int i = 0; i < mesh.n_vertices(); ++i) mesh.vertices[i] += step * vel[i];
        snap_boundary(mesh);
        t += step;
    }
    if (!check_nonsingular(mesh).ok)
        throw MeshTangled("x-formulation produced a singular mesh");
    return mesh;
}

}  // namespace rlw
