#include "rlw/fem.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>

namespace rlw {

namespace {

struct QuadPoint {
    Eigen::Vector3d bary;
    double weight;  // relative to |K|
};

// 3-point Gauss on the unit interval, exact to degree 5.
const std::vector<QuadPoint>& interval_rule() {
    static const std::vector<QuadPoint> rule = [] {
        const double s = 0.5 * std::sqrt(3.0 / 5.0);
        std::vector<QuadPoint> r;
        for (auto [x, w] : {std::pair{0.5 - s, 5.0 / 18.0},
                            std::pair{0.5, 8.0 / 18.0},
                            std::pair{0.5 + s, 5.0 / 18.0}})
            r.push_back({{1.0 - x, x, 0.0}, w});
        return r;
    }();
    return rule;
}

// 5-point Gauss on the unit interval, for error norms.
const std::vector<QuadPoint>& interval_rule_fine() {
    static const std::vector<QuadPoint> rule = [] {
        const double n1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double n2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double w0 = 128.0 / 225.0;
        const double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
        const double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
        std::vector<QuadPoint> r;
        for (auto [x, w] : {std::pair{-n2, w2}, std::pair{-n1, w1},
                            std::pair{0.0, w0}, std::pair{n1, w1},
                            std::pair{n2, w2}}) {
            const double xs = 0.5 * (x + 1.0);
            r.push_back({{1.0 - xs, xs, 0.0}, 0.5 * w});
        }
        return r;
    }();
    return rule;
}

// 4-point rule on the triangle, exact to degree 3.
const std::vector<QuadPoint>& triangle_rule() {
    static const std::vector<QuadPoint> rule = {
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, -27.0 / 48.0},
        {{0.6, 0.2, 0.2}, 25.0 / 48.0},
        {{0.2, 0.6, 0.2}, 25.0 / 48.0},
        {{0.2, 0.2, 0.6}, 25.0 / 48.0},
    };
    return rule;
}

// 7-point rule on the triangle, exact to degree 5, for error norms.
const std::vector<QuadPoint>& triangle_rule_fine() {
    static const std::vector<QuadPoint> rule = [] {
        std::vector<QuadPoint> r;
        r.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.225});
        const double a1 = 0.059715871789770, b1 = 0.470142064105115;
        const double w1 = 0.132394152788506;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456;
        const double w2 = 0.125939180544827;
        for (auto [a, b, w] : {std::tuple{a1, b1, w1}, std::tuple{a2, b2, w2}}) {
            r.push_back({{a, b, b}, w});
            r.push_back({{b, a, b}, w});
            r.push_back({{b, b, a}, w});
        }
        return r;
    }();
    return rule;
}

const std::vector<QuadPoint>& rule_for(const SimplicialMesh& mesh, bool fine) {
    if (mesh.dim == 1) return fine ? interval_rule_fine() : interval_rule();
    return fine ? triangle_rule_fine() : triangle_rule();
}

// Volume and constant gradients of the linear basis on one element.
void element_geometry(const SimplicialMesh& mesh, int k, double& vol,
                      std::array<Eigen::Vector2d, 3>& grad) {
    vol = element_volume(mesh, k);
    if (mesh.dim == 1) {
        const double h = edge_matrix(mesh, k)(0, 0);
        grad[0] = {-1.0 / h, 0.0};
        grad[1] = {1.0 / h, 0.0};
        grad[2].setZero();
    } else {
        const Eigen::Matrix2d Einv_t = edge_matrix(mesh, k).inverse().transpose();
        grad[1] = Einv_t.col(0);
        grad[2] = Einv_t.col(1);
        grad[0] = -(grad[1] + grad[2]);
    }
}

}  // namespace

SparseMat assemble_mass(const SimplicialMesh& mesh) {
    std::vector<Eigen::Triplet<double>> trips;
    const int npe = mesh.nodes_per_element();
    trips.reserve(mesh.n_elements() * npe * npe);
    for (int k = 0; k < mesh.n_elements(); ++k) {
        const double vol = element_volume(mesh, k);
        const auto& e = mesh.elements[k];
        const double off = mesh.dim == 1 ? vol / 6.0 : vol / 12.0;
        const double diag = 2.0 * off;
        for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b)
                trips.emplace_back(e[a], e[b], a == b ? diag : off);
    }
    SparseMat M(mesh.n_vertices(), mesh.n_vertices());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

SparseMat assemble_stiffness(const SimplicialMesh& mesh, double mu) {
    std::vector<Eigen::Triplet<double>> trips;
    const int npe = mesh.nodes_per_element();
    trips.reserve(mesh.n_elements() * npe * npe);
    double vol;
    std::array<Eigen::Vector2d, 3> grad;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        element_geometry(mesh, k, vol, grad);
        const auto& e = mesh.elements[k];
        for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b)
                trips.emplace_back(e[a], e[b], mu * vol * grad[a].dot(grad[b]));
    }
    SparseMat A(mesh.n_vertices(), mesh.n_vertices());
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

Eigen::VectorXd assemble_convection(const SimplicialMesh& mesh,
                                    const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& v,
                                    const std::vector<Eigen::Vector2d>& mesh_velocity,
                                    const ProblemSpec& problem) {
    if (u.size() != mesh.n_vertices())
        throw DimensionMismatch("assemble_convection: u size mismatch");
    const bool moving = !mesh_velocity.empty();
    if (moving && v.size() != mesh.n_vertices())
        throw DimensionMismatch("assemble_convection: v size mismatch");
    const int npe = mesh.nodes_per_element();
    const auto& rule = rule_for(mesh, false);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.n_vertices());

    double vol;
    std::array<Eigen::Vector2d, 3> grad;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        element_geometry(mesh, k, vol, grad);
        const auto& e = mesh.elements[k];
        Eigen::Vector2d gu = Eigen::Vector2d::Zero();
        Eigen::Vector2d gv = Eigen::Vector2d::Zero();
        for (int j = 0; j < npe; ++j) {
            gu += u(e[j]) * grad[j];
            if (moving) gv += v(e[j]) * grad[j];
        }
        for (const auto& q : rule) {
            double uq = 0.0;
            Eigen::Vector2d xdot = Eigen::Vector2d::Zero();
            for (int j = 0; j < npe; ++j) {
                uq += q.bary(j) * u(e[j]);
                if (moving) xdot += q.bary(j) * mesh_velocity[e[j]];
            }
            const double up = problem.p == 1 ? uq : uq * uq;
            const double s = problem.alpha * gu.x() + problem.beta * gu.y() +
                             up * (problem.gamma * gu.x() + problem.delta * gu.y()) -
                             gv.dot(xdot);
            const double w = q.weight * vol * s;
            for (int i = 0; i < npe; ++i) f(e[i]) += w * q.bary(i);
        }
    }
    return f;
}

SparseMat assemble_convection_jacobian_u(const SimplicialMesh& mesh,
                                         const Eigen::VectorXd& u,
                                         const ProblemSpec& problem) {
    const int npe = mesh.nodes_per_element();
    const auto& rule = rule_for(mesh, false);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.n_elements() * npe * npe * rule.size());

    double vol;
    std::array<Eigen::Vector2d, 3> grad;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        element_geometry(mesh, k, vol, grad);
        const auto& e = mesh.elements[k];
        Eigen::Vector2d gu = Eigen::Vector2d::Zero();
        for (int j = 0; j < npe; ++j) gu += u(e[j]) * grad[j];
        for (const auto& q : rule) {
            double uq = 0.0;
            for (int j = 0; j < npe; ++j) uq += q.bary(j) * u(e[j]);
            const double up = problem.p == 1 ? uq : uq * uq;
            const double dup = problem.p == 1 ? 1.0 : 2.0 * uq;
            for (int j = 0; j < npe; ++j) {
                const double ds =
                    problem.alpha * grad[j].x() + problem.beta * grad[j].y() +
                    dup * q.bary(j) * (problem.gamma * gu.x() + problem.delta * gu.y()) +
                    up * (problem.gamma * grad[j].x() + problem.delta * grad[j].y());
                const double w = q.weight * vol * ds;
                for (int i = 0; i < npe; ++i)
                    trips.emplace_back(e[i], e[j], w * q.bary(i));
            }
        }
    }
    SparseMat J(mesh.n_vertices(), mesh.n_vertices());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

SparseMat assemble_convection_jacobian_v(const SimplicialMesh& mesh,
                                         const std::vector<Eigen::Vector2d>& mesh_velocity,
                                         const ProblemSpec&) {
    SparseMat J(mesh.n_vertices(), mesh.n_vertices());
    if (mesh_velocity.empty()) return J;
    const int npe = mesh.nodes_per_element();
    const auto& rule = rule_for(mesh, false);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.n_elements() * npe * npe * rule.size());

    double vol;
    std::array<Eigen::Vector2d, 3> grad;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        element_geometry(mesh, k, vol, grad);
        const auto& e = mesh.elements[k];
        for (const auto& q : rule) {
            Eigen::Vector2d xdot = Eigen::Vector2d::Zero();
            for (int j = 0; j < npe; ++j)
                xdot += q.bary(j) * mesh_velocity[e[j]];
            for (int j = 0; j < npe; ++j) {
                const double w = -q.weight * vol * grad[j].dot(xdot);
                for (int i = 0; i < npe; ++i)
                    trips.emplace_back(e[i], e[j], w * q.bary(i));
            }
        }
    }
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

namespace {

SparseMat sparse_block(const SparseMat& S, int r0, int nr, int c0, int nc) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < S.outerSize(); ++col)
        for (SparseMat::InnerIterator it(S, col); it; ++it)
            if (it.row() >= r0 && it.row() < r0 + nr && col >= c0 && col < c0 + nc)
                trips.emplace_back(it.row() - r0, col - c0, it.value());
    SparseMat B(nr, nc);
    B.setFromTriplets(trips.begin(), trips.end());
    return B;
}

Eigen::VectorXd boundary_values(const SimplicialMesh& mesh,
                                const ProblemSpec& problem, double t) {
    Eigen::VectorXd g(mesh.n_boundary());
    for (int b = mesh.n_interior; b < mesh.n_vertices(); ++b)
        g(b - mesh.n_interior) = problem.boundary(mesh.vertices[b], t);
    return g;
}

}  // namespace

Eigen::VectorXd dae_residual(const MovingMeshInterval& interval,
                             const SolutionState& state,
                             const Eigen::VectorXd& dv_dt,
                             const ProblemSpec& problem) {
    const SimplicialMesh mesh = interval.mesh_at(state.t);
    const int nv = mesh.n_vertices();
    const int ni = mesh.n_interior;
    if (state.u.size() != nv || state.v.size() != nv || dv_dt.size() != nv)
        throw DimensionMismatch("dae_residual: vector size mismatch");

    const SparseMat M = assemble_mass(mesh);
    const SparseMat A = assemble_stiffness(mesh, problem.mu);
    const Eigen::VectorXd f = assemble_convection(mesh, state.u, state.v,
                                                  interval.velocity, problem);

    Eigen::VectorXd res(2 * nv);
    res.head(nv) = M * dv_dt + f;
    res.segment(nv, ni) = (M * (state.v - state.u) - A * state.u).head(ni);
    const Eigen::VectorXd g = boundary_values(mesh, problem, state.t);
    res.tail(nv - ni) = state.u.tail(nv - ni) - g;
    return res;
}

Eigen::VectorXd recover_u(const SparseMat& M, const SparseMat& A,
                          const Eigen::VectorXd& v, const Eigen::VectorXd& g_B,
                          int n_interior) {
    const int nv = static_cast<int>(M.rows());
    const int ni = n_interior;
    const int nb = nv - ni;
    const SparseMat M_II = sparse_block(M, 0, ni, 0, ni);
    const SparseMat M_IB = sparse_block(M, 0, ni, ni, nb);
    const SparseMat A_II = sparse_block(A, 0, ni, 0, ni);
    const SparseMat A_IB = sparse_block(A, 0, ni, ni, nb);

    const SparseMat lhs = M_II + A_II;
    Eigen::SimplicialLDLT<SparseMat> solver(lhs);
    if (solver.info() != Eigen::Success)
        throw LinearSolveFailure("recover_u: factorization failed");
    const Eigen::VectorXd rhs =
        M_II * v.head(ni) + M_IB * v.tail(nb) - (M_IB + A_IB) * g_B;
    const Eigen::VectorXd u_I = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
        throw LinearSolveFailure("recover_u: solve failed");
    return u_I;
}

Eigen::VectorXd initial_v(const SimplicialMesh& mesh, const Eigen::VectorXd& u,
                          double mu) {
    const SparseMat M = assemble_mass(mesh);
    const SparseMat A = assemble_stiffness(mesh, mu);
    Eigen::SimplicialLDLT<SparseMat> solver(M);
    if (solver.info() != Eigen::Success)
        throw LinearSolveFailure("initial_v: mass factorization failed");
    return solver.solve(M * u + A * u);
}

Eigen::VectorXd fixed_mesh_rhs(const SimplicialMesh& mesh,
                               const SolutionState& state,
                               const ProblemSpec& problem) {
    const int ni = mesh.n_interior;
    const SparseMat M = assemble_mass(mesh);
    const SparseMat A = assemble_stiffness(mesh, problem.mu);
    const Eigen::VectorXd f =
        assemble_convection(mesh, state.u, state.u, {}, problem);
    const SparseMat lhs =
        sparse_block(M, 0, ni, 0, ni) + sparse_block(A, 0, ni, 0, ni);
    Eigen::SimplicialLDLT<SparseMat> solver(lhs);
    if (solver.info() != Eigen::Success)
        throw LinearSolveFailure("fixed_mesh_rhs: factorization failed");
    return solver.solve(Eigen::VectorXd(-f.head(ni)));
}

ConservedQuantities conserved_quantities(const SimplicialMesh& mesh,
                                         const Eigen::VectorXd& u, double mu) {
    ConservedQuantities q;
    const int npe = mesh.nodes_per_element();
    double vol;
    std::array<Eigen::Vector2d, 3> grad;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        element_geometry(mesh, k, vol, grad);
        const auto& e = mesh.elements[k];
        double mean = 0.0;
        Eigen::Vector2d gu = Eigen::Vector2d::Zero();
        for (int j = 0; j < npe; ++j) {
            mean += u(e[j]);
            gu += u(e[j]) * grad[j];
        }
        mean /= npe;
        q.E1 += vol * mean;
        // u^T M_loc u with the exact local mass matrix
        const double off = mesh.dim == 1 ? vol / 6.0 : vol / 12.0;
        double uu = 0.0;
        for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b)
                uu += u(e[a]) * u(e[b]) * (a == b ? 2.0 * off : off);
        q.E2 += uu + mu * vol * gu.squaredNorm();
    }
    return q;
}

SpatialErrorNorms spatial_error_norms(
    const SimplicialMesh& mesh, const Eigen::VectorXd& u,
    const std::function<double(const Eigen::Vector2d&, double)>& exact, double t) {
    SpatialErrorNorms out;
    const int npe = mesh.nodes_per_element();
    const auto& rule = rule_for(mesh, true);
    for (int k = 0; k < mesh.n_elements(); ++k) {
        const double vol = element_volume(mesh, k);
        const auto& e = mesh.elements[k];
        for (const auto& q : rule) {
            double uh = 0.0;
            Eigen::Vector2d x = Eigen::Vector2d::Zero();
            for (int j = 0; j < npe; ++j) {
                uh += q.bary(j) * u(e[j]);
                x += q.bary(j) * mesh.vertices[e[j]];
            }
            const double err = uh - exact(x, t);
            out.l2 += q.weight * vol * err * err;
            out.linf = std::max(out.linf, std::abs(err));
        }
    }
    for (int i = 0; i < mesh.n_vertices(); ++i)
        out.linf = std::max(out.linf, std::abs(u(i) - exact(mesh.vertices[i], t)));
    out.l2 = std::sqrt(out.l2);
    return out;
}

Eigen::VectorXd interpolate(const SimplicialMesh& mesh,
                            const std::function<double(const Eigen::Vector2d&)>& f) {
    Eigen::VectorXd u(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) u(i) = f(mesh.vertices[i]);
    return u;
}

// ---------------------------------------------------------------------------
// RlwDae

RlwDae::RlwDae(const MovingMeshInterval& interval, const ProblemSpec& problem)
    : interval_(interval),
      problem_(problem),
      nv_(interval.start.n_vertices()),
      ni_(interval.start.n_interior) {}

int RlwDae::size() const { return 2 * nv_; }

int RlwDae::n_differential() const { return nv_; }

const RlwDae::Assembled& RlwDae::at(double t) const {
    for (const auto& a : cache_)
        if (a.t == t) return a;
    if (cache_.size() > 16) cache_.clear();
    Assembled a;
    a.t = t;
    a.mesh = interval_.mesh_at(t);
    a.M = assemble_mass(a.mesh);
    a.A = assemble_stiffness(a.mesh, problem_.mu);
    a.g_B = boundary_values(a.mesh, problem_, t);
    cache_.push_back(std::move(a));
    return cache_.back();
}

void RlwDae::mass(double t, SparseMat& M) const {
    const Assembled& a = at(t);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(a.M.nonZeros());
    for (int col = 0; col < a.M.outerSize(); ++col)
        for (SparseMat::InnerIterator it(a.M, col); it; ++it)
            trips.emplace_back(it.row(), col, it.value());
    M.resize(2 * nv_, 2 * nv_);
    M.setFromTriplets(trips.begin(), trips.end());
}

void RlwDae::rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& phi) const {
    const Assembled& a = at(t);
    const Eigen::VectorXd v = y.head(nv_);
    const Eigen::VectorXd u = y.tail(nv_);
    const Eigen::VectorXd f =
        assemble_convection(a.mesh, u, v, interval_.velocity, problem_);
    phi.resize(2 * nv_);
    phi.head(nv_) = -f;
    phi.segment(nv_, ni_) = -(a.M * (v - u) - a.A * u).head(ni_);
    phi.tail(nv_ - ni_) = a.g_B - u.tail(nv_ - ni_);
}

void RlwDae::jacobian(double t, const Eigen::VectorXd& y, SparseMat& J) const {
    const Assembled& a = at(t);
    const Eigen::VectorXd u = y.tail(nv_);
    const SparseMat Jfu = assemble_convection_jacobian_u(a.mesh, u, problem_);
    const SparseMat Jfv =
        assemble_convection_jacobian_v(a.mesh, interval_.velocity, problem_);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(Jfu.nonZeros() + Jfv.nonZeros() + 2 * a.M.nonZeros() +
                  a.A.nonZeros() + nv_);
    for (int col = 0; col < Jfu.outerSize(); ++col)
        for (SparseMat::InnerIterator it(Jfu, col); it; ++it)
            trips.emplace_back(it.row(), nv_ + col, -it.value());
    for (int col = 0; col < Jfv.outerSize(); ++col)
        for (SparseMat::InnerIterator it(Jfv, col); it; ++it)
            trips.emplace_back(it.row(), col, -it.value());
    for (int col = 0; col < a.M.outerSize(); ++col)
        for (SparseMat::InnerIterator it(a.M, col); it; ++it)
            if (it.row() < ni_) {
                trips.emplace_back(nv_ + it.row(), col, -it.value());
                trips.emplace_back(nv_ + it.row(), nv_ + col, it.value());
            }
    for (int col = 0; col < a.A.outerSize(); ++col)
        for (SparseMat::InnerIterator it(a.A, col); it; ++it)
            if (it.row() < ni_)
                trips.emplace_back(nv_ + it.row(), nv_ + col, it.value());
    for (int b = ni_; b < nv_; ++b)
        trips.emplace_back(nv_ + b, nv_ + b, -1.0);

    J.resize(2 * nv_, 2 * nv_);
    J.setFromTriplets(trips.begin(), trips.end());
}

// ---------------------------------------------------------------------------
// FixedMeshOde

FixedMeshOde::FixedMeshOde(const SimplicialMesh& mesh, const ProblemSpec& problem)
    : mesh_(mesh),
      problem_(problem),
      nv_(mesh.n_vertices()),
      ni_(mesh.n_interior) {
    const SparseMat M = assemble_mass(mesh);
    const SparseMat A = assemble_stiffness(mesh, problem.mu);
    mass_ode_ = sparse_block(M, 0, ni_, 0, ni_) + sparse_block(A, 0, ni_, 0, ni_);
}

void FixedMeshOde::mass(double, SparseMat& M) const { M = mass_ode_; }

void FixedMeshOde::rhs(double t, const Eigen::VectorXd& y,
                       Eigen::VectorXd& phi) const {
    Eigen::VectorXd u(nv_);
    u.head(ni_) = y;
    for (int b = ni_; b < nv_; ++b)
        u(b) = problem_.boundary(mesh_.vertices[b], t);
    const Eigen::VectorXd f = assemble_convection(mesh_, u, u, {}, problem_);
    phi = -f.head(ni_);
}

void FixedMeshOde::jacobian(double t, const Eigen::VectorXd& y,
                            SparseMat& J) const {
    Eigen::VectorXd u(nv_);
    u.head(ni_) = y;
    for (int b = ni_; b < nv_; ++b)
        u(b) = problem_.boundary(mesh_.vertices[b], t);
    const SparseMat Jf = assemble_convection_jacobian_u(mesh_, u, problem_);
    J = SparseMat(ni_, ni_);
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < ni_; ++col)
        for (SparseMat::InnerIterator it(Jf, col); it; ++it)
            if (it.row() < ni_) trips.emplace_back(it.row(), col, -it.value());
    J.setFromTriplets(trips.begin(), trips.end());
}

}  // namespace rlw
