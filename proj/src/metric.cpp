#include "rlw/metric.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>

namespace rlw {

double det_d(const Eigen::Matrix2d& m, int dim) {
    return dim == 1 ? m(0, 0) : m.determinant();
}

double trace_d(const Eigen::Matrix2d& m, int dim) {
    return dim == 1 ? m(0, 0) : m.trace();
}

Eigen::Matrix2d inverse_d(const Eigen::Matrix2d& m, int dim) {
    Eigen::Matrix2d inv = Eigen::Matrix2d::Zero();
    if (dim == 1) {
        inv(0, 0) = 1.0 / m(0, 0);
    } else {
        inv = m.inverse();
    }
    return inv;
}

Eigen::Matrix2d MetricField::element_average(const SimplicialMesh& mesh,
                                             int k) const {
    Eigen::Matrix2d avg = Eigen::Matrix2d::Zero();
    const int npe = mesh.nodes_per_element();
    for (int j = 0; j < npe; ++j) avg += vertex[mesh.elements[k][j]];
    return avg / npe;
}

double MetricField::vertex_density(int i) const {
    return std::sqrt(det_d(vertex[i], dim));
}

MetricField MetricField::identity(const SimplicialMesh& mesh) {
    MetricField m;
    m.dim = mesh.dim;
    m.alpha_h = 0.0;
    Eigen::Matrix2d id = Eigen::Matrix2d::Zero();
    id(0, 0) = 1.0;
    if (mesh.dim == 2) id(1, 1) = 1.0;
    m.vertex.assign(mesh.n_vertices(), id);
    return m;
}

std::vector<Eigen::Matrix2d> recover_hessian(const SimplicialMesh& mesh,
                                             const Eigen::VectorXd& nodal_values) {
    if (nodal_values.size() != mesh.n_vertices())
        throw std::invalid_argument("recover_hessian: nodal vector size mismatch");
    const int dim = mesh.dim;
    const int ncoef = dim == 1 ? 3 : 6;
    const auto nbrs = vertex_neighbors(mesh);

    std::vector<Eigen::Matrix2d> hess(mesh.n_vertices(),
                                      Eigen::Matrix2d::Zero());
    std::vector<int> pts;
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        pts.clear();
        pts.push_back(i);
        pts.insert(pts.end(), nbrs[i].begin(), nbrs[i].end());
        if (static_cast<int>(pts.size()) < ncoef) {
            std::set<int> ext(pts.begin(), pts.end());
            for (int j : nbrs[i])
                for (int k : nbrs[j]) ext.insert(k);
            pts.assign(ext.begin(), ext.end());
        }
        const int np = static_cast<int>(pts.size());

        // Center at the vertex and scale by the patch radius for conditioning.
        double r = 0.0;
        for (int j : pts)
            r = std::max(r, (mesh.vertices[j] - mesh.vertices[i]).norm());
        if (r == 0.0) r = 1.0;

        Eigen::MatrixXd A(np, ncoef);
        Eigen::VectorXd b(np);
        for (int row = 0; row < np; ++row) {
            const Eigen::Vector2d d = (mesh.vertices[pts[row]] - mesh.vertices[i]) / r;
            if (dim == 1) {
                A(row, 0) = 1.0;
                A(row, 1) = d.x();
                A(row, 2) = d.x() * d.x();
            } else {
                A(row, 0) = 1.0;
                A(row, 1) = d.x();
                A(row, 2) = d.y();
                A(row, 3) = d.x() * d.x();
                A(row, 4) = d.x() * d.y();
                A(row, 5) = d.y() * d.y();
            }
            b(row) = nodal_values(pts[row]);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        qr.setThreshold(1e-10);
        if (qr.rank() < ncoef)
            throw SingularFit("rank-deficient quadratic fit at vertex " +
                              std::to_string(i));
        const Eigen::VectorXd c = qr.solve(b);

        Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
        const double r2 = r * r;
        if (dim == 1) {
            H(0, 0) = 2.0 * c(2) / r2;
        } else {
            H(0, 0) = 2.0 * c(3) / r2;
            H(0, 1) = H(1, 0) = c(4) / r2;
            H(1, 1) = 2.0 * c(5) / r2;
        }
        hess[i] = H;
    }
    return hess;
}

Eigen::Matrix2d absolute_hessian(const Eigen::Matrix2d& H, int dim) {
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    if (dim == 1) {
        out(0, 0) = std::abs(H(0, 0));
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
    out = es.eigenvectors() * es.eigenvalues().cwiseAbs().asDiagonal() *
          es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

namespace {

double regularized_det(double alpha, const Eigen::Matrix2d& absH, int dim) {
    if (dim == 1) return alpha + absH(0, 0);
    Eigen::Matrix2d A = absH;
    A(0, 0) += alpha;
    A(1, 1) += alpha;
    return A.determinant();
}

double metric_q(int dim, const MetricOptions& opts) {
    return opts.det_m_consistent_exponent ? 2.0 / (dim + 4) : 4.0 / (dim + 4);
}

}  // namespace

double solve_alpha(const SimplicialMesh& mesh,
                   const std::vector<Eigen::Matrix2d>& abs_hessian,
                   const MetricOptions& opts) {
    const int dim = mesh.dim;
    const double q = metric_q(dim, opts);
    const int npe = mesh.nodes_per_element();

    std::vector<double> vol(mesh.n_elements());
    std::vector<Eigen::Matrix2d> elemH(mesh.n_elements());
    double rhs = 0.0, max_eig = 0.0;
    for (int k = 0; k < mesh.n_elements(); ++k) {
        vol[k] = element_volume(mesh, k);
        Eigen::Matrix2d Hk = Eigen::Matrix2d::Zero();
        for (int j = 0; j < npe; ++j) Hk += abs_hessian[mesh.elements[k][j]];
        Hk /= npe;
        elemH[k] = Hk;
        rhs += vol[k] * std::pow(regularized_det(0.0, Hk, dim), q);
        max_eig = std::max(max_eig, trace_d(Hk, dim));
    }
    if (rhs <= 0.0) throw FlatField("identically zero Hessian field");
    const double target = 2.0 * rhs;

    auto lhs = [&](double alpha) {
        double s = 0.0;
        for (int k = 0; k < mesh.n_elements(); ++k)
            s += vol[k] * std::pow(regularized_det(alpha, elemH[k], dim), q);
        return s;
    };

    double lo = 0.0;
    double hi = std::max(max_eig, 1e-30);
    while (lhs(hi) < target) hi *= 2.0;
    while ((hi - lo) > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        (lhs(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

MetricField build_metric(const SimplicialMesh& mesh, const Eigen::VectorXd& nodal_u,
                         const MetricOptions& opts) {
    const int dim = mesh.dim;
    const auto hess = recover_hessian(mesh, nodal_u);
    std::vector<Eigen::Matrix2d> absH(hess.size());
    for (size_t i = 0; i < hess.size(); ++i) {
        absH[i] = absolute_hessian(hess[i], dim);
        const double floor = opts.hessian_floor * trace_d(absH[i], dim);
        absH[i](0, 0) += floor;
        if (dim == 2) absH[i](1, 1) += floor;
    }

    double alpha = 0.0;
    try {
        alpha = solve_alpha(mesh, absH, opts);
    } catch (const FlatField&) {
        return MetricField::identity(mesh);
    }

    MetricField metric;
    metric.dim = dim;
    metric.alpha_h = alpha;
    metric.vertex.resize(mesh.n_vertices());
    const double expo = -1.0 / (dim + 4);
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        Eigen::Matrix2d A = absH[i];
        A(0, 0) += alpha;
        if (dim == 2) A(1, 1) += alpha;
        metric.vertex[i] = std::pow(det_d(A, dim), expo) * A;
        if (dim == 1) metric.vertex[i](1, 1) = 0.0;
    }
    return metric;
}

}  // namespace rlw
