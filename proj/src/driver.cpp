#include "rlw/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "rlw/io.hpp"

namespace rlw {

namespace {

double final_time(const RunConfig& cfg, const ProblemSpec& problem) {
    return cfg.t_final > 0.0 ? cfg.t_final : problem.t_final;
}

RadauOptions radau_options(const RunConfig& cfg) {
    RadauOptions o;
    o.rtol = cfg.rtol;
    o.atol = cfg.atol;
    o.newton_max_iter = cfg.newton_max_iter;
    o.newton_tol = cfg.newton_tol;
    return o;
}

StepController make_controller(const RunConfig& cfg) {
    StepController ctl;
    ctl.dt = cfg.dt0;
    ctl.rtol = cfg.rtol;
    ctl.atol = cfg.atol;
    ctl.dt_min = cfg.dt_min;
    ctl.dt_max = cfg.dt_max;
    return ctl;
}

double mean_spacing(const SimplicialMesh& mesh) {
    return std::pow(mesh.domain_volume() / mesh.n_elements(),
                    1.0 / mesh.dim);
}

}  // namespace

int cells_per_side(int n_elements_target) {
    const int k = static_cast<int>(std::lround(std::sqrt(n_elements_target / 2.0)));
    return std::max(k, 2);
}

SimplicialMesh make_initial_mesh(const ProblemSpec& problem, int n) {
    if (problem.dim == 1)
        return uniform_interval(problem.lo.x(), problem.hi.x(), n);
    const int k = cells_per_side(n);
    return uniform_triangles(problem.lo.x(), problem.lo.y(), problem.hi.x(),
                             problem.hi.y(), k, k);
}

double default_tau(const RunConfig& cfg, int dim) {
    if (cfg.tau > 0.0) return cfg.tau;
    return dim == 1 ? 1e-4 : 1e-2;
}

MmpdeOptions mmpde_options(const RunConfig& cfg, int dim) {
    MmpdeOptions o;
    o.tau = default_tau(cfg, dim);
    o.substep_safety = cfg.mmpde_substep_safety;
    o.fixed_boundary = cfg.fixed_boundary_2d;
    return o;
}

SimulationState prepare_initial_state(const ProblemSpec& problem,
                                      const RunConfig& cfg) {
    SimulationState s;
    s.mesh = make_initial_mesh(problem, cfg.n);
    s.ref_comp = s.mesh;
    s.ctl = make_controller(cfg);

    if (cfg.moving && cfg.initial_adapt_iters > 0) {
        const MmpdeOptions mo = mmpde_options(cfg, problem.dim);
        const double h = mean_spacing(s.mesh);
        for (int it = 0; it < cfg.initial_adapt_iters; ++it) {
            const Eigen::VectorXd u0 = interpolate(s.mesh, problem.initial);
            const MetricField metric = build_metric(s.mesh, u0, cfg.metric);
            const SimplicialMesh moved =
                move_mesh(s.mesh, s.ref_comp, metric, mo, 0.0, mo.tau);
            double disp = 0.0;
            for (int i = 0; i < s.mesh.n_vertices(); ++i)
                disp = std::max(
                    disp, (moved.vertices[i] - s.mesh.vertices[i]).norm());
            s.mesh = moved;
            if (disp < 1e-3 * h) break;
        }
    }
    s.u = interpolate(s.mesh, problem.initial);
    s.v = initial_v(s.mesh, s.u, problem.mu);
    return s;
}

void advance_one_step(SimulationState& state, const ProblemSpec& problem,
                      const RunConfig& cfg) {
    const double T = final_time(cfg, problem);
    const double dt_plan = std::min(state.ctl.dt, T - state.t);
    const RadauOptions ropts = radau_options(cfg);
    const int nv = state.mesh.n_vertices();
    const int ni = state.mesh.n_interior;

    if (cfg.moving) {
        const MetricField metric = build_metric(state.mesh, state.u, cfg.metric);
        const MmpdeOptions mo = mmpde_options(cfg, problem.dim);
        const SimplicialMesh moved = move_mesh(state.mesh, state.ref_comp, metric,
                                               mo, state.t, state.t + dt_plan);
        const MovingMeshInterval interval(state.mesh, moved, state.t,
                                          state.t + dt_plan);
        const RlwDae dae(interval, problem);
        Eigen::VectorXd y(2 * nv);
        y.head(nv) = state.v;
        y.tail(nv) = state.u;
        const MacroStepResult r = integrate_one_accepted_step(
            dae, state.t, state.t + dt_plan, y, state.ctl, ropts);
        state.v = r.y.head(nv);
        state.u = r.y.tail(nv);
        state.mesh = interval.mesh_at(r.t_new);
        state.t = r.t_new;
        state.rejections += r.rejections;
    } else {
        const FixedMeshOde ode(state.mesh, problem);
        Eigen::VectorXd y = state.u.head(ni);
        const MacroStepResult r =
            integrate_one_accepted_step(ode, state.t, T, y, state.ctl, ropts);
        state.u.head(ni) = r.y;
        for (int b = ni; b < nv; ++b)
            state.u(b) = problem.boundary(state.mesh.vertices[b], r.t_new);
        state.v = initial_v(state.mesh, state.u, problem.mu);
        state.t = r.t_new;
        state.rejections += r.rejections;
    }
    ++state.steps;
}

RunResult run_simulation(const RunConfig& cfg) {
    return run_simulation(cfg, catalog(cfg.problem));
}

RunResult run_simulation(const RunConfig& cfg, const ProblemSpec& problem) {
    const double T = final_time(cfg, problem);
    SimulationState s = prepare_initial_state(problem, cfg);

    RunResult out;
    out.config = cfg;
    out.problem = problem;
    out.q0 = conserved_quantities(s.mesh, s.u, problem.mu);

    namespace fs = std::filesystem;
    const bool writing = !cfg.out_dir.empty();
    int snap_idx = 1;
    auto snapshot_path = [&](int i, const char* stem, const char* ext) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s_%05d.%s", stem, i, ext);
        return (fs::path(cfg.out_dir) / buf).string();
    };
    if (writing) {
        fs::create_directories(cfg.out_dir);
        write_vtk(snapshot_path(0, "solution", "vtk"), s.mesh,
                  {{"u", s.u}, {"v", s.v}});
        write_mesh_csv(snapshot_path(0, "mesh", "csv"), s.mesh);
    }

    auto record = [&](double dt, int rej) {
        StepRecord rec;
        rec.t = s.t;
        rec.dt = dt;
        rec.rejections = rej;
        const ConservedQuantities q =
            conserved_quantities(s.mesh, s.u, problem.mu);
        rec.E1 = q.E1;
        rec.E2 = q.E2;
        const NonsingularityReport rep = check_nonsingular(s.mesh);
        if (!rep.ok)
            throw MeshTangled("singular mesh at t = " + std::to_string(s.t));
        rec.min_volume = rep.min_volume;
        rec.min_height = rep.min_height;
        if (cfg.moving) {
            const MetricField metric = build_metric(s.mesh, s.u, cfg.metric);
            rec.equidistribution = equidistribution_residual(s.mesh, metric);
        }
        if (problem.has_exact()) {
            const SpatialErrorNorms e =
                spatial_error_norms(s.mesh, s.u, problem.exact, s.t);
            rec.l2 = e.l2;
            rec.linf = e.linf;
            const Eigen::VectorXd zero =
                Eigen::VectorXd::Zero(s.mesh.n_vertices());
            rec.exact_l2 =
                spatial_error_norms(s.mesh, zero, problem.exact, s.t).l2;
        }
        out.history.push_back(rec);
    };
    record(0.0, 0);

    while (s.t < T * (1.0 - 1e-13) && s.steps < cfg.max_steps) {
        const double t_prev = s.t;
        const long rej_prev = s.rejections;
        advance_one_step(s, problem, cfg);
        record(s.t - t_prev, static_cast<int>(s.rejections - rej_prev));
        if (writing && cfg.snapshot_count > 0) {
            while (snap_idx <= cfg.snapshot_count &&
                   s.t >= T * snap_idx / (cfg.snapshot_count + 1)) {
                write_vtk(snapshot_path(snap_idx, "solution", "vtk"), s.mesh,
                          {{"u", s.u}, {"v", s.v}});
                write_mesh_csv(snapshot_path(snap_idx, "mesh", "csv"), s.mesh);
                ++snap_idx;
            }
        }
    }

    out.mesh = s.mesh;
    out.u = s.u;
    out.v = s.v;
    out.t = s.t;
    out.steps = s.steps;
    out.rejections = s.rejections;
    out.qT = conserved_quantities(s.mesh, s.u, problem.mu);
    out.min_volume_seen = out.history.front().min_volume;
    out.min_height_seen = out.history.front().min_height;
    for (const auto& r : out.history) {
        out.max_dE1 = std::max(out.max_dE1, std::abs(r.E1 - out.q0.E1));
        out.max_dE2 = std::max(out.max_dE2, std::abs(r.E2 - out.q0.E2));
        out.min_volume_seen = std::min(out.min_volume_seen, r.min_volume);
        out.min_height_seen = std::min(out.min_height_seen, r.min_height);
    }
    if (problem.has_exact()) {
        out.final_error =
            spatial_error_norms(s.mesh, s.u, problem.exact, s.t);
        SpatialErrorNorms sup, integ;
        for (size_t i = 0; i < out.history.size(); ++i) {
            const auto& r = out.history[i];
            sup.l2 = std::max(sup.l2, r.l2);
            sup.linf = std::max(sup.linf, r.linf);
            if (i > 0) {
                const auto& p = out.history[i - 1];
                integ.l2 += 0.5 * (r.t - p.t) * (r.l2 + p.l2);
                integ.linf += 0.5 * (r.t - p.t) * (r.linf + p.linf);
                out.time_integrated_exact_l2 +=
                    0.5 * (r.t - p.t) * (r.exact_l2 + p.exact_l2);
            }
        }
        out.sup_error = sup;
        out.time_integrated_error = integ;
    }

    if (writing) {
        write_vtk((fs::path(cfg.out_dir) / "solution_final.vtk").string(),
                  s.mesh, {{"u", s.u}, {"v", s.v}});
        write_solution_csv(
            (fs::path(cfg.out_dir) / "solution_final.csv").string(), s.mesh,
            s.u, s.v);
        write_history_csv((fs::path(cfg.out_dir) / "steps.csv").string(),
                          out.history);
        if (cfg.moving) {
            const MetricField metric = build_metric(s.mesh, s.u, cfg.metric);
            write_density_csv((fs::path(cfg.out_dir) / "density.csv").string(),
                              s.mesh, metric);
        }
        write_manifest((fs::path(cfg.out_dir) / "manifest.txt").string(), out);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary serialization (native layout; caches and checkpoints are
// machine-local artifacts).

namespace {

struct SerializationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
void put(std::ostream& o, const T& v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw SerializationError("truncated stream");
    return v;
}

void put_string(std::ostream& o, const std::string& s) {
    put<std::int64_t>(o, static_cast<std::int64_t>(s.size()));
    o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::int64_t>(in);
    std::string s(static_cast<size_t>(n), '\0');
    in.read(s.data(), n);
    if (!in) throw SerializationError("truncated stream");
    return s;
}

void put_vector(std::ostream& o, const Eigen::VectorXd& v) {
    put<std::int64_t>(o, v.size());
    o.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd get_vector(std::istream& in) {
    const auto n = get<std::int64_t>(in);
    Eigen::VectorXd v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw SerializationError("truncated stream");
    return v;
}

void put_mesh(std::ostream& o, const SimplicialMesh& m) {
    put<std::int32_t>(o, m.dim);
    put<std::int32_t>(o, m.n_vertices());
    put<std::int32_t>(o, m.n_interior);
    put<std::int32_t>(o, m.n_elements());
    put(o, m.lo.x());
    put(o, m.lo.y());
    put(o, m.hi.x());
    put(o, m.hi.y());
    for (const auto& v : m.vertices) {
        put(o, v.x());
        put(o, v.y());
    }
    for (const auto& e : m.elements)
        for (int j = 0; j < 3; ++j) put<std::int32_t>(o, e[j]);
    for (int t : m.boundary_tag) put<std::int32_t>(o, t);
}

SimplicialMesh get_mesh(std::istream& in) {
    SimplicialMesh m;
    m.dim = get<std::int32_t>(in);
    const int nv = get<std::int32_t>(in);
    m.n_interior = get<std::int32_t>(in);
    const int ne = get<std::int32_t>(in);
    m.lo.x() = get<double>(in);
    m.lo.y() = get<double>(in);
    m.hi.x() = get<double>(in);
    m.hi.y() = get<double>(in);
    m.vertices.resize(nv);
    for (auto& v : m.vertices) {
        v.x() = get<double>(in);
        v.y() = get<double>(in);
    }
    m.elements.resize(ne);
    for (auto& e : m.elements)
        for (int j = 0; j < 3; ++j) e[j] = get<std::int32_t>(in);
    m.boundary_tag.resize(nv);
    for (auto& t : m.boundary_tag) t = get<std::int32_t>(in);
    return m;
}

const char kCacheMagic[] = "rlw-cache-v1";
const char kCheckpointMagic[] = "rlw-ckpt-v1";

std::string cache_key(const RunConfig& cfg) {
    std::ostringstream k;
    k << cfg.problem << "|" << cfg.n << "|" << (cfg.moving ? "m" : "f") << "|"
      << cfg.rtol << "|" << cfg.atol << "|" << cfg.t_final;
    return k.str();
}

}  // namespace

RunResult run_with_cache(const RunConfig& cfg, const std::string& cache_file) {
    if (std::filesystem::exists(cache_file)) {
        std::ifstream in(cache_file, std::ios::binary);
        try {
            std::string magic(sizeof(kCacheMagic) - 1, '\0');
            in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
            if (in && magic == kCacheMagic &&
                get_string(in) == cache_key(cfg)) {
                RunResult r;
                r.config = cfg;
                r.problem = catalog(cfg.problem);
                r.mesh = get_mesh(in);
                r.u = get_vector(in);
                r.v = get_vector(in);
                r.t = get<double>(in);
                r.q0.E1 = get<double>(in);
                r.q0.E2 = get<double>(in);
                r.qT.E1 = get<double>(in);
                r.qT.E2 = get<double>(in);
                r.max_dE1 = get<double>(in);
                r.max_dE2 = get<double>(in);
                r.steps = get<std::int64_t>(in);
                r.rejections = get<std::int64_t>(in);
                r.min_volume_seen = get<double>(in);
                r.min_height_seen = get<double>(in);
                if (get<std::int32_t>(in)) {
                    SpatialErrorNorms e;
                    e.l2 = get<double>(in);
                    e.linf = get<double>(in);
                    r.final_error = e;
                }
                return r;
            }
        } catch (const SerializationError&) {
            // stale or corrupt cache: fall through and recompute
        }
    }

    RunResult r = run_simulation(cfg);
    const auto parent = std::filesystem::path(cache_file).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream o(cache_file, std::ios::binary);
    o.write(kCacheMagic, sizeof(kCacheMagic) - 1);
    put_string(o, cache_key(cfg));
    put_mesh(o, r.mesh);
    put_vector(o, r.u);
    put_vector(o, r.v);
    put(o, r.t);
    put(o, r.q0.E1);
    put(o, r.q0.E2);
    put(o, r.qT.E1);
    put(o, r.qT.E2);
    put(o, r.max_dE1);
    put(o, r.max_dE2);
    put<std::int64_t>(o, r.steps);
    put<std::int64_t>(o, r.rejections);
    put(o, r.min_volume_seen);
    put(o, r.min_height_seen);
    put<std::int32_t>(o, r.final_error ? 1 : 0);
    if (r.final_error) {
        put(o, r.final_error->l2);
        put(o, r.final_error->linf);
    }
    return r;
}

std::vector<StudyRow> run_convergence_study(const RunConfig& base,
                                            const std::vector<int>& ns) {
    const ProblemSpec probe = catalog(base.problem);
    if (!probe.has_exact())
        throw NoExactSolution("convergence study needs an exact solution: " +
                              base.problem);
    std::vector<StudyRow> rows;
    double prev_l2 = 0.0, prev_k = 0.0;
    for (int n : ns) {
        RunConfig cfg = base;
        cfg.n = n;
        const RunResult r = run_simulation(cfg);
        StudyRow row;
        row.n = n;
        row.l2 = r.time_integrated_error->l2;
        row.linf = r.time_integrated_error->linf;
        row.dE1 = std::abs(r.qT.E1 - r.q0.E1);
        row.dE2 = std::abs(r.qT.E2 - r.q0.E2);
        row.steps = r.steps;
        const double k = probe.dim == 1 ? n : cells_per_side(n);
        if (!rows.empty() && row.l2 > 0.0)
            row.order_l2 = std::log(prev_l2 / row.l2) / std::log(k / prev_k);
        prev_l2 = row.l2;
        prev_k = k;
        rows.push_back(row);
    }
    return rows;
}

std::vector<StudyRow> run_conservation_sweep(const RunConfig& base,
                                             const std::vector<int>& ns) {
    std::vector<StudyRow> rows;
    for (int n : ns) {
        RunConfig cfg = base;
        cfg.n = n;
        const RunResult r = run_simulation(cfg);
        StudyRow row;
        row.n = n;
        row.dE1 = std::abs(r.qT.E1 - r.q0.E1);
        row.dE2 = std::abs(r.qT.E2 - r.q0.E2);
        row.steps = r.steps;
        if (r.sup_error) {
            row.l2 = r.sup_error->l2;
            row.linf = r.sup_error->linf;
        }
        rows.push_back(row);
    }
    return rows;
}

void save_checkpoint(const std::string& path, const SimulationState& state) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot open checkpoint: " + path);
    o.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    put_mesh(o, state.mesh);
    put_mesh(o, state.ref_comp);
    put_vector(o, state.u);
    put_vector(o, state.v);
    put(o, state.t);
    put(o, state.ctl.dt);
    put(o, state.ctl.rtol);
    put(o, state.ctl.atol);
    put(o, state.ctl.safety);
    put(o, state.ctl.kappa);
    put(o, state.ctl.min_ratio);
    put(o, state.ctl.max_ratio);
    put(o, state.ctl.dt_min);
    put(o, state.ctl.dt_max);
    put(o, state.ctl.err_prev);
    put<std::int64_t>(o, state.steps);
    put<std::int64_t>(o, state.rejections);
}

SimulationState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string magic(sizeof(kCheckpointMagic) - 1, '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kCheckpointMagic)
        throw std::runtime_error("not a checkpoint file: " + path);
    SimulationState s;
    s.mesh = get_mesh(in);
    s.ref_comp = get_mesh(in);
    s.u = get_vector(in);
    s.v = get_vector(in);
    s.t = get<double>(in);
    s.ctl.dt = get<double>(in);
    s.ctl.rtol = get<double>(in);
    s.ctl.atol = get<double>(in);
    s.ctl.safety = get<double>(in);
    s.ctl.kappa = get<double>(in);
    s.ctl.min_ratio = get<double>(in);
    s.ctl.max_ratio = get<double>(in);
    s.ctl.dt_min = get<double>(in);
    s.ctl.dt_max = get<double>(in);
    s.ctl.err_prev = get<double>(in);
    s.steps = get<std::int64_t>(in);
    s.rejections = get<std::int64_t>(in);
    return s;
}

std::vector<std::pair<double, double>> find_peaks(const SimplicialMesh& mesh,
                                                  const Eigen::VectorXd& u,
                                                  double min_height) {
    if (mesh.dim != 1)
        throw std::invalid_argument("find_peaks supports 1D meshes only");
    std::vector<int> idx(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return mesh.vertices[a].x() < mesh.vertices[b].x();
    });

    std::vector<std::pair<double, double>> peaks;
    for (size_t j = 1; j + 1 < idx.size(); ++j) {
        const double y0 = u(idx[j - 1]), y1 = u(idx[j]), y2 = u(idx[j + 1]);
        if (y1 < min_height || y1 < y0 || y1 < y2) continue;
        const double x0 = mesh.vertices[idx[j - 1]].x();
        const double x1 = mesh.vertices[idx[j]].x();
        const double x2 = mesh.vertices[idx[j + 1]].x();
        Eigen::Matrix3d V;
        V << 1, x0, x0 * x0, 1, x1, x1 * x1, 1, x2, x2 * x2;
        const Eigen::Vector3d c =
            V.colPivHouseholderQr().solve(Eigen::Vector3d(y0, y1, y2));
        double xp = x1, yp = y1;
        if (c(2) < 0.0) {
            xp = -c(1) / (2.0 * c(2));
            if (xp >= x0 && xp <= x2)
                yp = c(0) + c(1) * xp + c(2) * xp * xp;
            else
                xp = x1;
        }
        peaks.emplace_back(xp, yp);
    }
    return peaks;
}

}  // namespace rlw
