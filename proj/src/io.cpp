#include "rlw/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "rlw/mmpde.hpp"

namespace rlw {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open for writing: " + path);
    f << std::setprecision(17);
    return f;
}

}  // namespace

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double ConfigFile::get(const std::string& section, const std::string& key,
                       double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key, std::string{});
    size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ParseError("bad number for " + section + "." + key + ": " + v);
    }
    if (pos != v.size())
        throw ParseError("bad number for " + section + "." + key + ": " + v);
    return out;
}

int ConfigFile::get(const std::string& section, const std::string& key,
                    int fallback) const {
    if (!has(section, key)) return fallback;
    const double d = get(section, key, 0.0);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ParseError("expected integer for " + section + "." + key);
    return i;
}

bool ConfigFile::get(const std::string& section, const std::string& key,
                     bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = lower(get(section, key, std::string{}));
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ParseError("expected boolean for " + section + "." + key + ": " + v);
}

ConfigFile parse_config_text(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.resize(cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("line " + std::to_string(lineno) +
                                 ": unterminated section header");
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw ParseError("line " + std::to_string(lineno) +
                                 ": empty section name");
            cfg.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) +
                             ": expected key = value");
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ParseError("line " + std::to_string(lineno) +
                             ": key before any [section]");
        cfg.sections[section][key] = val;
    }
    return cfg;
}

ConfigFile parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void apply_config(const ConfigFile& cfg, RunConfig& run) {
    static const std::map<std::string, std::set<std::string>> known = {
        {"problem",
         {"name", "t_final", "custom", "dim", "alpha", "beta", "gamma", "delta",
          "mu", "p", "xlo", "xhi", "ylo", "yhi", "initial_data", "g_left",
          "g_right", "g"}},
        {"mesh", {"n", "moving"}},
        {"mover",
         {"tau", "substep_safety", "fixed_boundary", "initial_adapt_iters",
          "printed_alpha_exponent"}},
        {"integrator",
         {"rtol", "atol", "dt0", "dt_min", "dt_max", "newton_max_iter",
          "newton_tol", "max_steps"}},
        {"output", {"dir", "snapshots"}},
    };
    for (const auto& [sec, keys] : cfg.sections) {
        auto k = known.find(sec);
        if (k == known.end()) throw ParseError("unknown config section: " + sec);
        for (const auto& [key, val] : keys)
            if (!k->second.count(key))
                throw ParseError("unknown config key: " + sec + "." + key);
    }

    run.problem = cfg.get("problem", "name", run.problem);
    run.t_final = cfg.get("problem", "t_final", run.t_final);
    run.n = cfg.get("mesh", "n", run.n);
    run.moving = cfg.get("mesh", "moving", run.moving);
    run.tau = cfg.get("mover", "tau", run.tau);
    run.mmpde_substep_safety =
        cfg.get("mover", "substep_safety", run.mmpde_substep_safety);
    run.fixed_boundary_2d = cfg.get("mover", "fixed_boundary", run.fixed_boundary_2d);
    run.initial_adapt_iters =
        cfg.get("mover", "initial_adapt_iters", run.initial_adapt_iters);
    run.metric.det_m_consistent_exponent =
        !cfg.get("mover", "printed_alpha_exponent", false);
    run.rtol = cfg.get("integrator", "rtol", run.rtol);
    run.atol = cfg.get("integrator", "atol", run.atol);
    run.dt0 = cfg.get("integrator", "dt0", run.dt0);
    run.dt_min = cfg.get("integrator", "dt_min", run.dt_min);
    run.dt_max = cfg.get("integrator", "dt_max", run.dt_max);
    run.newton_max_iter =
        cfg.get("integrator", "newton_max_iter", run.newton_max_iter);
    run.newton_tol = cfg.get("integrator", "newton_tol", run.newton_tol);
    run.max_steps = cfg.get("integrator", "max_steps", static_cast<int>(run.max_steps));
    run.out_dir = cfg.get("output", "dir", run.out_dir);
    run.snapshot_count = cfg.get("output", "snapshots", run.snapshot_count);
}

ProblemSpec problem_from_config(const ConfigFile& cfg, const RunConfig& run) {
    if (!cfg.get("problem", "custom", false)) return catalog(run.problem);

    ProblemSpec spec;
    spec.name = cfg.get("problem", "name", std::string("custom"));
    spec.dim = cfg.get("problem", "dim", 1);
    if (spec.dim != 1 && spec.dim != 2)
        throw ParseError("problem.dim must be 1 or 2");
    spec.alpha = cfg.get("problem", "alpha", 0.0);
    spec.beta = cfg.get("problem", "beta", 0.0);
    spec.gamma = cfg.get("problem", "gamma", 0.0);
    spec.delta = cfg.get("problem", "delta", 0.0);
    spec.mu = cfg.get("problem", "mu", 1.0);
    spec.p = cfg.get("problem", "p", 1);
    spec.lo = {cfg.get("problem", "xlo", 0.0), cfg.get("problem", "ylo", 0.0)};
    spec.hi = {cfg.get("problem", "xhi", 1.0), cfg.get("problem", "yhi", 1.0)};
    spec.t_final = cfg.get("problem", "t_final", 1.0);
    if (!(spec.mu > 0.0)) throw ParseError("problem.mu must be positive");

    const std::string data_path = cfg.get("problem", "initial_data", std::string{});
    if (data_path.empty())
        throw ParseError("custom problems need problem.initial_data");
    std::ifstream df(data_path);
    if (!df) throw ParseError("cannot open initial data: " + data_path);
    std::vector<double> values;
    double x;
    while (df >> x) values.push_back(x);

    auto table = std::make_shared<SimplicialMesh>(make_initial_mesh(spec, run.n));
    if (static_cast<int>(values.size()) != table->n_vertices())
        throw ParseError("initial data has " + std::to_string(values.size()) +
                         " values, mesh has " +
                         std::to_string(table->n_vertices()) + " vertices");
    auto vals = std::make_shared<std::vector<double>>(std::move(values));
    spec.initial = [table, vals](const Eigen::Vector2d& p) {
        Eigen::Vector3d bary;
        const int k = locate_point(*table, p, 0, bary, 1e-6);
        double out = 0.0;
        for (int j = 0; j <= table->dim; ++j)
            out += bary(j) * (*vals)[table->elements[k][j]];
        return out;
    };

    if (spec.dim == 1) {
        const double gl = cfg.get("problem", "g_left", 0.0);
        const double gr = cfg.get("problem", "g_right", 0.0);
        const double mid = 0.5 * (spec.lo.x() + spec.hi.x());
        spec.boundary = [gl, gr, mid](const Eigen::Vector2d& p, double) {
            return p.x() < mid ? gl : gr;
        };
    } else {
        const double g = cfg.get("problem", "g", 0.0);
        spec.boundary = [g](const Eigen::Vector2d&, double) { return g; };
    }
    return spec;
}

void write_vtk(const std::string& path, const SimplicialMesh& mesh,
               const std::vector<std::pair<std::string, Eigen::VectorXd>>& fields) {
    std::ofstream f = open_out(path);
    const int npe = mesh.nodes_per_element();
    f << "# vtk DataFile Version 3.0\n"
      << "solution snapshot\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& v : mesh.vertices)
        f << v.x() << " " << v.y() << " 0\n";
    f << "CELLS " << mesh.n_elements() << " "
      << mesh.n_elements() * (npe + 1) << "\n";
    for (const auto& e : mesh.elements) {
        f << npe;
        for (int j = 0; j < npe; ++j) f << " " << e[j];
        f << "\n";
    }
    f << "CELL_TYPES " << mesh.n_elements() << "\n";
    for (int k = 0; k < mesh.n_elements(); ++k)
        f << (mesh.dim == 1 ? 3 : 5) << "\n";
    f << "POINT_DATA " << mesh.n_vertices() << "\n";
    for (const auto& [name, data] : fields) {
        f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < mesh.n_vertices(); ++i) f << data(i) << "\n";
    }
}

void write_mesh_csv(const std::string& path, const SimplicialMesh& mesh) {
    std::ofstream f = open_out(path);
    f << "vertex,x,y\n";
    for (int i = 0; i < mesh.n_vertices(); ++i)
        f << i << "," << mesh.vertices[i].x() << "," << mesh.vertices[i].y()
          << "\n";
}

void write_solution_csv(const std::string& path, const SimplicialMesh& mesh,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    std::ofstream f = open_out(path);
    f << "vertex,x,y,u,v\n";
    for (int i = 0; i < mesh.n_vertices(); ++i)
        f << i << "," << mesh.vertices[i].x() << "," << mesh.vertices[i].y()
          << "," << u(i) << "," << v(i) << "\n";
}

void write_density_csv(const std::string& path, const SimplicialMesh& mesh,
                       const MetricField& metric) {
    std::ofstream f = open_out(path);
    f << "vertex,x,y,density\n";
    for (int i = 0; i < mesh.n_vertices(); ++i)
        f << i << "," << mesh.vertices[i].x() << "," << mesh.vertices[i].y()
          << "," << metric.vertex_density(i) << "\n";
}

void write_history_csv(const std::string& path,
                       const std::vector<StepRecord>& history) {
    std::ofstream f = open_out(path);
    f << "t,dt,rejections,E1,E2,min_volume,min_height,equidistribution,l2,linf\n";
    for (const auto& r : history)
        f << r.t << "," << r.dt << "," << r.rejections << "," << r.E1 << ","
          << r.E2 << "," << r.min_volume << "," << r.min_height << ","
          << r.equidistribution << "," << r.l2 << "," << r.linf << "\n";
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows) {
    std::ofstream f = open_out(path);
    f << "n,l2,order_l2,linf,dE1,dE2,steps\n";
    for (const auto& r : rows)
        f << r.n << "," << r.l2 << "," << r.order_l2 << "," << r.linf << ","
          << r.dE1 << "," << r.dE2 << "," << r.steps << "\n";
}

void write_manifest(const std::string& path, const RunResult& result) {
    std::ofstream f = open_out(path);
    const RunConfig& c = result.config;
    f << "[problem]\nname = " << c.problem << "\nt_final = " << result.t
      << "\n\n[mesh]\nn = " << c.n << "\nmoving = " << (c.moving ? "true" : "false")
      << "\n\n[mover]\ntau = " << c.tau
      << "\nsubstep_safety = " << c.mmpde_substep_safety
      << "\ninitial_adapt_iters = " << c.initial_adapt_iters
      << "\n\n[integrator]\nrtol = " << c.rtol << "\natol = " << c.atol
      << "\ndt0 = " << c.dt0 << "\nnewton_max_iter = " << c.newton_max_iter
      << "\nnewton_tol = " << c.newton_tol
      << "\n\n# summary\n# steps = " << result.steps
      << "\n# rejections = " << result.rejections
      << "\n# E1: " << result.q0.E1 << " -> " << result.qT.E1
      << "\n# E2: " << result.q0.E2 << " -> " << result.qT.E2
      << "\n# max |dE1| = " << result.max_dE1
      << "\n# max |dE2| = " << result.max_dE2
      << "\n# min element volume seen = " << result.min_volume_seen
      << "\n# min element height seen = " << result.min_height_seen << "\n";
    if (result.final_error)
        f << "# final L2 error = " << result.final_error->l2
          << "\n# final Linf error = " << result.final_error->linf << "\n";
}

}  // namespace rlw
