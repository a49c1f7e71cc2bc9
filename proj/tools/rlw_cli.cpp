#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "rlw/driver.hpp"
#include "rlw/io.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string problem;
    int n = 0;
    bool moving = false;
    bool fixed = false;
    std::string out;
    double t_final = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "Config file (INI-style sections)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--problem", args.problem, "Problem name from the catalog");
    cmd->add_option("--n", args.n, "Number of elements (1D) or target (2D)");
    auto* mv = cmd->add_flag("--moving", args.moving, "Enable mesh movement");
    cmd->add_flag("--fixed", args.fixed, "Disable mesh movement")->excludes(mv);
    cmd->add_option("--out", args.out, "Output directory");
    cmd->add_option("--t-final", args.t_final, "Override final time");
}

rlw::RunConfig build_config(const CommonArgs& args, rlw::ConfigFile* cfg_out) {
    rlw::RunConfig run;
    if (!args.config.empty()) {
        const rlw::ConfigFile cfg = rlw::parse_config_file(args.config);
        rlw::apply_config(cfg, run);
        if (cfg_out) *cfg_out = cfg;
    }
    if (!args.problem.empty()) run.problem = args.problem;
    if (args.n > 0) run.n = args.n;
    if (args.moving) run.moving = true;
    if (args.fixed) run.moving = false;
    if (!args.out.empty()) run.out_dir = args.out;
    if (args.t_final > 0.0) run.t_final = args.t_final;
    return run;
}

void print_summary(const rlw::RunResult& r) {
    std::printf("problem            %s\n", r.problem.name.c_str());
    std::printf("mesh               %s, %d elements, %d vertices\n",
                r.config.moving ? "moving" : "fixed", r.mesh.n_elements(),
                r.mesh.n_vertices());
    std::printf("final time         %.10g\n", r.t);
    std::printf("steps / rejections %ld / %ld\n", r.steps, r.rejections);
    std::printf("E1                 %.10e -> %.10e  (max drift %.3e)\n", r.q0.E1,
                r.qT.E1, r.max_dE1);
    std::printf("E2                 %.10e -> %.10e  (max drift %.3e)\n", r.q0.E2,
                r.qT.E2, r.max_dE2);
    std::printf("min |K| / height   %.3e / %.3e\n", r.min_volume_seen,
                r.min_height_seen);
    if (r.final_error)
        std::printf("error at T         L2 %.4e   Linf %.4e\n",
                    r.final_error->l2, r.final_error->linf);
    if (r.sup_error)
        std::printf("error sup over t   L2 %.4e   Linf %.4e\n", r.sup_error->l2,
                    r.sup_error->linf);
    if (r.time_integrated_error) {
        std::printf("error int over t   L2 %.4e   Linf %.4e\n",
                    r.time_integrated_error->l2, r.time_integrated_error->linf);
        if (r.time_integrated_exact_l2 > 0.0)
            std::printf("relative int L2    %.4e\n",
                        r.time_integrated_error->l2 / r.time_integrated_exact_l2);
    }
}

void print_study(const std::vector<rlw::StudyRow>& rows) {
    std::printf("%8s %12s %8s %12s %12s %12s %8s\n", "N", "L2", "order", "Linf",
                "|dE1|", "|dE2|", "steps");
    for (const auto& r : rows)
        std::printf("%8d %12.4e %8.2f %12.4e %12.4e %12.4e %8ld\n", r.n, r.l2,
                    r.order_l2, r.linf, r.dE1, r.dE2, r.steps);
}

std::vector<int> default_ns(int dim, bool moving) {
    if (dim == 1) return moving ? std::vector<int>{20, 40, 80, 160, 320, 640}
                                : std::vector<int>{20, 40, 80, 160, 320, 640};
    return {100, 400, 1600, 6400};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Adaptive moving-mesh finite element solver for the RLW/MRLW "
        "equation"};
    app.require_subcommand(1);

    CommonArgs run_args, study_args, cons_args, ref_args;
    std::vector<int> study_ns, cons_ns;
    std::string cache_dir = "reference_cache";
    int ref_n = 6000;

    auto* cmd_run = app.add_subcommand("run", "Single simulation");
    add_common(cmd_run, run_args);

    auto* cmd_study = app.add_subcommand("study", "Convergence table");
    add_common(cmd_study, study_args);
    cmd_study->add_option("--ns", study_ns, "Element counts")->delimiter(',');

    auto* cmd_cons = app.add_subcommand("conserve", "Invariant-drift sweep");
    add_common(cmd_cons, cons_args);
    cmd_cons->add_option("--ns", cons_ns, "Element counts")->delimiter(',');

    auto* cmd_ref =
        app.add_subcommand("reference", "Build and cache a fine fixed-mesh run");
    add_common(cmd_ref, ref_args);
    cmd_ref->add_option("--cache-dir", cache_dir, "Cache directory");
    cmd_ref->add_option("--ref-n", ref_n, "Reference element count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            rlw::ConfigFile cfg;
            rlw::RunConfig run = build_config(run_args, &cfg);
            const rlw::ProblemSpec problem = rlw::problem_from_config(cfg, run);
            print_summary(rlw::run_simulation(run, problem));
        } else if (cmd_study->parsed()) {
            const rlw::RunConfig base = build_config(study_args, nullptr);
            const auto ns = study_ns.empty()
                                ? default_ns(rlw::catalog(base.problem).dim,
                                             base.moving)
                                : study_ns;
            const auto rows = rlw::run_convergence_study(base, ns);
            print_study(rows);
            if (!base.out_dir.empty()) {
                std::filesystem::create_directories(base.out_dir);
                rlw::write_study_csv((std::filesystem::path(base.out_dir) /
                                      "convergence.csv")
                                         .string(),
                                     rows);
            }
        } else if (cmd_cons->parsed()) {
            const rlw::RunConfig base = build_config(cons_args, nullptr);
            const auto ns = cons_ns.empty()
                                ? default_ns(rlw::catalog(base.problem).dim,
                                             base.moving)
                                : cons_ns;
            const auto rows = rlw::run_conservation_sweep(base, ns);
            print_study(rows);
            if (!base.out_dir.empty()) {
                std::filesystem::create_directories(base.out_dir);
                rlw::write_study_csv((std::filesystem::path(base.out_dir) /
                                      "conservation.csv")
                                         .string(),
                                     rows);
            }
        } else if (cmd_ref->parsed()) {
            rlw::RunConfig run = build_config(ref_args, nullptr);
            run.n = ref_n;
            run.moving = false;
            const auto path = std::filesystem::path(cache_dir) /
                              (run.problem + "_fixed_" + std::to_string(ref_n) +
                               ".bin");
            print_summary(rlw::run_with_cache(run, path.string()));
            std::printf("cached at          %s\n", path.string().c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
