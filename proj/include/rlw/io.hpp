#ifndef RLW_IO_HPP
#define RLW_IO_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rlw/driver.hpp"
#include "rlw/mesh.hpp"

namespace rlw {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key-value config with [section] headers, '#' or ';' comments.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get(const std::string& section, const std::string& key,
               double fallback) const;
    int get(const std::string& section, const std::string& key,
            int fallback) const;
    bool get(const std::string& section, const std::string& key,
             bool fallback) const;
};

ConfigFile parse_config_text(const std::string& text);
ConfigFile parse_config_file(const std::string& path);

// Maps sections [problem], [mesh], [mover], [integrator], [output] onto
// the run configuration; unknown keys raise ParseError.
void apply_config(const ConfigFile& cfg, RunConfig& run);

// Custom problem defined entirely in the config: a [problem] section with
// custom = true, coefficient keys, and initial data tabulated per vertex of
// the uniform initial mesh (one value per line).
ProblemSpec problem_from_config(const ConfigFile& cfg, const RunConfig& run);

// Legacy-ASCII VTK unstructured grid with point data fields.
void write_vtk(const std::string& path, const SimplicialMesh& mesh,
               const std::vector<std::pair<std::string, Eigen::VectorXd>>& fields);

// vertex id, coordinates (mesh-trajectory plots).
void write_mesh_csv(const std::string& path, const SimplicialMesh& mesh);

void write_solution_csv(const std::string& path, const SimplicialMesh& mesh,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Per-vertex adaptation density det(M)^{1/2}.
void write_density_csv(const std::string& path, const SimplicialMesh& mesh,
                       const MetricField& metric);

void write_history_csv(const std::string& path,
                       const std::vector<StepRecord>& history);

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows);

// Config echo plus run summary, plain text.
void write_manifest(const std::string& path, const RunResult& result);

}  // namespace rlw

#endif
