// Batch front-end: run configuration files, manifests and the command
// drivers behind the command-line tool.

#ifndef HMMF_CLI_HPP
#define HMMF_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmmf/post.hpp"
#include "hmmf/scheme.hpp"

namespace hmmf {

/// Parsed contents of a run configuration file (key = value lines).
struct FileConfig {
  SchemeConfig scheme;
  bool preset_set = false;
  bool points_set = false;
  std::string tensor_mode = "case";  ///< "case" or "constant"
  Mat2 tensor = Mat2::Identity();
  std::string source = "zero";  ///< zero | one | case-a | case-b | case-c
  std::vector<int> family;      ///< grid sizes of a convergence family
  double amplitude = 0.0;       ///< perturbation of generated family meshes
  std::uint64_t mesh_seed = 1;
  bool equivalence_convert = true;  ///< false = negative control, no conversion
  double tol = 1e-12;
  std::optional<double> threshold_p;
  std::optional<double> threshold_flux;
};

FileConfig parse_config_file(const std::string& path);

/// What to run: a config, a mesh source (file path or gen:nx,ny[,amp,seed]),
/// an output directory and a command name.
struct RunManifest {
  std::string config_path;
  std::string mesh_spec;
  std::string out_dir;
  std::string command;  ///< solve | equivalence | two-point | lifting | convergence
  double tol = -1.0;    ///< overrides the config tolerance when positive
};

/// Exit codes: 0 success, 1 config error, 2 solver non-convergence, 3 mesh
/// error, 4 deviation/verification failure, 5 convergence thresholds unmet.
int run_manifest(const RunManifest& manifest);

int cmd_solve(const RunManifest& manifest);
int cmd_equivalence(const RunManifest& manifest);
int cmd_two_point(const RunManifest& manifest);
int cmd_lifting(const RunManifest& manifest);
int cmd_convergence(const RunManifest& manifest);

/// Mesh from a manifest spec: a file path or gen:nx,ny[,amplitude,seed]
/// (generated meshes cover the unit square).
Mesh mesh_from_spec(const std::string& spec);

}  // namespace hmmf

#endif
