// Command-line front end: solves, equivalence reports, special-case
// verifications and convergence studies driven by a config file.

#include <CLI11.hpp>

#include "hmmf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Polygonal-mesh diffusion schemes of the hybrid/mimetic/mixed family"};

  hmmf::RunManifest manifest;
  app.add_option("--config", manifest.config_path, "run configuration file")->required();
  app.add_option("--mesh", manifest.mesh_spec,
                 "mesh file path or generator spec gen:nx,ny[,amplitude,seed]");
  app.add_option("--out", manifest.out_dir, "output directory")->required();
  app.add_option("--command", manifest.command,
                 "one of: solve, equivalence, two-point, lifting, convergence")
      ->required();
  app.add_option("--tol", manifest.tol, "solver relative residual tolerance");

  CLI11_PARSE(app, argc, argv);

  if (manifest.command != "convergence" && manifest.mesh_spec.empty()) {
    std::fprintf(stderr, "error: --mesh is required for command '%s'\n",
                 manifest.command.c_str());
    return 1;
  }
  return hmmf::run_manifest(manifest);
}
