// Command-line front end: run an optimization from a config file, generate
// experiment meshes, check the shape derivatives against finite differences,
// or print the default configuration.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "ionshape/driver.hpp"
#include "ionshape/io.hpp"
#include "ionshape/kernels.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitMesh = 3;

using namespace ionshape;

int cmd_run(const std::string& config_path) {
  io::RunConfig cfg = io::parse_config(config_path);
  Mesh mesh = io::realize_mesh(cfg);

  if (cfg.c1 > 0.0)
    cfg.optimizer.constraints.c1 = cfg.c1;
  else
    cfg.optimizer.constraints.c1 = cfg.c1_factor * domain_volume(mesh);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string out = cfg.output_dir;
  cfg.optimizer.snapshot_cadence = cfg.snapshot_cadence;
  if (cfg.snapshot_cadence > 0) {
    cfg.optimizer.snapshot = [out](int iter, const Mesh& m, const pnp::State& st) {
      std::vector<std::pair<std::string, fem::ScalarField>> fields;
      fields.emplace_back("phi", st.phi);
      for (std::size_t i = 0; i < st.c.size(); ++i)
        fields.emplace_back("c" + std::to_string(i + 1), st.c[i]);
      char name[64];
      std::snprintf(name, sizeof(name), "snapshot_%04d.vtk", iter);
      io::write_vtk(out + "/" + name, m, fields);
    };
  }

  const driver::OptimizeResult result = driver::optimize(mesh, cfg.problem, cfg.optimizer);

  io::write_history_csv(out + "/history.csv", result.history);
  {
    std::vector<std::pair<std::string, fem::ScalarField>> fields;
    fields.emplace_back("phi", result.state.phi);
    for (std::size_t i = 0; i < result.state.c.size(); ++i)
      fields.emplace_back("c" + std::to_string(i + 1), result.state.c[i]);
    io::write_vtk(out + "/final.vtk", result.mesh, fields);
    save_mesh(out + "/final.msh", result.mesh);
  }

  const auto& last = result.history.records.back();
  std::cout << "iterations:              " << last.iteration << "\n"
            << "weighted concentration:  " << last.weighted_concentration << "\n"
            << "volume:                  " << last.volume << " (target "
            << cfg.optimizer.constraints.c1 << ")\n"
            << "relative volume error:   "
            << last.volume_error / cfg.optimizer.constraints.c1 << "\n"
            << "outputs in:              " << out << "\n";
  if (result.aborted) {
    std::cerr << "aborted: " << result.abort_reason << "\n";
    return kExitMesh;
  }
  return 0;
}

int cmd_generate(const std::string& name, int resolution, const std::string& out_path,
                 unsigned seed) {
  const Mesh mesh = io::generate_domain(name, resolution, seed);
  save_mesh(out_path, mesh);
  const QualityReport q = quality(mesh);
  std::cout << "vertices:  " << mesh.vertex_count() << "\n"
            << "triangles: " << mesh.triangle_count() << "\n"
            << "min angle: " << q.min_angle * 180.0 / M_PI << " deg\n"
            << "written:   " << out_path << "\n";
  return 0;
}

int cmd_validate_gradient(const std::string& config_path) {
  const io::RunConfig cfg = io::parse_config(config_path);
  const Mesh mesh = io::realize_mesh(cfg);
  const adjoint::ObjectiveSpec spec = cfg.optimizer.subdomain_objective
                                          ? adjoint::ObjectiveSpec::from_mesh_region(mesh)
                                          : adjoint::ObjectiveSpec::whole_domain();

  // Smooth bump supported near Gamma_2, vanishing on Gamma_in and Gamma_1.
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& v : mesh.vertices) {
    xmin = std::min(xmin, v[0]);
    xmax = std::max(xmax, v[0]);
    ymin = std::min(ymin, v[1]);
    ymax = std::max(ymax, v[1]);
  }
  std::vector<Vec2> theta(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double sx = (mesh.vertices[i][0] - xmin) / (xmax - xmin);
    const double sy = (mesh.vertices[i][1] - ymin) / (ymax - ymin);
    const double bump = std::sin(M_PI * sy);
    theta[i] = {sx * sx * bump * bump, 0.0};
  }

  const std::vector<double> t_list = {1e-2, 5e-3, 2.5e-3};
  const driver::GradientCheck check = driver::validate_shape_derivative(
      mesh, cfg.problem, spec, theta, t_list, cfg.optimizer.gummel);

  std::printf("dJ domain form:   % .9e\n", check.dj_domain);
  std::printf("dJ boundary form: % .9e\n", check.dj_boundary);
  std::printf("%12s %18s %18s %14s\n", "t", "forward quotient", "central quotient",
              "central err");
  for (const auto& row : check.rows)
    std::printf("%12.3e %18.9e %18.9e %14.3e\n", row.t, row.forward_quotient,
                row.central_quotient,
                std::abs(row.central_quotient - check.dj_domain));
  std::printf("observed central-difference orders:");
  for (const double o : check.central_orders) std::printf(" %.2f", o);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PNP-constrained shape optimization of ionic concentration"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the optimization loop from a config");
  run->add_option("config", config_path, "config file")->required();

  std::string gen_name, gen_out;
  int gen_resolution = 40;
  unsigned gen_seed = 1;
  auto* gen = app.add_subcommand("generate", "generate an experiment mesh");
  gen->add_option("name", gen_name, "square|comb|porous|wavy")->required();
  gen->add_option("resolution", gen_resolution, "grid resolution")->required();
  gen->add_option("out", gen_out, "output mesh file")->required();
  gen->add_option("--seed", gen_seed, "random seed for the porous holes");

  std::string vg_config;
  auto* vg = app.add_subcommand("validate-gradient",
                                "finite-difference check of the shape derivatives");
  vg->add_option("config", vg_config, "config file")->required();

  auto* defaults = app.add_subcommand("emit-defaults", "print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitConfig : 0;
  }

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (gen->parsed()) return cmd_generate(gen_name, gen_resolution, gen_out, gen_seed);
    if (vg->parsed()) return cmd_validate_gradient(vg_config);
    if (defaults->parsed()) {
      std::cout << ionshape::io::emit_defaults();
      return 0;
    }
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fem::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const MeshError& e) {
    std::cerr << "mesh failure: " << e.what() << "\n";
    return kExitMesh;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
