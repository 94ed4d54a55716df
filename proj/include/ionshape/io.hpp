#pragma once

#include <map>
#include <string>
#include <vector>

#include "ionshape/driver.hpp"
#include "ionshape/mesh.hpp"
#include "ionshape/pnp.hpp"

namespace ionshape::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full run description parsed from the flat key-value grammar. Key prefixes:
// problem., optimizer., flow., io.; '#' starts a comment. Unknown keys are
// rejected with a suggestion.
struct RunConfig {
  // exactly one mesh source
  std::string mesh_file;   // empty when generating
  std::string generator = "square";
  int resolution = 40;
  unsigned seed = 1;

  pnp::Problem problem{{1}, {1.0}, -0.75, 1.0};
  driver::OptimizerConfig optimizer;
  // Volume target: absolute when c1 > 0, otherwise c1_factor times the
  // initial volume (resolved when the mesh is known).
  double c1 = 0.0;
  double c1_factor = 1.5;

  std::string output_dir = "out";
  int snapshot_cadence = 10;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Default configuration in the same grammar; parsing it back reproduces the
// defaults exactly.
std::string emit_defaults();
std::string emit_config(const RunConfig& cfg);

// Builds the mesh named by the config (generator or file).
Mesh realize_mesh(const RunConfig& cfg);

// Structured generators for the experiment geometries. `resolution` scales
// the grid density; all outputs are validated and carry the standard labels
// (left IN, top/bottom G1, deformable right side G2, interior holes HOLE).
Mesh generate_domain(const std::string& name, int resolution, unsigned seed = 1);

Mesh generate_square(int resolution);
Mesh generate_comb(int resolution);
Mesh generate_porous(int resolution, unsigned seed);
Mesh generate_wavy(int resolution);

// Legacy-VTK ASCII unstructured grid with point scalars; 9-significant-digit
// scientific formatting for bit-stable output.
void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, fem::ScalarField>>& fields);

struct VtkData {
  std::vector<Vec2> points;
  std::vector<Tri> cells;
  std::vector<std::pair<std::string, fem::ScalarField>> fields;
};
// Reader/validator for the writer's schema; throws ConfigError on violations.
VtkData read_vtk(const std::string& path);

void write_history_csv(const std::string& path, const driver::History& history);
driver::History read_history_csv(const std::string& path);

}  // namespace ionshape::io
