#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ionshape {

using Vec2 = std::array<double, 2>;
using Tri = std::array<int, 3>;

enum class BoundaryLabel : std::uint8_t { GammaIn, Gamma1, Gamma2, Hole };

std::string label_token(BoundaryLabel l);
std::optional<BoundaryLabel> parse_label(const std::string& token);

struct BoundaryEdge {
  // Oriented so the domain lies on the left; the outward normal is the
  // tangent rotated by -pi/2.
  std::array<int, 2> v;
  BoundaryLabel label;
};

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what, int element = -1)
      : std::runtime_error(what), element_(element) {}
  // Offending triangle index, or -1 when not element specific.
  int element() const { return element_; }

 private:
  int element_;
};

// Planar triangulation with labeled boundary. Immutable after construction:
// every operation returns a new mesh or a report, so instances can be shared
// across threads freely.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<Tri> triangles;  // CCW
  std::vector<BoundaryEdge> boundary_edges;
  // Per-element membership of the design subregion Omega_2; empty means the
  // whole domain. Carried through deformations unchanged.
  std::vector<std::uint8_t> design_region;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  double edge_length(const std::array<int, 2>& e) const;
  // Unit outward normal of a boundary edge.
  Vec2 edge_normal(const BoundaryEdge& e) const;
  Vec2 edge_tangent(const BoundaryEdge& e) const;

  bool in_design_region(int element) const {
    return design_region.empty() || design_region[element] != 0;
  }

  // Vertex index sets derived from boundary labels (sorted, unique).
  std::vector<int> boundary_nodes(BoundaryLabel l) const;
  std::vector<int> all_boundary_nodes() const;

  // Checks all structural invariants; throws MeshError with a location on
  // the first violation. Canonicalizes boundary-edge orientation to match
  // the owning triangle.
  void validate_and_canonicalize();
};

struct QualityReport {
  double min_angle;  // radians
  double max_angle;
  double min_edge;
  bool is_weakly_acute;
};

Mesh load_mesh(const std::string& path);
void save_mesh(const std::string& path, const Mesh& mesh);

double domain_volume(const Mesh& mesh);
// Total length of boundary edges carrying the given label; nullopt = all.
double boundary_measure(const Mesh& mesh, std::optional<BoundaryLabel> label);

// Weak acuteness: for every interior edge, the two angles opposite to it in
// the adjacent triangles sum to at most pi - theta0.
QualityReport quality(const Mesh& mesh, double theta0 = 0.0);

// sqrt(4*area / (sqrt(3)*Ne)): edge length of an equilateral triangle whose
// area equals the mean element area.
double characteristic_length(const Mesh& mesh);

// x <- x + delta*zeta(x). Connectivity, labels and region attributes are
// preserved; throws MeshError carrying the first inverted triangle.
Mesh deform(const Mesh& mesh, const std::vector<Vec2>& zeta, double delta);

// Damps the vertical component near the horizontal walls: the second
// component of the field is multiplied by
//   1/(1+exp(-M(y-y_min)))  for y below the midheight,
//   1/(1+exp( M(y-y_max)))  otherwise.
std::vector<Vec2> sigmoid_filter(const Mesh& mesh, const std::vector<Vec2>& zeta,
                                 double M, double y_min, double y_max);

// Laplacian smoothing of interior vertices toward neighbor barycenters;
// boundary vertices stay fixed and any move that would invert an incident
// triangle is rejected.
Mesh smooth_interior(const Mesh& mesh, int iterations);

}  // namespace ionshape
