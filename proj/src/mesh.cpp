#include "ionshape/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ionshape {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

std::array<int, 2> sorted_edge(int a, int b) {
  return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
}

double angle_at(const Vec2& at, const Vec2& p, const Vec2& q) {
  const double ux = p[0] - at[0], uy = p[1] - at[1];
  const double vx = q[0] - at[0], vy = q[1] - at[1];
  const double cross = ux * vy - uy * vx;
  const double dotp = ux * vx + uy * vy;
  return std::atan2(std::abs(cross), dotp);
}

}  // namespace

std::string label_token(BoundaryLabel l) {
  switch (l) {
    case BoundaryLabel::GammaIn: return "IN";
    case BoundaryLabel::Gamma1: return "G1";
    case BoundaryLabel::Gamma2: return "G2";
    case BoundaryLabel::Hole: return "HOLE";
  }
  return "?";
}

std::optional<BoundaryLabel> parse_label(const std::string& token) {
  if (token == "IN") return BoundaryLabel::GammaIn;
  if (token == "G1") return BoundaryLabel::Gamma1;
  if (token == "G2") return BoundaryLabel::Gamma2;
  if (token == "HOLE") return BoundaryLabel::Hole;
  return std::nullopt;
}

double Mesh::triangle_area(int t) const {
  const Tri& tr = triangles[t];
  return signed_area(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
}

double Mesh::edge_length(const std::array<int, 2>& e) const {
  const Vec2& a = vertices[e[0]];
  const Vec2& b = vertices[e[1]];
  return std::hypot(b[0] - a[0], b[1] - a[1]);
}

Vec2 Mesh::edge_tangent(const BoundaryEdge& e) const {
  const Vec2& a = vertices[e.v[0]];
  const Vec2& b = vertices[e.v[1]];
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  return {(b[0] - a[0]) / len, (b[1] - a[1]) / len};
}

Vec2 Mesh::edge_normal(const BoundaryEdge& e) const {
  const Vec2 t = edge_tangent(e);
  return {t[1], -t[0]};
}

std::vector<int> Mesh::boundary_nodes(BoundaryLabel l) const {
  std::set<int> s;
  for (const auto& e : boundary_edges)
    if (e.label == l) {
      s.insert(e.v[0]);
      s.insert(e.v[1]);
    }
  return {s.begin(), s.end()};
}

std::vector<int> Mesh::all_boundary_nodes() const {
  std::set<int> s;
  for (const auto& e : boundary_edges) {
    s.insert(e.v[0]);
    s.insert(e.v[1]);
  }
  return {s.begin(), s.end()};
}

void Mesh::validate_and_canonicalize() {
  const int nv = vertex_count();
  for (int t = 0; t < triangle_count(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int v = triangles[t][k];
      if (v < 0 || v >= nv)
        throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(v) + " out of range",
                        t);
    }
    if (triangle_area(t) <= 0.0)
      throw MeshError("inverted triangle " + std::to_string(t), t);
  }
  if (!design_region.empty() &&
      design_region.size() != static_cast<std::size_t>(triangle_count()))
    throw MeshError("design region attribute size mismatch");

  // Edge -> (owning triangle, oriented pair as it appears in that triangle).
  std::map<std::array<int, 2>, int> edge_use;
  std::map<std::array<int, 2>, std::array<int, 2>> oriented;
  for (int t = 0; t < triangle_count(); ++t) {
    const Tri& tr = triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tr[k], b = tr[(k + 1) % 3];
      const auto key = sorted_edge(a, b);
      edge_use[key] += 1;
      oriented[key] = {a, b};
    }
  }
  for (const auto& [key, count] : edge_use)
    if (count > 2)
      throw MeshError("edge (" + std::to_string(key[0]) + "," +
                      std::to_string(key[1]) + ") shared by more than two triangles");

  std::set<std::array<int, 2>> labeled;
  for (auto& e : boundary_edges) {
    const auto key = sorted_edge(e.v[0], e.v[1]);
    const auto it = edge_use.find(key);
    if (it == edge_use.end())
      throw MeshError("boundary edge (" + std::to_string(e.v[0]) + "," +
                      std::to_string(e.v[1]) + ") is not an edge of any triangle");
    if (it->second != 1)
      throw MeshError("boundary edge (" + std::to_string(e.v[0]) + "," +
                      std::to_string(e.v[1]) + ") is interior (shared by two triangles)");
    if (!labeled.insert(key).second)
      throw MeshError("boundary edge (" + std::to_string(e.v[0]) + "," +
                      std::to_string(e.v[1]) + ") carries more than one label");
    e.v = oriented[key];  // domain on the left
  }
  for (const auto& [key, count] : edge_use)
    if (count == 1 && !labeled.count(key))
      throw MeshError("unlabeled boundary edge (" + std::to_string(key[0]) + "," +
                      std::to_string(key[1]) + ")");
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);

  auto fail = [&](int line, const std::string& msg) -> MeshError {
    return MeshError(path + ":" + std::to_string(line) + ": " + msg);
  };

  int nline = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++nline;
      const auto pos = out.find('#');
      if (pos != std::string::npos) out.erase(pos);
      if (out.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };

  std::string line;
  if (!next_line(line)) throw fail(nline, "missing header");
  std::istringstream hdr(line);
  int nv = 0, nt = 0, ne = 0;
  if (!(hdr >> nv >> nt >> ne) || nv <= 0 || nt <= 0 || ne <= 0)
    throw fail(nline, "bad header, expected 'V T E' counts");

  Mesh mesh;
  mesh.vertices.reserve(nv);
  for (int i = 0; i < nv; ++i) {
    if (!next_line(line)) throw fail(nline, "unexpected end of file in vertex list");
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw fail(nline, "bad vertex line");
    mesh.vertices.push_back({x, y});
  }
  mesh.triangles.reserve(nt);
  for (int i = 0; i < nt; ++i) {
    if (!next_line(line)) throw fail(nline, "unexpected end of file in triangle list");
    std::istringstream ss(line);
    Tri t;
    if (!(ss >> t[0] >> t[1] >> t[2])) throw fail(nline, "bad triangle line");
    int region = -1;
    if (ss >> region) {
      if (mesh.design_region.empty()) mesh.design_region.assign(nt, 0);
      mesh.design_region[i] = region ? 1 : 0;
    }
    mesh.triangles.push_back(t);
  }
  mesh.boundary_edges.reserve(ne);
  for (int i = 0; i < ne; ++i) {
    if (!next_line(line)) throw fail(nline, "unexpected end of file in edge list");
    std::istringstream ss(line);
    int a, b;
    std::string token;
    if (!(ss >> a >> b >> token)) throw fail(nline, "bad boundary edge line");
    const auto label = parse_label(token);
    if (!label) throw fail(nline, "unknown boundary label '" + token + "'");
    mesh.boundary_edges.push_back({{a, b}, *label});
  }
  mesh.validate_and_canonicalize();
  return mesh;
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open for writing: " + path);
  out.precision(17);
  const bool regions = !mesh.design_region.empty();
  out << mesh.vertex_count() << ' ' << mesh.triangle_count() << ' '
      << mesh.boundary_edges.size() << '\n';
  for (const auto& v : mesh.vertices) out << v[0] << ' ' << v[1] << '\n';
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tr = mesh.triangles[t];
    out << tr[0] << ' ' << tr[1] << ' ' << tr[2];
    if (regions) out << ' ' << int(mesh.design_region[t]);
    out << '\n';
  }
  for (const auto& e : mesh.boundary_edges)
    out << e.v[0] << ' ' << e.v[1] << ' ' << label_token(e.label) << '\n';
  if (!out) throw MeshError("write failure: " + path);
}

double domain_volume(const Mesh& mesh) {
  double area = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) area += mesh.triangle_area(t);
  return area;
}

double boundary_measure(const Mesh& mesh, std::optional<BoundaryLabel> label) {
  double len = 0.0;
  for (const auto& e : mesh.boundary_edges)
    if (!label || e.label == *label) len += mesh.edge_length(e.v);
  return len;
}

QualityReport quality(const Mesh& mesh, double theta0) {
  QualityReport rep{};
  rep.min_angle = 4.0;  // > pi
  rep.max_angle = 0.0;
  rep.min_edge = std::numeric_limits<double>::max();

  // Opposite angle per (edge, adjacent triangle).
  std::map<std::array<int, 2>, std::vector<double>> opposite;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tr = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tr[k], b = tr[(k + 1) % 3], c = tr[(k + 2) % 3];
      const double ang = angle_at(mesh.vertices[c], mesh.vertices[a], mesh.vertices[b]);
      rep.min_angle = std::min(rep.min_angle, ang);
      rep.max_angle = std::max(rep.max_angle, ang);
      rep.min_edge = std::min(rep.min_edge, mesh.edge_length({a, b}));
      opposite[sorted_edge(a, b)].push_back(ang);
    }
  }
  rep.is_weakly_acute = true;
  const double pi = std::acos(-1.0);
  for (const auto& [edge, angles] : opposite) {
    if (angles.size() != 2) continue;  // boundary edge
    if (angles[0] + angles[1] > pi - theta0 + 1e-12) rep.is_weakly_acute = false;
  }
  return rep;
}

double characteristic_length(const Mesh& mesh) {
  return std::sqrt(4.0 * domain_volume(mesh) /
                   (std::sqrt(3.0) * mesh.triangle_count()));
}

Mesh deform(const Mesh& mesh, const std::vector<Vec2>& zeta, double delta) {
  if (zeta.size() != mesh.vertices.size())
    throw MeshError("deformation field size does not match vertex count");
  if (delta < 0.0) throw MeshError("negative deformation step");
  Mesh out = mesh;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    out.vertices[i][0] += delta * zeta[i][0];
    out.vertices[i][1] += delta * zeta[i][1];
  }
  for (int t = 0; t < out.triangle_count(); ++t)
    if (out.triangle_area(t) <= 0.0)
      throw MeshError("deformation inverts triangle " + std::to_string(t), t);
  return out;
}

std::vector<Vec2> sigmoid_filter(const Mesh& mesh, const std::vector<Vec2>& zeta,
                                 double M, double y_min, double y_max) {
  if (y_min >= y_max) throw MeshError("sigmoid filter requires y_min < y_max");
  const double mid = 0.5 * (y_min + y_max);
  std::vector<Vec2> out = zeta;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double y = mesh.vertices[i][1];
    const double factor = y < mid ? 1.0 / (1.0 + std::exp(-M * (y - y_min)))
                                  : 1.0 / (1.0 + std::exp(M * (y - y_max)));
    out[i][1] *= factor;
  }
  return out;
}

Mesh smooth_interior(const Mesh& mesh, int iterations) {
  Mesh out = mesh;
  const int nv = mesh.vertex_count();

  std::vector<std::set<int>> neighbor_sets(nv);
  std::vector<std::vector<int>> incident(nv);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tr = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      neighbor_sets[tr[k]].insert(tr[(k + 1) % 3]);
      neighbor_sets[tr[k]].insert(tr[(k + 2) % 3]);
      incident[tr[k]].push_back(t);
    }
  }
  std::vector<char> fixed(nv, 0);
  for (const int v : mesh.all_boundary_nodes()) fixed[v] = 1;

  for (int it = 0; it < iterations; ++it) {
    for (int v = 0; v < nv; ++v) {
      if (fixed[v] || neighbor_sets[v].empty()) continue;
      Vec2 bary{0.0, 0.0};
      for (const int nb : neighbor_sets[v]) {
        bary[0] += out.vertices[nb][0];
        bary[1] += out.vertices[nb][1];
      }
      const double inv = 1.0 / static_cast<double>(neighbor_sets[v].size());
      const Vec2 candidate{bary[0] * inv, bary[1] * inv};
      const Vec2 saved = out.vertices[v];
      out.vertices[v] = candidate;
      bool ok = true;
      for (const int t : incident[v])
        if (out.triangle_area(t) <= 0.0) {
          ok = false;
          break;
        }
      if (!ok) out.vertices[v] = saved;
    }
  }
  return out;
}

}  // namespace ionshape
