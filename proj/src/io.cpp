#include "ionshape/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace ionshape::io {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_e9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.8e", v);
  return buf;
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct RawConfig {
  std::string origin;
  std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)
  std::set<std::string> consumed;

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
  }

  bool has(const std::string& key) const { return entries.count(key) != 0; }

  template <typename F>
  void take(const std::string& key, F&& apply) {
    const auto it = entries.find(key);
    if (it == entries.end()) return;
    consumed.insert(key);
    apply(it->second.first, it->second.second);
  }

  void take_double(const std::string& key, double& out) {
    take(key, [&](const std::string& v, int line) {
      try {
        std::size_t pos = 0;
        out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
      } catch (...) {
        fail(line, "expected a number for '" + key + "', got '" + v + "'");
      }
    });
  }

  void take_int(const std::string& key, int& out) {
    take(key, [&](const std::string& v, int line) {
      try {
        std::size_t pos = 0;
        out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
      } catch (...) {
        fail(line, "expected an integer for '" + key + "', got '" + v + "'");
      }
    });
  }

  void take_uint(const std::string& key, unsigned& out) {
    int tmp = static_cast<int>(out);
    take_int(key, tmp);
    if (tmp < 0)
      throw ConfigError(origin + ": '" + key + "' must be nonnegative");
    out = static_cast<unsigned>(tmp);
  }

  void take_string(const std::string& key, std::string& out) {
    take(key, [&](const std::string& v, int) { out = v; });
  }

  void take_bool(const std::string& key, bool& out) {
    take(key, [&](const std::string& v, int line) {
      if (v == "on" || v == "true" || v == "1") out = true;
      else if (v == "off" || v == "false" || v == "0") out = false;
      else fail(line, "expected on/off for '" + key + "', got '" + v + "'");
    });
  }

  void reject_unknown(const std::vector<std::string>& known) const {
    for (const auto& [key, val] : entries) {
      if (consumed.count(key)) continue;
      std::string best;
      int best_d = 1 << 30;
      for (const auto& k : known) {
        const int d = levenshtein(key, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      std::string msg = "unknown key '" + key + "'";
      if (!best.empty() && best_d <= 4) msg += " (did you mean '" + best + "'?)";
      fail(val.second, msg);
    }
  }
};

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line;
  int nline = 0;
  while (std::getline(in, line)) {
    ++nline;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) raw.fail(nline, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) raw.fail(nline, "empty key");
    if (raw.entries.count(key)) raw.fail(nline, "duplicate key '" + key + "'");
    raw.entries[key] = {value, nline};
  }
  return raw;
}

std::vector<double> parse_list(const std::string& v, const std::string& key,
                               const RawConfig& raw, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("");
    } catch (...) {
      raw.fail(line, "bad number '" + item + "' in list '" + key + "'");
    }
  }
  return out;
}

std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "problem.species", "problem.z", "problem.c_inf", "problem.g",
      "problem.epsilon", "problem.tau", "problem.max_outer", "problem.newton_tol",
      "problem.newton_max", "problem.objective_region",
      "optimizer.max_iterations", "optimizer.gradient_form", "optimizer.c1",
      "optimizer.c1_factor", "optimizer.beta", "optimizer.gamma",
      "optimizer.step_fraction", "optimizer.max_halvings", "optimizer.filter",
      "optimizer.filter_m", "optimizer.smoothing_cadence",
      "optimizer.smooth_trigger_deg", "optimizer.quality_floor_deg",
      "optimizer.stop_rel_change", "optimizer.stop_patience",
      "flow.kind", "flow.epsilon0", "flow.alpha",
      "io.mesh_file", "io.generator", "io.resolution", "io.seed",
      "io.output_dir", "io.snapshot_cadence"};
  return keys;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RawConfig raw = tokenize(text, origin);
  RunConfig cfg;

  int species = -1;
  raw.take_int("problem.species", species);
  raw.take("problem.z", [&](const std::string& v, int line) {
    const std::vector<double> zs = parse_list(v, "problem.z", raw, line);
    cfg.problem.z.clear();
    for (const double z : zs) {
      if (z != std::floor(z)) raw.fail(line, "valences must be integers");
      cfg.problem.z.push_back(static_cast<int>(z));
    }
  });
  raw.take("problem.c_inf", [&](const std::string& v, int line) {
    cfg.problem.c_inf = parse_list(v, "problem.c_inf", raw, line);
  });
  raw.take_double("problem.g", cfg.problem.g);
  raw.take_double("problem.epsilon", cfg.problem.eps);
  raw.take_double("problem.tau", cfg.optimizer.gummel.tau);
  raw.take_int("problem.max_outer", cfg.optimizer.gummel.max_outer);
  raw.take_double("problem.newton_tol", cfg.optimizer.gummel.newton_tol);
  raw.take_int("problem.newton_max", cfg.optimizer.gummel.newton_max);
  std::string region = "all";
  raw.take_string("problem.objective_region", region);

  raw.take_int("optimizer.max_iterations", cfg.optimizer.max_iterations);
  std::string form = "boundary";
  raw.take_string("optimizer.gradient_form", form);
  raw.take_double("optimizer.c1", cfg.c1);
  raw.take_double("optimizer.c1_factor", cfg.c1_factor);
  raw.take_double("optimizer.beta", cfg.optimizer.constraints.beta);
  raw.take_double("optimizer.gamma", cfg.optimizer.constraints.gamma);
  raw.take_double("optimizer.step_fraction", cfg.optimizer.step_fraction);
  raw.take_int("optimizer.max_halvings", cfg.optimizer.max_halvings);
  raw.take_bool("optimizer.filter", cfg.optimizer.filter_enabled);
  raw.take_double("optimizer.filter_m", cfg.optimizer.filter_m);
  raw.take_int("optimizer.smoothing_cadence", cfg.optimizer.smoothing_cadence);
  double smooth_trigger_deg = 15.0, quality_floor_deg = 5.0;
  raw.take_double("optimizer.smooth_trigger_deg", smooth_trigger_deg);
  raw.take_double("optimizer.quality_floor_deg", quality_floor_deg);
  raw.take_double("optimizer.stop_rel_change", cfg.optimizer.stop_rel_change);
  raw.take_int("optimizer.stop_patience", cfg.optimizer.stop_patience);

  std::string flow_kind = "h1";
  raw.take_string("flow.kind", flow_kind);
  raw.take_double("flow.epsilon0", cfg.optimizer.flow.eps0);
  raw.take_double("flow.alpha", cfg.optimizer.flow.alpha);

  const bool has_mesh_file = raw.has("io.mesh_file");
  const bool has_generator = raw.has("io.generator");
  raw.take_string("io.mesh_file", cfg.mesh_file);
  raw.take_string("io.generator", cfg.generator);
  raw.take_int("io.resolution", cfg.resolution);
  raw.take_uint("io.seed", cfg.seed);
  raw.take_string("io.output_dir", cfg.output_dir);
  raw.take_int("io.snapshot_cadence", cfg.snapshot_cadence);

  raw.reject_unknown(known_keys());

  // Semantic checks.
  if (has_mesh_file && !cfg.mesh_file.empty() && has_generator && !cfg.generator.empty())
    throw ConfigError(origin + ": exactly one mesh source allowed (io.mesh_file or io.generator)");
  if (!cfg.mesh_file.empty()) cfg.generator.clear();
  if (cfg.mesh_file.empty() && cfg.generator.empty())
    throw ConfigError(origin + ": a mesh source is required");

  if (species >= 0 && species != static_cast<int>(cfg.problem.z.size()))
    throw ConfigError(origin + ": problem.species does not match the length of problem.z");
  if (cfg.problem.z.size() != cfg.problem.c_inf.size())
    throw ConfigError(origin + ": problem.z and problem.c_inf must have equal length");
  if (cfg.problem.z.empty()) throw ConfigError(origin + ": at least one species required");
  for (const double ci : cfg.problem.c_inf)
    if (ci < 0.0) throw ConfigError(origin + ": inlet concentrations must be nonnegative");
  if (cfg.problem.eps <= 0.0) throw ConfigError(origin + ": problem.epsilon must be positive");
  if (cfg.optimizer.gummel.tau <= 0.0) throw ConfigError(origin + ": problem.tau must be positive");
  if (cfg.optimizer.constraints.beta <= 0.0)
    throw ConfigError(origin + ": optimizer.beta must be positive");
  if (cfg.optimizer.constraints.gamma < 0.0)
    throw ConfigError(origin + ": optimizer.gamma must be nonnegative");
  if (cfg.c1 < 0.0) throw ConfigError(origin + ": optimizer.c1 must be positive (or 0 to use the factor)");
  if (cfg.c1 == 0.0 && cfg.c1_factor <= 0.0)
    throw ConfigError(origin + ": optimizer.c1_factor must be positive");
  if (cfg.optimizer.max_iterations < 0)
    throw ConfigError(origin + ": optimizer.max_iterations must be >= 0");
  if (cfg.optimizer.step_fraction <= 0.0)
    throw ConfigError(origin + ": optimizer.step_fraction must be positive");
  if (cfg.optimizer.flow.eps0 <= 0.0)
    throw ConfigError(origin + ": flow.epsilon0 must be positive");
  if (cfg.optimizer.flow.alpha <= 0.0)
    throw ConfigError(origin + ": flow.alpha must be positive");
  if (cfg.resolution < 2) throw ConfigError(origin + ": io.resolution must be >= 2");

  if (region == "all") cfg.optimizer.subdomain_objective = false;
  else if (region == "design") cfg.optimizer.subdomain_objective = true;
  else throw ConfigError(origin + ": problem.objective_region must be all|design");

  if (form == "domain") cfg.optimizer.gradient_form = shapegrad::GradientForm::Domain;
  else if (form == "boundary") cfg.optimizer.gradient_form = shapegrad::GradientForm::Boundary;
  else throw ConfigError(origin + ": optimizer.gradient_form must be domain|boundary");

  if (flow_kind == "h1") cfg.optimizer.flow.kind = flow::FlowKind::H1Vector;
  else if (flow_kind == "h1-scalar") cfg.optimizer.flow.kind = flow::FlowKind::H1Scalar;
  else if (flow_kind == "ct") cfg.optimizer.flow.kind = flow::FlowKind::CtHsym;
  else throw ConfigError(origin + ": flow.kind must be h1|h1-scalar|ct");

  cfg.optimizer.smooth_trigger_angle = smooth_trigger_deg * kPi / 180.0;
  cfg.optimizer.quality_floor_angle = quality_floor_deg * kPi / 180.0;
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string emit_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::vector<double> zd(cfg.problem.z.begin(), cfg.problem.z.end());
  out << "problem.species = " << cfg.problem.z.size() << "\n";
  out << "problem.z = " << join_list(zd) << "\n";
  out << "problem.c_inf = " << join_list(cfg.problem.c_inf) << "\n";
  out << "problem.g = " << format_double(cfg.problem.g) << "\n";
  out << "problem.epsilon = " << format_double(cfg.problem.eps) << "\n";
  out << "problem.tau = " << format_double(cfg.optimizer.gummel.tau) << "\n";
  out << "problem.max_outer = " << cfg.optimizer.gummel.max_outer << "\n";
  out << "problem.newton_tol = " << format_double(cfg.optimizer.gummel.newton_tol) << "\n";
  out << "problem.newton_max = " << cfg.optimizer.gummel.newton_max << "\n";
  out << "problem.objective_region = "
      << (cfg.optimizer.subdomain_objective ? "design" : "all") << "\n";
  out << "optimizer.max_iterations = " << cfg.optimizer.max_iterations << "\n";
  out << "optimizer.gradient_form = "
      << (cfg.optimizer.gradient_form == shapegrad::GradientForm::Domain ? "domain"
                                                                         : "boundary")
      << "\n";
  out << "optimizer.c1 = " << format_double(cfg.c1) << "\n";
  out << "optimizer.c1_factor = " << format_double(cfg.c1_factor) << "\n";
  out << "optimizer.beta = " << format_double(cfg.optimizer.constraints.beta) << "\n";
  out << "optimizer.gamma = " << format_double(cfg.optimizer.constraints.gamma) << "\n";
  out << "optimizer.step_fraction = " << format_double(cfg.optimizer.step_fraction) << "\n";
  out << "optimizer.max_halvings = " << cfg.optimizer.max_halvings << "\n";
  out << "optimizer.filter = " << (cfg.optimizer.filter_enabled ? "on" : "off") << "\n";
  out << "optimizer.filter_m = " << format_double(cfg.optimizer.filter_m) << "\n";
  out << "optimizer.smoothing_cadence = " << cfg.optimizer.smoothing_cadence << "\n";
  out << "optimizer.smooth_trigger_deg = "
      << format_double(cfg.optimizer.smooth_trigger_angle * 180.0 / kPi) << "\n";
  out << "optimizer.quality_floor_deg = "
      << format_double(cfg.optimizer.quality_floor_angle * 180.0 / kPi) << "\n";
  out << "optimizer.stop_rel_change = " << format_double(cfg.optimizer.stop_rel_change)
      << "\n";
  out << "optimizer.stop_patience = " << cfg.optimizer.stop_patience << "\n";
  std::string flow_kind = "h1";
  if (cfg.optimizer.flow.kind == flow::FlowKind::H1Scalar) flow_kind = "h1-scalar";
  if (cfg.optimizer.flow.kind == flow::FlowKind::CtHsym) flow_kind = "ct";
  out << "flow.kind = " << flow_kind << "\n";
  out << "flow.epsilon0 = " << format_double(cfg.optimizer.flow.eps0) << "\n";
  out << "flow.alpha = " << format_double(cfg.optimizer.flow.alpha) << "\n";
  out << "io.mesh_file = " << cfg.mesh_file << "\n";
  out << "io.generator = " << cfg.generator << "\n";
  out << "io.resolution = " << cfg.resolution << "\n";
  out << "io.seed = " << cfg.seed << "\n";
  out << "io.output_dir = " << cfg.output_dir << "\n";
  out << "io.snapshot_cadence = " << cfg.snapshot_cadence << "\n";
  return out.str();
}

std::string emit_defaults() { return emit_config(RunConfig{}); }

Mesh realize_mesh(const RunConfig& cfg) {
  if (!cfg.mesh_file.empty()) return load_mesh(cfg.mesh_file);
  return generate_domain(cfg.generator, cfg.resolution, cfg.seed);
}

namespace {

// Structured grid meshing over an axis-aligned box: cells kept when the
// predicate accepts the centroid, labels assigned from edge midpoints.
struct GridSpec {
  double x0, y0, hx, hy;
  int nx, ny;  // cells
};

template <typename InsideFn, typename LabelFn, typename RegionFn>
Mesh mesh_grid(const GridSpec& grid, InsideFn inside, LabelFn label_of,
               RegionFn region_of) {
  const int vx = grid.nx + 1;
  auto vid = [&](int i, int j) { return j * vx + i; };

  std::vector<char> keep(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double cx = grid.x0 + (i + 0.5) * grid.hx;
      const double cy = grid.y0 + (j + 0.5) * grid.hy;
      keep[j * grid.nx + i] = inside(cx, cy) ? 1 : 0;
    }

  Mesh mesh;
  std::vector<int> remap(static_cast<std::size_t>(vx) * (grid.ny + 1), -1);
  auto use_vertex = [&](int i, int j) {
    int& r = remap[vid(i, j)];
    if (r < 0) {
      r = mesh.vertex_count();
      mesh.vertices.push_back({grid.x0 + i * grid.hx, grid.y0 + j * grid.hy});
    }
    return r;
  };

  bool any_region = false;
  std::vector<std::uint8_t> regions;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      if (!keep[j * grid.nx + i]) continue;
      const int a = use_vertex(i, j), b = use_vertex(i + 1, j);
      const int c = use_vertex(i + 1, j + 1), d = use_vertex(i, j + 1);
      const double cx = grid.x0 + (i + 0.5) * grid.hx;
      const double cy = grid.y0 + (j + 0.5) * grid.hy;
      const std::uint8_t reg = region_of(cx, cy) ? 1 : 0;
      any_region = any_region || reg;
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
      regions.push_back(reg);
      regions.push_back(reg);
    }
  if (any_region) mesh.design_region = regions;

  // Boundary edges: cell sides with a missing neighbor.
  auto cell_kept = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= grid.nx || j >= grid.ny) return false;
    return keep[j * grid.nx + i] != 0;
  };
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      if (!cell_kept(i, j)) continue;
      struct Side {
        int di, dj;
        int ai, aj, bi, bj;
      };
      const Side sides[4] = {{0, -1, i, j, i + 1, j},
                             {1, 0, i + 1, j, i + 1, j + 1},
                             {0, 1, i + 1, j + 1, i, j + 1},
                             {-1, 0, i, j + 1, i, j}};
      for (const Side& s : sides) {
        if (cell_kept(i + s.di, j + s.dj)) continue;
        const int a = remap[vid(s.ai, s.aj)];
        const int b = remap[vid(s.bi, s.bj)];
        const double mx = 0.5 * (mesh.vertices[a][0] + mesh.vertices[b][0]);
        const double my = 0.5 * (mesh.vertices[a][1] + mesh.vertices[b][1]);
        mesh.boundary_edges.push_back({{a, b}, label_of(mx, my)});
      }
    }

  mesh.validate_and_canonicalize();
  return mesh;
}

}  // namespace

Mesh generate_square(int resolution) {
  if (resolution < 2) throw ConfigError("square resolution must be >= 2");
  const int n = resolution - 1;  // cells per side
  const GridSpec grid{0.0, 0.0, 1.0 / n, 1.0 / n, n, n};
  return mesh_grid(
      grid, [](double, double) { return true; },
      [&](double mx, double my) {
        if (mx < 1e-12) return BoundaryLabel::GammaIn;
        if (mx > 1.0 - 1e-12) return BoundaryLabel::Gamma2;
        (void)my;
        return BoundaryLabel::Gamma1;
      },
      [](double, double) { return false; });
}

Mesh generate_comb(int resolution) {
  if (resolution < 2) throw ConfigError("comb resolution must be >= 2");
  // Grid spacing divides the 0.1-aligned tooth geometry exactly.
  const int k = std::max(1, (resolution + 7) / 14);
  const double h = 0.1 / k;
  const GridSpec grid{0.0, 0.0, h, h, 12 * k, 14 * k};
  auto inside = [](double x, double y) {
    if (x < 0.8) return y >= 0.0 && y <= 1.4;
    // Teeth occupy the 0.2-bands 0, 2, 4, 6.
    const int band = static_cast<int>(std::floor(y / 0.2));
    return band % 2 == 0;
  };
  return mesh_grid(
      grid, inside,
      [&](double mx, double my) {
        if (mx < 1e-12) return BoundaryLabel::GammaIn;
        if ((my < 1e-12 || my > 1.4 - 1e-12) && mx < 0.7) return BoundaryLabel::Gamma1;
        return BoundaryLabel::Gamma2;
      },
      [](double cx, double) { return cx > 0.7; });
}

Mesh generate_porous(int resolution, unsigned seed) {
  if (resolution < 2) throw ConfigError("porous resolution must be >= 2");
  const int n = resolution;
  const double h = 1.4 / n;
  struct Hole {
    double cx, cy, rx, ry;
  };
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  std::uniform_real_distribution<double> radius(0.07, 0.12);
  std::uniform_real_distribution<double> aspect(0.8, 1.2);
  std::vector<Hole> holes;
  for (const double cy0 : {0.35, 0.70, 1.05}) {
    Hole hole;
    hole.cx = 1.05 + jitter(rng);
    hole.cy = cy0 + jitter(rng);
    hole.rx = radius(rng);
    hole.ry = hole.rx * aspect(rng);
    if (hole.cx - hole.rx < 0.72 || hole.cx + hole.rx > 1.38 ||
        hole.cy - hole.ry < 0.02 || hole.cy + hole.ry > 1.38)
      throw ConfigError("generated hole overlaps the outer boundary");
    holes.push_back(hole);
  }
  auto in_hole = [holes](double x, double y) {
    for (const Hole& hole : holes) {
      const double dx = (x - hole.cx) / hole.rx;
      const double dy = (y - hole.cy) / hole.ry;
      if (dx * dx + dy * dy < 1.0) return true;
    }
    return false;
  };
  const GridSpec grid{0.0, 0.0, h, h, n, n};
  return mesh_grid(
      grid, [&](double x, double y) { return !in_hole(x, y); },
      [&](double mx, double my) {
        if (mx < 1e-12) return BoundaryLabel::GammaIn;
        const bool outer = mx > 1.4 - 1e-12 || my < 1e-12 || my > 1.4 - 1e-12;
        if (!outer) return BoundaryLabel::Hole;
        if ((my < 1e-12 || my > 1.4 - 1e-12) && mx < 0.7) return BoundaryLabel::Gamma1;
        return BoundaryLabel::Gamma2;
      },
      [](double cx, double) { return cx > 0.7; });
}

Mesh generate_wavy(int resolution) {
  if (resolution < 2) throw ConfigError("wavy resolution must be >= 2");
  const int nx = resolution;
  const int ny = 7 * (nx - 1) + 1;
  auto curve = [](double y) { return 0.4 + 0.05 * std::sin(55.0 / 7.0 * kPi * y); };

  Mesh mesh;
  auto vid = [&](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j) {
    const double y = 1.4 * j / (ny - 1);
    const double xr = curve(y);
    for (int i = 0; i < nx; ++i)
      mesh.vertices.push_back({xr * i / (nx - 1), y});
  }
  auto dist2 = [&](int a, int b) {
    const Vec2& p = mesh.vertices[a];
    const Vec2& q = mesh.vertices[b];
    return (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
  };
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j);
      const int c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if (dist2(a, c) <= dist2(b, d)) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  for (int j = 0; j + 1 < ny; ++j) {
    mesh.boundary_edges.push_back({{vid(0, j + 1), vid(0, j)}, BoundaryLabel::GammaIn});
    mesh.boundary_edges.push_back(
        {{vid(nx - 1, j), vid(nx - 1, j + 1)}, BoundaryLabel::Gamma2});
  }
  for (int i = 0; i + 1 < nx; ++i) {
    mesh.boundary_edges.push_back({{vid(i, 0), vid(i + 1, 0)}, BoundaryLabel::Gamma1});
    mesh.boundary_edges.push_back(
        {{vid(i + 1, ny - 1), vid(i, ny - 1)}, BoundaryLabel::Gamma1});
  }
  mesh.validate_and_canonicalize();
  return mesh;
}

Mesh generate_domain(const std::string& name, int resolution, unsigned seed) {
  if (name == "square") return generate_square(resolution);
  if (name == "comb") return generate_comb(resolution);
  if (name == "porous") return generate_porous(resolution, seed);
  if (name == "wavy") return generate_wavy(resolution);
  throw ConfigError("unknown generator '" + name + "' (square|comb|porous|wavy)");
}

void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, fem::ScalarField>>& fields) {
  for (const auto& [name, field] : fields)
    if (field.size() != static_cast<std::size_t>(mesh.vertex_count()))
      throw ConfigError("field '" + name + "' is not sized to the vertex count");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "# vtk DataFile Version 3.0\n";
  out << "ionshape output\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertex_count() << " double\n";
  for (const auto& v : mesh.vertices)
    out << format_e9(v[0]) << ' ' << format_e9(v[1]) << ' ' << format_e9(0.0) << '\n';
  out << "CELLS " << mesh.triangle_count() << ' ' << 4 * mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.triangle_count() << '\n';
  for (int t = 0; t < mesh.triangle_count(); ++t) out << "5\n";
  if (!fields.empty()) {
    out << "POINT_DATA " << mesh.vertex_count() << '\n';
    for (const auto& [name, field] : fields) {
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (const double v : field) out << format_e9(v) << '\n';
    }
  }
  if (!out) throw ConfigError("write failure: " + path);
}

VtkData read_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open VTK file: " + path);
  auto expect_line = [&](const std::string& want) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != want)
      throw ConfigError(path + ": expected '" + want + "'");
  };
  expect_line("# vtk DataFile Version 3.0");
  std::string title;
  std::getline(in, title);
  expect_line("ASCII");
  expect_line("DATASET UNSTRUCTURED_GRID");

  VtkData data;
  std::string word;
  int count = 0;
  if (!(in >> word >> count) || word != "POINTS")
    throw ConfigError(path + ": expected POINTS section");
  if (!(in >> word) || word != "double")
    throw ConfigError(path + ": POINTS must use double");
  data.points.resize(count);
  for (int i = 0; i < count; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) throw ConfigError(path + ": truncated POINTS");
    data.points[i] = {x, y};
  }
  int total = 0;
  if (!(in >> word >> count >> total) || word != "CELLS")
    throw ConfigError(path + ": expected CELLS section");
  if (total != 4 * count) throw ConfigError(path + ": CELLS size must be 4*T for triangles");
  data.cells.resize(count);
  for (int i = 0; i < count; ++i) {
    int deg, a, b, c;
    if (!(in >> deg >> a >> b >> c) || deg != 3)
      throw ConfigError(path + ": only triangle cells supported");
    data.cells[i] = {a, b, c};
  }
  int type_count = 0;
  if (!(in >> word >> type_count) || word != "CELL_TYPES" || type_count != count)
    throw ConfigError(path + ": expected CELL_TYPES matching the cell count");
  for (int i = 0; i < count; ++i) {
    int ty;
    if (!(in >> ty) || ty != 5) throw ConfigError(path + ": cell type must be 5");
  }
  if (in >> word) {
    if (word != "POINT_DATA") throw ConfigError(path + ": unexpected section " + word);
    int npts = 0;
    if (!(in >> npts) || npts != static_cast<int>(data.points.size()))
      throw ConfigError(path + ": POINT_DATA count mismatch");
    while (in >> word) {
      if (word != "SCALARS") throw ConfigError(path + ": expected SCALARS, got " + word);
      std::string name, type;
      int comps = 0;
      if (!(in >> name >> type >> comps) || type != "double" || comps != 1)
        throw ConfigError(path + ": SCALARS must be 'name double 1'");
      std::string lut, tbl;
      if (!(in >> lut >> tbl) || lut != "LOOKUP_TABLE" || tbl != "default")
        throw ConfigError(path + ": expected LOOKUP_TABLE default");
      fem::ScalarField f(npts);
      for (int i = 0; i < npts; ++i)
        if (!(in >> f[i])) throw ConfigError(path + ": truncated scalar field " + name);
      data.fields.emplace_back(name, std::move(f));
    }
  }
  return data;
}

void write_history_csv(const std::string& path, const driver::History& history) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "iteration,objective,weighted_concentration,volume,volume_error,"
         "multiplier,step,gradient_pairing,min_angle,lagrangian,lagrangian_prev,"
         "forced\n";
  for (const auto& r : history.records) {
    out << r.iteration << ',' << format_double(r.objective) << ','
        << format_double(r.weighted_concentration) << ',' << format_double(r.volume)
        << ',' << format_double(r.volume_error) << ',' << format_double(r.multiplier)
        << ',' << format_double(r.step) << ',' << format_double(r.gradient_pairing)
        << ',' << format_double(r.min_angle) << ',' << format_double(r.lagrangian)
        << ',' << format_double(r.lagrangian_prev) << ',' << (r.forced ? 1 : 0)
        << '\n';
  }
  if (!out) throw ConfigError("write failure: " + path);
}

driver::History read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  driver::History history;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) throw ConfigError(path + ": bad CSV row '" + line + "'");
    driver::HistoryRecord r;
    r.iteration = std::stoi(cells[0]);
    r.objective = std::stod(cells[1]);
    r.weighted_concentration = std::stod(cells[2]);
    r.volume = std::stod(cells[3]);
    r.volume_error = std::stod(cells[4]);
    r.multiplier = std::stod(cells[5]);
    r.step = std::stod(cells[6]);
    r.gradient_pairing = std::stod(cells[7]);
    r.min_angle = std::stod(cells[8]);
    r.lagrangian = std::stod(cells[9]);
    r.lagrangian_prev = std::stod(cells[10]);
    r.forced = std::stoi(cells[11]) != 0;
    history.records.push_back(r);
  }
  return history;
}

}  // namespace ionshape::io
