#include "shapenewton/config.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace shapenewton {

namespace {

using Json = nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

void check_keys(const Json& table, const std::string& prefix, std::initializer_list<std::string_view> allowed) {
  if (!table.is_object()) fail(prefix, "expected a table");
  for (const auto& [key, value] : table.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail(prefix.empty() ? key : prefix + "." + key, "unknown key");
  }
}

std::string path_of(const std::string& prefix, const char* key) { return prefix + "." + key; }

void read(const Json& t, const std::string& prefix, const char* key, double& out) {
  if (!t.contains(key)) return;
  if (!t[key].is_number()) fail(path_of(prefix, key), "expected a number");
  out = t[key].get<double>();
}

void read(const Json& t, const std::string& prefix, const char* key, int& out) {
  if (!t.contains(key)) return;
  if (!t[key].is_number_integer()) fail(path_of(prefix, key), "expected an integer");
  out = t[key].get<int>();
}

void read(const Json& t, const std::string& prefix, const char* key, bool& out) {
  if (!t.contains(key)) return;
  if (!t[key].is_boolean()) fail(path_of(prefix, key), "expected true or false");
  out = t[key].get<bool>();
}

void read(const Json& t, const std::string& prefix, const char* key, std::string& out) {
  if (!t.contains(key)) return;
  if (!t[key].is_string()) fail(path_of(prefix, key), "expected a string");
  out = t[key].get<std::string>();
}

void read_field(const Json& t, FieldSpec& spec) {
  check_keys(t, "field", {"name", "constant", "b1", "b2", "r1", "a1", "a2", "r2"});
  std::string name = "Test1";
  read(t, "field", "name", name);
  if (name == "Test1") {
    spec.kind = BuiltinField::Test1;
  } else if (name == "Test2") {
    spec.kind = BuiltinField::Test2;
  } else if (name == "Constant") {
    spec.kind = BuiltinField::Constant;
  } else {
    fail("field.name", "unknown field '" + name + "' (expected Test1, Test2 or Constant)");
  }
  read(t, "field", "constant", spec.constant);
  read(t, "field", "b1", spec.ellipse.b1);
  read(t, "field", "b2", spec.ellipse.b2);
  read(t, "field", "r1", spec.ellipse.r1);
  read(t, "field", "a1", spec.disc.a1);
  read(t, "field", "a2", spec.disc.a2);
  read(t, "field", "r2", spec.disc.r2);
}

void read_initial(const Json& t, const std::filesystem::path& base, InitialShapeSpec& spec) {
  const std::string p = "solver.initial";
  check_keys(t, p, {"shape", "center", "radius", "a", "b", "n", "path"});
  std::string shape = "circle";
  read(t, p, "shape", shape);
  if (shape == "circle") {
    spec.kind = InitialShapeSpec::Kind::Circle;
  } else if (shape == "ellipse") {
    spec.kind = InitialShapeSpec::Kind::Ellipse;
  } else if (shape == "file") {
    spec.kind = InitialShapeSpec::Kind::File;
  } else {
    fail(p + ".shape", "unknown shape '" + shape + "' (expected circle, ellipse or file)");
  }
  if (t.contains("center")) {
    const Json& c = t["center"];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
      fail(p + ".center", "expected [x, y]");
    }
    spec.center = Vec2(c[0].get<double>(), c[1].get<double>());
  }
  read(t, p, "radius", spec.radius);
  read(t, p, "a", spec.a);
  read(t, p, "b", spec.b);
  read(t, p, "n", spec.n);
  std::string path;
  read(t, p, "path", path);
  if (spec.kind == InitialShapeSpec::Kind::File) {
    if (path.empty()) fail(p + ".path", "required for shape = \"file\"");
    spec.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base / path;
  }
  if (spec.n < 3) fail(p + ".n", "must be at least 3");
  if (spec.radius <= 0) fail(p + ".radius", "must be positive");
  if (spec.a <= 0 || spec.b <= 0) fail(p + (spec.a <= 0 ? ".a" : ".b"), "must be positive");
}

void read_assembly(const Json& t, AssemblyOptions& opts) {
  const std::string p = "solver.assembly";
  check_keys(t, p, {"quadrature_degree", "boundary_nodes", "boundary_piece_factor", "max_level", "diameter_factor"});
  int degree = opts.rule->degree;
  read(t, p, "quadrature_degree", degree);
  if (degree == 4) {
    opts.rule = &TriangleRule::degree4();
  } else if (degree == 6) {
    opts.rule = &TriangleRule::degree6();
  } else {
    fail(p + ".quadrature_degree", "expected 4 or 6");
  }
  read(t, p, "boundary_nodes", opts.boundary_nodes);
  read(t, p, "boundary_piece_factor", opts.boundary_piece_factor);
  read(t, p, "max_level", opts.refinement.max_level);
  read(t, p, "diameter_factor", opts.refinement.diameter_factor);
  if (opts.boundary_nodes < 2 || opts.boundary_nodes > 12) fail(p + ".boundary_nodes", "expected 2..12");
  if (opts.boundary_piece_factor <= 0) fail(p + ".boundary_piece_factor", "must be positive");
  if (opts.refinement.max_level < 0) fail(p + ".max_level", "must be nonnegative");
  if (opts.refinement.diameter_factor <= 0) fail(p + ".diameter_factor", "must be positive");
}

void read_solver(const Json& t, const std::filesystem::path& base, RunConfig& cfg) {
  const std::string p = "solver";
  check_keys(t, p,
             {"method", "gamma_sigma", "sigma_exponent", "step_size", "max_iter", "accept_test", "accept_gamma",
              "accept_tol", "resample_spacing", "resample_ratio", "grad_tol", "point_tol", "stall_tol",
              "max_condition", "metric_diagnostics", "initial", "assembly"});
  SolverConfig& s = cfg.solver;
  std::string method = to_string(s.method);
  read(t, p, "method", method);
  const auto m = parse_method(method);
  if (!m) {
    fail("solver.method", "unknown method '" + method +
                              "' (expected NewtonH1, NewtonH2, NewtonRiemann, GradEuclid, GradH1ring or GradL2)");
  }
  s.method = *m;
  // Gradient methods run up to 999 iterations unless told otherwise.
  if (is_gradient(s.method)) s.max_iter = 999;
  read(t, p, "gamma_sigma", s.gamma_sigma);
  read(t, p, "sigma_exponent", s.sigma_exponent);
  read(t, p, "step_size", s.step_size);
  read(t, p, "max_iter", s.max_iter);
  read(t, p, "accept_test", s.accept_test);
  read(t, p, "accept_gamma", s.accept_gamma);
  read(t, p, "accept_tol", s.accept_tol);
  read(t, p, "resample_spacing", s.resample_spacing);
  read(t, p, "resample_ratio", s.resample_ratio);
  read(t, p, "grad_tol", s.grad_tol);
  read(t, p, "point_tol", s.point_tol);
  read(t, p, "stall_tol", s.stall_tol);
  read(t, p, "max_condition", s.max_condition);
  read(t, p, "metric_diagnostics", s.metric_diagnostics);
  if (t.contains("initial")) read_initial(t["initial"], base, cfg.initial);
  if (t.contains("assembly")) read_assembly(t["assembly"], s.assembly);
}

void read_output(const Json& t, RunConfig& cfg) {
  check_keys(t, "output", {"dir", "snapshots"});
  read(t, "output", "dir", cfg.output_dir);
  if (t.contains("snapshots")) {
    const Json& s = t["snapshots"];
    if (!s.is_array()) fail("output.snapshots", "expected a list of iteration numbers");
    cfg.solver.snapshots.clear();
    for (const Json& k : s) {
      if (!k.is_number_integer() || k.get<int>() < 0) fail("output.snapshots", "expected nonnegative integers");
      cfg.solver.snapshots.push_back(k.get<int>());
    }
  }
}

Json toml_to_json(std::string_view text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  std::ostringstream os;
  os << toml::json_formatter{table};
  return Json::parse(os.str());
}

}  // namespace

ScalarField FieldSpec::make() const {
  switch (kind) {
    case BuiltinField::Test1:
      return test1_field(ellipse);
    case BuiltinField::Test2:
      return test2_field(ellipse, disc);
    case BuiltinField::Constant:
      return constant_field(constant);
  }
  return test1_field(ellipse);
}

std::string FieldSpec::name() const {
  switch (kind) {
    case BuiltinField::Test1:
      return "Test1";
    case BuiltinField::Test2:
      return "Test2";
    case BuiltinField::Constant:
      return "Constant";
  }
  return "?";
}

PolygonalShape InitialShapeSpec::make() const {
  switch (kind) {
    case Kind::Circle:
      return make_circle(center, radius, n);
    case Kind::Ellipse:
      return make_ellipse(a, b, n, center);
    case Kind::File:
      return read_polyline(path);
  }
  return make_circle(center, radius, n);
}

std::string InitialShapeSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Circle:
      os << "circle(" << center.x() << ", " << center.y() << ", " << radius << ", " << n << ")";
      break;
    case Kind::Ellipse:
      os << "ellipse(" << a << ", " << b << ", " << n << ") at (" << center.x() << ", " << center.y() << ")";
      break;
    case Kind::File:
      os << "file(" << path.string() << ")";
      break;
  }
  return os.str();
}

RunConfig parse_config(std::string_view text, bool json, const std::string& name, const std::filesystem::path& base) {
  Json root;
  if (json) {
    try {
      root = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
  } else {
    root = toml_to_json(text);
  }
  RunConfig cfg;
  cfg.name = name;
  cfg.text = std::string(text);
  check_keys(root, "", {"name", "field", "solver", "output"});
  read(root, "", "name", cfg.name);
  if (root.contains("field")) read_field(root["field"], cfg.field);
  if (root.contains("solver")) read_solver(root["solver"], base, cfg);
  if (root.contains("output")) read_output(root["output"], cfg);
  if (cfg.output_dir.empty()) cfg.output_dir = cfg.name;
  if (cfg.output_dir.empty()) fail("output.dir", "must not be empty");
  try {
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = path.extension() == ".json" || (first != std::string::npos && text[first] == '{');
  RunConfig cfg = parse_config(text, json, path.stem().string(), path.parent_path());
  cfg.source = path;
  return cfg;
}

}  // namespace shapenewton
