#pragma once

#include "shapenewton/fields.hpp"
#include "shapenewton/geometry.hpp"
#include "shapenewton/optimize.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shapenewton {

/// Invalid or unreadable configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldSpec {
  BuiltinField kind = BuiltinField::Test1;
  double constant = 1.0;
  EllipseParams ellipse;
  DiscParams disc;

  ScalarField make() const;
  std::string name() const;
};

struct InitialShapeSpec {
  enum class Kind { Circle, Ellipse, File };
  Kind kind = Kind::Circle;
  Vec2 center = Vec2::Zero();
  double radius = 1.5;
  double a = 1.0;
  double b = 1.0;
  int n = 200;
  std::filesystem::path path;  // Kind::File, resolved against the config's directory

  PolygonalShape make() const;
  std::string describe() const;
};

struct RunConfig {
  std::string name;         // defaults to the config file stem
  std::filesystem::path source;
  FieldSpec field;
  SolverConfig solver;
  InitialShapeSpec initial;
  std::string output_dir;   // relative to the output root; defaults to name
  std::string text;         // the configuration as read, echoed into the manifest
};

/// Parses TOML, or JSON when `json` is set. `base` resolves relative paths.
RunConfig parse_config(std::string_view text, bool json, const std::string& name,
                       const std::filesystem::path& base = {});
/// Reads a .toml or .json file (JSON also detected by a leading '{').
RunConfig load_config(const std::filesystem::path& path);

}  // namespace shapenewton
