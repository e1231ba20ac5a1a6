#pragma once

#include <string>

#include "json.hpp"
#include "liouville/domain.hpp"
#include "liouville/solver.hpp"

namespace liouville::cli {

using json = nlohmann::json;

struct RunConfig {
  std::string source;  // config file, empty for inline configs
  std::string domain_type = "disk";
  Point2 center{0, 0};
  double radius = 1;
  std::string mesh_path;  // resolved against the config file's directory
  SinkConfig sinks;
  SolverOptions solver;

  // Defaults filled in, mesh path resolved; keys sorted.
  json canonical() const;
  // FNV-1a 64 of canonical().dump(), as 16 hex digits.
  std::string hash() const;

  DomainGeometry make_domain() const;
  ProblemPtr make_problem() const;
};

// Parse error with line and column, from malformed JSON.
class ConfigParseError : public Error {
 public:
  using Error::Error;
};

// A referenced file does not exist.
class FileNotFound : public Error {
 public:
  using Error::Error;
};

// Reads and validates; every violation is collected into one
// ValidationError.
RunConfig parse_config(const std::string& path);
RunConfig config_from_json(const json& j, const std::string& base_dir = ".");

std::string fnv1a_hex(const std::string& bytes);

}  // namespace liouville::cli
