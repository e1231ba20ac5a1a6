#include "config.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "liouville/errors.hpp"

namespace liouville::cli {

namespace fs = std::filesystem;

namespace {

// Field readers that record problems instead of throwing.
struct Reader {
  std::vector<std::string>& problems;

  void keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (auto& [k, v] : obj.items())
      if (!allowed.count(k)) problems.push_back(where + ": unknown key '" + k + "'");
  }

  template <class T>
  void get(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      problems.push_back(where + "." + key + ": wrong type");
    }
  }

  void point(const json& obj, const char* key, Point2& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      problems.push_back(where + "." + key + ": expected [x, y]");
      return;
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  const json* object(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return nullptr;
    if (!obj.at(key).is_object()) {
      problems.push_back(where + "." + key + ": expected an object");
      return nullptr;
    }
    return &obj.at(key);
  }
};

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line, col = 1;
    else ++col;
  }
  return {line, col};
}

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json RunConfig::canonical() const {
  json j;
  if (domain_type == "disk")
    j["domain"] = {{"type", "disk"}, {"center", point_json(center)}, {"radius", radius}};
  else
    j["domain"] = {{"type", "mesh"}, {"path", mesh_path}};
  json pos = json::array();
  for (auto& p : sinks.positives) pos.push_back({{"q", point_json(p.q)}, {"alpha", p.alpha}});
  j["sinks"] = {{"q0", point_json(sinks.q0)}, {"beta", sinks.beta}, {"positives", pos}};
  j["solver"] = {{"tol", solver.tol},
                 {"max_iters", solver.max_iters},
                 {"max_backtracks", solver.max_backtracks},
                 {"level", solver.level},
                 {"angular", solver.mesh.angular},
                 {"min_radius", solver.mesh.min_radius}};
  j["quadrature"] = {{"radial", solver.quadrature.radial},
                     {"angular", solver.quadrature.angular},
                     {"subdivision", solver.quadrature.subdivision}};
  return j;
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical().dump()); }

DomainGeometry RunConfig::make_domain() const {
  if (domain_type == "disk") return DomainGeometry::disk(center, radius);
  return DomainGeometry::from_mesh(read_mesh(mesh_path));
}

ProblemPtr RunConfig::make_problem() const { return liouville::make_problem(make_domain(), sinks, solver); }

RunConfig config_from_json(const json& j, const std::string& base_dir) {
  std::vector<std::string> problems;
  Reader r{problems};
  RunConfig c;
  if (!j.is_object()) throw ValidationError({"config: expected a JSON object"});
  r.keys(j, "config", {"domain", "sinks", "solver", "quadrature", "comment"});

  bool domain_ok = false;
  if (const json* d = r.object(j, "domain", "config")) {
    r.keys(*d, "domain", {"type", "center", "radius", "path"});
    r.get(*d, "type", c.domain_type, "domain");
    if (c.domain_type == "disk") {
      r.point(*d, "center", c.center, "domain");
      r.get(*d, "radius", c.radius, "domain");
      if (!(c.radius > 0)) problems.push_back("domain.radius must be > 0");
      else domain_ok = true;
    } else if (c.domain_type == "mesh") {
      r.get(*d, "path", c.mesh_path, "domain");
      if (c.mesh_path.empty()) {
        problems.push_back("domain.path is required for a mesh domain");
      } else {
        fs::path p(c.mesh_path);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        c.mesh_path = fs::absolute(p).lexically_normal().string();
        if (!fs::exists(p)) throw FileNotFound("mesh file not found: " + c.mesh_path);
        domain_ok = true;
      }
    } else {
      problems.push_back("domain.type must be 'disk' or 'mesh'; got '" + c.domain_type + "'");
    }
  }

  if (const json* s = r.object(j, "sinks", "config")) {
    r.keys(*s, "sinks", {"q0", "beta", "positives"});
    r.point(*s, "q0", c.sinks.q0, "sinks");
    r.get(*s, "beta", c.sinks.beta, "sinks");
    if (s->contains("positives")) {
      const json& pos = s->at("positives");
      if (!pos.is_array()) problems.push_back("sinks.positives: expected an array");
      else
        for (std::size_t i = 0; i < pos.size(); ++i) {
          std::string where = "sinks.positives[" + std::to_string(i) + "]";
          if (!pos[i].is_object()) {
            problems.push_back(where + ": expected an object");
            continue;
          }
          r.keys(pos[i], where, {"q", "alpha"});
          PositiveSink ps{{0, 0}, 0};
          r.point(pos[i], "q", ps.q, where);
          r.get(pos[i], "alpha", ps.alpha, where);
          c.sinks.positives.push_back(ps);
        }
    }
  }

  if (const json* s = r.object(j, "solver", "config")) {
    r.keys(*s, "solver", {"tol", "max_iters", "max_backtracks", "level", "angular", "min_radius"});
    r.get(*s, "tol", c.solver.tol, "solver");
    r.get(*s, "max_iters", c.solver.max_iters, "solver");
    r.get(*s, "max_backtracks", c.solver.max_backtracks, "solver");
    r.get(*s, "level", c.solver.level, "solver");
    r.get(*s, "angular", c.solver.mesh.angular, "solver");
    r.get(*s, "min_radius", c.solver.mesh.min_radius, "solver");
  }
  if (!(c.solver.tol > 0)) problems.push_back("solver.tol must be > 0");
  if (c.solver.max_iters < 1) problems.push_back("solver.max_iters must be >= 1");
  if (c.solver.max_backtracks < 0) problems.push_back("solver.max_backtracks must be >= 0");
  if (c.solver.level < 0 || c.solver.level > 8) problems.push_back("solver.level must lie in [0, 8]");
  if (c.solver.mesh.angular < 0) problems.push_back("solver.angular must be >= 0 (0 picks from the level)");
  if (!(c.solver.mesh.min_radius > 0 && c.solver.mesh.min_radius < 1e-2))
    problems.push_back("solver.min_radius must lie in (0, 1e-2)");

  if (const json* q = r.object(j, "quadrature", "config")) {
    r.keys(*q, "quadrature", {"radial", "angular", "subdivision"});
    r.get(*q, "radial", c.solver.quadrature.radial, "quadrature");
    r.get(*q, "angular", c.solver.quadrature.angular, "quadrature");
    r.get(*q, "subdivision", c.solver.quadrature.subdivision, "quadrature");
  }
  if (c.solver.quadrature.radial < 1 || c.solver.quadrature.angular < 1 || c.solver.quadrature.subdivision < 0)
    problems.push_back("quadrature orders must be positive");

  // the sink rules need the domain only for the inside test
  std::vector<std::string> sink_problems;
  if (domain_ok) {
    try {
      DomainGeometry dom = c.make_domain();
      sink_problems = c.sinks.problems(&dom);
    } catch (const Error& e) {
      problems.push_back(std::string("domain: ") + e.what());
      sink_problems = c.sinks.problems(nullptr);
    }
  } else {
    sink_problems = c.sinks.problems(nullptr);
  }
  for (auto& p : sink_problems) problems.push_back("sinks: " + p);

  if (!problems.empty()) throw ValidationError(problems);
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte);
    std::ostringstream m;
    m << path << ":" << line << ":" << col << ": malformed JSON (" << e.what() << ")";
    throw ConfigParseError(m.str());
  }
  fs::path base = fs::path(path).parent_path();
  RunConfig c = config_from_json(j, base.empty() ? "." : base.string());
  c.source = path;
  return c;
}

}  // namespace liouville::cli
