#include "artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "liouville/errors.hpp"

namespace liouville::cli {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("file not found: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(path + ": malformed JSON (" + e.what() + ")");
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << j.dump(1) << "\n";
}

std::string parameter_name(ParameterKind k) {
  switch (k) {
    case ParameterKind::Rho: return "rho";
    case ParameterKind::Mu: return "mu";
    case ParameterKind::Amplitude: return "amplitude";
  }
  return "rho";
}

json solution_to_json(const Solution& s, bool with_values) {
  json j;
  j["form"] = s.form == Form::MeanField ? "mean_field" : "gelfand";
  j["rho"] = s.rho;
  j["mu"] = s.mu;
  j["log_mass"] = s.log_mass;
  j["max_value"] = s.max_value;
  j["max_location"] = {s.max_location.x(), s.max_location.y()};
  j["sink_value"] = s.problem ? s.sink_value() : 0.0;
  j["residual_norm"] = s.residual_norm;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  if (with_values) j["values"] = std::vector<double>(s.values.data(), s.values.data() + s.values.size());
  return j;
}

Solution solution_from_json(const json& j, const ProblemPtr& problem) {
  Solution s;
  try {
    s.form = j.at("form").get<std::string>() == "gelfand" ? Form::Gelfand : Form::MeanField;
    s.rho = j.at("rho").get<double>();
    s.mu = j.at("mu").get<double>();
    s.log_mass = j.at("log_mass").get<double>();
    s.max_value = j.at("max_value").get<double>();
    s.max_location = {j.at("max_location")[0].get<double>(), j.at("max_location")[1].get<double>()};
    s.residual_norm = j.at("residual_norm").get<double>();
    s.iterations = j.at("iterations").get<int>();
    s.converged = j.at("converged").get<bool>();
    auto v = j.at("values").get<std::vector<double>>();
    s.values = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("solution record: ") + e.what());
  }
  if (s.values.size() != problem->mesh().num_nodes())
    throw InvalidInput("solution record has " + std::to_string(s.values.size()) + " values but the mesh has " +
                       std::to_string(problem->mesh().num_nodes()) + " nodes");
  s.problem = problem;
  return s;
}

json branch_to_json(const Branch& b, const RunConfig& config, const std::vector<double>& grid) {
  json j;
  j["kind"] = "branch";
  j["config"] = config.canonical();
  j["config_hash"] = config.hash();
  j["parameter"] = parameter_name(b.parameter_kind);
  j["grid"] = grid;
  j["points"] = json::array();
  for (const auto& s : b.points) j["points"].push_back(solution_to_json(s));
  j["step_log"] = b.step_log;
  if (b.failure)
    j["failure"] = {{"index", b.failure->index}, {"message", b.failure->message}};
  else
    j["failure"] = nullptr;
  return j;
}

LoadedBranch load_branch(const std::string& path) {
  json j = read_json_file(path);
  if (j.value("kind", "") != "branch" || !j.contains("config")) throw InvalidInput(path + " is not a branch file");
  LoadedBranch out;
  out.config = config_from_json(j.at("config"));
  auto problem = out.config.make_problem();
  const std::string kind = j.value("parameter", "rho");
  out.branch.parameter_kind = kind == "amplitude" ? ParameterKind::Amplitude
                              : kind == "mu"      ? ParameterKind::Mu
                                                  : ParameterKind::Rho;
  for (const auto& p : j.at("points")) out.branch.points.push_back(solution_from_json(p, problem));
  if (j.contains("step_log")) out.branch.step_log = j.at("step_log").get<std::vector<std::string>>();
  if (j.contains("failure") && !j.at("failure").is_null())
    out.branch.failure = BranchFailure{j["failure"]["index"].get<int>(), j["failure"]["message"].get<std::string>()};
  return out;
}

void write_curve_csv(const ThermoCurve& curve, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidInput("cannot write " + path);
  std::fputs("rho,mu,E,J,S,height\n", f);
  for (const auto& t : curve.samples)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t.rho, t.mu, t.E, t.J, t.S, t.height);
  std::fclose(f);
}

ThermoCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("file not found: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "rho,mu,E,J,S,height")
    throw InvalidInput(path + ": expected header rho,mu,E,J,S,height");
  ThermoCurve c;
  c.branch_ref = path;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    ThermoSample t;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf%c", &t.rho, &t.mu, &t.E, &t.J, &t.S, &t.height, &tail) != 6)
      throw InvalidInput(path + ": bad row " + std::to_string(row));
    c.samples.push_back(t);
  }
  return c;
}

}  // namespace liouville::cli
