#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "liouville/thermo.hpp"

namespace liouville::cli {

json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

// Solution and branch files carry the canonical config so later stages can
// rebuild the discretization.
json solution_to_json(const Solution& s, bool with_values = true);
Solution solution_from_json(const json& j, const ProblemPtr& problem);

json branch_to_json(const Branch& b, const RunConfig& config, const std::vector<double>& grid);

struct LoadedBranch {
  RunConfig config;
  Branch branch;
};
LoadedBranch load_branch(const std::string& path);

// CSV with header rho,mu,E,J,S,height; %.17g so reruns compare bitwise.
void write_curve_csv(const ThermoCurve& curve, const std::string& path);
ThermoCurve read_curve_csv(const std::string& path);

std::string parameter_name(ParameterKind k);

}  // namespace liouville::cli
