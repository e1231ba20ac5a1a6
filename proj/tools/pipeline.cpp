#include "pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "artifacts.hpp"
#include "config.hpp"
#include "liouville/asymptotics.hpp"
#include "liouville/classify.hpp"
#include "liouville/oracle_disk.hpp"
#include "liouville/spectral.hpp"
#include "liouville/thermo.hpp"

namespace liouville::cli {

namespace {

constexpr double kIdentityTol = 1e-6;
constexpr double kLegendreTol = 1e-5;

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": cannot read '" + item + "' as a number");
    }
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

// "a:b:n" (n evenly spaced values, ends included) or "v1,v2,...".
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') == std::string::npos) return parse_list(s, "--grid");
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw UsageError("--grid: expected a:b:n or a comma list");
  double a = parse_list(parts[0], "--grid")[0], b = parse_list(parts[1], "--grid")[0];
  double nd = parse_list(parts[2], "--grid")[0];
  int n = static_cast<int>(nd);
  if (n != nd || n < 1) throw UsageError("--grid: n must be a positive integer");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return g;
}

json tolerances(const RunConfig& c) {
  return {{"solver_tol", c.solver.tol},
          {"max_iters", c.solver.max_iters},
          {"quadrature", c.canonical()["quadrature"]},
          {"identity_rel", kIdentityTol},
          {"legendre", kLegendreTol},
          {"classify_rule", "tol_D = max(2 extrapolation_error, 1e-2 |D0| + 1e-6)"}};
}

json header(const std::string& command, const RunConfig& c) {
  return {{"command", command}, {"config", c.canonical()}, {"config_hash", c.hash()}, {"tolerances", tolerances(c)}};
}

RunConfig load_solution_config(const json& j) {
  if (!j.contains("config")) throw UsageError("solution file lacks its config; write it with the solve command");
  return config_from_json(j.at("config"));
}

json law_json(const LawCheck& c) {
  json j = {{"indices", c.indices}, {"lambda", c.lambda}, {"values", c.values}, {"threshold", c.threshold},
            {"notes", c.notes}};
  j["rate"] = std::isfinite(c.rate) ? json(c.rate) : json(nullptr);
  return j;
}

struct Args {
  std::string config, out, guess, solution, branch, curve, verdict, law, grid, param = "rho", radii = "0.2,0.1,0.05,0.025";
  std::string rows, eps = "1e-2,1e-3,1e-4";
  std::string rho_grid, gamma_grid, grade_at;
  std::optional<double> rho, mu, beta, tau, radius;
  int level = 5;
  double threshold = 5;
  int k = 3;
  unsigned seed = 0;
  bool seed_given = false;
};

int cmd_mesh(const Args& a, std::ostream& out) {
  Mesh m;
  if (!a.config.empty()) {
    m = parse_config(a.config).make_problem()->mesh();
  } else {
    if (!a.radius || !(*a.radius > 0)) throw UsageError("mesh: give --config, or --radius R > 0 with --level");
    if (a.level < 0 || a.level > 8) throw UsageError("mesh: --level must lie in [0, 8]");
    std::optional<Point2> grade;
    if (!a.grade_at.empty()) {
      auto g = parse_list(a.grade_at, "--grade-at");
      if (g.size() != 2) throw UsageError("--grade-at: expected x,y");
      grade = Point2(g[0], g[1]);
      if (grade->norm() >= *a.radius) throw UsageError("--grade-at: point must lie inside the disk");
    }
    m = make_disk_mesh({0, 0}, *a.radius, a.level, grade);
  }
  write_mesh(m, a.out);
  out << "mesh: " << m.num_nodes() << " nodes, " << m.num_triangles() << " triangles -> " << a.out << "\n";
  return 0;
}

// Table of closed-form disk values, one row per rho (or gamma).
int cmd_oracle(const Args& a, std::ostream& out) {
  double beta = -0.5;
  if (!a.config.empty()) {
    RunConfig c = parse_config(a.config);
    if (c.domain_type != "disk" || c.radius != 1 || c.center != Point2(0, 0) || c.sinks.q0 != Point2(0, 0) ||
        !c.sinks.positives.empty())
      throw UsageError("oracle: closed forms exist only for the centred unit disk with one sink at the centre");
    beta = c.sinks.beta;
  }
  if (a.beta) beta = *a.beta;
  if (!(beta > -1 && beta < 0)) throw UsageError("oracle: beta must lie in (-1, 0)");
  if (a.rho_grid.empty() == a.gamma_grid.empty()) throw UsageError("oracle: give exactly one of --rho and --gamma");
  const bool by_rho = !a.rho_grid.empty();
  std::vector<DiskState> states;
  for (double v : parse_grid(by_rho ? a.rho_grid : a.gamma_grid))
    states.push_back(by_rho ? DiskState::from_rho(beta, v) : DiskState::from_gamma(beta, v));
  std::vector<std::array<double, 6>> rows;
  for (const auto& st : states) {
    // the heights need a positive mass
    double I = NAN, l = NAN, c = NAN;
    if (st.rho > 0) {
      auto h = disk_mass_and_heights(st);
      I = h.I_w, l = h.lambda, c = h.c;
    }
    rows.push_back({st.rho, st.gamma, disk_energy(st), I, l, c});
  }
  std::FILE* f = std::fopen(a.out.c_str(), "w");
  if (!f) throw InvalidInput("cannot write " + a.out);
  std::fputs("rho,gamma,E,I_w,lambda,c\n", f);
  for (const auto& r : rows) std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r[0], r[1], r[2], r[3], r[4], r[5]);
  std::fclose(f);
  out << "oracle: " << states.size() << " rows (beta " << beta << ") -> " << a.out << "\n";
  return 0;
}

int cmd_solve(const Args& a, std::ostream& out) {
  RunConfig c = parse_config(a.config);
  if (a.rho.has_value() == a.mu.has_value()) throw UsageError("solve: give exactly one of --rho and --mu");
  auto p = c.make_problem();
  std::optional<Vec> guess;
  if (!a.guess.empty()) guess = solution_from_json(read_json_file(a.guess), p).values;
  Solution s = a.rho ? solve_mean_field(p, *a.rho, guess) : solve_gelfand(p, *a.mu, guess);
  json j = header("solve", c);
  j["kind"] = "solution";
  j.update(solution_to_json(s));
  write_json_file(j, a.out);
  out << "solve: rho " << s.rho << ", residual " << s.residual_norm << ", " << s.iterations << " iterations -> "
      << a.out << "\n";
  return 0;
}

int cmd_branch(const Args& a, std::ostream& out, std::ostream& err) {
  RunConfig c = parse_config(a.config);
  if (a.grid.empty()) throw UsageError("branch: --grid is required");
  auto grid = parse_grid(a.grid);
  auto p = c.make_problem();
  Branch b;
  if (a.param == "rho") b = continue_in_rho(p, grid);
  else if (a.param == "amp") b = continue_in_amplitude(p, grid);
  else throw UsageError("branch: --param must be rho or amp");
  write_json_file(branch_to_json(b, c, grid), a.out);
  out << "branch: " << b.points.size() << " of " << grid.size() << " points -> " << a.out << "\n";
  if (b.failure) {
    err << "branch: stopped at grid index " << b.failure->index << ": " << b.failure->message << "\n";
    return 1;
  }
  return 0;
}

int cmd_spectrum(const Args& a, std::ostream& out) {
  json sj = read_json_file(a.solution);
  RunConfig c = load_solution_config(sj);
  Solution s = solution_from_json(sj, c.make_problem());
  SpectralOptions so;
  if (a.seed_given) so.seed = a.seed;
  auto rep = smallest_eigenvalues(s, a.k, so);
  json j = header("spectrum", c);
  j["rho"] = rep.rho;
  j["eigenvalues"] = rep.eigenvalues;
  j["residuals"] = rep.residuals;
  j["formulation"] = rep.formulation;
  j["iterations"] = rep.iterations;
  j["nu1_positive"] = !rep.eigenvalues.empty() && rep.eigenvalues.front() > 0;
  write_json_file(j, a.out);
  out << "spectrum: nu1 = " << (rep.eigenvalues.empty() ? NAN : rep.eigenvalues.front()) << " -> " << a.out << "\n";
  return 0;
}

int cmd_classify(const Args& a, std::ostream& out) {
  RunConfig c = parse_config(a.config);
  auto radii = parse_list(a.radii, "--radii");
  auto dom = c.make_domain();
  KindVerdict v = classify_domain(dom, c.sinks, radii);
  json j = header("classify", c);
  j["verdict"] = to_string(v.verdict);
  j["D0_truncation"] = v.D0_truncation;
  j["extrapolation_error"] = v.extrapolation_error;
  j["D0_alternative"] = v.D0_alternative ? json(*v.D0_alternative) : json(nullptr);
  j["agreement_gap"] = v.agreement_gap ? json(*v.agreement_gap) : json(nullptr);
  j["c_star"] = v.c_star;
  j["tolerance"] = v.tolerance;
  j["critical_rho"] = v.critical_rho;
  j["beta"] = v.beta;
  j["notes"] = v.notes;
  j["radii"] = radii;
  try {
    auto Db = compute_Dbeta(dom, c.sinks, v.critical_rho, radii);
    j["D_beta"] = Db.value;
    j["D_beta_error"] = Db.extrapolation_error;
  } catch (const Error& e) {
    j["D_beta"] = nullptr;
    j["D_beta_note"] = e.what();
  }
  write_json_file(j, a.out);
  out << "classify: " << to_string(v.verdict) << " (D0 = " << v.D0_truncation << ") -> " << a.out << "\n";
  return 0;
}

int cmd_thermo(const Args& a, std::ostream& out, std::ostream& err) {
  auto lb = load_branch(a.branch);
  ThermoCurve curve = build_thermo_curve(lb.branch, a.branch);
  write_curve_csv(curve, a.out);
  json side = header("thermo", lb.config);
  side["branch_ref"] = a.branch;
  side["flagged"] = curve.flagged;
  side["legendre_residual"] = curve.legendre_residual;
  write_json_file(side, a.out + ".json");
  for (auto& f : curve.flagged) err << "thermo: flagged " << f << "\n";
  out << "thermo: " << curve.samples.size() << " samples -> " << a.out << "\n";
  return 0;
}

int cmd_scan(const Args& a, std::ostream& out) {
  ThermoCurve curve = read_curve_csv(a.curve);
  std::size_t lo = 0, hi = curve.samples.size();
  if (!a.rows.empty()) {
    auto r = a.rows;
    auto colon = r.find(':');
    if (colon == std::string::npos) throw UsageError("--rows: expected first:last (inclusive, 0-based)");
    try {
      lo = std::stoul(r.substr(0, colon));
      hi = std::stoul(r.substr(colon + 1)) + 1;
    } catch (const std::exception&) {
      throw UsageError("--rows: expected first:last (inclusive, 0-based)");
    }
    if (lo >= hi || hi > curve.samples.size()) throw UsageError("--rows: range outside the curve");
    curve.samples = std::vector<ThermoSample>(curve.samples.begin() + lo, curve.samples.begin() + hi);
  }
  auto scan = convexity_scan(curve);
  json j = {{"command", "scan"}, {"curve", a.curve}, {"rows", {lo, hi - 1}}};
  std::filesystem::path side(a.curve + ".json");
  if (std::filesystem::exists(side)) {
    json s = read_json_file(side.string());
    j["config_hash"] = s.value("config_hash", "");
    j["tolerances"] = s.value("tolerances", json::object());
  }
  json iv = json::array();
  for (auto& i : scan.intervals)
    iv.push_back({{"E_interval", {i.E_lo, i.E_hi}}, {"sign_of_S2", i.sign}, {"points", i.points}});
  j["intervals"] = iv;
  j["notes"] = scan.notes;
  write_json_file(j, a.out);
  out << "scan: " << scan.intervals.size() << " intervals -> " << a.out << "\n";
  return 0;
}

int cmd_verify(const Args& a, std::ostream& out) {
  if (a.law != "est-muk" && a.law != "im-ck" && a.law != "iexp")
    throw UsageError("verify: --law must be est-muk, im-ck or iexp");
  std::optional<json> verdict;
  if (a.law == "im-ck") {
    if (a.verdict.empty())
      throw UsageError("verify --law im-ck needs D_beta from a classify artifact: run classify and pass --verdict verdict.json");
    if (!std::filesystem::exists(a.verdict))
      throw UsageError("verify --law im-ck: classify artifact " + a.verdict + " does not exist; run classify first");
    verdict = read_json_file(a.verdict);
    if (!verdict->contains("D_beta") || (*verdict)["D_beta"].is_null())
      throw UsageError("verify --law im-ck: " + a.verdict + " carries no D_beta");
  }
  auto lb = load_branch(a.branch);
  if (verdict && verdict->value("config_hash", "") != lb.config.hash())
    throw UsageError("verify --law im-ck: " + a.verdict + " was computed for a different config");
  BlowupOptions bo;
  bo.threshold = a.threshold;
  json j = header("verify", lb.config);
  j["law"] = a.law;
  j["branch_ref"] = a.branch;
  j["tolerances"]["blowup_threshold"] = a.threshold;
  if (a.law == "est-muk") {
    j["report"] = law_json(check_est_muk(lb.branch, bo));
  } else if (a.law == "im-ck") {
    double Db = (*verdict)["D_beta"].get<double>();
    j["D_beta"] = Db;
    j["report"] = law_json(check_im_ck(lb.branch, Db, bo));
  } else {
    auto dom = lb.config.make_domain();
    const double tau = a.tau ? *a.tau : 0.3 * dom.distance_to_boundary(lb.config.sinks.q0);
    auto eps = parse_list(a.eps, "--eps");
    const double lim = test_function_limit(dom, lb.config.sinks);
    std::vector<double> vals, diffs;
    for (double e : eps) {
      vals.push_back(test_function_energy(dom, lb.config.sinks, e, tau));
      diffs.push_back(vals.back() - lim);
    }
    json r = {{"eps", eps}, {"tau", tau}, {"values", vals}, {"limit", lim}, {"differences", diffs}};
    if (eps.size() >= 2 && diffs.front() != 0 && diffs.back() != 0)
      r["rate"] = std::log(std::abs(diffs.front() / diffs.back())) / std::log(eps.front() / eps.back());
    // witness for inf J: the lowest free energy reached on the branch, to
    // set beside min over the family
    const Solution* best = nullptr;
    for (const auto& s : lb.branch.points)
      if (s.rho > 0 && (!best || free_energy_value(s) < free_energy_value(*best))) best = &s;
    r["family_min"] = *std::min_element(vals.begin(), vals.end());
    if (best) r["branch_min_J"] = {{"rho", best->rho}, {"J", free_energy_value(*best)}};
    j["report"] = r;
  }
  write_json_file(j, a.out);
  out << "verify: " << a.law << " -> " << a.out << "\n";
  return 0;
}

}  // namespace

int run_pipeline(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Singular mean field equation toolkit"};
  app.require_subcommand(1);
  Args a;
  auto cfg = [&](CLI::App* s, bool required = true) {
    auto* o = s->add_option("--config", a.config, "run config (JSON)");
    if (required) o->required();
  };
  auto outp = [&](CLI::App* s) { s->add_option("--out", a.out, "output file")->required(); };
  auto* mesh = app.add_subcommand("mesh", "write a disk mesh, or the mesh of a config");
  cfg(mesh, false), outp(mesh);
  mesh->add_option("--radius", a.radius);
  mesh->add_option("--level", a.level);
  mesh->add_option("--grade-at", a.grade_at, "x,y");
  auto* oracle = app.add_subcommand("oracle", "centred disk closed forms as CSV");
  cfg(oracle, false), outp(oracle);
  oracle->add_option("--beta", a.beta);
  oracle->add_option("--rho", a.rho_grid, "a:b:n or v1,v2,...");
  oracle->add_option("--gamma", a.gamma_grid, "a:b:n or v1,v2,...");
  auto* solve = app.add_subcommand("solve", "one mean field (--rho) or Gelfand (--mu) solve");
  cfg(solve), outp(solve);
  solve->add_option("--rho", a.rho);
  solve->add_option("--mu", a.mu);
  solve->add_option("--guess", a.guess, "solution JSON used as the initial guess");
  auto* branch = app.add_subcommand("branch", "continuation in rho or in the sink amplitude");
  cfg(branch), outp(branch);
  branch->add_option("--param", a.param, "rho | amp");
  branch->add_option("--grid", a.grid, "a:b:n or v1,v2,...")->required();
  auto* spectrum = app.add_subcommand("spectrum", "lowest eigenvalues of the linearization");
  spectrum->add_option("--solution", a.solution)->required();
  spectrum->add_option("-k", a.k);
  // reserved: the default start vector is seeded deterministically
  spectrum->add_option_function<unsigned>("--seed", [&](unsigned v) { a.seed = v, a.seed_given = true; });
  outp(spectrum);
  auto* classify = app.add_subcommand("classify", "first/second kind verdict from D0");
  cfg(classify), outp(classify);
  classify->add_option("--radii", a.radii, "decreasing truncation radii");
  auto* thermo = app.add_subcommand("thermo", "thermodynamic curve of a branch");
  thermo->add_option("--branch", a.branch)->required();
  outp(thermo);
  auto* scan = app.add_subcommand("scan", "sign intervals of S''(E)");
  scan->add_option("--curve", a.curve)->required();
  scan->add_option("--rows", a.rows, "first:last sample rows to scan");
  outp(scan);
  auto* verify = app.add_subcommand("verify", "blow-up expansion laws");
  verify->add_option("--branch", a.branch)->required();
  verify->add_option("--law", a.law, "est-muk | im-ck | iexp")->required();
  verify->add_option("--verdict", a.verdict, "classify artifact (im-ck)");
  verify->add_option("--threshold", a.threshold, "blow-up threshold on max w");
  verify->add_option("--eps", a.eps, "iexp: bubble parameters");
  verify->add_option("--tau", a.tau, "iexp: gluing radius");
  outp(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (mesh->parsed()) return cmd_mesh(a, out);
    if (oracle->parsed()) return cmd_oracle(a, out);
    if (solve->parsed()) return cmd_solve(a, out);
    if (branch->parsed()) return cmd_branch(a, out, err);
    if (spectrum->parsed()) return cmd_spectrum(a, out);
    if (classify->parsed()) return cmd_classify(a, out);
    if (thermo->parsed()) return cmd_thermo(a, out, err);
    if (scan->parsed()) return cmd_scan(a, out);
    if (verify->parsed()) return cmd_verify(a, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigParseError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const FileNotFound& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace liouville::cli
