#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "turnpike.hpp"
#include "turnpike/csv.hpp"
#include "turnpike/svg.hpp"

namespace turnpike::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string format_matrix(const Matrix& m) {
  std::string s = "[";
  for (Index i = 0; i < m.rows(); ++i) {
    if (i) s += "; ";
    for (Index j = 0; j < m.cols(); ++j) s += (j ? " " : "") + short_num(m(i, j));
  }
  return s + "]";
}

struct Common {
  std::string problem;
  std::string out_dir = ".";
  SolverConfig cfg;
};

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
  sub->add_option("problem", c.problem, "Problem file (JSON)")->required();
  sub->add_option("--step", c.cfg.step, "Integration step")->capture_default_str();
  sub->add_option("--delta", c.cfg.reg_delta, "Strong regularity margin")->capture_default_str();
  sub->add_option("--horizon-cap", c.cfg.horizon_cap, "Largest horizon for limits and probes")
      ->capture_default_str();
  if (with_out) sub->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
}

// Collects outputs and writes manifest.json once the command has finished.
class Run {
 public:
  Run(std::string command, const Common& c, std::string problem_bytes)
      : command_(std::move(command)),
        common_(c),
        digest_(sha256_hex(problem_bytes)),
        start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec || !fs::is_directory(c.out_dir))
      throw InputError("cannot create output directory " + c.out_dir);
  }

  void write(const std::string& name, const std::string& content) {
    csv::write_file((fs::path(common_.out_dir) / name).string(), content);
    outputs_.push_back(name);
  }

  json& parameters() { return parameters_; }

  void finish() {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto& cfg = common_.cfg;
    json m;
    m["command"] = command_;
    m["input_file"] = common_.problem;
    m["input_sha256"] = digest_;
    m["config"] = {{"step", cfg.step},
                   {"reg_delta", cfg.reg_delta},
                   {"tol_fixed_point", cfg.tol_fixed_point},
                   {"tol_residual", cfg.tol_residual},
                   {"horizon_cap", cfg.horizon_cap}};
    m["parameters"] = parameters_;
    m["seed"] = cfg.seed;
    m["tool_version"] = kVersion;
    m["outputs"] = outputs_;
    m["wall_time_seconds"] = wall;
    csv::write_file((fs::path(common_.out_dir) / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  const Common& common_;
  std::string digest_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
  json parameters_ = json::object();
};

// "[A, C] L2-stable" and the finite-horizon regularity proxy, both required before any
// stationary analysis.
bool preflight(const GameSpec& spec, const SolverConfig& cfg, std::ostream& out) {
  const auto a2 = is_l2_stable(spec.dyn.A, spec.dyn.C);
  if (!a2.stable) {
    out << "preflight: [A, C] is not L2-stable (spectral abscissa "
        << short_num(a2.spectral_abscissa) << ")\n";
    return false;
  }
  out << "preflight: [A, C] L2-stable (spectral abscissa " << short_num(a2.spectral_abscissa)
      << ")\n";
  const auto probe = a1_probe(spec, cfg.reg_delta, {cfg.horizon_cap}, cfg);
  out << "preflight: " << probe.summary() << "\n";
  if (!probe.plausible) {
    for (const auto& h : probe.horizons)
      if (!h.pass) out << "  T=" << short_num(h.T) << ": " << h.reason << "\n";
    return false;
  }
  return true;
}

// Each entry is a scalar (repeated over all components) or components joined by ':'.
std::vector<Vector> parse_states(const std::vector<std::string>& items, Index n) {
  std::vector<Vector> xs;
  for (const auto& item : items) {
    std::vector<double> parts;
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
      try {
        std::size_t used = 0;
        parts.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw InputError("bad initial state component: '" + tok + "'");
      }
    }
    if (parts.size() == 1) {
      xs.push_back(Vector::Constant(n, parts[0]));
    } else if (static_cast<Index>(parts.size()) == n) {
      xs.push_back(Eigen::Map<Vector>(parts.data(), n));
    } else {
      throw InputError("initial state '" + item + "' does not have " + std::to_string(n) +
                       " components");
    }
  }
  return xs;
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int cmd_validate(const Common& c, std::ostream& out) {
  const auto spec = load_problem(c.problem);
  const auto violations = validate(spec);
  for (const auto& v : violations) out << v.location << ": " << v.message << "\n";
  if (!violations.empty()) return kAnalysisFailure;
  out << "valid (n=" << spec.n() << ", m1=" << spec.dims.m1 << ", m2=" << spec.dims.m2 << ")\n";
  return kOk;
}

int cmd_riccati(const Common& c, double T, std::ostream& out) {
  const auto bytes = read_text_file(c.problem);
  const auto spec = parse_problem(bytes);
  Run run("riccati", c, bytes);
  run.parameters()["T"] = T;
  try {
    const auto ric = solve_game(spec, T, c.cfg);
    run.write("riccati.csv", csv::riccati_table(ric));
    out << "P_T(0) = " << format_matrix(ric.P.front()) << "\n";
    out << "min regularity margins: " << short_num(*std::min_element(ric.reg_margin_1.begin(),
                                                                    ric.reg_margin_1.end()))
        << ", "
        << short_num(*std::min_element(ric.reg_margin_2.begin(), ric.reg_margin_2.end()))
        << "\n";
  } catch (const RegularityError& e) {
    out << "regularity breach at t=" << short_num(e.time()) << ": " << e.what() << "\n";
    run.finish();
    return kAnalysisFailure;
  }
  run.finish();
  return kOk;
}

int cmd_are(const Common& c, std::size_t samples, std::ostream& out) {
  const auto bytes = read_text_file(c.problem);
  const auto spec = parse_problem(bytes);
  if (const auto v = validate(spec); !v.empty())
    throw InputError("invalid problem: " + v.front().location + ": " + v.front().message);
  Run run("are", c, bytes);
  run.parameters()["samples"] = samples;
  if (!preflight(spec, c.cfg, out)) {
    run.finish();
    return kAnalysisFailure;
  }
  const auto are = solve_are(spec, c.cfg);
  auto law = stationary_law(spec, are);
  out << "P = " << format_matrix(are.P) << "\n";
  out << "Theta = " << format_matrix(are.Theta) << "\n";
  out << "residual = " << short_num(are.residual)
      << ", closed-loop abscissa = " << short_num(are.closed_loop_abscissa) << "\n";
  out << "stationary mean = " << format_matrix(law.mean_x.transpose())
      << ", second moment = " << format_matrix(law.second_x) << "\n";
  run.write("are.csv", csv::are_table(are, law));
  if (samples > 0) {
    sample_stationary(spec, are, law, samples, c.cfg);
    run.write("samples_x.csv", csv::sample_bank(law.samples_x, spec.n(), "x"));
    run.write("samples_u.csv", csv::sample_bank(law.samples_u, spec.m(), "u"));
    const auto agree = compare_samples(law);
    out << "sample bank: worst deviation " << short_num(agree.worst_z)
        << " standard errors from the exact moments\n";
  }
  run.finish();
  return kOk;
}

struct TurnpikeArgs {
  std::vector<std::string> xs{"0"};
  std::vector<double> Ts{5, 10, 20};
  double kappa = 0.25;
  std::size_t mc_paths = 0;
  bool svg = false;
};

int cmd_turnpike(const Common& c, const TurnpikeArgs& a, std::ostream& out) {
  const auto bytes = read_text_file(c.problem);
  const auto spec = parse_problem(bytes);
  if (const auto v = validate(spec); !v.empty())
    throw InputError("invalid problem: " + v.front().location + ": " + v.front().message);
  const auto xs = parse_states(a.xs, spec.n());
  if (a.mc_paths > 0 && spec.n() != 1)
    throw InputError("--mc-paths needs a scalar state (n = 1)");
  Run run("turnpike", c, bytes);
  run.parameters() = {{"x", a.xs}, {"T", a.Ts}, {"kappa", a.kappa}, {"mc_paths", a.mc_paths}};
  if (!preflight(spec, c.cfg, out)) {
    run.finish();
    return kAnalysisFailure;
  }

  const auto verdict = turnpike_verify(spec, xs, a.Ts, a.kappa, c.cfg);
  for (std::size_t i = 0; i < verdict.reports.size(); ++i) {
    const auto& r = verdict.reports[i];
    const std::size_t xi = i / a.Ts.size();
    const std::string stem = "report_x" + std::to_string(xi) + "_T" + tag(r.T);
    run.write(stem + ".csv", csv::report_table(r));
    if (a.svg) {
      std::vector<double> total(r.dist.grid.size());
      for (std::size_t k = 0; k < total.size(); ++k) total[k] = r.total(k);
      run.write(stem + ".svg",
                svg::log_plot("coupling upper bounds, x=" + csv::format_state(r.x) +
                                  ", T=" + tag(r.T),
                              {{"state", r.dist.grid.times, r.dist.dist_state},
                               {"control", r.dist.grid.times, r.dist.dist_control},
                               {"bound", r.dist.grid.times, r.bound_value}}));
    }
  }
  run.write("summary.csv", csv::summary_table(verdict));
  if (verdict.trivial)
    out << "all distances vanish; bound holds trivially\n";
  else
    out << "envelope: K_hat = " << short_num(verdict.envelope.K)
        << ", lambda_hat = " << short_num(verdict.envelope.lambda) << "\n";
  for (const auto& r : verdict.reports)
    out << "x=" << csv::format_state(r.x) << " T=" << tag(r.T)
        << " midpoint=" << short_num(r.midpoint_dist) << " bound "
        << (r.bound_ok ? "ok" : "violated") << ", kappa window "
        << (r.kappa_ok ? "ok" : "violated") << "\n";

  bool cross_ok = true;
  if (a.mc_paths > 0) {
    const double T = *std::max_element(a.Ts.begin(), a.Ts.end());
    const auto are = solve_are(spec, c.cfg);
    const auto ric = solve_game(spec, T, c.cfg);
    csv::Table t({"x", "T", "t", "empirical_w2", "coupling_bound", "standard_error", "ok"});
    for (const auto& x : xs) {
      const auto cc = wasserstein_crosscheck(spec, ric, are, x, 0.5 * T, a.mc_paths, c.cfg);
      t.row({csv::format_state(x), csv::num(T), csv::num(cc.t), csv::num(cc.empirical),
             csv::num(cc.coupling_bound), csv::num(cc.standard_error), cc.ok ? "1" : "0"});
      out << "cross-check x=" << csv::format_state(x) << ": empirical W2 "
          << short_num(cc.empirical) << " vs coupling bound " << short_num(cc.coupling_bound)
          << " (SE " << short_num(cc.standard_error) << ")\n";
      cross_ok = cross_ok && cc.ok;
    }
    run.write("crosscheck.csv", t.str());
  }
  run.finish();

  const bool pass = verdict.pass && cross_ok;
  out << "verdict: " << (pass ? "pass" : "fail") << "\n";
  for (const auto& reason : verdict.reasons) out << "  " << reason << "\n";
  return pass ? kOk : kAnalysisFailure;
}

struct SimulateArgs {
  std::size_t paths = 1000;
  double T = 10.0;
  std::string x = "0";
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
  const auto bytes = read_text_file(c.problem);
  const auto spec = parse_problem(bytes);
  const auto x = parse_states({a.x}, spec.n()).front();
  Run run("simulate", c, bytes);
  run.parameters() = {{"paths", a.paths}, {"T", a.T}, {"x", a.x}};
  RiccatiSolution ric;
  try {
    ric = solve_game(spec, a.T, c.cfg);
  } catch (const RegularityError& e) {
    out << "regularity breach at t=" << short_num(e.time()) << ": " << e.what() << "\n";
    run.finish();
    return kAnalysisFailure;
  }
  const auto path = finite_horizon_closed_loop(spec, ric, x);
  const auto exact = propagate_moments(path, x, x * x.transpose());
  run.write("moments.csv", csv::moment_table(exact));

  std::vector<std::size_t> probes;
  for (int k = 0; k <= 4; ++k) probes.push_back(ric.grid.nearest(a.T * k / 4.0));
  const auto states = simulate_states(path, a.paths, c.cfg.seed, probes);

  std::vector<std::string> header{"path", "t"};
  csv::append_vector_names(header, "x", spec.n());
  csv::Table bank(header);
  for (std::size_t p = 0; p < a.paths; ++p)
    for (std::size_t k = 0; k < probes.size(); ++k) {
      std::vector<std::string> row{std::to_string(p), csv::num(ric.grid.times[probes[k]])};
      for (Index i = 0; i < spec.n(); ++i) row.push_back(csv::num(states[k][p](i)));
      bank.row(row);
    }
  run.write("paths.csv", bank.str());
  out << "simulated " << a.paths << " paths to T=" << tag(a.T) << "\n";
  if (a.paths > 0) {
    Vector mean = Vector::Zero(spec.n());
    for (const auto& s : states.back()) mean += s;
    mean /= static_cast<double>(a.paths);
    out << "E[X(T)]: empirical " << format_matrix(mean.transpose()) << ", exact "
        << format_matrix(exact.mean.back().transpose()) << "\n";
  }
  run.finish();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Turnpike analysis for zero-sum LQ stochastic differential games"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  auto* validate_cmd = app.add_subcommand("validate", "Check a problem file");
  validate_cmd->add_option("problem", common.problem, "Problem file (JSON)")->required();

  double riccati_T = 1.0;
  auto* riccati_cmd = app.add_subcommand("riccati", "Solve the game Riccati equation");
  add_common(riccati_cmd, common);
  riccati_cmd->add_option("--T", riccati_T, "Horizon")->capture_default_str();

  std::size_t are_samples = 0;
  auto* are_cmd = app.add_subcommand("are", "Solve the algebraic Riccati equation");
  add_common(are_cmd, common);
  are_cmd->add_option("--samples", are_samples, "Stationary sample bank size")
      ->capture_default_str();
  are_cmd->add_option("--seed", common.cfg.seed, "Random seed")->capture_default_str();

  TurnpikeArgs tp;
  auto* turnpike_cmd = app.add_subcommand("turnpike", "Verify the turnpike bound");
  add_common(turnpike_cmd, common);
  turnpike_cmd->add_option("--x", tp.xs, "Initial states (scalar or a:b:c per state)")
      ->delimiter(',')
      ->capture_default_str();
  turnpike_cmd->add_option("--T", tp.Ts, "Horizons")->delimiter(',')->capture_default_str();
  turnpike_cmd->add_option("--kappa", tp.kappa, "Interior window parameter")
      ->capture_default_str();
  turnpike_cmd->add_option("--seed", common.cfg.seed, "Random seed")->capture_default_str();
  turnpike_cmd->add_option("--mc-paths", tp.mc_paths,
                           "Monte Carlo samples for the scalar W2 cross-check (0 = off)")
      ->capture_default_str();
  turnpike_cmd->add_flag("--svg", tp.svg, "Write an SVG plot per report");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate closed-loop saddle paths");
  add_common(simulate_cmd, common);
  simulate_cmd->add_option("--paths", sim.paths, "Number of paths")->capture_default_str();
  simulate_cmd->add_option("--T", sim.T, "Horizon")->capture_default_str();
  simulate_cmd->add_option("--x", sim.x, "Initial state")->capture_default_str();
  simulate_cmd->add_option("--seed", common.cfg.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputFailure;
  }

  try {
    common.cfg.check();
    if (*validate_cmd) return cmd_validate(common, out);
    if (*riccati_cmd) return cmd_riccati(common, riccati_T, out);
    if (*are_cmd) return cmd_are(common, are_samples, out);
    if (*turnpike_cmd) return cmd_turnpike(common, tp, out);
    if (*simulate_cmd) return cmd_simulate(common, sim, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const AnalysisError& e) {
    err << "analysis failed: " << e.what() << "\n";
    return kAnalysisFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputFailure;
  }
  return kInputFailure;
}

}  // namespace turnpike::cli
