// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance <path to turnpike binary> <problems dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "turnpike.hpp"

using namespace turnpike;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

Vector scalar_vec(double v) { return Vector::Constant(1, v); }

// Same generator family as the unit tests: mildly stable drift, R11 > 0 > R22.
GameSpec random_spec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto mat = [&](Index r, Index c, double s) {
    std::normal_distribution<double> nd(0.0, s);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
  };
  std::uniform_int_distribution<int> dim(1, 4), ctl(1, 2);
  GameSpec s;
  s.dims = {dim(rng), ctl(rng), ctl(rng)};
  const Index n = s.dims.n, m1 = s.dims.m1, m2 = s.dims.m2;
  s.dyn.A = mat(n, n, 0.5) - Matrix::Identity(n, n);
  s.dyn.B1 = mat(n, m1, 0.7);
  s.dyn.B2 = mat(n, m2, 0.7);
  s.dyn.C = mat(n, n, 0.2);
  s.dyn.D1 = mat(n, m1, 0.2);
  s.dyn.D2 = mat(n, m2, 0.2);
  s.dyn.b = mat(n, 1, 0.5);
  s.dyn.sigma = mat(n, 1, 0.5);
  const Matrix G = mat(n, n, 0.6);
  s.cost.Q = G * G.transpose() + 0.1 * Matrix::Identity(n, n);
  s.cost.S1 = mat(m1, n, 0.1);
  s.cost.S2 = mat(m2, n, 0.1);
  const Matrix H1 = mat(m1, m1, 0.3);
  const Matrix H2 = mat(m2, m2, 0.3);
  s.cost.R11 = H1 * H1.transpose() + Matrix::Identity(m1, m1);
  s.cost.R22 = -(H2 * H2.transpose() + 2.0 * Matrix::Identity(m2, m2));
  s.cost.R12 = mat(m1, m2, 0.1);
  s.cost.R21 = s.cost.R12.transpose();
  s.cost.q = mat(n, 1, 0.3);
  s.cost.r1 = mat(m1, 1, 0.3);
  s.cost.r2 = mat(m2, 1, 0.3);
  return s;
}

Outcome closed_form_riccati() {
  const auto ric = solve_game_riccati(named_config("CFG1"), 1.0, {});
  double worst = 0.0;
  for (std::size_t i = 0; i < ric.grid.size(); ++i)
    worst = std::max(worst, std::abs(ric.P[i](0, 0) -
                                     0.5 * (1.0 - std::exp(-2.0 * (1.0 - ric.grid.times[i])))));
  return {worst <= 1e-8, "max |P_T(t) - closed form| = " + sci(worst) + " (tol 1e-8)"};
}

Outcome are_exactness() {
  const auto are = solve_are(named_config("CFG1"), {});
  const double dp = std::abs(are.P(0, 0) - 0.5);
  const double dth = std::max(std::abs(are.Theta(0, 0) + 0.5), std::abs(are.Theta(1, 0) - 0.5));
  const double dab = std::abs(are.closed_loop_abscissa + 2.0);
  const bool ok = dp <= 1e-10 && are.residual <= 1e-10 && dth <= 1e-9 && dab <= 1e-9;
  return {ok, "|P-0.5| = " + sci(dp) + ", residual = " + sci(are.residual) +
                  ", |Theta err| = " + sci(dth) + ", |abscissa+2| = " + sci(dab)};
}

Outcome comparison() {
  double worst = std::numeric_limits<double>::infinity();
  bool ok = true;
  std::string note;
  auto gaps_min = [&](const GameSpec& spec) {
    const auto g = comparison_check(spec, 5.0, {});
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.grid.size(); ++i) w = std::min({w, g.lower[i], g.upper[i]});
    return w;
  };
  for (const char* name : {"CFG1", "CFG2"}) worst = std::min(worst, gaps_min(named_config(name)));

  int accepted = 0;
  std::uint64_t seed = 0;
  for (; accepted < 100 && seed < 1000; ++seed) {
    const auto spec = random_spec(seed);
    if (!a1_probe(spec, 1e-6, {5.0}).plausible) continue;
    ++accepted;
    try {
      worst = std::min(worst, gaps_min(spec));
    } catch (const Error& e) {
      ok = false;
      note = "; seed " + std::to_string(seed) + " raised: " + e.what();
    }
  }
  ok = ok && accepted == 100 && worst >= -1e-8;

  SolverConfig cfg;
  const double p1 = single_player_steady_state(named_config("CFG1"), Player::one, cfg)(0, 0);
  const double p2 = single_player_steady_state(named_config("CFG1"), Player::two, cfg)(0, 0);
  const double e1 = std::abs(p1 - (std::sqrt(2.0) - 1.0)), e2 = std::abs(p2 - 1.0);
  ok = ok && e1 <= 1e-6 && e2 <= 1e-6;
  return {ok, "min gap " + sci(worst) + " over CFG1, CFG2 and " + std::to_string(accepted) +
                  " random specs (" + std::to_string(seed) + " drawn); steady limits off by " +
                  sci(e1) + ", " + sci(e2) + note};
}

Outcome semigroup() {
  const auto spec = named_config("CFG1");
  const SolverConfig cfg;
  const auto full = solve_game_riccati(spec, 2.0, cfg);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 2000);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int ti = pick(rng);
    const int si = std::uniform_int_distribution<int>(0, 2000 - ti)(rng);
    worst = std::max(worst, semigroup_check(spec, full, ti * 1e-3, si * 1e-3, cfg));
  }
  return {worst <= 1e-7, "max |P_T(t+s) - P_{T-t}(s)| over 20 pairs = " + sci(worst)};
}

Outcome convergence() {
  const auto spec = named_config("CFG1");
  const auto are = solve_are(spec, {});
  bool ok = true;
  std::string detail;
  double previous = std::numeric_limits<double>::infinity();
  for (double T : {5.0, 10.0, 20.0}) {
    const auto ric = solve_game_riccati(spec, T, {});
    const auto fit = convergence_rate_fit(ric, are);
    const double e0 = (ric.P.front() - are.P).norm();
    ok = ok && std::abs(fit.lambda_hat - 2.0) <= 0.05 && std::abs(fit.K_hat - 0.5) <= 0.05 &&
         fit.bound_ok && e0 < previous;
    previous = e0;
    detail += "T=" + fmt("%g", T) + ": lambda=" + fmt("%.6f", fit.lambda_hat) +
              " K=" + fmt("%.6f", fit.K_hat) + (fit.bound_ok ? " bound ok" : " bound FAILED") +
              " |P_T(0)-P|=" + sci(e0) + "; ";
  }
  return {ok, detail};
}

Outcome discrete_oracle() {
  const auto spec = named_config("CFG1");
  const double P0 = solve_game_riccati(spec, 1.0, {}).P.front()(0, 0);
  const double e1 = std::abs(discrete_time_oracle(spec, 1.0, 1000)(0, 0) - P0);
  const double e2 = std::abs(discrete_time_oracle(spec, 1.0, 2000)(0, 0) - P0);
  const double ratio = e1 / e2;
  return {e1 <= 5e-3 && std::abs(ratio - 2.0) <= 0.4,
          "error N=1000: " + sci(e1) + ", N=2000: " + sci(e2) + ", ratio " + fmt("%.4f", ratio)};
}

Outcome stationary() {
  const auto spec = named_config("CFG2");
  const auto are = solve_are(spec, {});
  auto law = stationary_law(spec, are);
  const double var = law.second_x(0, 0) - law.mean_x(0) * law.mean_x(0);
  const double exact_err = std::max(std::abs(law.mean_x(0) - 1.0), std::abs(var - 0.5));

  SolverConfig cfg;
  cfg.seed = 2024;
  sample_stationary(spec, are, law, 100000, cfg);
  const auto agree = compare_samples(law);

  const auto path = stationary_closed_loop(spec, are, make_grid(5.0, cfg.step), law.mean_x);
  const auto curve = propagate_moments(path, law.mean_x, law.second_x);
  const double drift = std::max((curve.mean.back() - law.mean_x).norm(),
                                (curve.second.back() - law.second_x).norm());
  const double emp_var = agree.second(0) - agree.mean(0) * agree.mean(0);
  return {exact_err <= 1e-10 && agree.within(4.0) && drift <= 1e-8,
          "exact moment error " + sci(exact_err) + "; 1e5 samples: mean " +
              fmt("%.4f", agree.mean(0)) + ", variance " + fmt("%.4f", emp_var) +
              ", worst deviation " + fmt("%.2f", agree.worst_z) + " SE; drift over 5 = " +
              sci(drift)};
}

Outcome value_identity() {
  const auto spec = named_config("CFG1");
  double worst = 0.0;
  for (double T : {1.0, 2.0, 5.0}) {
    const auto ric = solve_game(spec, T, {});
    const double P0 = ric.P.front()(0, 0);
    for (double x : {-2.0, -1.0, 1.0, 2.0}) {
      const auto path = finite_horizon_closed_loop(spec, ric, scalar_vec(x));
      const auto curve =
          propagate_moments(path, scalar_vec(x), Matrix::Constant(1, 1, x * x));
      const double cost = quadratic_cost(spec, curve, ric.Theta, ric.v);
      worst = std::max(worst, std::abs(cost - P0 * x * x) / (P0 * x * x));
    }
  }
  return {worst <= 1e-4, "max relative gap between cost and x'P_T(0)x = " + sci(worst)};
}

Outcome turnpike_bound() {
  const auto v = turnpike_verify(named_config("CFG2"), {scalar_vec(0.0), scalar_vec(2.0)},
                                 {5.0, 10.0, 20.0}, 0.25, {});
  std::string detail = "K_hat=" + fmt("%.4f", v.envelope.K) +
                       " lambda_hat=" + fmt("%.4f", v.envelope.lambda) + "; midpoints";
  for (const auto& r : v.reports) detail += " " + sci(r.midpoint_dist);
  for (const auto& reason : v.reasons) detail += "; " + reason;
  return {v.pass && !v.trivial, detail};
}

Outcome crosscheck() {
  const auto spec = named_config("CFG2");
  const auto are = solve_are(spec, {});
  const auto ric = solve_game(spec, 10.0, {});
  SolverConfig cfg;
  cfg.seed = 99;
  const auto c = wasserstein_crosscheck(spec, ric, are, scalar_vec(0.0), 5.0, 100000, cfg);
  return {c.ok, "empirical W2 " + fmt("%.5f", c.empirical) + " vs coupling bound " +
                    fmt("%.5f", c.coupling_bound) + " + 4 x SE " + fmt("%.5f", c.standard_error)};
}

Outcome stationarity_residuals() {
  double worst1 = 0.0, worst2 = 0.0;
  for (const auto& name : fixture_names()) {
    const auto spec = named_config(name);
    auto ric = solve_game_riccati(spec, 5.0, {});
    solve_offset_ode(spec, ric);
    const auto res = feedforward(spec, ric);
    worst1 = std::max(worst1, res.max_rho1);
    worst2 = std::max(worst2, res.max_rho2);
  }
  return {worst1 <= 1e-10 && worst2 <= 1e-10,
          "max rho1 = " + sci(worst1) + ", max rho2 = " + sci(worst2) + " (all fixtures, T=5)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& tool, const std::string& problems) {
  const auto root = fs::temp_directory_path() / "turnpike_acceptance_determinism";
  fs::remove_all(root);
  std::vector<fs::path> dirs;
  for (const char* threads : {"1", "8"})
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = root / (std::string("threads") + threads + "_run" + std::to_string(rep));
      fs::create_directories(dir);
      const std::string cmd = "TURNPIKE_THREADS=" + std::string(threads) + " '" + tool +
                              "' turnpike '" + problems + "/cfg2.json' --x 0,2 --T 5,10,20" +
                              " --seed 7 --mc-paths 2000 --out '" + dir.string() + "' > '" +
                              (dir / "stdout.txt").string() + "' 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) return {false, "turnpike command failed (" + std::to_string(rc) + ")"};
      dirs.push_back(dir);
    }
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dirs[0]))
    if (e.path().extension() == ".csv") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const auto ref = slurp(dirs[0] / name);
    for (std::size_t k = 1; k < dirs.size(); ++k)
      if (!fs::exists(dirs[k] / name) || slurp(dirs[k] / name) != ref)
        return {false, name + " differs in " + dirs[k].filename().string()};
  }
  for (std::size_t k = 1; k < dirs.size(); ++k) {
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(dirs[k]))
      if (e.path().extension() == ".csv") ++count;
    if (count != names.size()) return {false, "CSV sets differ"};
  }
  return {!names.empty(), std::to_string(names.size()) +
                              " CSVs byte-identical across 2 runs each with 1 and 8 threads"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <turnpike binary> <problems dir>\n");
    return 2;
  }
  const std::string tool = argv[1], problems = argv[2];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form Riccati", closed_form_riccati},
      {"ARE exactness", are_exactness},
      {"comparison theorem", comparison},
      {"semigroup identity", semigroup},
      {"exponential convergence", convergence},
      {"discrete-time oracle", discrete_oracle},
      {"stationary law", stationary},
      {"value identity", value_identity},
      {"turnpike bound", turnpike_bound},
      {"Wasserstein cross-check", crosscheck},
      {"stationarity residuals", stationarity_residuals},
      {"determinism", [&] { return determinism(tool, problems); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
