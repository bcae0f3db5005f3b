#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "risopt/analysis.hpp"
#include "risopt/ao.hpp"
#include "risopt/channel.hpp"
#include "risopt/core_model.hpp"
#include "risopt/sweep.hpp"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

risopt::ScenarioSpec load_spec(const std::string& config_path) {
  if (config_path.empty()) {
    risopt::ScenarioSpec spec = risopt::make_scenario("custom");
    return spec;
  }
  return risopt::ScenarioSpec::from_json(read_file(config_path));
}

json solution_to_json(const risopt::Solution& sol, const risopt::FeasibilityReport& rep,
                      const risopt::SolveTrace& trace) {
  json j;
  j["t_seconds"] = sol.t;
  j["objective_bits"] = sol.objective;
  j["per_user_rate_bits"] =
      std::vector<double>(sol.per_user_rate.begin(), sol.per_user_rate.end());
  j["theta_coh"] =
      std::vector<double>(sol.phases.theta_coh.begin(), sol.phases.theta_coh.end());
  j["theta_fix"] =
      std::vector<double>(sol.phases.theta_fix.begin(), sol.phases.theta_fix.end());
  json beams = json::array();
  for (const auto& w : sol.beams.w) {
    json b = json::array();
    for (int m = 0; m < w.size(); ++m) b.push_back({w[m].real(), w[m].imag()});
    beams.push_back(b);
  }
  j["beams_re_im"] = beams;
  j["feasible"] = rep.feasible;
  j["c1_slack"] = rep.c1_slack;
  j["c2_slack"] = std::vector<double>(rep.c2_slack.begin(), rep.c2_slack.end());
  j["c3_max_dev"] = rep.c3_max_dev;
  j["c4_slack"] = rep.c4_slack;
  j["converged"] = trace.converged;
  j["message"] = trace.message;
  json rows = json::array();
  for (const auto& r : trace.rows)
    rows.push_back({{"iter", r.iter},
                    {"surrogate", r.surrogate},
                    {"true_tput", r.true_tput},
                    {"t", r.t},
                    {"energy_slack", r.energy_slack},
                    {"min_rate_slack", r.min_rate_slack},
                    {"wall_ms", r.wall_ms}});
  j["trace"] = rows;
  return j;
}

int cmd_solve(const std::string& config, std::uint64_t seed, const std::string& out_dir) {
  risopt::ScenarioSpec spec = load_spec(config);
  spec.solver.seed = seed;
  auto rng = risopt::make_rng(seed, 0);
  risopt::ChannelRealization ch =
      risopt::generate(spec.geom, spec.fading, spec.base, rng);
  auto [sol, trace] = risopt::solve(spec.base, ch, spec.solver);
  const auto rep = risopt::check_feasibility(sol, spec.base, ch, spec.solver.feasibility_tol);
  const std::string path = out_dir + "/solve.json";
  write_file(path, solution_to_json(sol, rep, trace).dump(2) + "\n");
  std::cout << path << "\n";
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& scenario, std::uint64_t seed,
              bool seed_set, const std::string& out_dir, const std::string& format,
              int workers) {
  risopt::ScenarioSpec spec =
      config.empty() ? risopt::make_scenario(scenario) : load_spec(config);
  if (seed_set) spec.seed = seed;
  risopt::SweepResult res = risopt::run_scenario(spec, workers);
  for (const auto& path : risopt::emit(res, out_dir, format)) std::cout << path << "\n";
  return 0;
}

risopt::SimpleScenario scenario_from_json(const json& j) {
  risopt::SimpleScenario s;
  s.p_t = j.value("p_t_watts", s.p_t);
  s.p = j.value("p_watts", s.p);
  s.T = j.value("T_seconds", s.T);
  s.E_max = j.value("E_max_joules", s.E_max);
  s.b = j.value("b", s.b);
  s.R_F = j.value("R_F_bps", s.R_F);
  s.R_min = j.value("R_min_bits", s.R_min);
  s.C = j.value("C", s.C);
  s.p_bar = j.value("p_bar", s.p_bar);
  return s;
}

int cmd_analyze(const std::string& config, const std::string& out_dir) {
  risopt::SimpleScenario s =
      config.empty() ? risopt::SimpleScenario{} : scenario_from_json(json::parse(read_file(config)));
  s.validate();
  json j;
  j["scenario"] = {{"p_t_watts", s.p_t}, {"p_watts", s.p},       {"T_seconds", s.T},
                   {"E_max_joules", s.E_max}, {"b", s.b},        {"R_F_bps", s.R_F},
                   {"R_min_bits", s.R_min},   {"C", s.C},        {"p_bar", s.p_bar}};

  try {
    const double n1 = risopt::n_star_case1(s);
    const auto f1 = risopt::feasible_case1(s, n1);
    j["case1"] = {{"n_star", n1},
                  {"t_star", risopt::t_star(s, n1)},
                  {"snr_lower_bound", risopt::snr_lower_bound(s, n1)},
                  {"feasible", f1.feasible},
                  {"undefined", f1.undefined},
                  {"energy_residual", f1.energy_residual},
                  {"rate_residual", f1.rate_residual}};
    const double cap = s.T * s.R_F / s.b;
    const auto bf = risopt::brute_force_n(s, risopt::TimeRule::case1, 1e-6 * cap, 0.999 * cap);
    j["case1"]["oracle"] = {{"argmax_exact", bf.argmax_exact},
                            {"argmax_leading", bf.argmax_leading},
                            {"best_integer", bf.best_integer}};
  } catch (const std::exception& e) {
    j["case1"] = {{"error", e.what()}};
  }

  try {
    const double n2 = risopt::n_star_case2(s);
    const auto f2 = risopt::feasible_case2(s, n2);
    j["case2"] = {{"n_star", n2}, {"feasible", f2.feasible}, {"residual", f2.residual}};
  } catch (const std::exception& e) {
    j["case2"] = {{"error", e.what()}};
  }

  const std::string path = out_dir + "/analyze.json";
  write_file(path, j.dump(2) + "\n");
  std::cout << path << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-aided throughput maximization with phase-delivery overhead"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", format = "both", scenario = "fig2a";
  std::uint64_t seed = 0;
  int workers = 0;

  auto* solve = app.add_subcommand("solve", "optimize a single channel instance");
  solve->add_option("--config", config, "JSON config file");
  solve->add_option("--seed", seed, "RNG seed");
  solve->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo parameter sweep");
  sweep->add_option("--config", config, "scenario spec JSON");
  sweep->add_option("--scenario", scenario, "preset when no config: fig2a|fig2b|fig2c");
  auto* seed_opt = sweep->add_option("--seed", seed, "master seed override");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--format", format, "csv|json|both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  sweep->add_option("--workers", workers, "worker threads (0 = all cores)");

  auto* analyze = app.add_subcommand("analyze", "closed-form element-count report");
  analyze->add_option("--config", config, "simple-scenario JSON");
  analyze->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(config, seed, out_dir);
    if (sweep->parsed())
      return cmd_sweep(config, scenario, seed, seed_opt->count() > 0, out_dir, format, workers);
    if (analyze->parsed()) return cmd_analyze(config, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
