#include "risopt/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace risopt {

using nlohmann::json;

SystemConfig table1_config() {
  SystemConfig cfg;
  cfg.M = 8;
  cfg.K = 4;
  cfg.N_coh = 8;
  cfg.N_fix = 4;
  cfg.b = 1;
  cfg.R_F = 10;
  cfg.T = 1;
  cfg.p = dbm_to_watts(20);
  cfg.E_max = 1;
  cfg.R_min = Vec::Ones(cfg.K);
  cfg.delta2 = Vec::Constant(cfg.K, dbm_to_watts(-80));
  return cfg;
}

namespace {

const std::vector<std::string> kBaselines = {"proposed", "fully_coherent", "fully_fixed",
                                             "b_variant"};

void apply_param(SystemConfig& cfg, const std::string& param, double value) {
  if (param == "N_coh") cfg.N_coh = static_cast<int>(std::lround(value));
  else if (param == "N_fix") cfg.N_fix = static_cast<int>(std::lround(value));
  else if (param == "M") cfg.M = static_cast<int>(std::lround(value));
  else if (param == "K") throw ConfigError("sweep: K cannot be swept (R_min/delta2 are per user)");
  else if (param == "b") cfg.b = static_cast<int>(std::lround(value));
  else if (param == "p_dbm") cfg.p = dbm_to_watts(value);
  else if (param == "p_watts") cfg.p = value;
  else if (param == "E_max_joules") cfg.E_max = value;
  else if (param == "T_seconds") cfg.T = value;
  else if (param == "R_F_bps") cfg.R_F = value;
  else if (param == "R_min_bits") cfg.R_min.setConstant(value);
  else throw ConfigError("sweep: unknown swept parameter '" + param + "'");
}

/// Split a realization's full element stack at a new coherent count.
ChannelRealization repartition(const ChannelRealization& ch, int n_coh) {
  const int N = static_cast<int>(ch.H_coh.rows() + ch.H_fix.rows());
  if (n_coh < 0 || n_coh > N) throw ConfigError("repartition: bad coherent count");
  CMat full(N, ch.H_coh.cols() > 0 ? ch.H_coh.cols() : ch.H_fix.cols());
  full << ch.H_coh, ch.H_fix;
  ChannelRealization out;
  out.H_coh = full.topRows(n_coh);
  out.H_fix = full.bottomRows(N - n_coh);
  out.h_r_coh.resize(ch.users());
  out.h_r_fix.resize(ch.users());
  for (int k = 0; k < ch.users(); ++k) {
    CVec hr(N);
    hr << ch.h_r_coh[k], ch.h_r_fix[k];
    out.h_r_coh[k] = hr.head(n_coh);
    out.h_r_fix[k] = hr.tail(N - n_coh);
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Outcome {
  bool feasible = false;
  double tput = 0, t = 0;
  int iters = 0;
};

Outcome run_instance(const ScenarioSpec& spec, int gi, int bi, int ri) {
  Outcome out;
  try {
    SystemConfig cfg = spec.base;
    apply_param(cfg, spec.param, spec.grid[gi]);
    SystemConfig cfg_b = baseline_config(cfg, spec.baselines[bi]);
    if (spec.baselines[bi] == "b_variant") cfg_b.b = spec.b_variant_bits;

    auto rng = make_rng(spec.seed, static_cast<std::uint64_t>(ri));
    ChannelRealization ch = generate(spec.geom, spec.fading, cfg, rng);
    ChannelRealization ch_b = repartition(ch, cfg_b.N_coh);

    SolverOptions opts = spec.solver;
    opts.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(ri));
    auto [sol, trace] = solve(cfg_b, ch_b, opts);
    out.feasible = true;
    out.tput = sol.objective;
    out.t = sol.t;
    out.iters = trace.iters();
  } catch (const std::exception&) {
    out.feasible = false; // counted, never aborts the sweep
  }
  return out;
}

SweepResult run_impl(const ScenarioSpec& spec, int workers, bool parallel) {
  spec.validate();
  const int G = static_cast<int>(spec.grid.size());
  const int B = static_cast<int>(spec.baselines.size());
  const int R = spec.realizations;
  std::vector<Outcome> raw(static_cast<std::size_t>(G) * B * R);

#ifdef _OPENMP
  if (parallel && workers > 0) omp_set_num_threads(workers);
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int idx = 0; idx < G * B * R; ++idx) {
    const int gi = idx / (B * R), bi = (idx / R) % B, ri = idx % R;
    raw[idx] = run_instance(spec, gi, bi, ri);
  }
  (void)workers;
  (void)parallel;

  SweepResult result;
  result.spec = spec;
  for (int gi = 0; gi < G; ++gi)
    for (int bi = 0; bi < B; ++bi) {
      SweepCell cell;
      cell.grid_value = spec.grid[gi];
      cell.baseline = spec.baselines[bi];
      double s_t = 0, s_tput = 0, s_it = 0, ss = 0;
      for (int ri = 0; ri < R; ++ri) {
        const Outcome& o = raw[static_cast<std::size_t>(gi) * B * R + bi * R + ri];
        if (!o.feasible) {
          ++cell.n_infeasible;
          continue;
        }
        ++cell.n_feasible;
        s_tput += o.tput;
        s_t += o.t;
        s_it += o.iters;
      }
      if (cell.n_feasible > 0) {
        cell.mean_tput = s_tput / cell.n_feasible;
        cell.mean_t = s_t / cell.n_feasible;
        cell.mean_iters = s_it / cell.n_feasible;
        for (int ri = 0; ri < R; ++ri) {
          const Outcome& o = raw[static_cast<std::size_t>(gi) * B * R + bi * R + ri];
          if (o.feasible) ss += (o.tput - cell.mean_tput) * (o.tput - cell.mean_tput);
        }
        if (cell.n_feasible > 1)
          cell.stderr_tput = std::sqrt(ss / (cell.n_feasible - 1.0) / cell.n_feasible);
      }
      result.cells.push_back(std::move(cell));
    }
  return result;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json spec_to_json_obj(const ScenarioSpec& s) {
  json j;
  j["scenario"] = s.scenario;
  j["param"] = s.param;
  j["grid"] = s.grid;
  j["realizations"] = s.realizations;
  j["seed"] = s.seed;
  j["baselines"] = s.baselines;
  j["b_variant_bits"] = s.b_variant_bits;
  json sys;
  sys["M"] = s.base.M;
  sys["K"] = s.base.K;
  sys["N_coh"] = s.base.N_coh;
  sys["N_fix"] = s.base.N_fix;
  sys["b"] = s.base.b;
  sys["R_F_bps"] = s.base.R_F;
  sys["T_seconds"] = s.base.T;
  sys["p_watts"] = s.base.p;
  sys["E_max_joules"] = s.base.E_max;
  sys["R_min_bits"] = std::vector<double>(s.base.R_min.begin(), s.base.R_min.end());
  sys["delta2_watts"] = std::vector<double>(s.base.delta2.begin(), s.base.delta2.end());
  j["system"] = sys;
  json g;
  g["bs_pos_m"] = {s.geom.bs_pos.x(), s.geom.bs_pos.y()};
  g["ris_pos_m"] = {s.geom.ris_pos.x(), s.geom.ris_pos.y()};
  g["user_circle_center_m"] = {s.geom.user_circle_center.x(), s.geom.user_circle_center.y()};
  g["user_circle_radius_m"] = s.geom.user_circle_radius;
  j["geometry"] = g;
  json f;
  f["alpha_br"] = s.fading.alpha_br;
  f["alpha_ru"] = s.fading.alpha_ru;
  f["rician_K"] = s.fading.rician_K;
  f["PL0_db"] = s.fading.PL0_dB;
  j["fading"] = f;
  json sv;
  sv["max_outer_iters"] = s.solver.max_outer_iters;
  sv["rel_tol"] = s.solver.rel_tol;
  sv["conic_tol"] = s.solver.conic_tol;
  sv["feasibility_tol"] = s.solver.feasibility_tol;
  sv["init_retries"] = s.solver.init_retries;
  j["solver"] = sv;
  return j;
}

Vec json_user_vec(const json& j, int K, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("spec: missing ") + key);
  const auto& v = j.at(key);
  if (v.is_number()) return Vec::Constant(K, v.get<double>());
  std::vector<double> vals = v.get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != K)
    throw ConfigError(std::string("spec: ") + key + " must have K entries");
  return Eigen::Map<Vec>(vals.data(), K);
}

ScenarioSpec spec_from_json_obj(const json& j) {
  // accept an emitted result document, which nests the spec
  if (j.contains("spec")) return spec_from_json_obj(j.at("spec"));
  ScenarioSpec s;
  s.base = table1_config();
  s.scenario = j.value("scenario", s.scenario);
  s.param = j.value("param", s.param);
  s.grid = j.value("grid", s.grid);
  s.realizations = j.value("realizations", s.realizations);
  s.seed = j.value("seed", s.seed);
  s.baselines = j.value("baselines", s.baselines);
  s.b_variant_bits = j.value("b_variant_bits", s.b_variant_bits);
  if (j.contains("system")) {
    const json& sys = j.at("system");
    s.base.M = sys.value("M", s.base.M);
    s.base.K = sys.value("K", s.base.K);
    s.base.N_coh = sys.value("N_coh", s.base.N_coh);
    s.base.N_fix = sys.value("N_fix", s.base.N_fix);
    s.base.b = sys.value("b", s.base.b);
    s.base.R_F = sys.value("R_F_bps", s.base.R_F);
    s.base.T = sys.value("T_seconds", s.base.T);
    if (sys.contains("p_watts")) s.base.p = sys.at("p_watts").get<double>();
    else if (sys.contains("p_dbm")) s.base.p = dbm_to_watts(sys.at("p_dbm").get<double>());
    s.base.E_max = sys.value("E_max_joules", s.base.E_max);
    if (sys.contains("R_min_bits"))
      s.base.R_min = json_user_vec(sys, s.base.K, "R_min_bits");
    else
      s.base.R_min = Vec::Ones(s.base.K);
    if (sys.contains("delta2_watts"))
      s.base.delta2 = json_user_vec(sys, s.base.K, "delta2_watts");
    else if (sys.contains("delta2_dbm")) {
      Vec dbm = json_user_vec(sys, s.base.K, "delta2_dbm");
      s.base.delta2 = dbm.unaryExpr([](double d) { return dbm_to_watts(d); });
    } else
      s.base.delta2 = Vec::Constant(s.base.K, dbm_to_watts(-80));
  }
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    auto pt = [&](const char* key, Eigen::Vector2d& out) {
      if (g.contains(key)) {
        auto v = g.at(key).get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError(std::string("spec: ") + key + " must be 2-D");
        out << v[0], v[1];
      }
    };
    pt("bs_pos_m", s.geom.bs_pos);
    pt("ris_pos_m", s.geom.ris_pos);
    pt("user_circle_center_m", s.geom.user_circle_center);
    s.geom.user_circle_radius = g.value("user_circle_radius_m", s.geom.user_circle_radius);
  }
  if (j.contains("fading")) {
    const json& f = j.at("fading");
    s.fading.alpha_br = f.value("alpha_br", s.fading.alpha_br);
    s.fading.alpha_ru = f.value("alpha_ru", s.fading.alpha_ru);
    s.fading.rician_K = f.value("rician_K", s.fading.rician_K);
    s.fading.PL0_dB = f.value("PL0_db", s.fading.PL0_dB);
  }
  if (j.contains("solver")) {
    const json& sv = j.at("solver");
    s.solver.max_outer_iters = sv.value("max_outer_iters", s.solver.max_outer_iters);
    s.solver.rel_tol = sv.value("rel_tol", s.solver.rel_tol);
    s.solver.conic_tol = sv.value("conic_tol", s.solver.conic_tol);
    s.solver.feasibility_tol = sv.value("feasibility_tol", s.solver.feasibility_tol);
    s.solver.init_retries = sv.value("init_retries", s.solver.init_retries);
  }
  return s;
}

} // namespace

void ScenarioSpec::validate() const {
  if (grid.empty()) throw ConfigError("spec: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("spec: grid must be strictly increasing");
  if (realizations < 1) throw ConfigError("spec: realizations must be >= 1");
  if (baselines.empty()) throw ConfigError("spec: no baselines");
  for (const auto& b : baselines)
    if (std::find(kBaselines.begin(), kBaselines.end(), b) == kBaselines.end())
      throw ConfigError("spec: unknown baseline '" + b + "'");
  if (param.empty()) throw ConfigError("spec: no swept parameter");
  if (b_variant_bits < 1) throw ConfigError("spec: b_variant_bits must be >= 1");
}

bool ScenarioSpec::operator==(const ScenarioSpec& other) const {
  return to_json() == other.to_json();
}

std::string ScenarioSpec::to_json() const { return spec_to_json_obj(*this).dump(2); }

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
  return spec_from_json_obj(json::parse(text));
}

ScenarioSpec make_scenario(const std::string& id) {
  ScenarioSpec s;
  s.scenario = id;
  s.base = table1_config();
  if (id == "fig2a") {
    s.param = "N_coh";
    s.grid = {4, 8, 12, 16, 20};
  } else if (id == "fig2b") {
    s.param = "p_dbm";
    s.grid = {10, 15, 20, 25, 30};
  } else if (id == "fig2c") {
    s.param = "E_max_joules";
    s.grid = {0.6, 0.8, 1.0};
    s.baselines = {"proposed", "fully_coherent", "fully_fixed", "b_variant"};
  } else if (id == "custom") {
    s.param = "E_max_joules";
    s.grid = {1.0};
  } else {
    throw ConfigError("make_scenario: unknown scenario '" + id + "'");
  }
  return s;
}

SystemConfig baseline_config(const SystemConfig& base, const std::string& which) {
  SystemConfig cfg = base;
  if (which == "proposed") return cfg;
  if (which == "fully_coherent") {
    cfg.N_coh = base.N();
    cfg.N_fix = 0;
    return cfg;
  }
  if (which == "fully_fixed") {
    cfg.N_coh = 0;
    cfg.N_fix = base.N();
    return cfg;
  }
  if (which == "b_variant") {
    cfg.b = 2;
    return cfg;
  }
  throw ConfigError("baseline_config: unknown baseline '" + which + "'");
}

SweepResult run_scenario(const ScenarioSpec& spec, int workers) {
  return run_impl(spec, workers, true);
}

SweepResult run_scenario_serial(const ScenarioSpec& spec) { return run_impl(spec, 1, false); }

std::vector<std::string> emit(const SweepResult& result, const std::string& dir,
                              const std::string& format) {
  if (format != "csv" && format != "json" && format != "both")
    throw ConfigError("emit: format must be csv, json or both");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit: cannot create directory " + dir + ": " + ec.message());

  std::vector<std::string> written;
  auto open = [&](const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit: cannot write " + path);
    return out;
  };

  if (format == "csv" || format == "both") {
    const std::string path = dir + "/" + result.spec.scenario + ".csv";
    auto out = open(path);
    out << "grid_value,baseline,mean_tput,stderr,n_feasible,mean_t,mean_iters\n";
    for (const auto& c : result.cells)
      out << fmt_num(c.grid_value) << ',' << c.baseline << ',' << fmt_num(c.mean_tput) << ','
          << fmt_num(c.stderr_tput) << ',' << c.n_feasible << ',' << fmt_num(c.mean_t) << ','
          << fmt_num(c.mean_iters) << '\n';
    written.push_back(path);
  }
  if (format == "json" || format == "both") {
    const std::string path = dir + "/" + result.spec.scenario + ".json";
    json j;
    j["spec"] = spec_to_json_obj(result.spec);
    j["results"] = json::array();
    for (const auto& c : result.cells) {
      json r;
      r["grid_value"] = c.grid_value;
      r["baseline"] = c.baseline;
      r["mean_tput"] = c.mean_tput;
      r["stderr"] = c.stderr_tput;
      r["n_feasible"] = c.n_feasible;
      r["n_infeasible"] = c.n_infeasible;
      r["mean_t"] = c.mean_t;
      r["mean_iters"] = c.mean_iters;
      j["results"].push_back(r);
    }
    auto out = open(path);
    out << j.dump(2) << '\n';
    written.push_back(path);
  }
  return written;
}

} // namespace risopt
