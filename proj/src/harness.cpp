#include "genlab/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "genlab/coalescent.hpp"
#include "genlab/conditioned.hpp"
#include "genlab/coxcluster.hpp"
#include "genlab/forward_sim.hpp"
#include "genlab/kernels.hpp"
#include "genlab/massdiff.hpp"
#include "genlab/spatial.hpp"
#include "genlab/stats.hpp"
#include "genlab/umspace.hpp"

namespace genlab {

namespace {

nlohmann::json config_to_json(const ExperimentConfig& c) {
  // fixed field order: the dump is the hashed canonical form
  nlohmann::json j;
  j["model"] = c.model;
  j["b"] = c.b;
  j["a"] = c.a;
  j["c"] = c.c;
  j["x0"] = c.x0;
  j["t"] = c.t;
  j["h"] = c.h;
  j["T"] = c.T;
  j["N"] = c.N;
  j["K"] = c.K;
  j["degree"] = c.degree;
  j["sites"] = c.sites;
  j["cmig"] = c.cmig;
  j["kernel"] = c.kernel;
  j["replicates"] = c.replicates;
  j["grid_steps"] = c.grid_steps;
  j["seed"] = c.seed;
  return j;
}

std::string timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return buf;
}

ModelParams params_of(const ExperimentConfig& c) { return {c.b, c.a, c.c}; }

nlohmann::json ky_rows_json(const KyReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"statistic", r.statistic},
                    {"paper_target", r.paper_target},
                    {"estimate", r.estimate},
                    {"se", r.se},
                    {"p_value", r.p_value},
                    {"pass", r.pass}});
  return rows;
}

nlohmann::json run_forward_model(const ExperimentConfig& c) {
  ModelParams p = params_of(c);
  struct TreeStats {
    double mass = 0.0;
    double survived = 0.0;
    double balls_h = 0.0;
    double pair_mass_h = 0.0;
  };
  std::string sample_tree;
  std::string sample_path_csv;
  auto st = replicate_map<TreeStats>(
      c.replicates, c.seed, "simulate." + c.model, c.threads,
      [&](Rng& rng, std::size_t rep) {
        Dendrogram tree;
        if (c.model == "feller") {
          tree = simulate_gw_genealogy(c.N, c.x0, c.t, p, rng);
        } else if (c.model == "immigration") {
          tree = simulate_immigration_genealogy(c.N, c.t, p, rng,
                                                ImmigrantAttach::root, c.x0);
        } else {  // moran
          MassPath path = sample_path_exact(
              c.x0, p, uniform_grid(0.0, c.t, c.grid_steps), rng);
          if (rep == 0) sample_path_csv = path.to_csv();
          tree = simulate_moran_given_mass(path, c.K, p, rng);
        }
        TreeStats s;
        s.mass = tree.total_mass();
        s.survived = tree.is_null() ? 0.0 : 1.0;
        s.balls_h = static_cast<double>(count_balls(tree, c.h));
        s.pair_mass_h = pair_mass_below(tree, c.h);
        if (rep == 0) sample_tree = tree.to_json();
        return s;
      });
  stats::MomentAcc mass, surv, balls, pm;
  for (const auto& s : st) {
    mass.push(s.mass);
    surv.push(s.survived);
    balls.push(s.balls_h);
    pm.push(s.pair_mass_h);
  }
  nlohmann::json j;
  j["replicates"] = st.size();
  j["mass_mean"] = mass.mean();
  j["mass_se"] = mass.se();
  j["survival_fraction"] = surv.mean();
  j["depth"] = c.h;
  j["ball_count_mean"] = balls.mean();
  j["ball_count_se"] = balls.se();
  j["pair_mass_below_mean"] = pm.mean();
  j["pair_mass_below_se"] = pm.se();
  j["sample_tree"] = nlohmann::json::parse(sample_tree);
  if (!sample_path_csv.empty()) j["sample_mass_path_csv"] = sample_path_csv;
  return j;
}

nlohmann::json run_cox_model(const ExperimentConfig& c) {
  ModelParams p = params_of(c);
  auto masses = replicate_map<double>(
      c.replicates, c.seed, "cox.compose", c.threads,
      [&](Rng& rng, std::size_t) {
        return compose_cox_state(c.x0, c.t, c.h, p, rng).total_mass();
      });
  auto exact = replicate_map<double>(
      c.replicates, c.seed, "cox.exact", c.threads,
      [&](Rng& rng, std::size_t) {
        return sample_feller_exact(c.x0, c.t, p, rng);
      });
  auto ks = stats::ks_test_2s(masses, exact);
  auto ms = stats::mean_se(masses);
  Rng rng(derive_seed(c.seed, "cox.sample"));
  Dendrogram sample = compose_cox_state(c.x0, c.t, c.h, p, rng);

  nlohmann::json j;
  j["mass_mean"] = ms.mean;
  j["mass_se"] = ms.se;
  j["mass_vs_exact_ks"] = ks.statistic;
  j["mass_vs_exact_p"] = ks.p_value;
  j["sample_tree"] = nlohmann::json::parse(sample.to_json());
  j["summary"] = nlohmann::json::array(
      {{{"stat", "mass_mean"}, {"value", ms.mean}, {"se", ms.se}},
       {{"stat", "mass_vs_exact_ks_p"}, {"value", ks.p_value}, {"se", 0.0}}});
  return j;
}

nlohmann::json run_spatial_model(const ExperimentConfig& c) {
  SpatialParams sp;
  sp.base = params_of(c);
  sp.cmig = c.cmig;
  sp.sites = c.sites;
  sp.uniform_kernel = c.kernel == "uniform";
  std::vector<double> init(static_cast<std::size_t>(c.sites), c.x0);

  std::string sample_tree;
  std::vector<int> sample_marks;
  auto site_mass = replicate_map<std::vector<double>>(
      c.replicates, c.seed, "spatial", c.threads,
      [&](Rng& rng, std::size_t rep) {
        auto mt = simulate_spatial_genealogy(c.N, init, c.t, sp, rng);
        if (rep == 0) {
          sample_tree = mt.base.to_json();
          sample_marks = mt.marks;
        }
        return mt.site_masses(c.sites);
      });

  std::size_t S = static_cast<std::size_t>(c.sites);
  std::vector<stats::MomentAcc> mean_acc(S);
  std::vector<stats::MomentAcc> cov_acc(S);  // E[y_0 y_d], translation avg
  for (const auto& ms : site_mass) {
    for (std::size_t s = 0; s < S; ++s) mean_acc[s].push(ms[s]);
    for (std::size_t d = 0; d < S; ++d) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += ms[s] * ms[(s + d) % S];
      cov_acc[d].push(acc / static_cast<double>(S));
    }
  }
  auto oracle = site_moment_oracle(init, c.t, sp);

  nlohmann::json j;
  j["site_mass_mean"] = nlohmann::json::array();
  j["second_moment"] = nlohmann::json::array();
  for (std::size_t s = 0; s < S; ++s)
    j["site_mass_mean"].push_back({{"site", s},
                                   {"estimate", mean_acc[s].mean()},
                                   {"se", mean_acc[s].se()},
                                   {"oracle", oracle.mean[s]}});
  for (std::size_t d = 0; d < S; ++d) {
    double orc = 0.0;
    for (std::size_t s = 0; s < S; ++s) orc += oracle.second[s][(s + d) % S];
    orc /= static_cast<double>(S);
    j["second_moment"].push_back({{"lag", d},
                                  {"estimate", cov_acc[d].mean()},
                                  {"se", cov_acc[d].se()},
                                  {"oracle", orc}});
  }
  nlohmann::json marks = nlohmann::json::array();
  for (int m : sample_marks) marks.push_back(m);
  j["sample_tree"] = nlohmann::json::parse(sample_tree);
  j["sample_marks"] = marks;
  return j;
}

}  // namespace

std::string ExperimentConfig::to_canonical_json() const {
  return config_to_json(*this).dump();
}

std::string RunRecord::to_json() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_json);
  j["content_hash"] = content_hash;
  j["outputs"] = nlohmann::json::parse(outputs_json);
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["runtime_seconds"] = runtime_seconds;
  return j.dump(2);
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates == 0)
    throw std::invalid_argument("run_experiment: replicates must be >= 1");
  if (!cfg.kernels_backend.empty())
    kernels::set_backend(cfg.kernels_backend);

  RunRecord rec;
  rec.started_at = timestamp_now();
  auto t0 = std::chrono::steady_clock::now();

  nlohmann::json out;
  ModelParams p = params_of(cfg);

  if (cfg.model == "feller" || cfg.model == "immigration" ||
      cfg.model == "moran") {
    out = run_forward_model(cfg);
  } else if (cfg.model == "cox") {
    out = run_cox_model(cfg);
  } else if (cfg.model == "spatial") {
    out = run_spatial_model(cfg);
  } else if (cfg.model == "verify-duality") {
    Polynomial poly = Polynomial::constant(cfg.degree, 1.0);
    Dendrogram u0 = Dendrogram::point_mass(cfg.x0);
    auto fwd = replicate_map<double>(
        cfg.replicates, cfg.seed, "vd.forward", cfg.threads,
        [&](Rng& rng, std::size_t) {
          Dendrogram tree = simulate_gw_genealogy(cfg.N, cfg.x0, cfg.t, p, rng);
          return std::pow(tree.total_mass(), cfg.degree);
        });
    Rng rng(derive_seed(cfg.seed, "vd.dual"));
    auto dual = dual_moment_estimate(u0, poly, cfg.t, p, cfg.replicates, rng);
    auto f = stats::mean_se(fwd);
    out["forward"] = f.mean;
    out["forward_se"] = f.se;
    out["dual"] = dual.value;
    out["dual_se"] = dual.std_error;
    out["zscore"] = stats::ci_compare(f.mean, f.se, dual.value, dual.std_error);
    out["dual_ess"] = dual.effective_sample_size;
    out["dual_low_ess_warning"] = dual.low_ess_warning;
  } else if (cfg.model == "yaglom") {
    double T = cfg.T > 0.0 ? cfg.T : 200.0;
    Rng rng(derive_seed(cfg.seed, "yaglom"));
    KyReport rep = ky_rescale_and_test(KyFamily::feller_conditioned,
                                       {T / 4.0, T / 2.0, T}, p,
                                       cfg.replicates, rng);
    out["rows"] = ky_rows_json(rep);
    out["all_pass"] = rep.all_pass();
  } else if (cfg.model == "backbone") {
    double T = cfg.T > 0.0 ? cfg.T : cfg.t;
    Rng rng(derive_seed(cfg.seed, "backbone"));
    KyReport rep = ky_rescale_and_test(KyFamily::backbone,
                                       {T / 4.0, T / 2.0, T}, p,
                                       cfg.replicates, rng);
    Rng rng2(derive_seed(cfg.seed, "backbone.sample"));
    Dendrogram sample = sample_backbone_tree(cfg.t, p, 1e-3 * cfg.t, rng2);
    out["rows"] = ky_rows_json(rep);
    out["all_pass"] = rep.all_pass();
    out["sample_tree"] = nlohmann::json::parse(sample.to_json());
  } else if (cfg.model == "kallenberg") {
    Rng rng(derive_seed(cfg.seed, "kallenberg"));
    auto rep = kallenberg_decompose_check(cfg.x0, cfg.t, p, cfg.replicates, rng);
    out["mass_ks"] = rep.mass_ks.statistic;
    out["mass_p"] = rep.mass_ks.p_value;
    out["ballcount_chisq"] = rep.ballcount_chisq.statistic;
    out["ballcount_p"] = rep.ballcount_chisq.p_value;
    out["poly_sizebiased"] = rep.poly_sizebiased;
    out["poly_sizebiased_se"] = rep.poly_sizebiased_se;
    out["poly_sum"] = rep.poly_sum;
    out["poly_sum_se"] = rep.poly_sum_se;
    out["poly_zscore"] = rep.poly_zscore;
    out["pass"] = rep.pass();
  } else {
    throw std::invalid_argument("unknown model: " + cfg.model);
  }

  auto t1 = std::chrono::steady_clock::now();
  rec.config_json = cfg.to_canonical_json();
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(rec.config_json)));
  rec.content_hash = hash;
  rec.outputs_json = out.dump();
  rec.finished_at = timestamp_now();
  rec.runtime_seconds = std::chrono::duration<double>(t1 - t0).count();
  return rec;
}

std::string write_run_record(const RunRecord& rec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::string path = out_dir + "/" + rec.content_hash + ".json";
  std::ofstream f(path);
  f << rec.to_json() << "\n";
  return path;
}

}  // namespace genlab
