// genlab: simulation laboratory for genealogy-valued branching diffusions.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "genlab/acceptance.hpp"
#include "genlab/harness.hpp"
#include "genlab/kernels.hpp"
#include "genlab/massdiff.hpp"
#include "genlab/rng.hpp"

namespace {

void add_common(CLI::App* cmd, genlab::ExperimentConfig& cfg) {
  cmd->set_help_flag("--help", "print help");  // frees --h for the depth
  cmd->add_option("--b", cfg.b, "branching rate");
  cmd->add_option("--a", cfg.a, "criticality drift");
  cmd->add_option("--c", cfg.c, "immigration rate");
  cmd->add_option("--x0", cfg.x0, "initial mass");
  cmd->add_option("--t", cfg.t, "time horizon");
  cmd->add_option("--h", cfg.h, "ball depth");
  cmd->add_option("--T", cfg.T, "survival horizon");
  cmd->add_option("--N", cfg.N, "particle mass scale");
  cmd->add_option("--K", cfg.K, "Moran particle count");
  cmd->add_option("--replicates", cfg.replicates, "Monte Carlo replicates");
  cmd->add_option("--grid-steps", cfg.grid_steps, "path grid steps");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--threads", cfg.threads, "worker threads (0: hardware)");
  cmd->add_option("--kernels", cfg.kernels_backend,
                  "kernel backend: auto|scalar|avx2");
  cmd->add_option("--out", cfg.out_dir, "output directory for run records");
}

int run_and_write(const genlab::ExperimentConfig& cfg, bool emit_csv) {
  genlab::RunRecord rec = genlab::run_experiment(cfg);
  std::string path = genlab::write_run_record(rec, cfg.out_dir);
  std::printf("%s\n", path.c_str());

  auto out = nlohmann::json::parse(rec.outputs_json);
  if (emit_csv && out.contains("summary")) {
    std::string csv_path = cfg.out_dir + "/" + rec.content_hash + ".csv";
    std::ofstream csv(csv_path);
    csv << "stat,value,se\n";
    for (const auto& row : out["summary"])
      csv << row["stat"].get<std::string>() << ","
          << row["value"].get<double>() << "," << row["se"].get<double>()
          << "\n";
    std::printf("%s\n", csv_path.c_str());
  }
  if (out.contains("site_mass_mean")) {
    std::string csv_path = cfg.out_dir + "/" + rec.content_hash + "_sites.csv";
    std::ofstream csv(csv_path);
    csv << "site,mass_mean,se,oracle\n";
    for (const auto& row : out["site_mass_mean"])
      csv << row["site"].get<int>() << "," << row["estimate"].get<double>()
          << "," << row["se"].get<double>() << ","
          << row["oracle"].get<double>() << "\n";
    std::printf("%s\n", csv_path.c_str());
  }
  if (out.contains("sample_mass_path_csv")) {
    std::string csv_path = cfg.out_dir + "/" + rec.content_hash + "_path.csv";
    std::ofstream csv(csv_path);
    csv << out["sample_mass_path_csv"].get<std::string>();
    std::printf("%s\n", csv_path.c_str());
  }
  if (out.contains("rows")) {
    for (const auto& r : out["rows"])
      std::printf("  %-52s est %.5g se %.3g p %.3g %s\n",
                  r["statistic"].get<std::string>().c_str(),
                  r["estimate"].get<double>(), r["se"].get<double>(),
                  r["p_value"].get<double>(),
                  r["pass"].get<bool>() ? "pass" : "FAIL");
    return out.value("all_pass", true) ? 0 : 1;
  }
  if (out.contains("pass")) return out["pass"].get<bool>() ? 0 : 1;
  if (out.contains("zscore")) {
    std::printf("forward %.6g (se %.2g)  dual %.6g (se %.2g)  z = %.2f\n",
                out["forward"].get<double>(), out["forward_se"].get<double>(),
                out["dual"].get<double>(), out["dual_se"].get<double>(),
                out["zscore"].get<double>());
    return std::abs(out["zscore"].get<double>()) < 3.0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genlab: genealogy-valued branching diffusion laboratory"};
  app.set_config("--config", "", "TOML config file");
  app.require_subcommand(1);

  genlab::ExperimentConfig cfg;

  auto* sim = app.add_subcommand("simulate", "particle / Moran simulation");
  std::string model = "feller";
  sim->add_option("--model", model, "feller|immigration|moran")
      ->check(CLI::IsMember({"feller", "immigration", "moran"}));
  add_common(sim, cfg);

  auto* vd = app.add_subcommand("verify-duality",
                                "forward vs Feynman-Kac dual moments");
  vd->add_option("--degree", cfg.degree, "polynomial degree");
  add_common(vd, cfg);

  auto* cox = app.add_subcommand("cox", "Cox cluster composition");
  add_common(cox, cfg);

  auto* yag = app.add_subcommand("yaglom", "Kolmogorov-Yaglom rescaling report");
  add_common(yag, cfg);

  auto* bb = app.add_subcommand("backbone", "backbone construction report");
  add_common(bb, cfg);

  auto* kal = app.add_subcommand("kallenberg", "Kallenberg decomposition check");
  add_common(kal, cfg);

  auto* spa = app.add_subcommand("spatial", "super random walk on a torus");
  spa->add_option("--sites", cfg.sites, "torus size");
  spa->add_option("--cmig", cfg.cmig, "migration rate");
  spa->add_option("--kernel", cfg.kernel, "nn|uniform")
      ->check(CLI::IsMember({"nn", "uniform"}));
  add_common(spa, cfg);

  auto* acc = app.add_subcommand("accept", "run the acceptance suite");
  bool quick = false;
  std::uint64_t acc_seed = 20240817;
  int acc_threads = 0;
  acc->add_flag("--quick", quick, "reduced replicate counts (smoke run)");
  acc->add_option("--seed", acc_seed, "master seed");
  acc->add_option("--threads", acc_threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (acc->parsed()) {
      auto results = genlab::run_acceptance(acc_seed, quick, acc_threads);
      return genlab::print_acceptance_report(results) ? 0 : 1;
    }
    if (sim->parsed()) {
      cfg.model = model;
      return run_and_write(cfg, false);
    }
    if (vd->parsed()) {
      cfg.model = "verify-duality";
      return run_and_write(cfg, false);
    }
    if (cox->parsed()) {
      cfg.model = "cox";
      return run_and_write(cfg, true);
    }
    if (yag->parsed()) {
      cfg.model = "yaglom";
      return run_and_write(cfg, false);
    }
    if (bb->parsed()) {
      cfg.model = "backbone";
      return run_and_write(cfg, false);
    }
    if (kal->parsed()) {
      cfg.model = "kallenberg";
      return run_and_write(cfg, false);
    }
    if (spa->parsed()) {
      cfg.model = "spatial";
      return run_and_write(cfg, false);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
