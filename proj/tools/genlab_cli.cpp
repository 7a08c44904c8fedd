// Command-line front end. Everything goes through the C API in genlab.h so
// the shared library surface gets exercised the same way external callers
// would use it.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genlab/genlab.h"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  bool seed_set = false;
  uint64_t seed = 0;
};

int die(genlab_status status) {
  std::fprintf(stderr, "error (%d): %s\n", static_cast<int>(status),
               genlab_last_error());
  return 1;
}

// config from --config when given, defaults otherwise; --seed overrides the
// seed list with a single entry
genlab_config* make_config(const GlobalOpts& g) {
  genlab_config* cfg = nullptr;
  genlab_status status = g.config_path.empty()
                             ? genlab_config_default(&cfg)
                             : genlab_config_load(g.config_path.c_str(), &cfg);
  if (status != GENLAB_OK) {
    die(status);
    return nullptr;
  }
  if (g.seed_set) {
    status = genlab_config_set_seeds(cfg, &g.seed, 1);
    if (status != GENLAB_OK) {
      die(status);
      genlab_config_free(cfg);
      return nullptr;
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic-data classifier lab"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("-c,--config", g.config_path, "config file (key = value lines)");
  app.add_option("-o,--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("-t,--threads", g.threads, "worker threads for independent runs")
      ->capture_default_str();
  auto* seed_opt = app.add_option("-s,--seed", g.seed,
                                  "replace the config seed list with this one seed");

  auto* ablation = app.add_subcommand(
      "ablation", "8-cell method ablation plus the real-data reference");

  auto* sweep = app.add_subcommand(
      "sweep-r", "replacement-fraction sweep, with and without BN adaptation");

  auto* train = app.add_subcommand("train", "train one cell and report accuracy");
  std::string model_path;
  bool train_hsm = false, train_ds = false, train_bna = false;
  train->add_option("--model-out", model_path, "write the trained model here");
  train->add_flag("--hsm", train_hsm, "mine hard samples");
  train->add_flag("--ds", train_ds, "smooth the dataset per epoch");
  train->add_flag("--bna", train_bna, "adapt BN statistics after training");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "verify every gradient against central differences");
  std::string corrupt;
  gradcheck->add_option("--corrupt", corrupt,
                        "poison the named check (verifies the checker can fail)");

  auto* inspect = app.add_subcommand("world-inspect", "describe the frozen world");
  std::string dump_path;
  inspect->add_option("--dump-weights", dump_path, "write generator weights here");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  if (gradcheck->parsed()) {
    int all_pass = 0;
    const char* report = nullptr;
    genlab_status status = genlab_gradcheck(corrupt.empty() ? nullptr : corrupt.c_str(),
                                            g.seed, &all_pass, &report);
    if (status != GENLAB_OK) return die(status);
    std::fputs(report, stdout);
    return all_pass ? 0 : 1;
  }

  genlab_config* cfg = make_config(g);
  if (!cfg) return 1;
  int rc = 0;

  if (ablation->parsed()) {
    const char* summary = nullptr;
    genlab_status status =
        genlab_run_ablation(cfg, g.out_dir.c_str(), g.threads, &summary);
    if (summary) std::fputs(summary, stdout);
    if (status != GENLAB_OK) rc = die(status);
  } else if (sweep->parsed()) {
    const char* summary = nullptr;
    genlab_status status =
        genlab_run_r_sweep(cfg, g.out_dir.c_str(), g.threads, &summary);
    if (summary) std::fputs(summary, stdout);
    if (status != GENLAB_OK) rc = die(status);
  } else if (train->parsed()) {
    genlab_status status = GENLAB_OK;
    for (auto [key, on] : {std::pair<const char*, bool>{"methods.hsm", train_hsm},
                           {"methods.ds", train_ds},
                           {"methods.bna", train_bna}}) {
      if (on && status == GENLAB_OK) status = genlab_config_set(cfg, key, "true");
    }
    if (status == GENLAB_OK) {
      double accuracy = 0.0;
      const char* summary = nullptr;
      status = genlab_train_cell(cfg, g.seed_set ? g.seed : 0,
                                 model_path.empty() ? nullptr : model_path.c_str(),
                                 &accuracy, &summary);
      if (summary) std::fputs(summary, stdout);
    }
    if (status != GENLAB_OK) rc = die(status);
  } else if (inspect->parsed()) {
    const char* text = nullptr;
    genlab_status status = genlab_world_inspect(
        cfg, dump_path.empty() ? nullptr : dump_path.c_str(), &text);
    if (status == GENLAB_OK) {
      std::fputs(text, stdout);
    } else {
      rc = die(status);
    }
  }

  genlab_config_free(cfg);
  return rc;
}
