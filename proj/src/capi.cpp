#include "genlab/genlab.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "experiment.hpp"

using namespace genlab;

struct genlab_config {
  ExperimentConfig cfg;
  std::string text;  // backing storage for string out-params tied to this handle
};

struct genlab_classifier {
  Classifier model;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_text;  // backing storage for handle-less out-params

genlab_status fail(genlab_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

genlab_status ok() {
  g_last_error.clear();
  return GENLAB_OK;
}

// One catch policy for every entry point: exceptions become codes, never
// cross the C boundary.
template <class Fn>
genlab_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    return fail(GENLAB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::logic_error& e) {
    return fail(GENLAB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    return fail(GENLAB_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(GENLAB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GENLAB_ERR_INTERNAL, "unknown exception");
  }
}

}  // namespace

extern "C" {

const char* genlab_last_error(void) { return g_last_error.c_str(); }

const char* genlab_version(void) { return "0.1.0"; }

genlab_status genlab_config_default(genlab_config** out) {
  if (!out) return fail(GENLAB_ERR_INVALID_ARGUMENT, "out is NULL");
  return guarded([&] {
    *out = new genlab_config{};
    return ok();
  });
}

genlab_status genlab_config_load(const char* path, genlab_config** out) {
  if (!path || !out) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    auto* handle = new genlab_config{};
    try {
      handle->cfg = load_config(path);
    } catch (...) {
      delete handle;
      throw;
    }
    *out = handle;
    return ok();
  });
}

genlab_status genlab_config_set(genlab_config* cfg, const char* key,
                                const char* value) {
  if (!cfg || !key || !value) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    set_config_key(cfg->cfg, key, value);
    return ok();
  });
}

genlab_status genlab_config_set_seeds(genlab_config* cfg, const uint64_t* seeds,
                                      size_t count) {
  if (!cfg || (!seeds && count > 0)) {
    return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  }
  if (count == 0) return fail(GENLAB_ERR_INVALID_ARGUMENT, "seed list must be nonempty");
  return guarded([&] {
    cfg->cfg.seeds.assign(seeds, seeds + count);
    return ok();
  });
}

genlab_status genlab_config_emit(genlab_config* cfg, const char** out_text) {
  if (!cfg || !out_text) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    cfg->text = emit_config(cfg->cfg);
    *out_text = cfg->text.c_str();
    return ok();
  });
}

genlab_status genlab_config_fingerprint(genlab_config* cfg, const char** out_text) {
  if (!cfg || !out_text) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    cfg->text = config_fingerprint(cfg->cfg);
    *out_text = cfg->text.c_str();
    return ok();
  });
}

void genlab_config_free(genlab_config* cfg) { delete cfg; }

genlab_status genlab_run_ablation(genlab_config* cfg, const char* out_dir,
                                  int threads, const char** out_summary) {
  if (!cfg || !out_dir) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> genlab_status {
    AblationResult result = run_ablation(cfg->cfg, out_dir, threads < 1 ? 1 : threads);
    cfg->text = ablation_summary_text(result);
    if (out_summary) *out_summary = cfg->text.c_str();
    if (!result.failures.empty()) {
      return fail(GENLAB_ERR_RUNTIME,
                  std::to_string(result.failures.size()) + " cell(s) failed");
    }
    return ok();
  });
}

genlab_status genlab_run_r_sweep(genlab_config* cfg, const char* out_dir,
                                 int threads, const char** out_summary) {
  if (!cfg || !out_dir) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> genlab_status {
    SweepResult result = run_r_sweep(cfg->cfg, out_dir, threads < 1 ? 1 : threads);
    cfg->text = sweep_summary_text(result);
    if (out_summary) *out_summary = cfg->text.c_str();
    if (!result.failures.empty()) {
      return fail(GENLAB_ERR_RUNTIME,
                  std::to_string(result.failures.size()) + " point(s) failed");
    }
    return ok();
  });
}

genlab_status genlab_train_cell(genlab_config* cfg, uint64_t seed,
                                const char* model_path, double* out_accuracy,
                                const char** out_summary) {
  if (!cfg) return fail(GENLAB_ERR_INVALID_ARGUMENT, "cfg is NULL");
  return guarded([&] {
    const ExperimentConfig& c = cfg->cfg;
    Classifier raw, adapted;
    TrainedCellResult r =
        run_trained_cell(c, c.method_hsm, c.method_ds, seed, &raw, &adapted);
    const bool bna = c.method_bna;
    double accuracy = bna ? r.accuracy_bna : r.accuracy_raw;
    if (model_path) (bna ? adapted : raw).save(model_path);
    if (out_accuracy) *out_accuracy = accuracy;
    CellToggles toggles{c.method_hsm, c.method_ds, bna};
    std::string text = "cell " + cell_name(toggles) + " seed " + std::to_string(seed) +
                       " accuracy " + std::to_string(100.0 * accuracy) + "%\n";
    if (bna) {
      text += "accuracy before adaptation " +
              std::to_string(100.0 * r.accuracy_raw) + "%\n";
    }
    cfg->text = std::move(text);
    if (out_summary) *out_summary = cfg->text.c_str();
    return ok();
  });
}

genlab_status genlab_gradcheck(const char* corrupt, uint64_t seed,
                               int* out_all_pass, const char** out_report) {
  return guarded([&] {
    GradCheckOptions options;
    if (corrupt) options.corrupt = corrupt;
    options.seed = seed;
    GradCheckReport report = gradcheck_command(options);
    g_text = gradcheck_report_text(report);
    if (out_all_pass) *out_all_pass = report.all_pass ? 1 : 0;
    if (out_report) *out_report = g_text.c_str();
    return ok();
  });
}

genlab_status genlab_world_inspect(genlab_config* cfg, const char* dump_path,
                                   const char** out_text) {
  if (!cfg) return fail(GENLAB_ERR_INVALID_ARGUMENT, "cfg is NULL");
  return guarded([&] {
    cfg->text = world_inspect(cfg->cfg, dump_path ? dump_path : "");
    if (out_text) *out_text = cfg->text.c_str();
    return ok();
  });
}

genlab_status genlab_classifier_load(const char* path, genlab_classifier** out) {
  if (!path || !out) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    auto* handle = new genlab_classifier{};
    try {
      handle->model = Classifier::load(path);
    } catch (...) {
      delete handle;
      throw;
    }
    *out = handle;
    return ok();
  });
}

genlab_status genlab_classifier_save(genlab_classifier* c, const char* path) {
  if (!c || !path) return fail(GENLAB_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    c->model.save(path);
    return ok();
  });
}

void genlab_classifier_free(genlab_classifier* c) { delete c; }

}  // extern "C"
