#pragma once

#include <string>
#include <vector>

#include "bna.hpp"
#include "hsm.hpp"
#include "layers.hpp"
#include "pipeline.hpp"
#include "trainer.hpp"
#include "world.hpp"

namespace genlab {

// Everything a run needs, serializable to a flat `key = value` file.
struct ExperimentConfig {
  WorldConfig world;
  int classifier_hidden = 64;
  Activation classifier_activation = Activation::kRelu;

  int epochs = 60;
  int batch_size = 64;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  size_t dataset_size = 500;  // N
  size_t collect_chunk = 0;    // M for mined collection; 0 means N / 10

  double replacement_fraction = 0.5;  // r for smoothing-enabled cells
  HSMConfig hsm;
  int bna_passes = 5;
  bool bna_reset_stats = false;

  // method toggles for single-cell runs; the ablation ignores them
  bool method_hsm = false;
  bool method_ds = false;
  bool method_bna = false;

  int train_per_class = 200;
  int test_per_class = 50;

  std::vector<double> r_grid = {0.0, 0.1, 0.2, 0.33, 0.5, 1.0};
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const;
  ClassifierSpec classifier_spec() const;
  TrainRunConfig run_config(uint64_t seed) const;
  size_t collect_chunk_or_default() const {
    return collect_chunk == 0 ? dataset_size / 10 : collect_chunk;
  }
};

// `key = value` lines, '#' comments, unknown keys rejected with their line
// number, missing keys reported all at once.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

// Set one key by name, same value syntax as a config file line. Throws on
// unknown keys or unparsable values. Does not re-validate the whole config.
void set_config_key(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Canonical form: every key, sorted, doubles at full precision. load of an
// emitted file reproduces the config exactly.
std::string emit_config(const ExperimentConfig& cfg);
void emit_config_file(const ExperimentConfig& cfg, const std::string& path);

// Hash of the canonical form; invariant under key reordering in the source file.
std::string config_fingerprint(const ExperimentConfig& cfg);

}  // namespace genlab
