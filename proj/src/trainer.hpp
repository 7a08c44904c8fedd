#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <utility>

#include "pipeline.hpp"

namespace genlab {

struct OptimizerState {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  long skipped_steps = 0;  // non-finite gradient incidents
  std::unordered_map<const Variable*, std::vector<double>> velocity;
};

// v <- momentum * v + grad + wd * theta ; theta <- theta - lr * v
// decay_flags gates weight decay per parameter (BN gamma/beta are excluded).
void sgd_step(std::span<Variable* const> params, std::span<const char> decay_flags,
              OptimizerState& opt);

struct LrSchedule {
  double lr0 = 0.1;
  int total_epochs = 60;
};

// step schedule: lr0 on [0, I/2), lr0/10 on [I/2, 3I/4), lr0/100 after
double lr_at(const LrSchedule& schedule, int epoch);

struct TrainRunConfig {
  int epochs = 60;
  int batch_size = 64;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  uint64_t seed = 0;

  void validate() const;
};

// One shuffled pass; the final batch is dropped when smaller than 2 (BN train
// mode needs it). Returns the mean batch loss.
double train_epoch(Classifier& c, const Dataset& dataset, OptimizerState& opt,
                   int batch_size, RngStream& rng);

double evaluate(const Classifier& c, const Dataset& dataset);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double eval_accuracy = -1.0;  // -1 when no eval set was supplied
  size_t dataset_turnover = 0;  // items replaced at the end of this epoch
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// The outer loop: train an epoch, then apply dataset smoothing (skipped
// entirely when smoothing is null or r == 0, which degenerates to
// fixed-dataset training, bit for bit).
Classifier train_with_ds(Classifier c, const World& world, const TrainRunConfig& run,
                         const SmoothingConfig* smoothing, const HSMConfig& hsm_cfg,
                         Dataset dataset, const Dataset* eval_set = nullptr,
                         const EpochCallback& on_epoch = {},
                         HsmWarnings* warnings = nullptr);

// Fixed-size dataset collection with mining: seed with M random samples, then
// alternate one-epoch training of an auxiliary classifier with appending M
// mined samples, stopping once the dataset holds exactly N items. The caller
// trains a fresh final classifier on the result.
std::pair<Dataset, Classifier> collect_hsm_dataset(
    const World& world, const Classifier& c0, size_t n, size_t m,
    const TrainRunConfig& run, const HSMConfig& hsm_cfg,
    HsmWarnings* warnings = nullptr);

}  // namespace genlab
