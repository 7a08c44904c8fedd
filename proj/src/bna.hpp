#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "layers.hpp"

namespace genlab {

struct BnaConfig {
  int passes = 5;
  int batch_size = 64;
  std::optional<double> alpha_override;  // default: the training alpha
  bool reset_stats = false;  // reset omega before adapting instead of continuing
  uint64_t seed = 0;
};

// Forward-only re-estimation of the BN running statistics on unlabeled data.
// Runs shuffled train-mode epochs without ever calling backward; theta is
// untouched byte for byte and labels are never read.
void adapt_bn_statistics(Classifier& c, const Dataset& unlabeled, const BnaConfig& cfg);

struct BnLayerShift {
  double mean_shift = 0.0;      // mean |mu_real - mu_gen| / sqrt(var_gen + eps)
  double variance_ratio = 0.0;  // mean |log((var_real+eps)/(var_gen+eps))|
};

// Per-layer divergence between pre-BN activation moments under two input sets.
std::vector<BnLayerShift> bn_shift_report(const Classifier& c,
                                          const Dataset& generated_set,
                                          const Dataset& real_set);

std::string bn_shift_report_text(const std::vector<BnLayerShift>& report);

}  // namespace genlab
