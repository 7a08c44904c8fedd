#pragma once

#include <span>
#include <string>
#include <vector>

#include "layers.hpp"
#include "world.hpp"

namespace genlab {

struct HSMConfig {
  double step_size = 0.05;  // eta
  int step_count = 8;       // J
  bool recompute_target = false;

  bool operator==(const HSMConfig&) const = default;

  void validate() const;
};

struct HsmWarnings {
  long zero_norm_skips = 0;
  long collapsed_norm_stops = 0;
};

// One mined latent code with its trajectory, for offline analysis.
struct MinedCode {
  std::vector<double> h0;
  std::vector<double> h;  // final iterate
  int label = 0;
  int target_class = 0;   // k* (from h0 unless recompute_target)
  int steps = 0;
  std::vector<double> target_logit;  // logit of k* at h_0 .. h_J (pre-rescale value at each accepted iterate)
};

// argmax of the eval-mode class scores; ties break to the lowest index.
int predicted_class(const Classifier& c, const Sample& x);

// Gradient descent on the latent code against the classifier's top predicted
// logit, rescaling to the initial l2 norm after every step. Touches neither
// classifier parameters nor BN statistics.
MinedCode hsm_optimize(std::span<const double> h0, int label, const World& world,
                       const Classifier& c, const HSMConfig& cfg,
                       HsmWarnings* warnings = nullptr);

struct HsmSummary {
  double mean_logit_drop = 0.0;       // s[k*] at h0 minus at h_J
  double fraction_class_changed = 0.0;
  double mean_displacement = 0.0;     // ||h_J - h_0||
};

HsmSummary hsm_mining_stats(std::span<const MinedCode> batch, const Classifier& c,
                            const World& world);

// Per-code records for offline inspection, one JSON object per line.
void dump_mined_codes(std::span<const MinedCode> batch, const std::string& path);

}  // namespace genlab
