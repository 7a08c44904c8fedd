#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace genlab {

// A frozen conditional generator plus a perturbed "real" domain. Truncated
// latent sampling manufactures the diversity deficit; the per-dimension
// affine perturbation (s, t) plus observation noise manufactures the domain
// gap. Both gaps are what the training-side methods have to close.
struct WorldConfig {
  int class_count = 10;
  int latent_dim = 16;
  int obs_dim = 64;
  int hidden_dim = 48;
  double truncation = 0.5;        // psi
  double real_noise_sigma = 0.05;
  double perturb_scale_min = 0.9;
  double perturb_scale_max = 1.1;
  double perturb_shift_min = -0.35;
  double perturb_shift_max = 0.35;
  uint64_t master_seed = 0;

  bool operator==(const WorldConfig&) const = default;
  void validate() const;  // throws on bad dims / nonpositive truncation
};

class World {
 public:
  explicit World(const WorldConfig& config);

  const WorldConfig& config() const { return cfg_; }

  // Stream derivation: (master_seed, purpose, index). All randomness in an
  // experiment flows through streams created here or derived the same way.
  RngStream stream(std::string_view purpose, uint64_t index = 0) const {
    return RngStream(cfg_.master_seed, purpose, index);
  }

  // truncated standard normal per coordinate (resampling, not clamping)
  std::vector<double> sample_latent(RngStream& rng) const;

  // x = tanh(W2 . tanh(W1 . h + u_y) + b2); frozen weights, differentiable in h
  std::vector<double> generate(std::span<const double> h, int label) const;
  Tensor generate_on_tape(Tape& tape, Tensor h_row, int label) const;  // h [1 x d_h]

  // real domain: x = s * G(h, y) + t + noise, with h from the UNtruncated prior
  Sample sample_real(int label, RngStream& rng) const;

  std::pair<Dataset, Dataset> make_real_splits(int train_per_class,
                                               int test_per_class,
                                               uint64_t seed) const;

  uint64_t weights_hash() const;
  void dump_weights(const std::string& path) const;  // documented text layout

  const std::vector<double>& real_scale() const { return scale_; }
  const std::vector<double>& real_shift() const { return shift_; }

 private:
  void check_label(int label) const;

  WorldConfig cfg_;
  Variable w1_;           // [hidden x d_h]
  Variable class_embed_;  // [K x hidden], row y is u_y
  Variable w2_;           // [D x hidden]
  Variable b2_;           // [D]
  std::vector<double> scale_;  // s, per observed dimension
  std::vector<double> shift_;  // t, per observed dimension
};

}  // namespace genlab
