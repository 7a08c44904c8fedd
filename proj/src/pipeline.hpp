#pragma once

#include "dataset.hpp"
#include "hsm.hpp"
#include "layers.hpp"
#include "world.hpp"

namespace genlab {

struct SmoothingConfig {
  double replacement_fraction = 0.5;  // r
  bool use_hsm = false;
  size_t epoch_size = 2000;           // N

  void validate() const;
};

// FillDataset: M generated samples, class-balanced (remainder to the lowest
// class indices), each optionally mined against the given classifier.
Dataset fill_dataset(size_t m, bool with_hsm, const Classifier* c,
                     const World& world, const HSMConfig& hsm_cfg, RngStream& rng,
                     HsmWarnings* warnings = nullptr);

// Per-epoch smoothing step: retain a random (1-r)N subset (stratified by
// class so balance stays within +-1), then top back up to N with freshly
// mined and freshly random samples. r = 0 returns the dataset untouched.
Dataset ds_epoch_update(Dataset dataset, const SmoothingConfig& cfg,
                        const Classifier* c, const World& world,
                        const HSMConfig& hsm_cfg, RngStream& rng,
                        HsmWarnings* warnings = nullptr);

}  // namespace genlab
