#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genlab {

void SmoothingConfig::validate() const {
  if (replacement_fraction < 0.0 || replacement_fraction > 1.0) {
    throw std::invalid_argument("smoothing: replacement_fraction must be in [0,1]");
  }
  if (epoch_size == 0) throw std::invalid_argument("smoothing: epoch_size must be > 0");
}

namespace {

// M split over K classes, remainder going to the lowest class indices.
std::vector<size_t> balanced_counts(size_t m, int k) {
  std::vector<size_t> counts(static_cast<size_t>(k), m / k);
  for (size_t c = 0; c < m % k; ++c) counts[c]++;
  return counts;
}

Sample make_generated_sample(int label, bool with_hsm, const Classifier* c,
                             const World& world, const HSMConfig& hsm_cfg,
                             RngStream& rng, HsmWarnings* warnings) {
  std::vector<double> h = world.sample_latent(rng);
  if (with_hsm) {
    MinedCode mined = hsm_optimize(h, label, world, *c, hsm_cfg, warnings);
    return Sample{world.generate(mined.h, label), label,
                  Provenance{SampleKind::kGeneratedHsm, mined.steps}};
  }
  return Sample{world.generate(h, label), label,
                Provenance{SampleKind::kGeneratedRandom, 0}};
}

}  // namespace

Dataset fill_dataset(size_t m, bool with_hsm, const Classifier* c,
                     const World& world, const HSMConfig& hsm_cfg, RngStream& rng,
                     HsmWarnings* warnings) {
  if (with_hsm && c == nullptr) {
    throw std::invalid_argument("fill_dataset: mining requires a classifier");
  }
  const int k = world.config().class_count;
  Dataset out(k, m);
  auto counts = balanced_counts(m, k);
  for (int label = 0; label < k; ++label) {
    for (size_t i = 0; i < counts[static_cast<size_t>(label)]; ++i) {
      out.append(make_generated_sample(label, with_hsm, c, world, hsm_cfg, rng, warnings));
    }
  }
  return out;
}

Dataset ds_epoch_update(Dataset dataset, const SmoothingConfig& cfg,
                        const Classifier* c, const World& world,
                        const HSMConfig& hsm_cfg, RngStream& rng,
                        HsmWarnings* warnings) {
  cfg.validate();
  const size_t n = cfg.epoch_size;
  if (dataset.size() != n) {
    throw std::invalid_argument("ds_epoch_update: dataset size " +
                                std::to_string(dataset.size()) +
                                " does not match epoch size " + std::to_string(n));
  }
  const double r = cfg.replacement_fraction;
  if (r == 0.0) return dataset;
  if (cfg.use_hsm && c == nullptr) {
    throw std::invalid_argument("ds_epoch_update: mining requires a classifier");
  }

  const int k = dataset.class_count();
  const size_t keep_total = static_cast<size_t>(std::llround((1.0 - r) * static_cast<double>(n)));
  size_t n_hsm = cfg.use_hsm
                     ? static_cast<size_t>(std::llround(r * static_cast<double>(n) / 2.0))
                     : 0;
  if (keep_total + n_hsm > n) n_hsm = n - keep_total;  // rounding residue

  // Per-class item indices in original order.
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(k));
  for (size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<size_t>(dataset[i].label)].push_back(i);
  }

  // Retention quotas: even split of keep_total, clamped per class, leftovers
  // pushed onward so the total is exact.
  auto keep_quota = balanced_counts(keep_total, k);
  size_t carry = 0;
  for (int c2 = 0; c2 < k; ++c2) {
    size_t want = keep_quota[c2] + carry;
    size_t have = by_class[c2].size();
    keep_quota[c2] = std::min(want, have);
    carry = want - keep_quota[c2];
  }
  if (carry > 0) {
    for (int c2 = 0; c2 < k && carry > 0; ++c2) {
      size_t spare = by_class[c2].size() - keep_quota[c2];
      size_t take = std::min(spare, carry);
      keep_quota[c2] += take;
      carry -= take;
    }
  }

  // Uniform-within-class survivor selection, original order preserved.
  std::vector<char> survives(dataset.size(), 0);
  for (int c2 = 0; c2 < k; ++c2) {
    auto idx = by_class[c2];
    rng.shuffle(idx);
    for (size_t i = 0; i < keep_quota[c2]; ++i) survives[idx[i]] = 1;
  }

  // Addition quotas: exact per-class deficit against the balanced target.
  auto target = balanced_counts(n, k);
  std::vector<size_t> adds(static_cast<size_t>(k));
  for (int c2 = 0; c2 < k; ++c2) adds[c2] = target[c2] - keep_quota[c2];

  auto hsm_quota = balanced_counts(n_hsm, k);
  carry = 0;
  for (int c2 = 0; c2 < k; ++c2) {
    size_t want = hsm_quota[c2] + carry;
    hsm_quota[c2] = std::min(want, adds[c2]);
    carry = want - hsm_quota[c2];
  }
  if (carry > 0) {
    for (int c2 = 0; c2 < k && carry > 0; ++c2) {
      size_t spare = adds[c2] - hsm_quota[c2];
      size_t take = std::min(spare, carry);
      hsm_quota[c2] += take;
      carry -= take;
    }
  }

  Dataset out(k, n);
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (survives[i]) out.append(std::move(dataset[i]));
  }
  for (int label = 0; label < k; ++label) {
    for (size_t i = 0; i < hsm_quota[label]; ++i) {
      out.append(make_generated_sample(label, true, c, world, hsm_cfg, rng, warnings));
    }
    for (size_t i = hsm_quota[label]; i < adds[label]; ++i) {
      out.append(make_generated_sample(label, false, nullptr, world, hsm_cfg, rng, warnings));
    }
  }
  if (out.size() != n) {
    throw std::logic_error("ds_epoch_update: size invariant violated");
  }
  return out;
}

}  // namespace genlab
