#include "world.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "hash.hpp"

namespace genlab {

void WorldConfig::validate() const {
  if (class_count <= 0 || latent_dim <= 0 || obs_dim <= 0 || hidden_dim <= 0) {
    throw std::invalid_argument("world config: all dimensions must be positive");
  }
  if (truncation <= 0.0) {
    throw std::invalid_argument("world config: truncation must be > 0");
  }
  if (real_noise_sigma < 0.0) {
    throw std::invalid_argument("world config: real_noise_sigma must be >= 0");
  }
}

namespace {
// Generator weight gains. Chosen so the truncated prior keeps pre-activations
// in the near-linear tanh range while untruncated "real" latents reach the
// saturated range the training set never covers.
constexpr double kW1Gain = 2.0;
constexpr double kEmbedSd = 1.0;
constexpr double kW2Gain = 1.5;
constexpr double kBiasSd = 0.1;
}  // namespace

World::World(const WorldConfig& config) : cfg_(config) {
  cfg_.validate();
  RngStream wrng = stream("world.generator_weights");
  const int dh = cfg_.latent_dim, hid = cfg_.hidden_dim, d = cfg_.obs_dim,
            k = cfg_.class_count;

  std::vector<double> w1(static_cast<size_t>(hid) * dh);
  double sd1 = kW1Gain / std::sqrt(static_cast<double>(dh));
  for (double& x : w1) x = sd1 * wrng.normal();
  w1_ = Variable({hid, dh}, std::move(w1));

  std::vector<double> emb(static_cast<size_t>(k) * hid);
  for (double& x : emb) x = kEmbedSd * wrng.normal();
  class_embed_ = Variable({k, hid}, std::move(emb));

  std::vector<double> w2(static_cast<size_t>(d) * hid);
  double sd2 = kW2Gain / std::sqrt(static_cast<double>(hid));
  for (double& x : w2) x = sd2 * wrng.normal();
  w2_ = Variable({d, hid}, std::move(w2));

  std::vector<double> b2(static_cast<size_t>(d));
  for (double& x : b2) x = kBiasSd * wrng.normal();
  b2_ = Variable({d}, std::move(b2));

  RngStream prng = stream("world.real_perturbation");
  scale_.resize(d);
  shift_.resize(d);
  for (int i = 0; i < d; ++i) {
    scale_[i] = cfg_.perturb_scale_min +
                (cfg_.perturb_scale_max - cfg_.perturb_scale_min) * prng.uniform();
  }
  for (int i = 0; i < d; ++i) {
    shift_[i] = cfg_.perturb_shift_min +
                (cfg_.perturb_shift_max - cfg_.perturb_shift_min) * prng.uniform();
  }
}

void World::check_label(int label) const {
  if (label < 0 || label >= cfg_.class_count) {
    throw std::invalid_argument("world: label " + std::to_string(label) +
                                " out of range [0," +
                                std::to_string(cfg_.class_count) + ")");
  }
}

std::vector<double> World::sample_latent(RngStream& rng) const {
  std::vector<double> h(static_cast<size_t>(cfg_.latent_dim));
  for (double& x : h) x = rng.truncated_normal(cfg_.truncation);
  return h;
}

std::vector<double> World::generate(std::span<const double> h, int label) const {
  check_label(label);
  if (static_cast<int>(h.size()) != cfg_.latent_dim) {
    throw std::invalid_argument("world: latent size " + std::to_string(h.size()) +
                                " does not match latent_dim " +
                                std::to_string(cfg_.latent_dim));
  }
  const int dh = cfg_.latent_dim, hid = cfg_.hidden_dim, d = cfg_.obs_dim;
  std::vector<double> h1(static_cast<size_t>(hid));
  for (int i = 0; i < hid; ++i) {
    double acc = class_embed_.value[static_cast<size_t>(label) * hid + i];
    for (int j = 0; j < dh; ++j) acc += w1_.value[i * dh + j] * h[j];
    h1[i] = std::tanh(acc);
  }
  std::vector<double> x(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    double acc = b2_.value[i];
    for (int j = 0; j < hid; ++j) acc += w2_.value[i * hid + j] * h1[j];
    x[i] = std::tanh(acc);
  }
  return x;
}

Tensor World::generate_on_tape(Tape& tape, Tensor h_row, int label) const {
  check_label(label);
  if (h_row.shape() != Shape{1, cfg_.latent_dim}) {
    throw std::invalid_argument("world: generate_on_tape wants [1 x d_h], got " +
                                shape_str(h_row.shape()));
  }
  const int hid = cfg_.hidden_dim;
  // Frozen weights enter as constants: no gradient can reach them.
  Tensor cw1 = tape.constant(w1_.shape, w1_.value);
  Tensor cemb = tape.constant(class_embed_.shape, class_embed_.value);
  Tensor cw2 = tape.constant(w2_.shape, w2_.value);
  Tensor cb2 = tape.constant(b2_.shape, b2_.value);

  Tensor pre1 = tape.matmul(h_row, cw1, /*transpose_b=*/true);        // [1 x hid]
  Tensor u_y = tape.slice_row(cemb, label);                           // [hid]
  pre1 = tape.add(pre1, tape.broadcast_rows(u_y, 1));
  Tensor h1 = tape.tanh(pre1);
  Tensor pre2 = tape.matmul(h1, cw2, /*transpose_b=*/true);           // [1 x D]
  pre2 = tape.add(pre2, tape.broadcast_rows(cb2, 1));
  (void)hid;
  return tape.tanh(pre2);
}

Sample World::sample_real(int label, RngStream& rng) const {
  check_label(label);
  std::vector<double> h(static_cast<size_t>(cfg_.latent_dim));
  for (double& x : h) x = rng.normal();  // untruncated prior
  std::vector<double> x = generate(h, label);
  for (size_t i = 0; i < x.size(); ++i) {
    double noise = cfg_.real_noise_sigma > 0.0 ? cfg_.real_noise_sigma * rng.normal() : 0.0;
    x[i] = scale_[i] * x[i] + shift_[i] + noise;
  }
  return Sample{std::move(x), label, Provenance{SampleKind::kReal, 0}};
}

std::pair<Dataset, Dataset> World::make_real_splits(int train_per_class,
                                                    int test_per_class,
                                                    uint64_t seed) const {
  if (train_per_class <= 0 || test_per_class <= 0) {
    throw std::invalid_argument("make_real_splits: per-class counts must be positive");
  }
  const int k = cfg_.class_count;
  Dataset train(k, static_cast<size_t>(train_per_class) * k);
  Dataset test(k, static_cast<size_t>(test_per_class) * k);
  RngStream train_rng(cfg_.master_seed, "real_split.train", seed);
  RngStream test_rng(cfg_.master_seed, "real_split.test", seed);
  for (int y = 0; y < k; ++y) {
    for (int i = 0; i < train_per_class; ++i) train.append(sample_real(y, train_rng));
  }
  for (int y = 0; y < k; ++y) {
    for (int i = 0; i < test_per_class; ++i) test.append(sample_real(y, test_rng));
  }
  return {std::move(train), std::move(test)};
}

uint64_t World::weights_hash() const {
  ByteHash h;
  h.update(w1_.value);
  h.update(class_embed_.value);
  h.update(w2_.value);
  h.update(b2_.value);
  h.update(scale_);
  h.update(shift_);
  return h.digest();
}

// Text dump, one section per weight block:
//   header line "<name> <rows> <cols>", then one row of values per line.
void World::dump_weights(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("world dump: cannot open " + path);
  os.precision(17);
  auto block = [&os](const char* name, const Variable& v) {
    int rows = v.shape.size() == 2 ? v.shape[0] : 1;
    int cols = v.shape.size() == 2 ? v.shape[1] : v.shape[0];
    os << name << " " << rows << " " << cols << "\n";
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) os << (j ? " " : "") << v.value[i * cols + j];
      os << "\n";
    }
  };
  block("w1", w1_);
  block("class_embedding", class_embed_);
  block("w2", w2_);
  block("b2", b2_);
  os << "real_scale 1 " << scale_.size() << "\n";
  for (size_t i = 0; i < scale_.size(); ++i) os << (i ? " " : "") << scale_[i];
  os << "\nreal_shift 1 " << shift_.size() << "\n";
  for (size_t i = 0; i < shift_.size(); ++i) os << (i ? " " : "") << shift_[i];
  os << "\n";
}

}  // namespace genlab
