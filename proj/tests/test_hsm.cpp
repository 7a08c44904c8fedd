#include <stdexcept>
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hsm.hpp"
#include "pipeline.hpp"
#include "trainer.hpp"

using namespace genlab;

namespace {

WorldConfig hsm_world_config() {
  WorldConfig cfg;
  cfg.class_count = 4;
  cfg.latent_dim = 6;
  cfg.obs_dim = 12;
  cfg.hidden_dim = 8;
  cfg.master_seed = 21;
  return cfg;
}

Classifier make_classifier(const World& w, uint64_t seed,
                           Activation act = Activation::kTanh) {
  RngStream rng(seed, "test.hsm.classifier");
  return Classifier(
      ClassifierSpec{w.config().obs_dim, 8, w.config().class_count, act}, rng);
}

double norm(std::span<const double> v) {
  double acc = 0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double target_logit(const World& w, const Classifier& c, std::span<const double> h,
                    int label, int k) {
  Tape t;
  auto x = w.generate(h, label);
  const int d = static_cast<int>(x.size());
  Tensor logits = const_cast<Classifier&>(c).forward_logits(
      t, t.constant({1, d}, std::move(x)), Mode::kEval);
  return logits.value()[static_cast<size_t>(k)];
}

}  // namespace

TEST_CASE("predicted class is the score argmax with low tie-break") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 1);
  RngStream rng = w.stream("test.pred");
  Sample s{w.generate(w.sample_latent(rng), 0), 0, {}};
  auto scores = c.scores(s.x);
  CHECK(predicted_class(c, s) == argmax(scores));
  // softmax is monotone: argmax over probabilities == argmax over logits
  Tape t;
  const int d = static_cast<int>(s.x.size());
  Tensor logits = c.forward_logits(t, t.constant({1, d}, s.x), Mode::kEval);
  CHECK(argmax(scores) == argmax(logits.value()));
}

TEST_CASE("zero steps is the identity") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 2);
  RngStream rng = w.stream("test.j0");
  std::vector<double> h0 = w.sample_latent(rng);
  HSMConfig cfg;
  cfg.step_count = 0;
  MinedCode m = hsm_optimize(h0, 1, w, c, cfg);
  CHECK(m.h == h0);
  CHECK(m.steps == 0);
  REQUIRE(m.target_logit.size() == 1);  // just the final evaluation
}

TEST_CASE("every iterate keeps the initial norm") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 3);
  RngStream rng = w.stream("test.norm");
  HSMConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> h0 = w.sample_latent(rng);
    for (int j = 1; j <= cfg.step_count; ++j) {
      HSMConfig partial = cfg;
      partial.step_count = j;
      MinedCode m = hsm_optimize(h0, trial % 4, w, c, partial);
      CHECK(std::abs(norm(m.h) - norm(h0)) <= 1e-9 * norm(h0));
    }
  }
}

TEST_CASE("a small step strictly lowers the pre-rescale target logit") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 4);
  RngStream rng = w.stream("test.descent");
  const double eta = 1e-4;
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    int label = trial % 4;
    std::vector<double> h0 = w.sample_latent(rng);
    int kstar = argmax(c.scores(w.generate(h0, label)));

    // one explicit descent step, examined before the norm rescale
    Tape t;
    Variable hv({1, 6}, h0);
    Tensor x = w.generate_on_tape(t, t.leaf(hv), label);
    Tensor row = t.slice_row(c.forward_logits(t, x, Mode::kEval), 0);
    t.backward(t.pick(row, kstar));
    double g2 = 0;
    for (double g : hv.grad) g2 += g * g;
    if (g2 < 1e-16) continue;  // flat point; descent has nothing to do
    std::vector<double> h1 = h0;
    for (size_t i = 0; i < h1.size(); ++i) h1[i] -= eta * hv.grad[i];
    CHECK(target_logit(w, c, h1, label, kstar) < target_logit(w, c, h0, label, kstar));
    checked++;
  }
  CHECK(checked >= 20);
}

TEST_CASE("mining touches neither theta nor omega") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 5);
  uint64_t theta = c.theta_hash();
  uint64_t omega = c.omega_hash();
  RngStream rng = w.stream("test.frozen");
  HSMConfig cfg;
  for (int i = 0; i < 5; ++i) hsm_optimize(w.sample_latent(rng), i % 4, w, c, cfg);
  CHECK(c.theta_hash() == theta);
  CHECK(c.omega_hash() == omega);
}

TEST_CASE("zero-norm codes are skipped with a warning") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 6);
  std::vector<double> zero(6, 0.0);
  HsmWarnings warnings;
  MinedCode m = hsm_optimize(zero, 0, w, c, HSMConfig{}, &warnings);
  CHECK(m.h == zero);
  CHECK(m.steps == 0);
  CHECK(warnings.zero_norm_skips == 1);
}

TEST_CASE("mining statistics boundary cases") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 7);
  RngStream rng = w.stream("test.stats");

  HSMConfig j0;
  j0.step_count = 0;
  std::vector<MinedCode> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(hsm_optimize(w.sample_latent(rng), i % 4, w, c, j0));
  HsmSummary s = hsm_mining_stats(batch, c, w);
  CHECK(s.mean_logit_drop == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.mean_displacement == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.fraction_class_changed == 0.0);

  HSMConfig tiny;
  tiny.step_size = 1e-10;
  batch.clear();
  for (int i = 0; i < 8; ++i) batch.push_back(hsm_optimize(w.sample_latent(rng), i % 4, w, c, tiny));
  s = hsm_mining_stats(batch, c, w);
  CHECK(s.mean_displacement <= 1e-6);  // eta -> 0 limit
}

TEST_CASE("default mining on a lightly trained classifier lowers the logit") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 8);
  RngStream fill_rng = w.stream("test.drop.fill");
  Dataset data = fill_dataset(200, false, nullptr, w, HSMConfig{}, fill_rng);
  OptimizerState opt;
  opt.learning_rate = 0.05;
  for (int e = 0; e < 3; ++e) {
    RngStream erng = w.stream("test.drop.epoch", static_cast<uint64_t>(e));
    train_epoch(c, data, opt, 32, erng);
  }

  RngStream rng = w.stream("test.drop.mine");
  std::vector<MinedCode> batch;
  for (int i = 0; i < 30; ++i) batch.push_back(hsm_optimize(w.sample_latent(rng), i % 4, w, c, HSMConfig{}));
  HsmSummary s = hsm_mining_stats(batch, c, w);
  CHECK(s.mean_logit_drop > 0.0);
  CHECK(s.mean_displacement > 0.0);
}

TEST_CASE("mined codes are specific to the classifier") {
  World w(hsm_world_config());
  Classifier c1 = make_classifier(w, 9);
  Classifier c2 = make_classifier(w, 10);
  RngStream rng = w.stream("test.specific");
  std::vector<double> h0 = w.sample_latent(rng);
  MinedCode m1 = hsm_optimize(h0, 2, w, c1, HSMConfig{});
  MinedCode m2 = hsm_optimize(h0, 2, w, c2, HSMConfig{});
  CHECK(m1.h != m2.h);  // Fig.-2 analog: the adversary moved, the codes moved
}

TEST_CASE("trajectory dump writes one JSON object per code") {
  World w(hsm_world_config());
  Classifier c = make_classifier(w, 11);
  RngStream rng = w.stream("test.dump");
  std::vector<MinedCode> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(hsm_optimize(w.sample_latent(rng), i, w, c, HSMConfig{}));
  const std::string path = "test_mined_codes.jsonl";
  dump_mined_codes(batch, path);
  std::ifstream is(path);
  REQUIRE(is.good());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) {
    CHECK(line.front() == '{');
    CHECK(line.back() == '}');
    lines++;
  }
  CHECK(lines == 3);
  is.close();
  std::remove(path.c_str());
}

TEST_CASE("bad mining configs are rejected") {
  HSMConfig cfg;
  cfg.step_size = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = HSMConfig{};
  cfg.step_count = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
