#include <stdexcept>
#include <doctest.h>

#include <cmath>

#include "bna.hpp"
#include "pipeline.hpp"
#include "trainer.hpp"

using namespace genlab;

namespace {

WorldConfig bna_world_config() {
  WorldConfig cfg;
  cfg.class_count = 3;
  cfg.latent_dim = 5;
  cfg.obs_dim = 10;
  cfg.hidden_dim = 7;
  cfg.master_seed = 51;
  return cfg;
}

Classifier bna_classifier(const World& w, uint64_t seed) {
  RngStream rng(seed, "test.bna.classifier");
  return Classifier(
      ClassifierSpec{w.config().obs_dim, 8, w.config().class_count, Activation::kTanh},
      rng);
}

}  // namespace

TEST_CASE("adaptation moves omega and leaves theta byte-identical") {
  World w(bna_world_config());
  Classifier c = bna_classifier(w, 1);
  auto [train, test] = w.make_real_splits(20, 5, 0);
  uint64_t theta = c.theta_hash();
  uint64_t omega = c.omega_hash();
  adapt_bn_statistics(c, train, BnaConfig{});
  CHECK(c.theta_hash() == theta);
  CHECK(c.omega_hash() != omega);
}

TEST_CASE("labels are never read") {
  World w(bna_world_config());
  auto [train, test] = w.make_real_splits(20, 5, 0);
  Dataset shuffled_labels = train;
  for (auto& s : shuffled_labels.items()) s.label = (s.label + 1) % 3;

  Classifier c1 = bna_classifier(w, 2);
  Classifier c2 = bna_classifier(w, 2);
  adapt_bn_statistics(c1, train, BnaConfig{});
  adapt_bn_statistics(c2, shuffled_labels, BnaConfig{});
  CHECK(c1.omega_hash() == c2.omega_hash());
}

TEST_CASE("running stats converge to the direct-computation oracle") {
  World w(bna_world_config());
  Classifier c = bna_classifier(w, 3);
  // single-batch adaptation set: train-mode moments are the same every pass,
  // so the exponential average converges geometrically to them
  auto [train, test] = w.make_real_splits(16, 2, 0);
  Dataset batch_set(3, 48);
  for (size_t i = 0; i < 48; ++i) batch_set.append(train[i]);

  BnaConfig cfg;
  cfg.passes = 80;  // 0.9^80 ~ 2e-4 residual
  cfg.batch_size = 48;
  adapt_bn_statistics(c, batch_set, cfg);

  std::vector<const std::vector<double>*> xs;
  for (const auto& s : batch_set.items()) xs.push_back(&s.x);
  auto acts = c.bn_input_activations(xs);
  auto states = c.bn_states();
  REQUIRE(acts.size() == states.size());
  const size_t m = batch_set.size();
  for (size_t layer = 0; layer < states.size(); ++layer) {
    const size_t width = static_cast<size_t>(states[layer]->width());
    for (size_t j = 0; j < width; ++j) {
      double mean = 0.0, var = 0.0;
      for (size_t i = 0; i < m; ++i) mean += acts[layer][i * width + j];
      mean /= static_cast<double>(m);
      for (size_t i = 0; i < m; ++i) {
        double d = acts[layer][i * width + j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(m);
      CHECK(std::abs(states[layer]->running_mean[j] - mean) <=
            0.02 * std::max(std::abs(mean), 0.05));
      CHECK(std::abs(states[layer]->running_var[j] - var) <=
            0.02 * std::max(var, 0.05));
    }
  }
}

TEST_CASE("reset flag starts adaptation from scratch") {
  World w(bna_world_config());
  auto [train, test] = w.make_real_splits(20, 5, 0);
  Classifier warm = bna_classifier(w, 4);
  Classifier cold = bna_classifier(w, 4);
  // give the warm model some training history so its omega differs
  RngStream fill_rng = w.stream("test.reset.fill");
  Dataset gen = fill_dataset(40, false, nullptr, w, HSMConfig{}, fill_rng);
  OptimizerState opt;
  opt.learning_rate = 0.01;
  RngStream erng = w.stream("test.reset.epoch");
  train_epoch(warm, gen, opt, 10, erng);
  cold = warm;

  BnaConfig long_reset;
  long_reset.passes = 250;  // 0.9^250 leaves ~3e-12 of the starting point
  long_reset.reset_stats = true;
  BnaConfig long_keep;
  long_keep.passes = 250;
  adapt_bn_statistics(warm, train, long_keep);
  adapt_bn_statistics(cold, train, long_reset);
  // after enough passes both forget the starting point
  auto sw = warm.bn_states();
  auto sc = cold.bn_states();
  for (size_t l = 0; l < sw.size(); ++l) {
    for (size_t j = 0; j < sw[l]->running_mean.size(); ++j) {
      CHECK(sw[l]->running_mean[j] ==
            doctest::Approx(sc[l]->running_mean[j]).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("adaptation on in-distribution data barely changes accuracy") {
  World w(bna_world_config());
  Classifier c = bna_classifier(w, 5);
  RngStream fill_rng = w.stream("test.indist.fill");
  Dataset gen = fill_dataset(150, false, nullptr, w, HSMConfig{}, fill_rng);
  TrainRunConfig run;
  run.epochs = 8;
  run.batch_size = 16;
  run.seed = 13;
  Classifier trained = train_with_ds(std::move(c), w, run, nullptr, HSMConfig{},
                                     gen, nullptr, {});
  RngStream eval_rng = w.stream("test.indist.eval");
  Dataset gen_eval = fill_dataset(150, false, nullptr, w, HSMConfig{}, eval_rng);
  double before = evaluate(trained, gen_eval);
  RngStream adapt_rng = w.stream("test.indist.adapt");
  Dataset gen_adapt = fill_dataset(150, false, nullptr, w, HSMConfig{}, adapt_rng);
  adapt_bn_statistics(trained, gen_adapt, BnaConfig{});
  double after = evaluate(trained, gen_eval);
  CHECK(std::abs(after - before) <= 0.06);  // same distribution: nothing to fix
}

TEST_CASE("tiny adaptation sets shrink the batch or get rejected") {
  World w(bna_world_config());
  Classifier c = bna_classifier(w, 6);
  RngStream rng = w.stream("test.tiny");
  Dataset three = fill_dataset(3, false, nullptr, w, HSMConfig{}, rng);
  CHECK_NOTHROW(adapt_bn_statistics(c, three, BnaConfig{}));  // one batch of 3

  Dataset one(3, 0);
  one.append(three[0]);
  CHECK_THROWS_AS(adapt_bn_statistics(c, one, BnaConfig{}), std::invalid_argument);
  Dataset empty(3, 0);
  CHECK_THROWS_AS(adapt_bn_statistics(c, empty, BnaConfig{}), std::invalid_argument);
}

TEST_CASE("shift report is zero for identical sets and positive under shift") {
  // a no-shift world: wide truncation, identity perturbation, no noise
  WorldConfig plain = bna_world_config();
  plain.truncation = 1e6;
  plain.real_noise_sigma = 0.0;
  plain.perturb_scale_min = plain.perturb_scale_max = 1.0;
  plain.perturb_shift_min = plain.perturb_shift_max = 0.0;
  World wp(plain);
  Classifier c = bna_classifier(wp, 7);

  RngStream rng = wp.stream("test.shift.gen");
  Dataset gen = fill_dataset(300, false, nullptr, wp, HSMConfig{}, rng);
  auto report_same = bn_shift_report(c, gen, gen);
  for (const auto& layer : report_same) {
    CHECK(layer.mean_shift == 0.0);
    CHECK(layer.variance_ratio == 0.0);
  }

  auto [real_plain, test_plain] = wp.make_real_splits(100, 2, 0);
  auto report_plain = bn_shift_report(c, gen, real_plain);
  CHECK(report_plain[0].mean_shift <= 0.15);  // same law, sampling noise only

  World wd(bna_world_config());  // default: truncation + perturbation on
  Classifier cd = bna_classifier(wd, 7);
  RngStream rng2 = wd.stream("test.shift.gen");
  Dataset gen_d = fill_dataset(300, false, nullptr, wd, HSMConfig{}, rng2);
  auto [real_d, test_d] = wd.make_real_splits(100, 2, 0);
  auto report_shift = bn_shift_report(cd, gen_d, real_d);
  CHECK(report_shift[0].mean_shift > report_plain[0].mean_shift);
  CHECK(report_shift[0].mean_shift > 0.0);
}
