#include <stdexcept>
#include <doctest.h>

#include <cmath>
#include <limits>

#include "trainer.hpp"

using namespace genlab;

namespace {

WorldConfig train_world_config() {
  WorldConfig cfg;
  cfg.class_count = 3;
  cfg.latent_dim = 5;
  cfg.obs_dim = 10;
  cfg.hidden_dim = 7;
  cfg.master_seed = 41;
  return cfg;
}

Classifier train_classifier(const World& w, uint64_t seed) {
  RngStream rng(seed, "test.train.classifier");
  return Classifier(
      ClassifierSpec{w.config().obs_dim, 8, w.config().class_count, Activation::kRelu},
      rng);
}

}  // namespace

TEST_CASE("sgd single step without momentum") {
  Variable theta({}, {0.0});
  theta.grad = {1.0};
  OptimizerState opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.0;
  opt.weight_decay = 0.0;
  Variable* params[] = {&theta};
  char flags[] = {1};
  sgd_step(params, flags, opt);
  CHECK(theta.value[0] == doctest::Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("sgd momentum accumulates over two steps") {
  Variable theta({}, {0.0});
  OptimizerState opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.9;
  opt.weight_decay = 0.0;
  Variable* params[] = {&theta};
  char flags[] = {1};
  theta.grad = {1.0};
  sgd_step(params, flags, opt);
  theta.grad = {1.0};
  sgd_step(params, flags, opt);
  // v1 = 1, v2 = 0.9 + 1 = 1.9 -> theta = -0.1 - 0.19
  CHECK(theta.value[0] == doctest::Approx(-0.29).epsilon(1e-12));
}

TEST_CASE("weight decay shrinks parameters geometrically at zero gradient") {
  Variable theta({}, {2.0});
  theta.grad = {0.0};
  OptimizerState opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.0;
  opt.weight_decay = 1e-4;
  Variable* params[] = {&theta};
  char flags[] = {1};
  sgd_step(params, flags, opt);
  CHECK(theta.value[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 1e-4)).epsilon(1e-15));

  // decay flag off: nothing moves
  Variable frozen({}, {2.0});
  frozen.grad = {0.0};
  Variable* p2[] = {&frozen};
  char f2[] = {0};
  sgd_step(p2, f2, opt);
  CHECK(frozen.value[0] == 2.0);
}

TEST_CASE("non-finite gradients skip the whole step") {
  Variable a({}, {1.0});
  Variable b({}, {1.0});
  a.grad = {1.0};
  b.grad = {std::numeric_limits<double>::quiet_NaN()};
  OptimizerState opt;
  opt.learning_rate = 0.1;
  Variable* params[] = {&a, &b};
  char flags[] = {1, 1};
  sgd_step(params, flags, opt);
  CHECK(a.value[0] == 1.0);
  CHECK(b.value[0] == 1.0);
  CHECK(opt.skipped_steps == 1);
}

TEST_CASE("step schedule drops twice") {
  LrSchedule s{0.1, 100};
  CHECK(lr_at(s, 0) == 0.1);
  CHECK(lr_at(s, 49) == 0.1);
  CHECK(lr_at(s, 50) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(lr_at(s, 74) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(lr_at(s, 75) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(lr_at(s, 99) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK_THROWS_AS((void)lr_at(s, 100), std::invalid_argument);
  CHECK_THROWS_AS((void)lr_at(s, -1), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves theta alone but omega moves") {
  World w(train_world_config());
  Classifier c = train_classifier(w, 1);
  RngStream fill_rng = w.stream("test.lr0.fill");
  Dataset d = fill_dataset(30, false, nullptr, w, HSMConfig{}, fill_rng);
  uint64_t theta = c.theta_hash();
  uint64_t omega = c.omega_hash();
  OptimizerState opt;
  opt.learning_rate = 0.0;
  opt.weight_decay = 0.0;
  RngStream rng = w.stream("test.lr0.epoch");
  train_epoch(c, d, opt, 10, rng);
  CHECK(c.theta_hash() == theta);
  CHECK(c.omega_hash() != omega);
}

TEST_CASE("training loss decreases on an easy problem") {
  World w(train_world_config());
  Classifier c = train_classifier(w, 2);
  RngStream fill_rng = w.stream("test.loss.fill");
  Dataset d = fill_dataset(120, false, nullptr, w, HSMConfig{}, fill_rng);
  OptimizerState opt;
  opt.learning_rate = 0.05;
  double first = 0.0, last = 0.0;
  for (int e = 0; e < 5; ++e) {
    RngStream rng = w.stream("test.loss.epoch", static_cast<uint64_t>(e));
    double loss = train_epoch(c, d, opt, 16, rng);
    if (e == 0) first = loss;
    last = loss;
  }
  CHECK(last < first);
}

TEST_CASE("terminal batches below two samples are dropped") {
  World w(train_world_config());
  Classifier c = train_classifier(w, 3);
  RngStream fill_rng = w.stream("test.tail.fill");
  // 31 = 3 batches of 10 plus a dropped singleton
  Dataset d = fill_dataset(31, false, nullptr, w, HSMConfig{}, fill_rng);
  OptimizerState opt;
  opt.learning_rate = 0.01;
  RngStream rng = w.stream("test.tail.epoch");
  CHECK_NOTHROW((void)train_epoch(c, d, opt, 10, rng));
}

TEST_CASE("evaluate scores a constant classifier at chance") {
  World w(train_world_config());
  Classifier c = train_classifier(w, 4);
  auto params = c.theta();
  for (double& v : params[4]->value) v = 0.0;  // final dense weight
  for (double& v : params[5]->value) v = 0.0;  // final dense bias
  auto [train, test] = w.make_real_splits(10, 10, 0);
  // uniform logits tie-break to class 0 -> exactly 1/K on a balanced set
  double acc = evaluate(c, test);
  CHECK(acc == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  uint64_t omega = c.omega_hash();
  CHECK(evaluate(c, test) == acc);
  CHECK(c.omega_hash() == omega);
}

TEST_CASE("untrained classifiers sit near chance over seeds") {
  World w(train_world_config());
  auto [train, test] = w.make_real_splits(20, 20, 0);
  double sum = 0.0, sumsq = 0.0;
  const int seeds = 12;
  for (int s = 0; s < seeds; ++s) {
    double acc = evaluate(train_classifier(w, 100 + static_cast<uint64_t>(s)), test);
    sum += acc;
    sumsq += acc * acc;
  }
  double mean = sum / seeds;
  double se = std::sqrt((sumsq / seeds - mean * mean) / seeds);
  CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * se + 0.05);
}

TEST_CASE("training is deterministic in the seed") {
  World w(train_world_config());
  TrainRunConfig run;
  run.epochs = 3;
  run.batch_size = 16;
  run.seed = 77;
  RngStream fill_rng = w.stream("test.det.fill");
  Dataset d = fill_dataset(60, false, nullptr, w, HSMConfig{}, fill_rng);

  auto one = train_with_ds(train_classifier(w, 5), w, run, nullptr, HSMConfig{},
                           d, nullptr, {});
  auto two = train_with_ds(train_classifier(w, 5), w, run, nullptr, HSMConfig{},
                           d, nullptr, {});
  CHECK(one.theta_hash() == two.theta_hash());
  CHECK(one.omega_hash() == two.omega_hash());
}

TEST_CASE("r=0 smoothing trains bit-identically to no smoothing") {
  World w(train_world_config());
  TrainRunConfig run;
  run.epochs = 3;
  run.batch_size = 16;
  run.seed = 78;
  RngStream fill_rng = w.stream("test.r0.fill");
  Dataset d = fill_dataset(60, false, nullptr, w, HSMConfig{}, fill_rng);

  SmoothingConfig r0{0.0, false, 60};
  auto plain = train_with_ds(train_classifier(w, 6), w, run, nullptr, HSMConfig{},
                             d, nullptr, {});
  auto smoothed = train_with_ds(train_classifier(w, 6), w, run, &r0, HSMConfig{},
                                d, nullptr, {});
  CHECK(plain.theta_hash() == smoothed.theta_hash());
  CHECK(plain.omega_hash() == smoothed.omega_hash());
}

TEST_CASE("epoch records report the schedule and turnover") {
  World w(train_world_config());
  TrainRunConfig run;
  run.epochs = 4;
  run.batch_size = 16;
  run.lr0 = 0.1;
  run.seed = 79;
  RngStream fill_rng = w.stream("test.rec.fill");
  Dataset d = fill_dataset(40, false, nullptr, w, HSMConfig{}, fill_rng);

  std::vector<EpochRecord> records;
  SmoothingConfig half{0.5, false, 40};
  auto [train, test] = w.make_real_splits(5, 5, 0);
  train_with_ds(train_classifier(w, 7), w, run, &half, HSMConfig{}, d, &test,
                [&](const EpochRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == 4);
  CHECK(records[0].lr == 0.1);
  CHECK(records[2].lr == doctest::Approx(0.01));  // drop at I/2 = 2
  CHECK(records[3].lr == doctest::Approx(0.001));  // drop at 3I/4 = 3
  for (const auto& r : records) {
    CHECK(r.dataset_turnover == 20);
    CHECK(r.eval_accuracy >= 0.0);
  }
}

TEST_CASE("run config validation") {
  TrainRunConfig run;
  run.epochs = 0;
  CHECK_THROWS_AS(run.validate(), std::invalid_argument);
  run = TrainRunConfig{};
  run.batch_size = 1;
  CHECK_THROWS_AS(run.validate(), std::invalid_argument);
}
