#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiment.hpp"

using namespace genlab;

TEST_CASE("emit and parse round trip the defaults exactly") {
  ExperimentConfig cfg;
  cfg.world.master_seed = 1234;
  cfg.lr0 = 0.07;
  cfg.r_grid = {0.0, 0.25, 1.0};
  cfg.seeds = {3, 1, 4};
  ExperimentConfig back = parse_config(emit_config(cfg), "roundtrip");
  CHECK(back == cfg);
  CHECK(config_fingerprint(back) == config_fingerprint(cfg));
}

TEST_CASE("fingerprint ignores key order and comments in the source") {
  ExperimentConfig cfg;
  std::string text = emit_config(cfg);
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  std::reverse(lines.begin(), lines.end());
  std::string reordered = "# reordered copy\n";
  for (const auto& l : lines) reordered += l + "\n";
  ExperimentConfig back = parse_config(reordered, "reordered");
  CHECK(config_fingerprint(back) == config_fingerprint(cfg));
}

TEST_CASE("fingerprint tracks values") {
  ExperimentConfig a, b;
  b.epochs = 61;
  CHECK(config_fingerprint(a) != config_fingerprint(b));
}

TEST_CASE("unknown keys are rejected with their location") {
  ExperimentConfig cfg;
  std::string text = emit_config(cfg) + "no.such.key = 5\n";
  try {
    parse_config(text, "bad.conf");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("no.such.key") != std::string::npos);
    CHECK(msg.find("bad.conf:") != std::string::npos);
  }
}

TEST_CASE("duplicate keys are rejected") {
  ExperimentConfig cfg;
  std::string text = emit_config(cfg) + "train.epochs = 10\n";
  CHECK_THROWS_WITH_AS(parse_config(text, "dup.conf"),
                       doctest::Contains("duplicate key 'train.epochs'"),
                       std::invalid_argument);
}

TEST_CASE("all missing keys are reported at once") {
  try {
    parse_config("train.epochs = 10\n", "sparse.conf");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("missing required keys") != std::string::npos);
    CHECK(msg.find("world.class_count") != std::string::npos);
    CHECK(msg.find("seeds") != std::string::npos);
  }
}

TEST_CASE("malformed values carry the key and line") {
  ExperimentConfig cfg;
  std::string text = emit_config(cfg);
  size_t pos = text.find("train.lr = ");
  REQUIRE(pos != std::string::npos);
  size_t eol = text.find('\n', pos);
  text = text.substr(0, pos) + "train.lr = banana" + text.substr(eol);
  CHECK_THROWS_WITH_AS(parse_config(text, "bad.conf"),
                       doctest::Contains("train.lr"), std::invalid_argument);
}

TEST_CASE("set_config_key mirrors file parsing") {
  ExperimentConfig cfg;
  set_config_key(cfg, "train.epochs", "12");
  CHECK(cfg.epochs == 12);
  set_config_key(cfg, "classifier.activation", "tanh");
  CHECK(cfg.classifier_activation == Activation::kTanh);
  set_config_key(cfg, "sweep.r_grid", "0, 0.5, 1");
  CHECK(cfg.r_grid == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(set_config_key(cfg, "nope", "1"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_key(cfg, "classifier.activation", "sigmoid"),
                  std::invalid_argument);
}

TEST_CASE("validation rejects out-of-range settings") {
  ExperimentConfig cfg;
  cfg.replacement_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.r_grid = {0.5, 2.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("collect chunk defaults to a tenth of the dataset") {
  ExperimentConfig cfg;
  cfg.dataset_size = 500;
  CHECK(cfg.collect_chunk_or_default() == 50);
  cfg.collect_chunk = 64;
  CHECK(cfg.collect_chunk_or_default() == 64);
}

TEST_CASE("gradcheck command passes and the corruption hook fails the right check") {
  GradCheckReport clean = gradcheck_command({});
  CHECK(clean.all_pass);
  CHECK(clean.worst <= 1e-5);

  GradCheckOptions poison;
  poison.corrupt = "reduce_var";
  GradCheckReport bad = gradcheck_command(poison);
  CHECK_FALSE(bad.all_pass);
  bool found = false;
  for (const auto& e : bad.entries) {
    if (e.name == "reduce_var") {
      CHECK_FALSE(e.pass);
      found = true;
    } else {
      CHECK(e.pass);
    }
  }
  CHECK(found);
  std::string text = gradcheck_report_text(bad);
  CHECK(text.find("[FAIL] reduce_var") != std::string::npos);
}

TEST_CASE("world inspect reports the frozen world") {
  ExperimentConfig cfg;
  std::string text = world_inspect(cfg, "");
  CHECK(text.find("classes 10") != std::string::npos);
  CHECK(text.find("weights_hash") != std::string::npos);
}

TEST_CASE("cell names cover the toggle cube") {
  CHECK(cell_name({false, false, false}) == "baseline");
  CHECK(cell_name({true, false, false}) == "hsm");
  CHECK(cell_name({false, true, true}) == "ds+bna");
  CHECK(cell_name({true, true, true}) == "hsm+ds+bna");
}

TEST_CASE("orchestrated baseline equals a direct trainer run") {
  ExperimentConfig cfg;
  cfg.world.class_count = 3;
  cfg.world.latent_dim = 5;
  cfg.world.obs_dim = 10;
  cfg.world.hidden_dim = 7;
  cfg.classifier_hidden = 8;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.dataset_size = 60;
  cfg.train_per_class = 10;
  cfg.test_per_class = 5;

  Classifier from_harness;
  run_trained_cell(cfg, false, false, 4, &from_harness);

  // replicate the harness seed derivation by hand
  WorldConfig wc = cfg.world;
  wc.master_seed = mix_seed(cfg.world.master_seed, 4);
  World world(wc);
  uint64_t run_seed = mix_seed(wc.master_seed, 0x52554e);
  RngStream init_rng(run_seed, "classifier.init");
  Classifier c(cfg.classifier_spec(), init_rng);
  RngStream fill_rng(run_seed, "fill.init");
  Dataset d = fill_dataset(cfg.dataset_size, false, nullptr, world, cfg.hsm, fill_rng);
  auto [train_real, test_real] = world.make_real_splits(10, 5, 4);
  Classifier direct = train_with_ds(std::move(c), world, cfg.run_config(run_seed),
                                    nullptr, cfg.hsm, std::move(d), &test_real, {});
  CHECK(from_harness.theta_hash() == direct.theta_hash());
  CHECK(from_harness.omega_hash() == direct.omega_hash());
}
