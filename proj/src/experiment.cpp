#include "experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bna.hpp"

namespace genlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cell_name(const CellToggles& t) {
  std::string name;
  if (t.hsm) name += "hsm";
  if (t.ds) name += (name.empty() ? "" : "+") + std::string("ds");
  if (t.bna) name += (name.empty() ? "" : "+") + std::string("bna");
  return name.empty() ? "baseline" : name;
}

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

json epochs_to_json(const std::vector<EpochRecord>& epochs) {
  json arr = json::array();
  for (const auto& e : epochs) {
    arr.push_back({{"epoch", e.epoch},
                   {"lr", e.lr},
                   {"train_loss", e.train_loss},
                   {"eval_accuracy", e.eval_accuracy},
                   {"dataset_turnover", e.dataset_turnover}});
  }
  return arr;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
}

void write_provenance(const ExperimentConfig& cfg, const fs::path& dir,
                      const std::string& experiment) {
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["experiment"] = experiment;
  j["config_fingerprint"] = config_fingerprint(cfg);
  j["seeds"] = cfg.seeds;
  j["config"] = emit_config(cfg);
  write_text_file(dir / "provenance.json", j.dump(2) + "\n");
}

// run jobs on up to `threads` workers; results land in pre-sized slots so the
// output is identical to a serial run
void run_jobs(std::vector<std::function<void()>>& jobs, int threads) {
  if (threads <= 1) {
    for (auto& job : jobs) job();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(threads, static_cast<int>(jobs.size()));
  pool.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace

TrainedCellResult run_trained_cell(const ExperimentConfig& cfg, bool use_hsm,
                                   bool use_ds, uint64_t seed,
                                   Classifier* out_model, Classifier* out_model_bna) {
  auto t0 = std::chrono::steady_clock::now();
  cfg.validate();

  WorldConfig wc = cfg.world;
  wc.master_seed = mix_seed(cfg.world.master_seed, seed);
  World world(wc);
  const uint64_t run_seed = mix_seed(wc.master_seed, 0x52554e);

  auto [train_real, test_real] =
      world.make_real_splits(cfg.train_per_class, cfg.test_per_class, seed);

  RngStream init_rng(run_seed, "classifier.init");
  Classifier c(cfg.classifier_spec(), init_rng);
  TrainRunConfig run = cfg.run_config(run_seed);

  Dataset dataset;
  if (!use_ds && use_hsm) {
    RngStream aux_rng(run_seed, "classifier.aux_init");
    Classifier aux(cfg.classifier_spec(), aux_rng);
    TrainRunConfig collect_run = run;
    collect_run.seed = mix_seed(run_seed, 0xc0);
    auto [d, aux_trained] =
        collect_hsm_dataset(world, aux, cfg.dataset_size,
                            cfg.collect_chunk_or_default(), collect_run, cfg.hsm);
    dataset = std::move(d);
  } else {
    RngStream fill_rng(run_seed, "fill.init");
    dataset = fill_dataset(cfg.dataset_size, false, nullptr, world, cfg.hsm, fill_rng);
  }

  SmoothingConfig smooth{cfg.replacement_fraction, use_hsm, cfg.dataset_size};
  const SmoothingConfig* sm = use_ds ? &smooth : nullptr;

  TrainedCellResult res;
  Classifier trained = train_with_ds(
      std::move(c), world, run, sm, cfg.hsm, std::move(dataset), &test_real,
      [&res](const EpochRecord& r) { res.epochs.push_back(r); });
  res.accuracy_raw = evaluate(trained, test_real);

  Classifier adapted = trained;
  BnaConfig bna{cfg.bna_passes, cfg.batch_size, std::nullopt, cfg.bna_reset_stats,
                run_seed};
  adapt_bn_statistics(adapted, train_real, bna);  // unlabeled real train split
  res.accuracy_bna = evaluate(adapted, test_real);
  if (out_model) *out_model = std::move(trained);
  if (out_model_bna) *out_model_bna = std::move(adapted);

  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

double run_real_reference(const ExperimentConfig& cfg, uint64_t seed) {
  WorldConfig wc = cfg.world;
  wc.master_seed = mix_seed(cfg.world.master_seed, seed);
  World world(wc);
  const uint64_t run_seed = mix_seed(wc.master_seed, 0x52454144);
  auto [train_real, test_real] =
      world.make_real_splits(cfg.train_per_class, cfg.test_per_class, seed);
  RngStream init_rng(run_seed, "classifier.init");
  Classifier c(cfg.classifier_spec(), init_rng);
  TrainRunConfig run = cfg.run_config(run_seed);
  Classifier trained = train_with_ds(std::move(c), world, run, nullptr, cfg.hsm,
                                     std::move(train_real), nullptr, {});
  return evaluate(trained, test_real);
}

const CellSummary& AblationResult::cell(bool hsm, bool ds, bool bna) const {
  for (const auto& c : cells) {
    if (c.toggles.hsm == hsm && c.toggles.ds == ds && c.toggles.bna == bna) return c;
  }
  throw std::logic_error("ablation: cell not found");
}

AblationResult run_ablation(const ExperimentConfig& cfg, const std::string& out_dir,
                            int threads) {
  cfg.validate();
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::string fingerprint = config_fingerprint(cfg);

  struct Base {
    bool hsm, ds;
  };
  const std::vector<Base> bases = {{false, false}, {true, false}, {false, true}, {true, true}};
  const size_t ns = cfg.seeds.size();

  std::vector<std::vector<TrainedCellResult>> results(bases.size(),
                                                      std::vector<TrainedCellResult>(ns));
  std::vector<double> real_accs(ns, 0.0);
  std::vector<std::string> failures(bases.size() * ns + ns);
  std::vector<double> timings(bases.size() * ns + ns, 0.0);

  std::vector<std::function<void()>> jobs;
  for (size_t b = 0; b < bases.size(); ++b) {
    for (size_t s = 0; s < ns; ++s) {
      jobs.push_back([&, b, s] {
        size_t slot = b * ns + s;
        try {
          results[b][s] = run_trained_cell(cfg, bases[b].hsm, bases[b].ds, cfg.seeds[s]);
          timings[slot] = results[b][s].wall_seconds;
        } catch (const std::exception& e) {
          CellToggles t{bases[b].hsm, bases[b].ds, false};
          failures[slot] = cell_name(t) + " seed " + std::to_string(cfg.seeds[s]) +
                           ": " + e.what();
        }
      });
    }
  }
  for (size_t s = 0; s < ns; ++s) {
    jobs.push_back([&, s] {
      size_t slot = bases.size() * ns + s;
      auto t0 = std::chrono::steady_clock::now();
      try {
        real_accs[s] = run_real_reference(cfg, cfg.seeds[s]);
      } catch (const std::exception& e) {
        failures[slot] = "real seed " + std::to_string(cfg.seeds[s]) + ": " + e.what();
      }
      timings[slot] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
  }
  run_jobs(jobs, threads);

  AblationResult out;
  for (const auto& f : failures) {
    if (!f.empty()) out.failures.push_back(f);
  }

  // per-run record files (two table cells per trained run: bna off / on)
  for (size_t b = 0; b < bases.size(); ++b) {
    for (size_t s = 0; s < ns; ++s) {
      if (!failures[b * ns + s].empty()) continue;
      const auto& r = results[b][s];
      CellToggles base_t{bases[b].hsm, bases[b].ds, false};
      json j;
      j["record_version"] = 1;
      j["config_fingerprint"] = fingerprint;
      j["seed"] = cfg.seeds[s];
      j["toggles"] = {{"hsm", bases[b].hsm}, {"ds", bases[b].ds}};
      j["final_accuracy"] = r.accuracy_raw;
      j["final_accuracy_bna"] = r.accuracy_bna;
      j["epochs"] = epochs_to_json(r.epochs);
      write_text_file(dir / ("run_" + cell_name(base_t) + "_seed" +
                             std::to_string(cfg.seeds[s]) + ".json"),
                      j.dump(2) + "\n");
    }
  }
  for (size_t s = 0; s < ns; ++s) {
    if (!failures[bases.size() * ns + s].empty()) continue;
    json j;
    j["record_version"] = 1;
    j["config_fingerprint"] = fingerprint;
    j["seed"] = cfg.seeds[s];
    j["toggles"] = {{"real", true}};
    j["final_accuracy"] = real_accs[s];
    write_text_file(dir / ("run_real_seed" + std::to_string(cfg.seeds[s]) + ".json"),
                    j.dump(2) + "\n");
  }

  // summaries
  for (bool bna : {false, true}) {
    for (size_t b = 0; b < bases.size(); ++b) {
      CellSummary cs;
      cs.toggles = CellToggles{bases[b].hsm, bases[b].ds, bna};
      for (size_t s = 0; s < ns; ++s) {
        if (!failures[b * ns + s].empty()) continue;
        cs.per_seed.push_back(bna ? results[b][s].accuracy_bna
                                  : results[b][s].accuracy_raw);
      }
      cs.mean = mean_of(cs.per_seed);
      cs.stddev = stddev_of(cs.per_seed);
      out.cells.push_back(std::move(cs));
    }
  }
  out.real_reference.per_seed.clear();
  for (size_t s = 0; s < ns; ++s) {
    if (failures[bases.size() * ns + s].empty()) {
      out.real_reference.per_seed.push_back(real_accs[s]);
    }
  }
  out.real_reference.mean = mean_of(out.real_reference.per_seed);
  out.real_reference.stddev = stddev_of(out.real_reference.per_seed);

  // flat table, one row per (cell, seed)
  {
    std::ostringstream csv;
    csv << "cell,hsm,ds,bna,seed,accuracy\n";
    csv.precision(17);
    for (const auto& cs : out.cells) {
      for (size_t s = 0; s < cs.per_seed.size(); ++s) {
        csv << cell_name(cs.toggles) << "," << cs.toggles.hsm << ","
            << cs.toggles.ds << "," << cs.toggles.bna << "," << cfg.seeds[s]
            << "," << cs.per_seed[s] << "\n";
      }
    }
    for (size_t s = 0; s < out.real_reference.per_seed.size(); ++s) {
      csv << "real,0,0,0," << cfg.seeds[s] << "," << out.real_reference.per_seed[s]
          << "\n";
    }
    write_text_file(dir / "ablation_summary.csv", csv.str());
  }
  write_provenance(cfg, dir, "ablation");
  {
    std::ostringstream tl;
    for (size_t i = 0; i < timings.size(); ++i) {
      tl << "job " << i << " wall_seconds " << timings[i] << "\n";
    }
    write_text_file(dir / "timing.log", tl.str());
  }
  return out;
}

std::string ablation_summary_text(const AblationResult& result) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "cell            mean    std   (accuracy %, over seeds)\n";
  for (const auto& cs : result.cells) {
    std::string name = cell_name(cs.toggles);
    name.resize(15, ' ');
    os << name << " " << 100.0 * cs.mean << "  " << 100.0 * cs.stddev << "\n";
  }
  {
    std::string name = "real";
    name.resize(15, ' ');
    os << name << " " << 100.0 * result.real_reference.mean << "  "
       << 100.0 * result.real_reference.stddev << "\n";
  }
  for (const auto& f : result.failures) os << "FAILED: " << f << "\n";
  return os.str();
}

SweepResult run_r_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                        int threads) {
  cfg.validate();
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::string fingerprint = config_fingerprint(cfg);
  const size_t ns = cfg.seeds.size();
  const size_t np = cfg.r_grid.size();

  std::vector<std::vector<TrainedCellResult>> results(np, std::vector<TrainedCellResult>(ns));
  std::vector<std::string> failures(np * ns);

  std::vector<std::function<void()>> jobs;
  for (size_t p = 0; p < np; ++p) {
    for (size_t s = 0; s < ns; ++s) {
      jobs.push_back([&, p, s] {
        ExperimentConfig point_cfg = cfg;
        point_cfg.replacement_fraction = cfg.r_grid[p];
        try {
          // DS alone (no mining); r = 0 degenerates to the fixed-dataset baseline
          results[p][s] = run_trained_cell(point_cfg, false, true, cfg.seeds[s]);
        } catch (const std::exception& e) {
          failures[p * ns + s] = "r=" + std::to_string(cfg.r_grid[p]) + " seed " +
                                 std::to_string(cfg.seeds[s]) + ": " + e.what();
        }
      });
    }
  }
  run_jobs(jobs, threads);

  SweepResult out;
  for (const auto& f : failures) {
    if (!f.empty()) out.failures.push_back(f);
  }

  for (size_t p = 0; p < np; ++p) {
    SweepPoint pt;
    pt.r = cfg.r_grid[p];
    for (size_t s = 0; s < ns; ++s) {
      if (!failures[p * ns + s].empty()) continue;
      const auto& r = results[p][s];
      pt.per_seed_raw.push_back(r.accuracy_raw);
      pt.per_seed_bna.push_back(r.accuracy_bna);
      json j;
      j["record_version"] = 1;
      j["config_fingerprint"] = fingerprint;
      j["seed"] = cfg.seeds[s];
      j["replacement_fraction"] = pt.r;
      j["final_accuracy"] = r.accuracy_raw;
      j["final_accuracy_bna"] = r.accuracy_bna;
      j["epochs"] = epochs_to_json(r.epochs);
      std::ostringstream name;
      name << "run_sweep_r" << pt.r << "_seed" << cfg.seeds[s] << ".json";
      write_text_file(dir / name.str(), j.dump(2) + "\n");
    }
    pt.mean_raw = mean_of(pt.per_seed_raw);
    pt.std_raw = stddev_of(pt.per_seed_raw);
    pt.mean_bna = mean_of(pt.per_seed_bna);
    pt.std_bna = stddev_of(pt.per_seed_bna);
    out.points.push_back(std::move(pt));
  }

  std::ostringstream csv;
  csv << "r,seed,accuracy,accuracy_bna\n";
  csv.precision(17);
  for (size_t p = 0; p < np; ++p) {
    const auto& pt = out.points[p];
    for (size_t s = 0; s < pt.per_seed_raw.size(); ++s) {
      csv << pt.r << "," << cfg.seeds[s] << "," << pt.per_seed_raw[s] << ","
          << pt.per_seed_bna[s] << "\n";
    }
  }
  write_text_file(dir / "sweep_summary.csv", csv.str());
  write_provenance(cfg, dir, "r_sweep");
  return out;
}

std::string sweep_summary_text(const SweepResult& result) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "    r    ds_mean  ds_std  ds+bna_mean  ds+bna_std  (accuracy %)\n";
  for (const auto& pt : result.points) {
    os << " " << pt.r << "   " << 100.0 * pt.mean_raw << "   " << 100.0 * pt.std_raw
       << "    " << 100.0 * pt.mean_bna << "    " << 100.0 * pt.std_bna << "\n";
  }
  for (const auto& f : result.failures) os << "FAILED: " << f << "\n";
  return os.str();
}

// ---- gradient verification ------------------------------------------------

namespace {

// analytic-vs-central-difference error for the gradient of a rebuildable loss
// with respect to one parameter Variable
double param_grad_error(Variable& param, const std::function<Tensor(Tape&)>& build,
                        double eps = 1e-6) {
  param.reset_grad();
  {
    Tape tape;
    Tensor loss = build(tape);
    tape.backward(loss);
  }
  std::vector<double> analytic = param.grad;
  if (analytic.empty()) analytic.assign(param.numel(), 0.0);
  double max_err = 0.0;
  for (size_t i = 0; i < param.value.size(); ++i) {
    double orig = param.value[i];
    param.value[i] = orig + eps;
    double up;
    {
      Tape tape;
      up = build(tape).scalar();
    }
    param.value[i] = orig - eps;
    double down;
    {
      Tape tape;
      down = build(tape).scalar();
    }
    param.value[i] = orig;
    double cd = (up - down) / (2.0 * eps);
    double mag = std::abs(analytic[i]) + std::abs(cd);
    if (mag < 1e-8) continue;
    max_err = std::max(max_err, std::abs(analytic[i] - cd) / std::max(1e-12, mag));
  }
  return max_err;
}

std::vector<double> random_values(size_t n, RngStream& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace

GradCheckReport gradcheck_command(const GradCheckOptions& options) {
  GradCheckReport report;
  RngStream rng(options.seed, "gradcheck");
  auto add = [&](const std::string& name, double err) {
    if (options.corrupt == name) err += 1.0;  // fault-injection hook for tests
    report.entries.push_back({name, err, err <= 1e-5});
  };

  // each primitive, wrapped so the output is a scalar
  {
    Variable a({3, 4}, random_values(12, rng));
    Variable b({4, 2}, random_values(8, rng));
    auto build = [&](Tape& t) {
      return t.reduce_mean(t.tanh(t.matmul(t.leaf(a), t.leaf(b))));
    };
    add("matmul", std::max(param_grad_error(a, build), param_grad_error(b, build)));
  }
  {
    Variable a({3, 4}, random_values(12, rng));
    Variable b({2, 4}, random_values(8, rng));
    auto build = [&](Tape& t) {
      return t.reduce_mean(t.tanh(t.matmul(t.leaf(a), t.leaf(b), true)));
    };
    add("matmul_transposed",
        std::max(param_grad_error(a, build), param_grad_error(b, build)));
  }
  {
    Variable a({5}, random_values(5, rng));
    Variable b({5}, random_values(5, rng));
    auto build_add = [&](Tape& t) {
      return t.reduce_mean(t.tanh(t.add(t.leaf(a), t.leaf(b))));
    };
    add("add", std::max(param_grad_error(a, build_add), param_grad_error(b, build_add)));
    auto build_sub = [&](Tape& t) {
      return t.reduce_mean(t.tanh(t.subtract(t.leaf(a), t.leaf(b))));
    };
    add("subtract",
        std::max(param_grad_error(a, build_sub), param_grad_error(b, build_sub)));
    auto build_mul = [&](Tape& t) {
      return t.reduce_mean(t.tanh(t.multiply(t.leaf(a), t.leaf(b))));
    };
    add("elementwise_multiply",
        std::max(param_grad_error(a, build_mul), param_grad_error(b, build_mul)));
  }
  {
    Variable a({6}, random_values(6, rng));
    add("scalar_scale", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.scale(t.leaf(a), 1.7)));
        }));
    add("tanh", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.leaf(a)));
        }));
    add("exp", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.exp(t.scale(t.leaf(a), 0.3)));
        }));
  }
  {
    // strictly positive inputs for log
    std::vector<double> pos = random_values(6, rng);
    for (double& x : pos) x = 0.5 + std::abs(x);
    Variable a({6}, pos);
    add("log", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.log(t.leaf(a)));
        }));
  }
  {
    // relu checked away from the kink: |input| >= 0.1
    std::vector<double> v = random_values(8, rng);
    for (double& x : v) {
      if (std::abs(x) < 0.1) x = x < 0 ? x - 0.1 : x + 0.1;
    }
    Variable a({8}, v);
    add("relu", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.relu(t.leaf(a)));
        }));
  }
  {
    Variable a({4, 3}, random_values(12, rng));
    add("reduce_mean", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.leaf(a)));
        }));
    add("reduce_mean_rows", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.reduce_mean_rows(t.leaf(a))));
        }));
    add("reduce_var", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.reduce_var_rows(t.leaf(a))));
        }));
    add("slice", param_grad_error(a, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.slice_row(t.leaf(a), 1)));
        }));
  }
  {
    Variable v({4}, random_values(4, rng));
    add("broadcast", param_grad_error(v, [&](Tape& t) {
          return t.reduce_mean(t.tanh(t.broadcast_rows(t.leaf(v), 3)));
        }));
    add("pick", param_grad_error(v, [&](Tape& t) {
          return t.tanh(t.pick(t.leaf(v), 2));
        }));
  }
  {
    Variable v1({4}, random_values(4, rng));
    Variable v2({4}, random_values(4, rng));
    auto build = [&](Tape& t) {
      std::vector<Tensor> rows = {t.leaf(v1), t.leaf(v2)};
      return t.reduce_mean(t.tanh(t.concat_rows(rows)));
    };
    add("concat", std::max(param_grad_error(v1, build), param_grad_error(v2, build)));
  }
  {
    Variable logits({3, 5}, random_values(15, rng));
    std::vector<int> labels = {1, 4, 0};
    add("softmax_cross_entropy", param_grad_error(logits, [&](Tape& t) {
          return t.softmax_cross_entropy(t.leaf(logits), labels);
        }));
  }
  {
    // closed-form dual route: d loss / d logits == (softmax - onehot) / m
    Variable logits({2, 4}, random_values(8, rng));
    std::vector<int> labels = {2, 0};
    logits.reset_grad();
    Tape tape;
    Tensor l = tape.leaf(logits);
    tape.backward(tape.softmax_cross_entropy(l, labels));
    double max_diff = 0.0;
    for (int i = 0; i < 2; ++i) {
      auto probs = softmax(std::span<const double>(logits.value.data() + i * 4, 4));
      for (int j = 0; j < 4; ++j) {
        double expect = (probs[j] - (labels[i] == j ? 1.0 : 0.0)) / 2.0;
        max_diff = std::max(max_diff, std::abs(logits.grad[i * 4 + j] - expect));
      }
    }
    add("softmax_ce_closed_form", max_diff);
  }
  {
    // BN train-mode path: gradients through batch statistics
    Variable batch({6, 4}, random_values(24, rng));
    BNLayerState bn;
    bn.init(4);
    for (double& g : bn.gamma.value) g = 0.8 + 0.4 * rng.uniform();
    for (double& b : bn.beta.value) b = 0.3 * rng.normal();
    auto build = [&](Tape& t) {
      Tensor y = batchnorm_forward(t, t.leaf(batch), bn, Mode::kTrain);
      return t.reduce_mean(t.multiply(y, t.tanh(y)));
    };
    double err = param_grad_error(batch, build);
    err = std::max(err, param_grad_error(bn.gamma, build));
    err = std::max(err, param_grad_error(bn.beta, build));
    add("batchnorm_train", err);
  }
  {
    // full classifier train path (smooth activations), gradients wrt theta
    RngStream init(options.seed, "gradcheck.classifier");
    ClassifierSpec spec{6, 8, 4, Activation::kTanh};
    Classifier c(spec, init);
    std::vector<double> x = random_values(4 * 6, rng);
    std::vector<int> labels = {0, 3, 1, 2};
    auto build = [&](Tape& t) {
      Tensor b = t.constant({4, 6}, x);
      return t.softmax_cross_entropy(c.forward_logits(t, b, Mode::kTrain), labels);
    };
    double err = 0.0;
    for (Variable* p : c.theta()) err = std::max(err, param_grad_error(*p, build));
    add("classifier_train_path", err);
  }
  {
    // relu classifier path; a pre-activation landing within eps of a kink
    // would poison the central difference, so resample the batch on failure
    RngStream init(options.seed, "gradcheck.relu_classifier");
    ClassifierSpec spec{6, 8, 4, Activation::kRelu};
    Classifier c(spec, init);
    std::vector<int> labels = {1, 0, 2, 3};
    double err = 2.0;
    for (int attempt = 0; attempt < 5 && err > 1e-5; ++attempt) {
      std::vector<double> x = random_values(4 * 6, rng);
      auto build = [&](Tape& t) {
        Tensor b = t.constant({4, 6}, x);
        return t.softmax_cross_entropy(c.forward_logits(t, b, Mode::kEval), labels);
      };
      double attempt_err = 0.0;
      for (Variable* p : c.theta()) {
        attempt_err = std::max(attempt_err, param_grad_error(*p, build));
      }
      err = std::min(err, attempt_err);
    }
    add("classifier_relu_eval_path", err);
  }
  {
    // composed latent gradient through generator then classifier (Eq. 3 path)
    WorldConfig wc;
    wc.class_count = 4;
    wc.latent_dim = 5;
    wc.obs_dim = 10;
    wc.hidden_dim = 7;
    wc.master_seed = mix_seed(options.seed, 0x477243);
    World world(wc);
    RngStream init(options.seed, "gradcheck.latent_classifier");
    ClassifierSpec spec{10, 8, 4, Activation::kTanh};
    Classifier c(spec, init);
    RngStream lr = world.stream("gradcheck.latent");
    std::vector<double> h = world.sample_latent(lr);
    int label = 2;
    int kstar = argmax(c.scores(world.generate(h, label)));
    GraphFn f = [&](Tape& t, Tensor hv) {
      Tensor x = world.generate_on_tape(t, hv, label);
      Tensor logits = c.forward_logits(t, x, Mode::kEval);
      return t.pick(t.slice_row(logits, 0), kstar);
    };
    add("latent_gradient_composed",
        finite_difference_check(f, {1, wc.latent_dim}, h, 1e-6));
  }

  report.worst = 0.0;
  report.all_pass = true;
  for (const auto& e : report.entries) {
    report.worst = std::max(report.worst, e.max_rel_error);
    report.all_pass = report.all_pass && e.pass;
  }
  return report;
}

std::string gradcheck_report_text(const GradCheckReport& report) {
  std::ostringstream os;
  for (const auto& e : report.entries) {
    os << (e.pass ? "[PASS] " : "[FAIL] ") << e.name
       << " max_rel_error=" << e.max_rel_error << "\n";
  }
  os << (report.all_pass ? "gradcheck: all checks passed"
                         : "gradcheck: FAILURES present")
     << " (worst " << report.worst << ")\n";
  return os.str();
}

std::string world_inspect(const ExperimentConfig& cfg, const std::string& dump_path) {
  World world(cfg.world);
  if (!dump_path.empty()) world.dump_weights(dump_path);
  std::ostringstream os;
  const auto& wc = cfg.world;
  os << "classes " << wc.class_count << "\n"
     << "latent_dim " << wc.latent_dim << "\n"
     << "obs_dim " << wc.obs_dim << "\n"
     << "hidden_dim " << wc.hidden_dim << "\n"
     << "truncation " << wc.truncation << "\n"
     << "real_noise_sigma " << wc.real_noise_sigma << "\n"
     << "master_seed " << wc.master_seed << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(world.weights_hash()));
  os << "weights_hash " << buf << "\n";
  if (!dump_path.empty()) os << "weights_dump " << dump_path << "\n";
  return os.str();
}

}  // namespace genlab
