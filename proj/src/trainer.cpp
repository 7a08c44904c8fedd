#include "trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace genlab {

void sgd_step(std::span<Variable* const> params, std::span<const char> decay_flags,
              OptimizerState& opt) {
  if (decay_flags.size() != params.size()) {
    throw std::invalid_argument("sgd_step: decay flag count mismatch");
  }
  // reject the whole step if any gradient is non-finite
  for (Variable* p : params) {
    for (double g : p->grad) {
      if (!std::isfinite(g)) {
        opt.skipped_steps++;
        return;
      }
    }
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Variable* p = params[i];
    p->ensure_grad();
    auto& v = opt.velocity[p];
    if (v.size() != p->numel()) v.assign(p->numel(), 0.0);
    const double wd = decay_flags[i] ? opt.weight_decay : 0.0;
    for (size_t j = 0; j < v.size(); ++j) {
      v[j] = opt.momentum * v[j] + p->grad[j] + wd * p->value[j];
      p->value[j] -= opt.learning_rate * v[j];
    }
  }
}

double lr_at(const LrSchedule& schedule, int epoch) {
  if (epoch < 0 || epoch >= schedule.total_epochs) {
    throw std::invalid_argument("lr_at: epoch " + std::to_string(epoch) +
                                " outside [0," + std::to_string(schedule.total_epochs) + ")");
  }
  if (2 * epoch < schedule.total_epochs) return schedule.lr0;
  if (4 * epoch < 3 * schedule.total_epochs) return schedule.lr0 / 10.0;
  return schedule.lr0 / 100.0;
}

void TrainRunConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  if (lr0 <= 0.0) throw std::invalid_argument("train: lr must be > 0");
}

namespace {

// Dense weights and biases decay; gamma/beta (the tail of theta()) do not.
std::vector<char> decay_mask(const Classifier& c) {
  std::vector<char> mask(10, 1);
  mask[6] = mask[7] = mask[8] = mask[9] = 0;
  (void)c;
  return mask;
}

}  // namespace

double train_epoch(Classifier& c, const Dataset& dataset, OptimizerState& opt,
                   int batch_size, RngStream& rng) {
  if (dataset.empty()) throw std::invalid_argument("train_epoch: empty dataset");
  if (batch_size < 2) throw std::invalid_argument("train_epoch: batch size must be >= 2");
  const int d = c.spec().input_dim;
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  auto params = c.theta();
  auto mask = decay_mask(c);

  double loss_sum = 0.0;
  size_t batches = 0;
  for (size_t start = 0; start + 2 <= order.size(); start += batch_size) {
    size_t mb = std::min(static_cast<size_t>(batch_size), order.size() - start);
    if (mb < 2) break;  // short terminal batch dropped
    std::vector<double> flat;
    flat.reserve(mb * d);
    std::vector<int> labels(mb);
    for (size_t i = 0; i < mb; ++i) {
      const Sample& s = dataset[order[start + i]];
      flat.insert(flat.end(), s.x.begin(), s.x.end());
      labels[i] = s.label;
    }
    Tape tape;
    Tensor batch = tape.constant({static_cast<int>(mb), d}, std::move(flat));
    Tensor logits = c.forward_logits(tape, batch, Mode::kTrain);
    Tensor loss = tape.softmax_cross_entropy(logits, labels);
    c.reset_grads();
    tape.backward(loss);
    sgd_step(params, mask, opt);
    loss_sum += loss.scalar();
    batches++;
  }
  return batches ? loss_sum / static_cast<double>(batches) : 0.0;
}

double evaluate(const Classifier& c, const Dataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const size_t chunk = 256;
  size_t correct = 0;
  for (size_t start = 0; start < dataset.size(); start += chunk) {
    size_t mb = std::min(chunk, dataset.size() - start);
    std::vector<const std::vector<double>*> xs(mb);
    for (size_t i = 0; i < mb; ++i) xs[i] = &dataset[start + i].x;
    auto scores = c.scores_batch(xs);
    for (size_t i = 0; i < mb; ++i) {
      if (argmax(scores[i]) == dataset[start + i].label) correct++;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Classifier train_with_ds(Classifier c, const World& world, const TrainRunConfig& run,
                         const SmoothingConfig* smoothing, const HSMConfig& hsm_cfg,
                         Dataset dataset, const Dataset* eval_set,
                         const EpochCallback& on_epoch, HsmWarnings* warnings) {
  run.validate();
  OptimizerState opt;
  opt.momentum = run.momentum;
  opt.weight_decay = run.weight_decay;
  LrSchedule schedule{run.lr0, run.epochs};

  const bool smooth = smoothing != nullptr && smoothing->replacement_fraction > 0.0;
  for (int epoch = 0; epoch < run.epochs; ++epoch) {
    opt.learning_rate = lr_at(schedule, epoch);
    RngStream shuffle_rng(run.seed, "train.shuffle", static_cast<uint64_t>(epoch));
    double loss = train_epoch(c, dataset, opt, run.batch_size, shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = opt.learning_rate;
    rec.train_loss = loss;
    if (smooth) {
      RngStream ds_rng(run.seed, "train.ds", static_cast<uint64_t>(epoch));
      size_t before = dataset.size();
      size_t keep = static_cast<size_t>(
          std::llround((1.0 - smoothing->replacement_fraction) * static_cast<double>(before)));
      dataset = ds_epoch_update(std::move(dataset), *smoothing, &c, world, hsm_cfg,
                                ds_rng, warnings);
      rec.dataset_turnover = before - keep;
    }
    if (eval_set) rec.eval_accuracy = evaluate(c, *eval_set);
    if (on_epoch) on_epoch(rec);
  }
  return c;
}

std::pair<Dataset, Classifier> collect_hsm_dataset(
    const World& world, const Classifier& c0, size_t n, size_t m,
    const TrainRunConfig& run, const HSMConfig& hsm_cfg, HsmWarnings* warnings) {
  if (m >= n) {
    throw std::invalid_argument("collect_hsm_dataset: M (" + std::to_string(m) +
                                ") must be smaller than N (" + std::to_string(n) + ")");
  }
  run.validate();
  RngStream init_rng(run.seed, "collect.init");
  Dataset partial = fill_dataset(m, false, nullptr, world, hsm_cfg, init_rng, warnings);
  Dataset dataset(world.config().class_count, n);
  for (Sample& s : partial.items()) dataset.append(std::move(s));

  Classifier c = c0;
  OptimizerState opt;
  opt.learning_rate = run.lr0;
  opt.momentum = run.momentum;
  opt.weight_decay = run.weight_decay;

  uint64_t round = 0;
  while (dataset.size() < n) {
    RngStream shuffle_rng(run.seed, "collect.shuffle", round);
    train_epoch(c, dataset, opt, run.batch_size, shuffle_rng);
    size_t want = std::min(m, n - dataset.size());
    RngStream mine_rng(run.seed, "collect.mine", round);
    Dataset mined = fill_dataset(want, true, &c, world, hsm_cfg, mine_rng, warnings);
    for (Sample& s : mined.items()) dataset.append(std::move(s));
    round++;
  }
  return {std::move(dataset), std::move(c)};
}

}  // namespace genlab
