#include "bna.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"
#include "tensor.hpp"

namespace genlab {

void adapt_bn_statistics(Classifier& c, const Dataset& unlabeled, const BnaConfig& cfg) {
  if (cfg.passes < 1) throw std::invalid_argument("bna: passes must be >= 1");
  if (unlabeled.empty()) throw std::invalid_argument("bna: adaptation set is empty");
  size_t batch = static_cast<size_t>(cfg.batch_size);
  if (unlabeled.size() < batch) batch = unlabeled.size();
  if (batch < 2) {
    throw std::invalid_argument("bna: adaptation set too small for a train-mode batch");
  }

  auto states = c.bn_states();
  std::vector<double> saved_alpha;
  for (BNLayerState* s : states) {
    saved_alpha.push_back(s->alpha);
    if (cfg.alpha_override) s->alpha = *cfg.alpha_override;
    if (cfg.reset_stats) {
      std::fill(s->running_mean.begin(), s->running_mean.end(), 0.0);
      std::fill(s->running_var.begin(), s->running_var.end(), 1.0);
    }
  }

  const int d = c.spec().input_dim;
  std::vector<size_t> order(unlabeled.size());
  for (int pass = 0; pass < cfg.passes; ++pass) {
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(cfg.seed, "bna.shuffle", static_cast<uint64_t>(pass));
    rng.shuffle(order);
    for (size_t start = 0; start + 2 <= order.size(); start += batch) {
      size_t mb = std::min(batch, order.size() - start);
      if (mb < 2) break;
      std::vector<double> flat;
      flat.reserve(mb * d);
      for (size_t i = 0; i < mb; ++i) {
        const auto& x = unlabeled[order[start + i]].x;  // labels never read
        flat.insert(flat.end(), x.begin(), x.end());
      }
      Tape tape;
      Tensor b = tape.constant({static_cast<int>(mb), d}, std::move(flat));
      c.forward_logits(tape, b, Mode::kTrain);  // omega update only; no backward
    }
  }
  for (size_t i = 0; i < states.size(); ++i) states[i]->alpha = saved_alpha[i];
}

namespace {

struct Moments {
  std::vector<double> mean, var;
};

std::vector<Moments> activation_moments(const Classifier& c, const Dataset& set) {
  std::vector<const std::vector<double>*> xs(set.size());
  for (size_t i = 0; i < set.size(); ++i) xs[i] = &set[i].x;
  auto acts = c.bn_input_activations(xs);
  std::vector<Moments> out;
  const size_t m = set.size();
  for (const auto& flat : acts) {
    const size_t w = flat.size() / m;
    Moments mo;
    mo.mean.assign(w, 0.0);
    mo.var.assign(w, 0.0);
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < w; ++j) mo.mean[j] += flat[i * w + j];
    for (size_t j = 0; j < w; ++j) mo.mean[j] /= static_cast<double>(m);
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < w; ++j) {
        double d = flat[i * w + j] - mo.mean[j];
        mo.var[j] += d * d;
      }
    for (size_t j = 0; j < w; ++j) mo.var[j] /= static_cast<double>(m);
    out.push_back(std::move(mo));
  }
  return out;
}

}  // namespace

std::vector<BnLayerShift> bn_shift_report(const Classifier& c,
                                          const Dataset& generated_set,
                                          const Dataset& real_set) {
  if (generated_set.empty() || real_set.empty()) {
    throw std::invalid_argument("bn_shift_report: both sets must be nonempty");
  }
  auto gen = activation_moments(c, generated_set);
  auto real = activation_moments(c, real_set);
  constexpr double kEps = 1e-8;
  std::vector<BnLayerShift> out;
  for (size_t layer = 0; layer < gen.size(); ++layer) {
    BnLayerShift s;
    const size_t w = gen[layer].mean.size();
    for (size_t j = 0; j < w; ++j) {
      double denom = std::sqrt(gen[layer].var[j] + kEps);
      s.mean_shift += std::abs(real[layer].mean[j] - gen[layer].mean[j]) / denom;
      s.variance_ratio += std::abs(std::log((real[layer].var[j] + kEps) /
                                            (gen[layer].var[j] + kEps)));
    }
    s.mean_shift /= static_cast<double>(w);
    s.variance_ratio /= static_cast<double>(w);
    out.push_back(s);
  }
  return out;
}

std::string bn_shift_report_text(const std::vector<BnLayerShift>& report) {
  std::ostringstream os;
  for (size_t i = 0; i < report.size(); ++i) {
    os << "bn_layer " << i << " mean_shift " << report[i].mean_shift
       << " variance_log_ratio " << report[i].variance_ratio << "\n";
  }
  return os.str();
}

}  // namespace genlab
