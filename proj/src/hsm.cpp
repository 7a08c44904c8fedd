#include "hsm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace genlab {

void HSMConfig::validate() const {
  if (step_size <= 0.0) throw std::invalid_argument("hsm: step_size must be > 0");
  if (step_count < 0) throw std::invalid_argument("hsm: step_count must be >= 0");
}

int predicted_class(const Classifier& c, const Sample& x) {
  return argmax(c.scores(x.x));
}

namespace {

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double class_logit(const World& world, const Classifier& c,
                   std::span<const double> h, int label, int k) {
  Tape tape;
  std::vector<double> x = world.generate(h, label);
  const int d = static_cast<int>(x.size());
  Tensor batch = tape.constant({1, d}, std::move(x));
  Tensor logits = const_cast<Classifier&>(c).forward_logits(tape, batch, Mode::kEval);
  return logits.value()[static_cast<size_t>(k)];
}

}  // namespace

MinedCode hsm_optimize(std::span<const double> h0, int label, const World& world,
                       const Classifier& c, const HSMConfig& cfg,
                       HsmWarnings* warnings) {
  cfg.validate();
  MinedCode out;
  out.h0.assign(h0.begin(), h0.end());
  out.h = out.h0;
  out.label = label;

  const double norm0 = l2_norm(h0);
  if (norm0 == 0.0) {
    if (warnings) warnings->zero_norm_skips++;
    out.target_class = 0;
    out.steps = 0;
    return out;
  }

  // k* from the initial code (Eq. 2 semantics); optionally re-evaluated per
  // step when recompute_target is set.
  int kstar = argmax(c.scores(world.generate(h0, label)));
  out.target_class = kstar;

  const int dh = static_cast<int>(h0.size());
  std::vector<double> h = out.h0;
  for (int j = 0; j < cfg.step_count; ++j) {
    Tape tape;
    Variable hv({1, dh}, h);
    Tensor x = world.generate_on_tape(tape, tape.leaf(hv), label);
    Tensor logits = const_cast<Classifier&>(c).forward_logits(tape, x, Mode::kEval);
    Tensor row = tape.slice_row(logits, 0);
    if (cfg.recompute_target) kstar = max_index_stopgrad(row);
    Tensor objective = tape.pick(row, kstar);
    out.target_logit.push_back(objective.scalar());
    tape.backward(objective);

    std::vector<double> next = h;
    for (int i = 0; i < dh; ++i) next[i] -= cfg.step_size * hv.grad[i];
    double norm = l2_norm(next);
    if (norm < 1e-12) {
      // descent collapsed the code onto the origin; keep the last valid iterate
      if (warnings) warnings->collapsed_norm_stops++;
      out.steps = j;
      break;
    }
    double rescale = norm0 / norm;
    for (double& v : next) v *= rescale;
    h = std::move(next);
    out.steps = j + 1;
  }
  out.h = h;
  out.target_logit.push_back(class_logit(world, c, out.h, label, kstar));
  if (cfg.recompute_target) out.target_class = kstar;
  return out;
}

HsmSummary hsm_mining_stats(std::span<const MinedCode> batch, const Classifier& c,
                            const World& world) {
  HsmSummary s;
  if (batch.empty()) return s;
  for (const MinedCode& m : batch) {
    double start = class_logit(world, c, m.h0, m.label, m.target_class);
    double end = class_logit(world, c, m.h, m.label, m.target_class);
    s.mean_logit_drop += start - end;
    int k0 = argmax(c.scores(world.generate(m.h0, m.label)));
    int kj = argmax(c.scores(world.generate(m.h, m.label)));
    if (k0 != kj) s.fraction_class_changed += 1.0;
    double disp = 0.0;
    for (size_t i = 0; i < m.h.size(); ++i) {
      double d = m.h[i] - m.h0[i];
      disp += d * d;
    }
    s.mean_displacement += std::sqrt(disp);
  }
  double n = static_cast<double>(batch.size());
  s.mean_logit_drop /= n;
  s.fraction_class_changed /= n;
  s.mean_displacement /= n;
  return s;
}

void dump_mined_codes(std::span<const MinedCode> batch, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("mined-code dump: cannot open " + path);
  os.precision(17);
  for (const MinedCode& m : batch) {
    os << "{\"label\":" << m.label << ",\"target_class\":" << m.target_class
       << ",\"steps\":" << m.steps << ",\"h0\":[";
    for (size_t i = 0; i < m.h0.size(); ++i) os << (i ? "," : "") << m.h0[i];
    os << "],\"h\":[";
    for (size_t i = 0; i < m.h.size(); ++i) os << (i ? "," : "") << m.h[i];
    os << "],\"target_logit\":[";
    for (size_t i = 0; i < m.target_logit.size(); ++i)
      os << (i ? "," : "") << m.target_logit[i];
    os << "]}\n";
  }
}

}  // namespace genlab
