#include "layers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>

#include "hash.hpp"

namespace genlab {

void DenseLayer::init(int out, int in, RngStream& rng) {
  std::vector<double> w(static_cast<size_t>(out) * in);
  double sd = std::sqrt(2.0 / in);
  for (double& x : w) x = sd * rng.normal();
  weight = Variable({out, in}, std::move(w));
  bias = Variable::zeros({out});
}

Tensor DenseLayer::forward(Tape& tape, Tensor x) const {
  // weight is stored [out x in]; leaf access is const-safe: forward never
  // mutates values, and gradient flow wants the real Variable.
  auto& w = const_cast<Variable&>(weight);
  auto& b = const_cast<Variable&>(bias);
  Tensor y = tape.matmul(x, tape.leaf(w), /*transpose_b=*/true);
  return tape.add(y, tape.broadcast_rows(tape.leaf(b), x.shape()[0]));
}

void BNLayerState::init(int width) {
  gamma = Variable({width}, std::vector<double>(width, 1.0));
  beta = Variable::zeros({width});
  running_mean.assign(width, 0.0);
  running_var.assign(width, 1.0);
}

Tensor batchnorm_forward(Tape& tape, Tensor batch, BNLayerState& state, Mode mode) {
  if (batch.shape().size() != 2 || batch.shape()[1] != state.width()) {
    throw std::invalid_argument("batchnorm: batch shape " + shape_str(batch.shape()) +
                                " incompatible with width " +
                                std::to_string(state.width()));
  }
  const int m = batch.shape()[0];
  Tensor mean, var;
  if (mode == Mode::kTrain) {
    if (m < 2) {
      throw std::invalid_argument("batchnorm: train mode needs a batch of >= 2, got " +
                                  std::to_string(m));
    }
    mean = tape.reduce_mean_rows(batch);
    var = tape.reduce_var_rows(batch);
    // Fold batch moments into the running averages (forward values only; the
    // running statistics never participate in gradients).
    for (int j = 0; j < state.width(); ++j) {
      state.running_mean[j] = state.alpha * mean.value()[j] +
                              (1.0 - state.alpha) * state.running_mean[j];
      state.running_var[j] = state.alpha * var.value()[j] +
                             (1.0 - state.alpha) * state.running_var[j];
    }
  } else {
    mean = tape.constant({state.width()}, state.running_mean);
    var = tape.constant({state.width()}, state.running_var);
  }
  // 1/sqrt(v + eps) expressed through exp/log primitives
  Tensor inv_std = tape.exp(tape.scale(tape.log(tape.add_scalar(var, state.epsilon)), -0.5));
  Tensor centered = tape.subtract(batch, tape.broadcast_rows(mean, m));
  Tensor normalized = tape.multiply(centered, tape.broadcast_rows(inv_std, m));
  Tensor scaled = tape.multiply(normalized, tape.broadcast_rows(tape.leaf(state.gamma), m));
  return tape.add(scaled, tape.broadcast_rows(tape.leaf(state.beta), m));
}

Classifier::Classifier(const ClassifierSpec& spec, RngStream& rng) : spec_(spec) {
  dense1_.init(spec.hidden_width, spec.input_dim, rng);
  dense2_.init(spec.hidden_width, spec.hidden_width, rng);
  dense3_.init(spec.class_count, spec.hidden_width, rng);
  bn1_.init(spec.hidden_width);
  bn2_.init(spec.hidden_width);
}

Tensor Classifier::activation(Tape& tape, Tensor x) const {
  return spec_.activation == Activation::kRelu ? tape.relu(x) : tape.tanh(x);
}

Tensor Classifier::forward_logits(Tape& tape, Tensor batch, Mode mode) {
  if (batch.shape().size() != 2 || batch.shape()[1] != spec_.input_dim) {
    throw std::invalid_argument("classifier: batch shape " + shape_str(batch.shape()) +
                                " does not match input width " +
                                std::to_string(spec_.input_dim));
  }
  Tensor h = dense1_.forward(tape, batch);
  h = activation(tape, batchnorm_forward(tape, h, bn1_, mode));
  h = dense2_.forward(tape, h);
  h = activation(tape, batchnorm_forward(tape, h, bn2_, mode));
  return dense3_.forward(tape, h);
}

std::vector<double> Classifier::scores(const std::vector<double>& x) const {
  Tape tape;
  Tensor batch = tape.constant({1, spec_.input_dim}, x);
  Tensor logits = const_cast<Classifier*>(this)->forward_logits(tape, batch, Mode::kEval);
  return softmax(logits.value());
}

std::vector<std::vector<double>> Classifier::scores_batch(
    const std::vector<const std::vector<double>*>& xs) const {
  const int m = static_cast<int>(xs.size());
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(m) * spec_.input_dim);
  for (const auto* x : xs) flat.insert(flat.end(), x->begin(), x->end());
  Tape tape;
  Tensor batch = tape.constant({m, spec_.input_dim}, std::move(flat));
  Tensor logits = const_cast<Classifier*>(this)->forward_logits(tape, batch, Mode::kEval);
  std::vector<std::vector<double>> out(m);
  for (int i = 0; i < m; ++i) {
    std::span<const double> row(logits.value().data() + static_cast<size_t>(i) * spec_.class_count,
                                static_cast<size_t>(spec_.class_count));
    out[i] = softmax(row);
  }
  return out;
}

std::vector<std::vector<double>> Classifier::bn_input_activations(
    const std::vector<const std::vector<double>*>& xs) const {
  const int m = static_cast<int>(xs.size());
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(m) * spec_.input_dim);
  for (const auto* x : xs) flat.insert(flat.end(), x->begin(), x->end());
  Tape tape;
  auto* self = const_cast<Classifier*>(this);
  Tensor batch = tape.constant({m, spec_.input_dim}, std::move(flat));
  Tensor a1 = self->dense1_.forward(tape, batch);
  Tensor h = self->activation(tape, batchnorm_forward(tape, a1, self->bn1_, Mode::kEval));
  Tensor a2 = self->dense2_.forward(tape, h);
  return {a1.value(), a2.value()};
}

std::vector<Variable*> Classifier::theta() {
  return {&dense1_.weight, &dense1_.bias, &dense2_.weight, &dense2_.bias,
          &dense3_.weight, &dense3_.bias, &bn1_.gamma,     &bn1_.beta,
          &bn2_.gamma,     &bn2_.beta};
}

std::vector<const Variable*> Classifier::theta() const {
  auto mut = const_cast<Classifier*>(this)->theta();
  return {mut.begin(), mut.end()};
}

std::vector<BNLayerState*> Classifier::bn_states() { return {&bn1_, &bn2_}; }

std::vector<const BNLayerState*> Classifier::bn_states() const {
  return {&bn1_, &bn2_};
}

uint64_t Classifier::theta_hash() const {
  ByteHash h;
  for (const Variable* v : theta()) h.update(v->value);
  return h.digest();
}

uint64_t Classifier::omega_hash() const {
  ByteHash h;
  for (const BNLayerState* s : bn_states()) {
    h.update(s->running_mean);
    h.update(s->running_var);
  }
  return h.digest();
}

void Classifier::reset_grads() {
  for (Variable* v : theta()) v->reset_grad();
}

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'L', 'B', 'C', '0', '0', '0', '1'};

void write_doubles(std::ostream& os, const std::vector<double>& v) {
  uint64_t n = v.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is) {
  uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}

void write_i32(std::ostream& os, int32_t x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(x));
}

int32_t read_i32(std::istream& is) {
  int32_t x = 0;
  is.read(reinterpret_cast<char*>(&x), sizeof(x));
  return x;
}

}  // namespace

void Classifier::save(std::ostream& os) const {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_i32(os, spec_.input_dim);
  write_i32(os, spec_.hidden_width);
  write_i32(os, spec_.class_count);
  write_i32(os, spec_.activation == Activation::kRelu ? 0 : 1);
  for (const Variable* v : theta()) write_doubles(os, v->value);
  for (const BNLayerState* s : bn_states()) {
    write_doubles(os, s->running_mean);
    write_doubles(os, s->running_var);
    os.write(reinterpret_cast<const char*>(&s->epsilon), sizeof(double));
    os.write(reinterpret_cast<const char*>(&s->alpha), sizeof(double));
  }
}

Classifier Classifier::load(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic or unsupported version");
  }
  ClassifierSpec spec;
  spec.input_dim = read_i32(is);
  spec.hidden_width = read_i32(is);
  spec.class_count = read_i32(is);
  spec.activation = read_i32(is) == 0 ? Activation::kRelu : Activation::kTanh;
  RngStream dummy(0);
  Classifier c(spec, dummy);
  for (Variable* v : c.theta()) {
    auto vals = read_doubles(is);
    if (vals.size() != v->numel()) throw std::runtime_error("checkpoint: size mismatch");
    v->value = std::move(vals);
  }
  for (BNLayerState* s : c.bn_states()) {
    s->running_mean = read_doubles(is);
    s->running_var = read_doubles(is);
    is.read(reinterpret_cast<char*>(&s->epsilon), sizeof(double));
    is.read(reinterpret_cast<char*>(&s->alpha), sizeof(double));
  }
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  return c;
}

void Classifier::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  save(os);
}

Classifier Classifier::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  return load(is);
}

double cross_entropy_loss(std::span<const double> scores, int true_class) {
  if (true_class < 0 || true_class >= static_cast<int>(scores.size())) {
    throw std::invalid_argument("cross_entropy_loss: class " +
                                std::to_string(true_class) + " out of range [0," +
                                std::to_string(scores.size()) + ")");
  }
  return -std::log(scores[true_class]);
}

}  // namespace genlab
