#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace genlab {

enum class Mode { kTrain, kEval };
enum class Activation { kRelu, kTanh };

struct DenseLayer {
  Variable weight;  // [out x in]
  Variable bias;    // [out]

  void init(int out, int in, RngStream& rng);
  // y = x . W^T + b, for x [m x in]
  Tensor forward(Tape& tape, Tensor x) const;
};

// gamma/beta are learnable (part of theta); running_mean/running_var are the
// statistics set omega, updated only by train-mode forwards, never by the
// optimizer.
struct BNLayerState {
  Variable gamma;  // [width]
  Variable beta;   // [width]
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double epsilon = 1e-5;
  double alpha = 0.1;

  void init(int width);
  int width() const { return static_cast<int>(running_mean.size()); }
};

// Train mode normalizes by batch statistics and folds them into the running
// averages: new = alpha * batch + (1 - alpha) * old. Eval mode normalizes by
// the running statistics and leaves them untouched. Train mode needs m >= 2.
Tensor batchnorm_forward(Tape& tape, Tensor batch, BNLayerState& state, Mode mode);

struct ClassifierSpec {
  int input_dim = 64;
  int hidden_width = 64;
  int class_count = 10;
  Activation activation = Activation::kRelu;

  bool operator==(const ClassifierSpec&) const = default;
};

// input -> dense -> BN -> act -> dense -> BN -> act -> dense(K)
class Classifier {
 public:
  Classifier() = default;
  Classifier(const ClassifierSpec& spec, RngStream& rng);

  const ClassifierSpec& spec() const { return spec_; }

  // batch [m x D] -> logits [m x K]; train mode updates omega as a side effect
  Tensor forward_logits(Tape& tape, Tensor batch, Mode mode);

  // convenience eval-mode scores for one sample (post-softmax probabilities)
  std::vector<double> scores(const std::vector<double>& x) const;
  std::vector<std::vector<double>> scores_batch(
      const std::vector<const std::vector<double>*>& xs) const;

  // pre-BN activations at each BN layer for a batch, eval semantics upstream
  std::vector<std::vector<double>> bn_input_activations(
      const std::vector<const std::vector<double>*>& xs) const;

  std::vector<Variable*> theta();              // all gradient-learned params
  std::vector<const Variable*> theta() const;
  std::vector<BNLayerState*> bn_states();
  std::vector<const BNLayerState*> bn_states() const;

  uint64_t theta_hash() const;
  uint64_t omega_hash() const;
  void reset_grads();

  void save(const std::string& path) const;
  static Classifier load(const std::string& path);
  void save(std::ostream& os) const;
  static Classifier load(std::istream& is);

 private:
  Tensor activation(Tape& tape, Tensor x) const;

  ClassifierSpec spec_;
  DenseLayer dense1_, dense2_, dense3_;
  BNLayerState bn1_, bn2_;
};

// -log(scores[k]) on an already-normalized score vector; k range-checked.
double cross_entropy_loss(std::span<const double> scores, int true_class);

}  // namespace genlab
