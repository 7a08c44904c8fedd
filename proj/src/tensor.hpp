#pragma once

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace genlab {

// Dense tensors over a define-by-run tape. The tape is rebuilt per forward
// pass: latent mining differentiates through generator-then-classifier while
// training differentiates through the classifier alone, so the graph shape
// changes call to call.
//
// Shapes are rank 0 (scalar), rank 1 (vector) or rank 2 (matrix). All math is
// double precision.

using Shape = std::vector<int>;

inline size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) n *= static_cast<size_t>(d);
  return n;
}

std::string shape_str(const Shape& s);

// A leaf living across tapes (model parameters, mined latent codes).
// grad is empty before any backward pass and after reset_grad().
struct Variable {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;

  Variable() = default;
  Variable(Shape s, std::vector<double> v);
  static Variable zeros(Shape s);

  size_t numel() const { return shape_numel(shape); }
  void reset_grad() { grad.clear(); }
  void ensure_grad();  // allocate zeros if absent
};

class Tape;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily during backward
  bool requires_grad = false;
  Variable* leaf = nullptr;
  std::function<void()> backprop;  // accumulates into parent node grads

  size_t numel() const { return shape_numel(shape); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(numel(), 0.0);
  }
};

// Cheap handle into the tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Node* n) : node_(n) {}
  const Shape& shape() const { return node_->shape; }
  const std::vector<double>& value() const { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  double scalar() const;  // requires numel == 1
  Node* node() const { return node_; }
  bool valid() const { return node_ != nullptr; }

 private:
  Node* node_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  size_t size() const { return nodes_.size(); }

  // Leaves and constants -----------------------------------------------
  Tensor leaf(Variable& v);  // gradients flow back into v.grad
  Tensor constant(Shape shape, std::vector<double> value);
  Tensor constant_scalar(double x) { return constant({}, {x}); }

  // Primitives ----------------------------------------------------------
  Tensor matmul(Tensor a, Tensor b, bool transpose_b = false);
  Tensor add(Tensor a, Tensor b);
  Tensor subtract(Tensor a, Tensor b);
  Tensor multiply(Tensor a, Tensor b);      // elementwise
  Tensor scale(Tensor a, double c);         // scalar_scale
  Tensor add_scalar(Tensor a, double c);
  Tensor tanh(Tensor a);
  Tensor relu(Tensor a);
  Tensor log(Tensor a);
  Tensor exp(Tensor a);
  Tensor reduce_mean(Tensor a);             // full reduction -> scalar
  Tensor reduce_mean_rows(Tensor a);        // [m x n] -> [n], mean over rows
  Tensor reduce_var_rows(Tensor a);         // [m x n] -> [n], biased variance
  Tensor broadcast_rows(Tensor v, int m);   // [n] -> [m x n]
  Tensor slice_row(Tensor a, int row);      // [m x n] -> [n]
  Tensor concat_rows(std::span<const Tensor> rows);  // k vectors [n] -> [k x n]
  Tensor pick(Tensor v, int index);         // [n] -> scalar

  // Fused mean cross-entropy over a batch of logits; backward is the
  // closed-form softmax minus one-hot, divided by the batch size.
  Tensor softmax_cross_entropy(Tensor logits, const std::vector<int>& labels);

  // Reverse sweep from a scalar loss. Populates Variable::grad of every
  // requires-grad leaf on this tape (zeros for leaves unreachable from loss).
  // Gradients accumulate additively into Variable::grad across calls.
  void backward(Tensor loss);

 private:
  Node* make(Shape shape, std::vector<double> value, bool requires_grad);
  std::deque<Node> nodes_;
};

// argmax of a vector (or 1 x n) tensor's forward value; ties break to the
// lowest index. Returns a plain index: no gradient flows through it.
int max_index_stopgrad(const Tensor& t);
int argmax(std::span<const double> v);

// Compares the tape gradient of f at `point` against central finite
// differences. Returns the max relative error over coordinates, with
// near-zero coordinates compared absolutely.
using GraphFn = std::function<Tensor(Tape&, Tensor)>;
double finite_difference_check(const GraphFn& f, const Shape& shape,
                               const std::vector<double>& point, double eps);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace genlab
