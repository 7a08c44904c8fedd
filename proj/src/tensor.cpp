#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genlab {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  out += "]";
  return out;
}

Variable::Variable(Shape s, std::vector<double> v)
    : shape(std::move(s)), value(std::move(v)) {
  if (value.size() != numel()) {
    throw std::invalid_argument("Variable: value size " +
                                std::to_string(value.size()) +
                                " does not match shape " + shape_str(shape));
  }
}

Variable Variable::zeros(Shape s) {
  size_t n = shape_numel(s);
  return Variable(std::move(s), std::vector<double>(n, 0.0));
}

void Variable::ensure_grad() {
  if (grad.empty()) grad.assign(numel(), 0.0);
}

double Tensor::scalar() const {
  if (node_->numel() != 1) {
    throw std::invalid_argument("Tensor::scalar on non-scalar tensor " +
                                shape_str(node_->shape));
  }
  return node_->value[0];
}

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " +
                              shape_str(a) + " vs " + shape_str(b));
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.shape().size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected matrix, got " +
                                shape_str(t.shape()));
  }
}

void require_vector(const char* op, const Tensor& t) {
  if (t.shape().size() != 1) {
    throw std::invalid_argument(std::string(op) + ": expected vector, got " +
                                shape_str(t.shape()));
  }
}

}  // namespace

Node* Tape::make(Shape shape, std::vector<double> value, bool requires_grad) {
  nodes_.emplace_back();
  Node* n = &nodes_.back();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

Tensor Tape::leaf(Variable& v) {
  Node* n = make(v.shape, v.value, true);
  n->leaf = &v;
  return Tensor(n);
}

Tensor Tape::constant(Shape shape, std::vector<double> value) {
  if (value.size() != shape_numel(shape)) {
    throw std::invalid_argument("constant: value size does not match shape " +
                                shape_str(shape));
  }
  return Tensor(make(std::move(shape), std::move(value), false));
}

Tensor Tape::matmul(Tensor a, Tensor b, bool transpose_b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const int m = a.shape()[0], k = a.shape()[1];
  const int bk = transpose_b ? b.shape()[1] : b.shape()[0];
  const int n = transpose_b ? b.shape()[0] : b.shape()[1];
  if (k != bk) shape_error("matmul", a.shape(), b.shape());

  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (!transpose_b) {
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        double aip = av[i * k + p];
        if (aip == 0.0) continue;
        for (int j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
      }
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
        out[i * n + j] = acc;
      }
  }
  bool rg = a.node()->requires_grad || b.node()->requires_grad;
  Node* o = make({m, n}, std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    Node* bn = b.node();
    o->backprop = [an, bn, o, m, k, n, transpose_b]() {
      const auto& go = o->grad;
      if (an->requires_grad) {
        an->ensure_grad();
        // dA = dO . B^T  (or dO . B when B was used transposed)
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
              double bv = transpose_b ? bn->value[j * k + p]
                                      : bn->value[p * n + j];
              acc += go[i * n + j] * bv;
            }
            an->grad[i * k + p] += acc;
          }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        if (!transpose_b) {
          // dB = A^T . dO
          for (int p = 0; p < k; ++p)
            for (int j = 0; j < n; ++j) {
              double acc = 0.0;
              for (int i = 0; i < m; ++i) acc += an->value[i * k + p] * go[i * n + j];
              bn->grad[p * n + j] += acc;
            }
        } else {
          // B stored [n x k]; dB = dO^T . A
          for (int j = 0; j < n; ++j)
            for (int p = 0; p < k; ++p) {
              double acc = 0.0;
              for (int i = 0; i < m; ++i) acc += go[i * n + j] * an->value[i * k + p];
              bn->grad[j * k + p] += acc;
            }
        }
      }
    };
  }
  return Tensor(o);
}

Tensor Tape::add(Tensor a, Tensor b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.value()[i] + b.value()[i];
  bool rg = a.node()->requires_grad || b.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node *an = a.node(), *bn = b.node();
    o->backprop = [an, bn, o, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < n; ++i) bn->grad[i] += o->grad[i];
      }
    };
  }
  return Tensor(o);
}

Tensor Tape::subtract(Tensor a, Tensor b) {
  if (a.shape() != b.shape()) shape_error("subtract", a.shape(), b.shape());
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.value()[i] - b.value()[i];
  bool rg = a.node()->requires_grad || b.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node *an = a.node(), *bn = b.node();
    o->backprop = [an, bn, o, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < n; ++i) bn->grad[i] -= o->grad[i];
      }
    };
  }
  return Tensor(o);
}

Tensor Tape::multiply(Tensor a, Tensor b) {
  if (a.shape() != b.shape()) shape_error("elementwise_multiply", a.shape(), b.shape());
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.value()[i] * b.value()[i];
  bool rg = a.node()->requires_grad || b.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node *an = a.node(), *bn = b.node();
    o->backprop = [an, bn, o, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i] * bn->value[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < n; ++i) bn->grad[i] += o->grad[i] * an->value[i];
      }
    };
  }
  return Tensor(o);
}

Tensor Tape::scale(Tensor a, double c) {
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = c * a.value()[i];
  bool rg = a.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, c, n]() {
      an->ensure_grad();
      for (size_t i = 0; i < n; ++i) an->grad[i] += c * o->grad[i];
    };
  }
  return Tensor(o);
}

Tensor Tape::add_scalar(Tensor a, double c) {
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.value()[i] + c;
  bool rg = a.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, n]() {
      an->ensure_grad();
      for (size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i];
    };
  }
  return Tensor(o);
}

Tensor Tape::tanh(Tensor a) {
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::tanh(a.value()[i]);
  bool rg = a.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, n]() {
      an->ensure_grad();
      for (size_t i = 0; i < n; ++i) {
        double t = o->value[i];
        an->grad[i] += o->grad[i] * (1.0 - t * t);
      }
    };
  }
  return Tensor(o);
}

Tensor Tape::relu(Tensor a) {
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
  bool rg = a.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, n]() {
      an->ensure_grad();
      for (size_t i = 0; i < n; ++i)
        if (an->value[i] > 0.0) an->grad[i] += o->grad[i];
    };
  }
  return Tensor(o);
}

Tensor Tape::log(Tensor a) {
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::log(a.value()[i]);
  bool rg = a.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, n]() {
      an->ensure_grad();
      for (size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i] / an->value[i];
    };
  }
  return Tensor(o);
}

Tensor Tape::exp(Tensor a) {
  size_t n = a.node()->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::exp(a.value()[i]);
  bool rg = a.node()->requires_grad;
  Node* o = make(a.shape(), std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, n]() {
      an->ensure_grad();
      for (size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i] * o->value[i];
    };
  }
  return Tensor(o);
}

Tensor Tape::reduce_mean(Tensor a) {
  size_t n = a.node()->numel();
  if (n == 0) throw std::invalid_argument("reduce_mean: empty tensor");
  double acc = 0.0;
  for (double x : a.value()) acc += x;
  double mean = acc / static_cast<double>(n);
  bool rg = a.node()->requires_grad;
  Node* o = make({}, {mean}, rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, n]() {
      an->ensure_grad();
      double g = o->grad[0] / static_cast<double>(n);
      for (size_t i = 0; i < n; ++i) an->grad[i] += g;
    };
  }
  return Tensor(o);
}

Tensor Tape::reduce_mean_rows(Tensor a) {
  require_matrix("reduce_mean", a);
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j] += a.value()[i * n + j];
  for (int j = 0; j < n; ++j) out[j] /= m;
  bool rg = a.node()->requires_grad;
  Node* o = make({n}, std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, m, n]() {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) an->grad[i * n + j] += o->grad[j] / m;
    };
  }
  return Tensor(o);
}

Tensor Tape::reduce_var_rows(Tensor a) {
  // biased variance (divide by m), matching the mini-batch convention
  require_matrix("reduce_var", a);
  const int m = a.shape()[0], n = a.shape()[1];
  std::vector<double> mean(n, 0.0), out(n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) mean[j] += a.value()[i * n + j];
  for (int j = 0; j < n; ++j) mean[j] /= m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double d = a.value()[i * n + j] - mean[j];
      out[j] += d * d;
    }
  for (int j = 0; j < n; ++j) out[j] /= m;
  bool rg = a.node()->requires_grad;
  Node* o = make({n}, std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    auto mean_copy = mean;
    o->backprop = [an, o, m, n, mean_copy]() {
      an->ensure_grad();
      // d var_j / d a_ij = 2 (a_ij - mean_j) / m  (total derivative)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double d = an->value[i * n + j] - mean_copy[j];
          an->grad[i * n + j] += o->grad[j] * 2.0 * d / m;
        }
    };
  }
  return Tensor(o);
}

Tensor Tape::broadcast_rows(Tensor v, int m) {
  require_vector("broadcast", v);
  const int n = v.shape()[0];
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = v.value()[j];
  bool rg = v.node()->requires_grad;
  Node* o = make({m, n}, std::move(out), rg);
  if (rg) {
    Node* vn = v.node();
    o->backprop = [vn, o, m, n]() {
      vn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) vn->grad[j] += o->grad[i * n + j];
    };
  }
  return Tensor(o);
}

Tensor Tape::slice_row(Tensor a, int row) {
  require_matrix("slice", a);
  const int m = a.shape()[0], n = a.shape()[1];
  if (row < 0 || row >= m) {
    throw std::invalid_argument("slice: row " + std::to_string(row) +
                                " out of range for " + shape_str(a.shape()));
  }
  std::vector<double> out(a.value().begin() + static_cast<size_t>(row) * n,
                          a.value().begin() + static_cast<size_t>(row + 1) * n);
  bool rg = a.node()->requires_grad;
  Node* o = make({n}, std::move(out), rg);
  if (rg) {
    Node* an = a.node();
    o->backprop = [an, o, row, n]() {
      an->ensure_grad();
      for (int j = 0; j < n; ++j) an->grad[row * n + j] += o->grad[j];
    };
  }
  return Tensor(o);
}

Tensor Tape::concat_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw std::invalid_argument("concat: no inputs");
  const int n = rows[0].shape().empty() ? 1 : rows[0].shape()[0];
  std::vector<double> out;
  out.reserve(rows.size() * n);
  bool rg = false;
  for (const Tensor& r : rows) {
    require_vector("concat", r);
    if (r.shape()[0] != n) shape_error("concat", rows[0].shape(), r.shape());
    out.insert(out.end(), r.value().begin(), r.value().end());
    rg = rg || r.node()->requires_grad;
  }
  const int m = static_cast<int>(rows.size());
  Node* o = make({m, n}, std::move(out), rg);
  if (rg) {
    std::vector<Node*> parents;
    parents.reserve(rows.size());
    for (const Tensor& r : rows) parents.push_back(r.node());
    o->backprop = [parents, o, n]() {
      for (size_t i = 0; i < parents.size(); ++i) {
        Node* p = parents[i];
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (int j = 0; j < n; ++j) p->grad[j] += o->grad[i * n + j];
      }
    };
  }
  return Tensor(o);
}

Tensor Tape::pick(Tensor v, int index) {
  require_vector("pick", v);
  const int n = v.shape()[0];
  if (index < 0 || index >= n) {
    throw std::invalid_argument("pick: index " + std::to_string(index) +
                                " out of range for " + shape_str(v.shape()));
  }
  bool rg = v.node()->requires_grad;
  Node* o = make({}, {v.value()[index]}, rg);
  if (rg) {
    Node* vn = v.node();
    o->backprop = [vn, o, index]() {
      vn->ensure_grad();
      vn->grad[index] += o->grad[0];
    };
  }
  return Tensor(o);
}

Tensor Tape::softmax_cross_entropy(Tensor logits, const std::vector<int>& labels) {
  require_matrix("softmax_cross_entropy", logits);
  const int m = logits.shape()[0], k = logits.shape()[1];
  if (static_cast<int>(labels.size()) != m) {
    throw std::invalid_argument("softmax_cross_entropy: " +
                                std::to_string(labels.size()) + " labels for " +
                                std::to_string(m) + " rows");
  }
  std::vector<double> probs(static_cast<size_t>(m) * k);
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw std::invalid_argument("softmax_cross_entropy: label " +
                                  std::to_string(labels[i]) +
                                  " out of range [0," + std::to_string(k) + ")");
    }
    const double* row = logits.value().data() + static_cast<size_t>(i) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      double e = std::exp(row[j] - mx);
      probs[i * k + j] = e;
      sum += e;
    }
    for (int j = 0; j < k; ++j) probs[i * k + j] /= sum;
    loss += -(row[labels[i]] - mx - std::log(sum));
  }
  loss /= m;
  bool rg = logits.node()->requires_grad;
  Node* o = make({}, {loss}, rg);
  if (rg) {
    Node* ln = logits.node();
    auto probs_copy = std::move(probs);
    auto labels_copy = labels;
    o->backprop = [ln, o, m, k, probs_copy, labels_copy]() {
      ln->ensure_grad();
      double g = o->grad[0] / m;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
          double p = probs_copy[i * k + j];
          double target = (j == labels_copy[i]) ? 1.0 : 0.0;
          ln->grad[i * k + j] += g * (p - target);
        }
    };
  }
  return Tensor(o);
}

void Tape::backward(Tensor loss) {
  if (!loss.valid() || loss.node()->numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  // creation order is a topological order: replay in reverse
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->grad.empty() && it->backprop) it->backprop();
  }
  // flush node gradients into leaf variables; unreachable leaves get zeros
  for (Node& n : nodes_) {
    if (!n.leaf) continue;
    n.leaf->ensure_grad();
    if (!n.grad.empty()) {
      for (size_t i = 0; i < n.grad.size(); ++i) n.leaf->grad[i] += n.grad[i];
    }
  }
}

int argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax: empty input");
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

int max_index_stopgrad(const Tensor& t) { return argmax(t.value()); }

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double finite_difference_check(const GraphFn& f, const Shape& shape,
                               const std::vector<double>& point, double eps) {
  Variable v(shape, point);
  {
    Tape tape;
    Tensor loss = f(tape, tape.leaf(v));
    tape.backward(loss);
  }
  auto eval_at = [&](const std::vector<double>& p) {
    Variable probe(shape, p);
    Tape tape;
    return f(tape, tape.leaf(probe)).scalar();
  };
  double max_err = 0.0;
  std::vector<double> p = point;
  for (size_t i = 0; i < p.size(); ++i) {
    double orig = p[i];
    p[i] = orig + eps;
    double up = eval_at(p);
    p[i] = orig - eps;
    double down = eval_at(p);
    p[i] = orig;
    double cd = (up - down) / (2.0 * eps);
    double an = v.grad.empty() ? 0.0 : v.grad[i];
    double mag = std::abs(an) + std::abs(cd);
    if (mag < 1e-8) continue;  // degenerate coordinate: absolute tolerance
    double err = std::abs(an - cd) / std::max(1e-12, mag);
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace genlab
