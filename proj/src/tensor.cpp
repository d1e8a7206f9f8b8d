#include "amrnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

namespace amrnn {

namespace {

std::size_t checked_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("tensor dimension must be non-negative, got " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape) + " and " +
                     shape_str(b.shape) + " do not match");
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_, std::vector<double> values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
  if (checked_numel(shape) != values.size()) {
    throw ShapeError("tensor shape " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
  return Tensor(shape, std::vector<double>(checked_numel(shape), 0.0));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vec(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

int Tensor::numel() const { return static_cast<int>(values.size()); }

double Tensor::scalar_value() const {
  if (numel() != 1) {
    throw ShapeError("expected a scalar, got shape " + shape_str(shape));
  }
  return values[0];
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << " x ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

double dot_values(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_value(const std::vector<double>& a) { return std::sqrt(dot_values(a, a)); }

double cosine_similarity_value(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = norm_value(a);
  const double nb = norm_value(b);
  if (na < kNormEpsilon || nb < kNormEpsilon) return 0.0;
  return dot_values(a, b) / (na * nb);
}

std::vector<double> normalize_attention_values(const std::vector<double>& scores,
                                               const std::vector<char>& active) {
  if (scores.size() != active.size()) {
    throw ShapeError("normalize_attention: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(active.size()) + " mask entries");
  }
  double max_active = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!active[i]) continue;
    max_active = any ? std::max(max_active, scores[i]) : scores[i];
    any = true;
  }
  if (!any) throw PreconditionError("normalize_attention: no active position");

  std::vector<double> out(scores.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!active[i]) continue;
    out[i] = std::exp(scores[i] - max_active);
    denom += out[i];
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i]) out[i] /= denom;
  }
  return out;
}

int Tape::push(OpKind kind, std::vector<int> inputs, Tensor value) {
  const int id = static_cast<int>(nodes_.size());
  Node node;
  node.kind = kind;
  node.inputs = std::move(inputs);
  node.value = std::move(value);
  node.value.node = id;
  nodes_.push_back(std::move(node));
  return id;
}

int Tape::on_tape(const Tensor& t) {
  if (t.node >= 0) {
    if (static_cast<std::size_t>(t.node) >= nodes_.size()) {
      throw PreconditionError("tensor's node id does not belong to this tape");
    }
    return t.node;
  }
  return push(OpKind::leaf, {}, t);
}

Tensor Tape::leaf(const Tensor& value) {
  Tensor v = value;
  v.node = -1;
  return nodes_[static_cast<std::size_t>(push(OpKind::leaf, {}, std::move(v)))].value;
}

Tensor Tape::affine(const Tensor& w, const Tensor& x, const Tensor& b) {
  if (!w.is_matrix() || !x.is_vector() || !b.is_vector() || w.shape[1] != x.shape[0] ||
      w.shape[0] != b.shape[0]) {
    throw ShapeError("affine: W " + shape_str(w.shape) + ", x " + shape_str(x.shape) + ", b " +
                     shape_str(b.shape) + " do not conform");
  }
  const int m = w.shape[0], n = w.shape[1];
  Tensor out = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) {
    double s = b(i);
    const double* row = w.values.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) s += row[j] * x(j);
    out(i) = s;
  }
  const int iw = on_tape(w), ix = on_tape(x), ib = on_tape(b);
  out.node = push(OpKind::affine, {iw, ix, ib}, out);
  return out;
}

Tensor Tape::matvec(const Tensor& w, const Tensor& x) {
  if (!w.is_matrix() || !x.is_vector() || w.shape[1] != x.shape[0]) {
    throw ShapeError("matvec: W " + shape_str(w.shape) + " and x " + shape_str(x.shape) +
                     " do not conform");
  }
  const int m = w.shape[0], n = w.shape[1];
  Tensor out = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = w.values.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) s += row[j] * x(j);
    out(i) = s;
  }
  const int iw = on_tape(w), ix = on_tape(x);
  out.node = push(OpKind::matvec, {iw, ix}, out);
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  const int ia = on_tape(a), ib = on_tape(b);
  out.node = push(OpKind::add, {ia, ib}, out);
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  const int ia = on_tape(a), ib = on_tape(b);
  out.node = push(OpKind::sub, {ia, ib}, out);
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= b.values[i];
  const int ia = on_tape(a), ib = on_tape(b);
  out.node = push(OpKind::mul, {ia, ib}, out);
  return out;
}

Tensor Tape::sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
  const int ix = on_tape(x);
  out.node = push(OpKind::sigmoid, {ix}, out);
  return out;
}

Tensor Tape::tanh(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values) v = std::tanh(v);
  const int ix = on_tape(x);
  out.node = push(OpKind::tanh, {ix}, out);
  return out;
}

Tensor Tape::log(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values) v = std::log(v);
  const int ix = on_tape(x);
  out.node = push(OpKind::log, {ix}, out);
  return out;
}

Tensor Tape::concat(const Tensor& a, const Tensor& b) {
  if (!a.is_vector() || !b.is_vector()) {
    throw ShapeError("concat: expects two vectors, got " + shape_str(a.shape) + " and " +
                     shape_str(b.shape));
  }
  Tensor out = Tensor::zeros({a.shape[0] + b.shape[0]});
  std::copy(a.values.begin(), a.values.end(), out.values.begin());
  std::copy(b.values.begin(), b.values.end(), out.values.begin() + a.shape[0]);
  const int ia = on_tape(a), ib = on_tape(b);
  out.node = push(OpKind::concat, {ia, ib}, out);
  return out;
}

Tensor Tape::cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same_shape("cosine_similarity", a, b);
  if (a.numel() < 1) throw PreconditionError("cosine_similarity: empty vectors");
  Tensor out = Tensor::scalar(cosine_similarity_value(a.values, b.values));
  const int ia = on_tape(a), ib = on_tape(b);
  out.node = push(OpKind::cosine, {ia, ib}, out);
  return out;
}

Tensor Tape::dot(const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  Tensor out = Tensor::scalar(dot_values(a.values, b.values));
  const int ia = on_tape(a), ib = on_tape(b);
  out.node = push(OpKind::dot, {ia, ib}, out);
  return out;
}

Tensor Tape::stack(const std::vector<Tensor>& scalars) {
  std::vector<int> inputs;
  inputs.reserve(scalars.size());
  Tensor out = Tensor::zeros({static_cast<int>(scalars.size())});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].numel() != 1) {
      throw ShapeError("stack: entry " + std::to_string(i) + " has shape " +
                       shape_str(scalars[i].shape) + ", expected a scalar");
    }
    out(static_cast<int>(i)) = scalars[i].values[0];
    inputs.push_back(on_tape(scalars[i]));
  }
  out.node = push(OpKind::stack, std::move(inputs), out);
  return out;
}

Tensor Tape::pick(const Tensor& v, int index) {
  if (!v.is_vector() || index < 0 || index >= v.shape[0]) {
    throw ShapeError("pick: index " + std::to_string(index) + " out of range for shape " +
                     shape_str(v.shape));
  }
  Tensor out = Tensor::scalar(v(index));
  const int iv = on_tape(v);
  const int id = push(OpKind::pick, {iv}, out);
  nodes_[static_cast<std::size_t>(id)].aux = index;
  out.node = id;
  return out;
}

Tensor Tape::sum(const Tensor& v) {
  double s = 0.0;
  for (double x : v.values) s += x;
  Tensor out = Tensor::scalar(s);
  const int iv = on_tape(v);
  out.node = push(OpKind::sum, {iv}, out);
  return out;
}

Tensor Tape::normalize_attention(const Tensor& scores, const std::vector<char>& active) {
  if (!scores.is_vector()) {
    throw ShapeError("normalize_attention: scores must be rank-1, got " + shape_str(scores.shape));
  }
  Tensor out = Tensor::vec(normalize_attention_values(scores.values, active));
  const int is = on_tape(scores);
  const int id = push(OpKind::normalize_attention, {is}, out);
  nodes_[static_cast<std::size_t>(id)].mask = active;
  out.node = id;
  return out;
}

Tensor Tape::weighted_sum(const Tensor& weights, const std::vector<Tensor>& vectors) {
  if (!weights.is_vector() || static_cast<std::size_t>(weights.shape[0]) != vectors.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(vectors.size()) + " vectors vs weights " +
                     shape_str(weights.shape));
  }
  if (vectors.empty()) throw PreconditionError("weighted_sum: no vectors");
  Tensor out = Tensor::zeros(vectors[0].shape);
  std::vector<int> inputs;
  inputs.reserve(vectors.size() + 1);
  inputs.push_back(on_tape(weights));
  for (std::size_t t = 0; t < vectors.size(); ++t) {
    require_same_shape("weighted_sum", vectors[0], vectors[t]);
    const double w = weights(static_cast<int>(t));
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += w * vectors[t].values[i];
    inputs.push_back(on_tape(vectors[t]));
  }
  out.node = push(OpKind::weighted_sum, std::move(inputs), out);
  return out;
}

Tensor Tape::embed(const Tensor& table, int column) {
  if (!table.is_matrix() || column < 0 || column >= table.shape[1]) {
    throw ShapeError("embed: column " + std::to_string(column) + " out of range for table " +
                     shape_str(table.shape));
  }
  const int d = table.shape[0];
  Tensor out = Tensor::zeros({d});
  for (int i = 0; i < d; ++i) out(i) = table(i, column);
  const int it = on_tape(table);
  const int id = push(OpKind::embed, {it}, out);
  nodes_[static_cast<std::size_t>(id)].columns = {column};
  out.node = id;
  return out;
}

Tensor Tape::embed_bag(const Tensor& table, const std::vector<int>& columns) {
  if (!table.is_matrix()) {
    throw ShapeError("embed_bag: table must be a matrix, got " + shape_str(table.shape));
  }
  const int d = table.shape[0];
  Tensor out = Tensor::zeros({d});
  for (int c : columns) {
    if (c < 0 || c >= table.shape[1]) {
      throw ShapeError("embed_bag: column " + std::to_string(c) + " out of range for table " +
                       shape_str(table.shape));
    }
    for (int i = 0; i < d; ++i) out(i) += table(i, c);
  }
  const int it = on_tape(table);
  const int id = push(OpKind::embed_bag, {it}, out);
  nodes_[static_cast<std::size_t>(id)].columns = columns;
  out.node = id;
  return out;
}

Tensor& Tape::grad_buf(int node) {
  Tensor& g = grads_[static_cast<std::size_t>(node)];
  if (g.values.empty() && nodes_[static_cast<std::size_t>(node)].value.numel() > 0) {
    g = Tensor::zeros(nodes_[static_cast<std::size_t>(node)].value.shape);
  } else if (g.shape.empty() && !nodes_[static_cast<std::size_t>(node)].value.shape.empty()) {
    g.shape = nodes_[static_cast<std::size_t>(node)].value.shape;
  }
  return g;
}

void Tape::backward(const Tensor& seed) {
  if (seed.node < 0 || static_cast<std::size_t>(seed.node) >= nodes_.size()) {
    throw PreconditionError("backward: seed is not on this tape");
  }
  if (nodes_[static_cast<std::size_t>(seed.node)].value.numel() != 1) {
    throw ShapeError("backward: seed must be a scalar, got shape " +
                     shape_str(nodes_[static_cast<std::size_t>(seed.node)].value.shape));
  }
  grads_.assign(nodes_.size(), Tensor{});
  grads_[static_cast<std::size_t>(seed.node)] = Tensor::scalar(1.0);

  for (int id = seed.node; id >= 0; --id) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.values.empty()) continue;  // not reachable from the seed

    switch (node.kind) {
      case OpKind::leaf:
        break;
      case OpKind::affine:
      case OpKind::matvec: {
        const Tensor& w = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
        const Tensor& x = nodes_[static_cast<std::size_t>(node.inputs[1])].value;
        const int m = w.shape[0], n = w.shape[1];
        Tensor& gw = grad_buf(node.inputs[0]);
        Tensor& gx = grad_buf(node.inputs[1]);
        for (int i = 0; i < m; ++i) {
          const double gi = g(i);
          double* gw_row = gw.values.data() + static_cast<std::size_t>(i) * n;
          const double* w_row = w.values.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) {
            gw_row[j] += gi * x(j);
            gx(j) += w_row[j] * gi;
          }
        }
        if (node.kind == OpKind::affine) {
          Tensor& gb = grad_buf(node.inputs[2]);
          for (int i = 0; i < m; ++i) gb(i) += g(i);
        }
        break;
      }
      case OpKind::add: {
        Tensor& ga = grad_buf(node.inputs[0]);
        Tensor& gb = grad_buf(node.inputs[1]);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          ga.values[i] += g.values[i];
          gb.values[i] += g.values[i];
        }
        break;
      }
      case OpKind::sub: {
        Tensor& ga = grad_buf(node.inputs[0]);
        Tensor& gb = grad_buf(node.inputs[1]);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          ga.values[i] += g.values[i];
          gb.values[i] -= g.values[i];
        }
        break;
      }
      case OpKind::mul: {
        const Tensor& a = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
        const Tensor& b = nodes_[static_cast<std::size_t>(node.inputs[1])].value;
        Tensor& ga = grad_buf(node.inputs[0]);
        Tensor& gb = grad_buf(node.inputs[1]);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          ga.values[i] += g.values[i] * b.values[i];
          gb.values[i] += g.values[i] * a.values[i];
        }
        break;
      }
      case OpKind::sigmoid: {
        Tensor& gx = grad_buf(node.inputs[0]);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          const double y = node.value.values[i];
          gx.values[i] += g.values[i] * y * (1.0 - y);
        }
        break;
      }
      case OpKind::tanh: {
        Tensor& gx = grad_buf(node.inputs[0]);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          const double y = node.value.values[i];
          gx.values[i] += g.values[i] * (1.0 - y * y);
        }
        break;
      }
      case OpKind::log: {
        const Tensor& x = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
        Tensor& gx = grad_buf(node.inputs[0]);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          gx.values[i] += g.values[i] / x.values[i];
        }
        break;
      }
      case OpKind::concat: {
        Tensor& ga = grad_buf(node.inputs[0]);
        Tensor& gb = grad_buf(node.inputs[1]);
        const std::size_t na = ga.values.size();
        for (std::size_t i = 0; i < na; ++i) ga.values[i] += g.values[i];
        for (std::size_t i = 0; i < gb.values.size(); ++i) gb.values[i] += g.values[na + i];
        break;
      }
      case OpKind::cosine: {
        const Tensor& a = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
        const Tensor& b = nodes_[static_cast<std::size_t>(node.inputs[1])].value;
        const double na = norm_value(a.values);
        const double nb = norm_value(b.values);
        if (na < kNormEpsilon || nb < kNormEpsilon) break;  // defined as constant 0
        const double gs = g.values[0];
        const double s = node.value.values[0];
        Tensor& ga = grad_buf(node.inputs[0]);
        Tensor& gb = grad_buf(node.inputs[1]);
        const double inv = 1.0 / (na * nb);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
          ga.values[i] += gs * (b.values[i] * inv - s * a.values[i] / (na * na));
          gb.values[i] += gs * (a.values[i] * inv - s * b.values[i] / (nb * nb));
        }
        break;
      }
      case OpKind::dot: {
        const Tensor& a = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
        const Tensor& b = nodes_[static_cast<std::size_t>(node.inputs[1])].value;
        const double gs = g.values[0];
        Tensor& ga = grad_buf(node.inputs[0]);
        Tensor& gb = grad_buf(node.inputs[1]);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
          ga.values[i] += gs * b.values[i];
          gb.values[i] += gs * a.values[i];
        }
        break;
      }
      case OpKind::stack: {
        for (std::size_t t = 0; t < node.inputs.size(); ++t) {
          grad_buf(node.inputs[t]).values[0] += g.values[t];
        }
        break;
      }
      case OpKind::pick: {
        grad_buf(node.inputs[0]).values[static_cast<std::size_t>(node.aux)] += g.values[0];
        break;
      }
      case OpKind::sum: {
        Tensor& gv = grad_buf(node.inputs[0]);
        for (double& v : gv.values) v += g.values[0];
        break;
      }
      case OpKind::normalize_attention: {
        Tensor& gs = grad_buf(node.inputs[0]);
        double inner = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          if (node.mask[i]) inner += g.values[i] * node.value.values[i];
        }
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          if (node.mask[i]) gs.values[i] += node.value.values[i] * (g.values[i] - inner);
        }
        break;
      }
      case OpKind::weighted_sum: {
        const Tensor& weights = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
        Tensor& gw = grad_buf(node.inputs[0]);
        for (std::size_t t = 1; t < node.inputs.size(); ++t) {
          const Tensor& v = nodes_[static_cast<std::size_t>(node.inputs[t])].value;
          Tensor& gv = grad_buf(node.inputs[t]);
          double acc = 0.0;
          const double w = weights.values[t - 1];
          for (std::size_t i = 0; i < g.values.size(); ++i) {
            acc += g.values[i] * v.values[i];
            gv.values[i] += w * g.values[i];
          }
          gw.values[t - 1] += acc;
        }
        break;
      }
      case OpKind::embed: {
        Tensor& gt = grad_buf(node.inputs[0]);
        const int cols = gt.shape[1];
        const int c = node.columns[0];
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          gt.values[i * static_cast<std::size_t>(cols) + c] += g.values[i];
        }
        break;
      }
      case OpKind::embed_bag: {
        Tensor& gt = grad_buf(node.inputs[0]);
        const int cols = gt.shape[1];
        for (int c : node.columns) {
          for (std::size_t i = 0; i < g.values.size(); ++i) {
            gt.values[i * static_cast<std::size_t>(cols) + c] += g.values[i];
          }
        }
        break;
      }
    }
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.node < 0 || static_cast<std::size_t>(t.node) >= nodes_.size()) {
    throw PreconditionError("grad: tensor is not on this tape");
  }
  if (grads_.empty()) throw PreconditionError("grad: backward() has not run on this tape");
  const Tensor& g = grads_[static_cast<std::size_t>(t.node)];
  if (g.values.empty()) return Tensor::zeros(nodes_[static_cast<std::size_t>(t.node)].value.shape);
  return g;
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
}

double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                         const Tensor& x, double eps) {
  if (eps <= 0.0) throw PreconditionError("finite_diff_check: eps must be positive");

  Tape tape;
  Tensor leaf = tape.leaf(x);
  Tensor out = f(tape, leaf);
  if (out.numel() != 1) {
    throw ShapeError("finite_diff_check: f must return a scalar, got " + shape_str(out.shape));
  }
  tape.backward(out);
  const Tensor g_ad = tape.grad(leaf);

  auto eval = [&](const Tensor& point) {
    Tape t;
    return f(t, t.leaf(point)).scalar_value();
  };

  double worst = 0.0;
  for (int i = 0; i < x.numel(); ++i) {
    Tensor hi = x, lo = x;
    hi(i) += eps;
    lo(i) -= eps;
    const double g_fd = (eval(hi) - eval(lo)) / (2.0 * eps);
    const double err = std::abs(g_ad(i) - g_fd) / std::max(1.0, std::abs(g_fd));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace amrnn
