#pragma once

#include <functional>
#include <string>
#include <vector>

#include "amrnn/error.hpp"

namespace amrnn {

// Vectors with a norm below this are degenerate for cosine similarity: the
// similarity is defined to be 0 and no gradient flows through either argument.
inline constexpr double kNormEpsilon = 1e-12;

// Dense double-precision array. Scalars are tensors of shape {1}; matrices are
// row-major with shape {rows, cols}. A tensor recorded by a Tape carries the
// id of its node so gradients can be looked up after backward().
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  int node = -1;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<double> values_);

  static Tensor zeros(const std::vector<int>& shape);
  static Tensor scalar(double v);
  static Tensor vec(std::vector<double> v);
  static Tensor matrix(int rows, int cols, std::vector<double> v);

  int rank() const { return static_cast<int>(shape.size()); }
  int numel() const;
  bool is_vector() const { return rank() == 1; }
  bool is_matrix() const { return rank() == 2; }

  double scalar_value() const;

  double operator()(int i) const { return values[static_cast<std::size_t>(i)]; }
  double& operator()(int i) { return values[static_cast<std::size_t>(i)]; }
  double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * shape[1] + j]; }
  double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * shape[1] + j]; }

  bool all_finite() const;
};

std::string shape_str(const std::vector<int>& shape);

// Value-level kernels, shared by the tape ops and by callers that do not need
// gradients (preprocessing, baselines).
double dot_values(const std::vector<double>& a, const std::vector<double>& b);
double norm_value(const std::vector<double>& a);
double cosine_similarity_value(const std::vector<double>& a, const std::vector<double>& b);

// Softmax over the active positions; inactive positions are exactly 0.
// Throws PreconditionError when no position is active.
std::vector<double> normalize_attention_values(const std::vector<double>& scores,
                                               const std::vector<char>& active);

enum class OpKind {
  leaf,
  affine,
  matvec,
  add,
  sub,
  mul,
  sigmoid,
  tanh,
  log,
  concat,
  cosine,
  dot,
  stack,
  pick,
  sum,
  normalize_attention,
  weighted_sum,
  embed,
  embed_bag,
};

// Record of one forward pass, in topological order, for reverse-mode
// differentiation. A tape and the tensors it produced form one single-threaded
// unit of work; distinct tapes are independent.
class Tape {
 public:
  // Registers a tensor as a tape input (parameter or constant).
  Tensor leaf(const Tensor& value);

  Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b);  // W*x + b
  Tensor matvec(const Tensor& w, const Tensor& x);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
  Tensor sigmoid(const Tensor& x);
  Tensor tanh(const Tensor& x);
  Tensor log(const Tensor& x);
  Tensor concat(const Tensor& a, const Tensor& b);
  Tensor cosine_similarity(const Tensor& a, const Tensor& b);
  Tensor dot(const Tensor& a, const Tensor& b);
  Tensor stack(const std::vector<Tensor>& scalars);
  Tensor pick(const Tensor& v, int index);
  Tensor sum(const Tensor& v);
  Tensor normalize_attention(const Tensor& scores, const std::vector<char>& active);
  // weights[t] * vectors[t] summed over t; weights is rank-1 of length vectors.size().
  Tensor weighted_sum(const Tensor& weights, const std::vector<Tensor>& vectors);
  Tensor embed(const Tensor& table, int column);  // column of a d x V matrix
  Tensor embed_bag(const Tensor& table, const std::vector<int>& columns);  // sum of columns

  // Reverse accumulation from a scalar seed node. Replaces any gradients from
  // a previous backward() on this tape.
  void backward(const Tensor& seed);

  // Gradient of the last backward() seed w.r.t. the given tensor's node;
  // zeros of the node's shape when the node was not reached.
  Tensor grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(int node) const { return nodes_[static_cast<std::size_t>(node)].value; }

  // Drops all nodes and gradients but keeps allocated capacity.
  void reset();

 private:
  struct Node {
    OpKind kind;
    std::vector<int> inputs;
    Tensor value;
    int aux = -1;                 // pick index
    std::vector<int> columns;     // embed / embed_bag
    std::vector<char> mask;       // normalize_attention
  };

  int push(OpKind kind, std::vector<int> inputs, Tensor value);
  int on_tape(const Tensor& t);  // auto-registers off-tape tensors as leaves
  Tensor& grad_buf(int node);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Compares the tape gradient of f against central finite differences at x and
// returns max over components of |g_ad - g_fd| / max(1, |g_fd|). f receives a
// fresh tape and the registered leaf and must return a scalar on that tape.
double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                         const Tensor& x, double eps);

}  // namespace amrnn
