#pragma once

// Minimal define-by-run reverse-mode autodiff over dense float64 tensors.
//
// Tensors are shared handles to a Node holding row-major values and, when the
// tensor participates in differentiation, a gradient buffer of the same shape.
// Every primitive that consumes a grad-requiring input appends a backward rule
// to the calling thread's Tape; Tape::backward replays those rules in reverse
// creation order and then frees them.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagsum::ad {

using Shape = std::vector<std::size_t>;

std::size_t num_elements(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  // A leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Ordered list of backward rules for one thread.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(BackwardFn fn) { records_.push_back(std::move(fn)); }
  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

  // Seeds d(loss)/d(loss) = 1, visits records newest-first, then clears.
  void backward(const Tensor& loss);

  static Tape& current();

 private:
  std::vector<BackwardFn> records_;
};

void backward(const Tensor& loss);

// Disables recording on the current thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- primitives -----------------------------------------------------------

// Rank-1 operands act as row (left) or column (right) vectors.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double factor);
// s must hold exactly one element.
Tensor scale(const Tensor& a, const Tensor& s);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor clamp_min(const Tensor& a, double floor);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softmax(const Tensor& a, std::size_t axis = 0);
Tensor sum(const Tensor& a);

Tensor concat(std::span<const Tensor> parts, std::size_t axis = 0);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis = 0);
Tensor stack(std::span<const Tensor> rows);
// Leading-axis range [begin, end).
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);
Tensor row(const Tensor& matrix, std::size_t index);
Tensor reshape(const Tensor& a, Shape shape);

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
Tensor embedding_lookup(const Tensor& table, int id);
Tensor broadcast_rows(const Tensor& v, std::size_t rows);
Tensor broadcast_cols(const Tensor& v, std::size_t cols);
// out[indices[i]] += v[i]; out has `size` entries.
Tensor scatter_add(const Tensor& v, std::span<const int> indices, std::size_t size);

// Max over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
// with central differences of width epsilon.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                  double epsilon = 1e-5);

}  // namespace tagsum::ad
