#include "tagsum/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tagsum::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": shape " + to_string(a) + " " + why);
}

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

NodePtr make_node(Shape shape, std::vector<double> values, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), 0.0);
  return n;
}

void record(std::function<void()> fn) { Tape::current().record(std::move(fn)); }

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  const bool rg = any_requires_grad({&a});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node();
    NodePtr o = node;
    record([an, o, deriv] {
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        an->grad[i] += o->grad[i] * deriv(an->value[i], o->value[i]);
    });
  }
  return Tensor(node);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

// Collapses `shape` around `axis` into (outer, extent, inner).
void split_axis(const Shape& shape, std::size_t axis, std::size_t& outer, std::size_t& extent,
                std::size_t& inner) {
  outer = 1;
  inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
}

}  // namespace

std::size_t num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = num_elements(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), false));
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (num_elements(shape) != values.size())
    shape_error("constant", shape, "does not match " + std::to_string(values.size()) + " values");
  return Tensor(make_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  if (num_elements(shape) != values.size())
    shape_error("parameter", shape, "does not match " + std::to_string(values.size()) + " values");
  return Tensor(make_node(std::move(shape), std::move(values), true));
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

double Tensor::item() const {
  if (size() != 1) shape_error("item", shape(), "is not a scalar");
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2) shape_error("at", shape(), "is not a matrix");
  return node_->value[r * node_->shape[1] + c];
}

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? to_string(loss.shape()) : std::string("undefined")));
  if (!loss.requires_grad())
    throw std::invalid_argument("backward: loss is not on the tape (no input requires grad)");
  loss.node()->grad[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
  records_.clear();
}

void backward(const Tensor& loss) { Tape::current().backward(loss); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 1 || a.rank() > 2 || b.rank() < 1 || b.rank() > 2)
    shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.rank() == 2 ? a.dim(0) : 1;
  const std::size_t k = a.rank() == 2 ? a.dim(1) : a.dim(0);
  const std::size_t kb = b.dim(0);
  const std::size_t n = b.rank() == 2 ? b.dim(1) : 1;
  if (k != kb) shape_error("matmul", a.shape(), b.shape());

  Shape out_shape;
  if (a.rank() == 2) out_shape.push_back(m);
  if (b.rank() == 2) out_shape.push_back(n);
  if (out_shape.empty()) out_shape.push_back(1);

  std::vector<double> out(m * n);
  ConstMatMap am(a.values().data(), m, k);
  ConstMatMap bm(b.values().data(), k, n);
  MatMap(out.data(), m, n).noalias() = am * bm;

  const bool rg = any_requires_grad({&a, &b});
  auto node = make_node(std::move(out_shape), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), bn = b.node();
    NodePtr o = node;
    record([an, bn, o, m, k, n] {
      ConstMatMap g(o->grad.data(), m, n);
      if (an->requires_grad)
        MatMap(an->grad.data(), m, k).noalias() +=
            g * ConstMatMap(bn->value.data(), k, n).transpose();
      if (bn->requires_grad)
        MatMap(bn->grad.data(), k, n).noalias() +=
            ConstMatMap(an->value.data(), m, k).transpose() * g;
    });
  }
  return Tensor(node);
}

// ---- elementwise binary ---------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  const bool rg = any_requires_grad({&a, &b});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), bn = b.node();
    NodePtr o = node;
    record([an, bn, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (an->requires_grad) an->grad[i] += o->grad[i];
        if (bn->requires_grad) bn->grad[i] += o->grad[i];
      }
    });
  }
  return Tensor(node);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  const bool rg = any_requires_grad({&a, &b});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), bn = b.node();
    NodePtr o = node;
    record([an, bn, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (an->requires_grad) an->grad[i] += o->grad[i];
        if (bn->requires_grad) bn->grad[i] -= o->grad[i];
      }
    });
  }
  return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  const bool rg = any_requires_grad({&a, &b});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), bn = b.node();
    NodePtr o = node;
    record([an, bn, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (an->requires_grad) an->grad[i] += o->grad[i] * bn->value[i];
        if (bn->requires_grad) bn->grad[i] += o->grad[i] * an->value[i];
      }
    });
  }
  return Tensor(node);
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
  const bool rg = any_requires_grad({&a, &b});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), bn = b.node();
    NodePtr o = node;
    record([an, bn, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (an->requires_grad) an->grad[i] += o->grad[i] / bn->value[i];
        if (bn->requires_grad) bn->grad[i] -= o->grad[i] * o->value[i] / bn->value[i];
      }
    });
  }
  return Tensor(node);
}

Tensor scalar_mul(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) shape_error("scale", a.shape(), s.shape());
  const double f = s[0];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * a[i];
  const bool rg = any_requires_grad({&a, &s});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), sn = s.node();
    NodePtr o = node;
    record([an, sn, o] {
      double ds = 0.0;
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (an->requires_grad) an->grad[i] += o->grad[i] * sn->value[0];
        ds += o->grad[i] * an->value[i];
      }
      if (sn->requires_grad) sn->grad[0] += ds;
    });
  }
  return Tensor(node);
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require_same_shape("minimum", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] <= b[i] ? a[i] : b[i];
  const bool rg = any_requires_grad({&a, &b});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node(), bn = b.node();
    NodePtr o = node;
    record([an, bn, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (an->value[i] <= bn->value[i]) {
          if (an->requires_grad) an->grad[i] += o->grad[i];
        } else if (bn->requires_grad) {
          bn->grad[i] += o->grad[i];
        }
      }
    });
  }
  return Tensor(node);
}

Tensor clamp_min(const Tensor& a, double floor) {
  return unary(
      a, [floor](double x) { return x < floor ? floor : x; },
      [floor](double x, double) { return x < floor ? 0.0 : 1.0; });
}

// ---- elementwise unary ----------------------------------------------------

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  if (axis >= a.rank()) shape_error("softmax", a.shape(), "has no axis " + std::to_string(axis));
  std::size_t outer, extent, inner;
  split_axis(a.shape(), axis, outer, extent, inner);
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * extent * inner + i;
      double mx = in[base];
      for (std::size_t e = 1; e < extent; ++e) mx = std::max(mx, in[base + e * inner]);
      double z = 0.0;
      for (std::size_t e = 0; e < extent; ++e) {
        const double v = std::exp(in[base + e * inner] - mx);
        out[base + e * inner] = v;
        z += v;
      }
      for (std::size_t e = 0; e < extent; ++e) out[base + e * inner] /= z;
    }
  }
  const bool rg = any_requires_grad({&a});
  auto node = make_node(a.shape(), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node();
    NodePtr o = node;
    record([an, o, outer, extent, inner] {
      for (std::size_t oo = 0; oo < outer; ++oo) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = oo * extent * inner + i;
          double dot = 0.0;
          for (std::size_t e = 0; e < extent; ++e)
            dot += o->grad[base + e * inner] * o->value[base + e * inner];
          for (std::size_t e = 0; e < extent; ++e) {
            const std::size_t idx = base + e * inner;
            an->grad[idx] += o->value[idx] * (o->grad[idx] - dot);
          }
        }
      }
    });
  }
  return Tensor(node);
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  const bool rg = any_requires_grad({&a});
  auto node = make_node({1}, {total}, rg);
  if (rg) {
    NodePtr an = a.node();
    NodePtr o = node;
    record([an, o] {
      for (double& g : an->grad) g += o->grad[0];
    });
  }
  return Tensor(node);
}

// ---- structural -----------------------------------------------------------

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) shape_error("concat", first, "has no axis " + std::to_string(axis));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size()) shape_error("concat", first, p.shape());
    for (std::size_t d = 0; d < first.size(); ++d)
      if (d != axis && p.dim(d) != first[d]) shape_error("concat", first, p.shape());
    out_shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  std::vector<std::size_t> chunk(parts.size());
  std::size_t row_width = 0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    chunk[j] = parts[j].size() / outer;
    row_width += chunk[j];
  }
  std::vector<double> out(outer * row_width);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t off = o * row_width;
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const auto v = parts[j].values();
      std::copy_n(v.begin() + o * chunk[j], chunk[j], out.begin() + off);
      off += chunk[j];
    }
  }
  bool rg = false;
  if (g_grad_enabled)
    for (const Tensor& p : parts) rg = rg || p.requires_grad();
  auto node = make_node(std::move(out_shape), std::move(out), rg);
  if (rg) {
    std::vector<NodePtr> ins;
    for (const Tensor& p : parts) ins.push_back(p.node());
    NodePtr o = node;
    record([ins, o, chunk, outer, row_width] {
      for (std::size_t oo = 0; oo < outer; ++oo) {
        std::size_t off = oo * row_width;
        for (std::size_t j = 0; j < ins.size(); ++j) {
          if (ins[j]->requires_grad)
            for (std::size_t c = 0; c < chunk[j]; ++c)
              ins[j]->grad[oo * chunk[j] + c] += o->grad[off + c];
          off += chunk[j];
        }
      }
    });
  }
  return Tensor(node);
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor stack(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack: no inputs");
  const Shape& first = rows[0].shape();
  for (const Tensor& r : rows)
    if (r.shape() != first) shape_error("stack", first, r.shape());
  Shape out_shape{rows.size()};
  out_shape.insert(out_shape.end(), first.begin(), first.end());
  const std::size_t width = rows[0].size();
  std::vector<double> out(rows.size() * width);
  bool rg = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].values().begin(), rows[i].values().end(), out.begin() + i * width);
    rg = rg || rows[i].requires_grad();
  }
  rg = rg && g_grad_enabled;
  auto node = make_node(std::move(out_shape), std::move(out), rg);
  if (rg) {
    std::vector<NodePtr> ins;
    for (const Tensor& r : rows) ins.push_back(r.node());
    NodePtr o = node;
    record([ins, o, width] {
      for (std::size_t i = 0; i < ins.size(); ++i)
        if (ins[i]->requires_grad)
          for (std::size_t c = 0; c < width; ++c) ins[i]->grad[c] += o->grad[i * width + c];
    });
  }
  return Tensor(node);
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() < 1 || begin > end || end > a.dim(0))
    shape_error("slice", a.shape(),
                "cannot be sliced to [" + std::to_string(begin) + "," + std::to_string(end) + ")");
  const std::size_t stride = a.size() / a.dim(0);
  Shape out_shape = a.shape();
  out_shape[0] = end - begin;
  std::vector<double> out(a.values().begin() + begin * stride, a.values().begin() + end * stride);
  const bool rg = any_requires_grad({&a});
  auto node = make_node(std::move(out_shape), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node();
    NodePtr o = node;
    const std::size_t off = begin * stride;
    record([an, o, off] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) an->grad[off + i] += o->grad[i];
    });
  }
  return Tensor(node);
}

Tensor row(const Tensor& matrix, std::size_t index) {
  if (matrix.rank() != 2) shape_error("row", matrix.shape(), "is not a matrix");
  return reshape(slice(matrix, index, index + 1), {matrix.dim(1)});
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (num_elements(shape) != a.size()) shape_error("reshape", a.shape(), shape);
  std::vector<double> out(a.values().begin(), a.values().end());
  const bool rg = any_requires_grad({&a});
  auto node = make_node(std::move(shape), std::move(out), rg);
  if (rg) {
    NodePtr an = a.node();
    NodePtr o = node;
    record([an, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i];
    });
  }
  return Tensor(node);
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) shape_error("embedding_lookup", table.shape(), "is not a matrix");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  std::vector<double> out(ids.size() * width);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows)
      shape_error("embedding_lookup", table.shape(),
                  "has no row " + std::to_string(ids[i]));
    std::copy_n(table.values().begin() + ids[i] * width, width, out.begin() + i * width);
  }
  const bool rg = any_requires_grad({&table});
  auto node = make_node({ids.size(), width}, std::move(out), rg);
  if (rg) {
    NodePtr tn = table.node();
    NodePtr o = node;
    std::vector<int> idx(ids.begin(), ids.end());
    record([tn, o, idx, width] {
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t c = 0; c < width; ++c)
          tn->grad[idx[i] * width + c] += o->grad[i * width + c];
    });
  }
  return Tensor(node);
}

Tensor embedding_lookup(const Tensor& table, int id) {
  const int ids[1] = {id};
  return reshape(embedding_lookup(table, std::span<const int>(ids, 1)), {table.dim(1)});
}

Tensor broadcast_rows(const Tensor& v, std::size_t rows) {
  if (v.rank() != 1) shape_error("broadcast_rows", v.shape(), "is not a vector");
  const std::size_t n = v.size();
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(v.values().begin(), v.values().end(), out.begin() + r * n);
  const bool rg = any_requires_grad({&v});
  auto node = make_node({rows, n}, std::move(out), rg);
  if (rg) {
    NodePtr vn = v.node();
    NodePtr o = node;
    record([vn, o, rows, n] {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) vn->grad[c] += o->grad[r * n + c];
    });
  }
  return Tensor(node);
}

Tensor broadcast_cols(const Tensor& v, std::size_t cols) {
  if (v.rank() != 1) shape_error("broadcast_cols", v.shape(), "is not a vector");
  const std::size_t m = v.size();
  std::vector<double> out(m * cols);
  for (std::size_t r = 0; r < m; ++r) std::fill_n(out.begin() + r * cols, cols, v[r]);
  const bool rg = any_requires_grad({&v});
  auto node = make_node({m, cols}, std::move(out), rg);
  if (rg) {
    NodePtr vn = v.node();
    NodePtr o = node;
    record([vn, o, m, cols] {
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < cols; ++c) vn->grad[r] += o->grad[r * cols + c];
    });
  }
  return Tensor(node);
}

Tensor scatter_add(const Tensor& v, std::span<const int> indices, std::size_t size) {
  if (v.rank() != 1 || v.size() != indices.size())
    shape_error("scatter_add", v.shape(),
                "does not match " + std::to_string(indices.size()) + " indices");
  std::vector<double> out(size, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= size)
      shape_error("scatter_add", {size}, "has no slot " + std::to_string(indices[i]));
    out[indices[i]] += v[i];
  }
  const bool rg = any_requires_grad({&v});
  auto node = make_node({size}, std::move(out), rg);
  if (rg) {
    NodePtr vn = v.node();
    NodePtr o = node;
    std::vector<int> idx(indices.begin(), indices.end());
    record([vn, o, idx] {
      for (std::size_t i = 0; i < idx.size(); ++i) vn->grad[i] += o->grad[idx[i]];
    });
  }
  return Tensor(node);
}

// ---- verification ---------------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("grad_check: epsilon must be positive");
  std::vector<double> analytic(x.size(), 0.0);
  if (x.requires_grad()) {
    x.zero_grad();
    Tape::current().clear();
    Tensor loss = f(x);
    if (loss.requires_grad()) {
      backward(loss);
      std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    } else {
      Tape::current().clear();
    }
  }

  NoGradGuard guard;
  double worst = 0.0;
  auto vals = x.mutable_values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double saved = vals[i];
    vals[i] = saved + epsilon;
    const double fp = f(x).item();
    vals[i] = saved - epsilon;
    const double fm = f(x).item();
    vals[i] = saved;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace tagsum::ad
