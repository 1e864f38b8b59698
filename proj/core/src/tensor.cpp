#include "vpcnet/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace vpcnet {

namespace detail {

struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;  // differentiable leaf; grad survives backward
  bool needs_grad = false;     // lies on a path from a differentiable leaf
  bool backward_ran = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;

  std::size_t size() const { return data.size(); }
};

}  // namespace detail

using detail::TensorNode;

namespace {

thread_local bool g_grad_enabled = true;

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape) {
  auto node = std::make_shared<TensorNode>();
  node->data.resize(shape_product(shape));
  node->shape = std::move(shape);
  return node;
}

void check_finite(const TensorNode& node, const char* op) {
  for (double v : node.data) {
    if (!std::isfinite(v))
      throw std::runtime_error(std::string(op) +
                               ": non-finite value in output");
  }
}

bool track(const std::shared_ptr<TensorNode>& n) {
  return n->requires_grad || n->needs_grad;
}

// Marks `out` as part of the grad graph and records its parents, but only
// when grad mode is on and some input is differentiable.
template <typename... Parents>
void record(const std::shared_ptr<TensorNode>& out,
            std::function<void(TensorNode&)> backprop, Parents... parents) {
  if (!g_grad_enabled) return;
  bool any = (track(parents) || ...);
  if (!any) return;
  out->needs_grad = true;
  (out->parents.push_back(parents), ...);
  out->backprop = std::move(backprop);
}

void record_list(const std::shared_ptr<TensorNode>& out,
                 std::function<void(TensorNode&)> backprop,
                 const std::vector<std::shared_ptr<TensorNode>>& parents) {
  if (!g_grad_enabled) return;
  bool any = false;
  for (const auto& p : parents) any = any || track(p);
  if (!any) return;
  out->needs_grad = true;
  out->parents = parents;
  out->backprop = std::move(backprop);
}

double* grad_of(TensorNode& n) {
  if (n.grad.empty()) n.grad.assign(n.size(), 0.0);
  return n.grad.data();
}

const std::shared_ptr<TensorNode>& node_of(const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument("undefined tensor");
  return t.node();
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto node = make_node(std::move(shape));
  node->requires_grad = requires_grad;
  node->needs_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape,
                         std::vector<double> data, bool requires_grad) {
  require(shape_product(shape) == data.size(),
          "from_data: shape does not match data length");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->needs_grad = requires_grad;
  check_finite(*node, "from_data");
  return Tensor(node);
}

Tensor Tensor::scalar(double value) {
  return from_data({1}, {value});
}

const std::vector<std::size_t>& Tensor::shape() const {
  return node_of(*this)->shape;
}

std::size_t Tensor::size() const { return node_of(*this)->size(); }
std::size_t Tensor::rank() const { return node_of(*this)->shape.size(); }

std::size_t Tensor::rows() const {
  const auto& n = node_of(*this);
  require(n->shape.size() == 2, "rows: tensor is not rank-2");
  return n->shape[0];
}

std::size_t Tensor::cols() const {
  const auto& n = node_of(*this);
  require(n->shape.size() == 2, "cols: tensor is not rank-2");
  return n->shape[1];
}

std::span<const double> Tensor::data() const {
  const auto& n = node_of(*this);
  return {n->data.data(), n->data.size()};
}

std::span<double> Tensor::mutable_data() {
  const auto& n = node_of(*this);
  if (n->backprop)
    throw std::logic_error("mutable_data: cannot mutate an interior graph node");
  return {n->data.data(), n->data.size()};
}

double Tensor::item() const {
  const auto& n = node_of(*this);
  require(n->size() == 1, "item: tensor is not scalar");
  return n->data[0];
}

bool Tensor::requires_grad() const { return node_of(*this)->requires_grad; }
bool Tensor::has_grad() const { return !node_of(*this)->grad.empty(); }

std::span<const double> Tensor::grad() const {
  const auto& n = node_of(*this);
  if (n->grad.empty())
    throw std::logic_error("grad: no gradient present; run backward first");
  return {n->grad.data(), n->grad.size()};
}

std::span<double> Tensor::mutable_grad() {
  const auto& n = node_of(*this);
  if (n->grad.empty())
    throw std::logic_error("mutable_grad: no gradient present");
  return {n->grad.data(), n->grad.size()};
}

void Tensor::zero_grad() {
  auto& n = node_of(*this);
  std::fill(n->grad.begin(), n->grad.end(), 0.0);
}

void Tensor::backward() const {
  const auto& root = node_of(*this);
  require(root->size() == 1, "backward: root must be scalar");
  if (!root->needs_grad)
    throw std::logic_error(
        "backward: root is not connected to any differentiable leaf");
  if (root->backward_ran)
    throw std::logic_error("backward: already invoked on this root");
  root->backward_ran = true;

  // Iterative post-order DFS; each node enters the order exactly once.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next].get();
      ++next;
      if (parent->needs_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  grad_of(*root)[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
  // Interior gradients are scratch; leaves keep theirs for the optimizer.
  for (TensorNode* node : order) {
    if (!node->requires_grad) std::vector<double>().swap(node->grad);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  const auto& a = node_of(ta);
  const auto& b = node_of(tb);
  require(a->shape.size() == 2 && b->shape.size() == 2,
          "matmul: inputs must be rank-2");
  require(a->shape[1] == b->shape[0], "matmul: inner dimensions differ");
  const auto n = static_cast<Eigen::Index>(a->shape[0]);
  const auto k = static_cast<Eigen::Index>(a->shape[1]);
  const auto m = static_cast<Eigen::Index>(b->shape[1]);

  auto out = make_node({a->shape[0], b->shape[1]});
  MatMap(out->data.data(), n, m).noalias() =
      ConstMatMap(a->data.data(), n, k) * ConstMatMap(b->data.data(), k, m);
  check_finite(*out, "matmul");

  record(
      out,
      [n, k, m](TensorNode& self) {
        auto& a = *self.parents[0];
        auto& b = *self.parents[1];
        ConstMatMap dc(self.grad.data(), n, m);
        if (track(self.parents[0])) {
          MatMap(grad_of(a), n, k).noalias() +=
              dc * ConstMatMap(b.data.data(), k, m).transpose();
        }
        if (track(self.parents[1])) {
          MatMap(grad_of(b), k, m).noalias() +=
              ConstMatMap(a.data.data(), n, k).transpose() * dc;
        }
      },
      a, b);
  return Tensor(out);
}

Tensor add(const Tensor& ta, const Tensor& tb) {
  const auto& a = node_of(ta);
  const auto& b = node_of(tb);
  require(a->shape == b->shape, "add: shapes differ");
  auto out = make_node(a->shape);
  for (std::size_t i = 0; i < out->size(); ++i)
    out->data[i] = a->data[i] + b->data[i];
  check_finite(*out, "add");

  record(
      out,
      [](TensorNode& self) {
        for (const auto& parent : self.parents) {
          if (!track(parent)) continue;
          double* g = grad_of(*parent);
          for (std::size_t i = 0; i < self.size(); ++i) g[i] += self.grad[i];
        }
      },
      a, b);
  return Tensor(out);
}

Tensor add_rowvec(const Tensor& tx, const Tensor& tbias) {
  const auto& x = node_of(tx);
  const auto& bias = node_of(tbias);
  require(x->shape.size() == 2, "add_rowvec: input must be rank-2");
  require(bias->shape.size() == 1 && bias->shape[0] == x->shape[1],
          "add_rowvec: bias length must match columns");
  const std::size_t n = x->shape[0], c = x->shape[1];
  auto out = make_node(x->shape);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out->data[i * c + j] = x->data[i * c + j] + bias->data[j];
  check_finite(*out, "add_rowvec");

  record(
      out,
      [n, c](TensorNode& self) {
        if (track(self.parents[0])) {
          double* gx = grad_of(*self.parents[0]);
          for (std::size_t i = 0; i < n * c; ++i) gx[i] += self.grad[i];
        }
        if (track(self.parents[1])) {
          double* gb = grad_of(*self.parents[1]);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) gb[j] += self.grad[i * c + j];
        }
      },
      x, bias);
  return Tensor(out);
}

Tensor scale(const Tensor& tx, double factor) {
  const auto& x = node_of(tx);
  require(std::isfinite(factor), "scale: factor must be finite");
  auto out = make_node(x->shape);
  for (std::size_t i = 0; i < out->size(); ++i)
    out->data[i] = x->data[i] * factor;
  check_finite(*out, "scale");

  record(
      out,
      [factor](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < self.size(); ++i)
          gx[i] += factor * self.grad[i];
      },
      x);
  return Tensor(out);
}

Tensor relu(const Tensor& tx) {
  const auto& x = node_of(tx);
  auto out = make_node(x->shape);
  for (std::size_t i = 0; i < out->size(); ++i)
    out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
  check_finite(*out, "relu");

  record(
      out,
      [](TensorNode& self) {
        const auto& x = *self.parents[0];
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < self.size(); ++i)
          if (x.data[i] > 0.0) gx[i] += self.grad[i];
      },
      x);
  return Tensor(out);
}

Tensor tanh_activation(const Tensor& tx) {
  const auto& x = node_of(tx);
  auto out = make_node(x->shape);
  for (std::size_t i = 0; i < out->size(); ++i)
    out->data[i] = std::tanh(x->data[i]);
  check_finite(*out, "tanh");

  record(
      out,
      [](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < self.size(); ++i) {
          double y = self.data[i];
          gx[i] += (1.0 - y * y) * self.grad[i];
        }
      },
      x);
  return Tensor(out);
}

Tensor reshape(const Tensor& tx, std::vector<std::size_t> shape) {
  const auto& x = node_of(tx);
  require(shape_product(shape) == x->size(),
          "reshape: element count must be preserved");
  auto out = std::make_shared<TensorNode>();
  out->shape = std::move(shape);
  out->data = x->data;

  record(
      out,
      [](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < self.size(); ++i) gx[i] += self.grad[i];
      },
      x);
  return Tensor(out);
}

Tensor max_pool_points(const Tensor& tx) {
  const auto& x = node_of(tx);
  require(x->shape.size() == 2, "max_pool_points: input must be rank-2");
  const std::size_t n = x->shape[0], c = x->shape[1];
  require(n >= 1, "max_pool_points: input has no rows");

  auto out = make_node({c});
  auto argmax = std::make_shared<std::vector<std::size_t>>(c, 0);
  for (std::size_t j = 0; j < c; ++j) {
    double best = x->data[j];
    std::size_t row = 0;
    for (std::size_t i = 1; i < n; ++i) {
      double v = x->data[i * c + j];
      if (v > best) {
        best = v;
        row = i;
      }
    }
    out->data[j] = best;
    (*argmax)[j] = row;
  }
  check_finite(*out, "max_pool_points");

  record(
      out,
      [argmax, c](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t j = 0; j < c; ++j)
          gx[(*argmax)[j] * c + j] += self.grad[j];
      },
      x);
  return Tensor(out);
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  require(!xs.empty(), "concat_cols: empty input list");
  if (xs.size() == 1) return xs[0];

  std::vector<std::shared_ptr<TensorNode>> parents;
  parents.reserve(xs.size());
  for (const Tensor& t : xs) parents.push_back(node_of(t));

  const std::size_t rank = parents[0]->shape.size();
  require(rank == 1 || rank == 2, "concat_cols: inputs must be rank-1 or 2");
  const std::size_t n = rank == 2 ? parents[0]->shape[0] : 1;
  std::size_t total_c = 0;
  for (const auto& p : parents) {
    require(p->shape.size() == rank, "concat_cols: mixed ranks");
    require(rank == 1 || p->shape[0] == n, "concat_cols: row counts differ");
    total_c += p->shape[rank - 1];
  }

  auto out = make_node(rank == 2 ? std::vector<std::size_t>{n, total_c}
                                 : std::vector<std::size_t>{total_c});
  std::size_t offset = 0;
  for (const auto& p : parents) {
    const std::size_t c = p->shape[rank - 1];
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(p->data.data() + i * c, c,
                  out->data.data() + i * total_c + offset);
    offset += c;
  }

  record_list(
      out,
      [n, total_c](TensorNode& self) {
        std::size_t offset = 0;
        for (const auto& parent : self.parents) {
          const std::size_t c = parent->shape.back();
          if (track(parent)) {
            double* gp = grad_of(*parent);
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < c; ++j)
                gp[i * c + j] += self.grad[i * total_c + offset + j];
          }
          offset += c;
        }
      },
      parents);
  return Tensor(out);
}

Tensor concat_rows(const Tensor& ta, const Tensor& tb) {
  const auto& a = node_of(ta);
  const auto& b = node_of(tb);
  require(a->shape.size() == 2 && b->shape.size() == 2,
          "concat_rows: inputs must be rank-2");
  require(a->shape[1] == b->shape[1], "concat_rows: column counts differ");
  const std::size_t na = a->shape[0], nb = b->shape[0], c = a->shape[1];

  auto out = make_node({na + nb, c});
  std::copy(a->data.begin(), a->data.end(), out->data.begin());
  std::copy(b->data.begin(), b->data.end(), out->data.begin() + na * c);

  record(
      out,
      [na, nb, c](TensorNode& self) {
        if (track(self.parents[0])) {
          double* ga = grad_of(*self.parents[0]);
          for (std::size_t i = 0; i < na * c; ++i) ga[i] += self.grad[i];
        }
        if (track(self.parents[1])) {
          double* gb = grad_of(*self.parents[1]);
          for (std::size_t i = 0; i < nb * c; ++i)
            gb[i] += self.grad[na * c + i];
        }
      },
      a, b);
  return Tensor(out);
}

Tensor tile_rows(const Tensor& tx, std::size_t n) {
  const auto& x = node_of(tx);
  require(x->shape.size() == 1, "tile_rows: input must be rank-1");
  require(n >= 1, "tile_rows: need at least one row");
  const std::size_t c = x->shape[0];
  auto out = make_node({n, c});
  for (std::size_t i = 0; i < n; ++i)
    std::copy(x->data.begin(), x->data.end(), out->data.begin() + i * c);

  record(
      out,
      [n, c](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < c; ++j) gx[j] += self.grad[i * c + j];
      },
      x);
  return Tensor(out);
}

Tensor repeat_interleave_rows(const Tensor& tx, std::size_t repeat) {
  const auto& x = node_of(tx);
  require(x->shape.size() == 2, "repeat_interleave_rows: input must be rank-2");
  require(repeat >= 1, "repeat_interleave_rows: repeat must be positive");
  const std::size_t n = x->shape[0], c = x->shape[1];
  auto out = make_node({n * repeat, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < repeat; ++r)
      std::copy_n(x->data.data() + i * c, c,
                  out->data.data() + (i * repeat + r) * c);

  record(
      out,
      [n, c, repeat](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t r = 0; r < repeat; ++r)
            for (std::size_t j = 0; j < c; ++j)
              gx[i * c + j] += self.grad[(i * repeat + r) * c + j];
      },
      x);
  return Tensor(out);
}

Tensor gather_rows(const Tensor& tx, std::vector<std::size_t> indices) {
  const auto& x = node_of(tx);
  require(x->shape.size() == 2, "gather_rows: input must be rank-2");
  const std::size_t n = x->shape[0], c = x->shape[1];
  for (std::size_t idx : indices)
    require(idx < n, "gather_rows: index out of range");

  auto out = make_node({indices.size(), c});
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy_n(x->data.data() + indices[i] * c, c, out->data.data() + i * c);

  auto shared_idx =
      std::make_shared<std::vector<std::size_t>>(std::move(indices));
  record(
      out,
      [shared_idx, c](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < shared_idx->size(); ++i)
          for (std::size_t j = 0; j < c; ++j)
            gx[(*shared_idx)[i] * c + j] += self.grad[i * c + j];
      },
      x);
  return Tensor(out);
}

Tensor sum_all(const Tensor& tx) {
  const auto& x = node_of(tx);
  auto out = make_node({1});
  out->data[0] = std::accumulate(x->data.begin(), x->data.end(), 0.0);
  check_finite(*out, "sum_all");

  record(
      out,
      [](TensorNode& self) {
        double* gx = grad_of(*self.parents[0]);
        const double g = self.grad[0];
        for (std::size_t i = 0; i < self.parents[0]->size(); ++i) gx[i] += g;
      },
      x);
  return Tensor(out);
}

Tensor batch_norm_rows(const Tensor& tx, const Tensor& tgamma,
                       const Tensor& tbeta, double eps) {
  const auto& x = node_of(tx);
  const auto& gamma = node_of(tgamma);
  const auto& beta = node_of(tbeta);
  require(x->shape.size() == 2, "batch_norm_rows: input must be rank-2");
  const std::size_t n = x->shape[0], c = x->shape[1];
  require(gamma->shape.size() == 1 && gamma->shape[0] == c,
          "batch_norm_rows: gamma length must match columns");
  require(beta->shape.size() == 1 && beta->shape[0] == c,
          "batch_norm_rows: beta length must match columns");
  require(n >= 1, "batch_norm_rows: input has no rows");

  auto mean = std::make_shared<std::vector<double>>(c, 0.0);
  auto inv_std = std::make_shared<std::vector<double>>(c, 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x->data[i * c + j];
    m /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = x->data[i * c + j] - m;
      var += d * d;
    }
    var /= static_cast<double>(n);
    (*mean)[j] = m;
    (*inv_std)[j] = 1.0 / std::sqrt(var + eps);
  }

  auto out = make_node({n, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double xhat = (x->data[i * c + j] - (*mean)[j]) * (*inv_std)[j];
      out->data[i * c + j] = gamma->data[j] * xhat + beta->data[j];
    }
  check_finite(*out, "batch_norm_rows");

  record(
      out,
      [n, c, mean, inv_std](TensorNode& self) {
        const auto& x = *self.parents[0];
        const auto& gamma = *self.parents[1];
        for (std::size_t j = 0; j < c; ++j) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            double dy = self.grad[i * c + j];
            double xhat = (x.data[i * c + j] - (*mean)[j]) * (*inv_std)[j];
            sum_dy += dy;
            sum_dy_xhat += dy * xhat;
          }
          if (track(self.parents[2])) grad_of(*self.parents[2])[j] += sum_dy;
          if (track(self.parents[1]))
            grad_of(*self.parents[1])[j] += sum_dy_xhat;
          if (track(self.parents[0])) {
            double* gx = grad_of(*self.parents[0]);
            const double k = gamma.data[j] * (*inv_std)[j] /
                             static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
              double dy = self.grad[i * c + j];
              double xhat = (x.data[i * c + j] - (*mean)[j]) * (*inv_std)[j];
              gx[i * c + j] +=
                  k * (static_cast<double>(n) * dy - sum_dy - xhat * sum_dy_xhat);
            }
          }
        }
      },
      x, gamma, beta);
  return Tensor(out);
}

Tensor shared_mlp_layer(const Tensor& x, const Tensor& w, const Tensor& b,
                        Activation act, bool with_norm, const Tensor& gamma,
                        const Tensor& beta) {
  require(with_norm == (gamma.defined() && beta.defined()),
          "shared_mlp_layer: gamma/beta must be provided iff norm is enabled");
  Tensor h = add_rowvec(matmul(x, w), b);
  if (with_norm) h = batch_norm_rows(h, gamma, beta);
  switch (act) {
    case Activation::kNone:
      return h;
    case Activation::kRelu:
      return relu(h);
    case Activation::kTanh:
      return tanh_activation(h);
  }
  throw std::invalid_argument("shared_mlp_layer: unknown activation");
}

namespace detail {

std::span<const double> BackwardContext::out_grad() const {
  return {node_.grad.data(), node_.grad.size()};
}

std::span<const double> BackwardContext::out_data() const {
  return {node_.data.data(), node_.data.size()};
}

std::span<const double> BackwardContext::parent_data(std::size_t i) const {
  const auto& p = node_.parents.at(i);
  return {p->data.data(), p->data.size()};
}

bool BackwardContext::parent_tracked(std::size_t i) const {
  return track(node_.parents.at(i));
}

std::span<double> BackwardContext::parent_grad(std::size_t i) const {
  auto& p = node_.parents.at(i);
  if (!track(p))
    throw std::logic_error("parent_grad: parent is not tracked");
  double* g = grad_of(*p);
  return {g, p->size()};
}

Tensor make_custom_op(const char* name, std::vector<std::size_t> shape,
                      std::vector<double> data, std::vector<Tensor> parents,
                      std::function<void(const BackwardContext&)> backward) {
  require(shape_product(shape) == data.size(),
          std::string(name) + ": shape does not match data length");
  auto out = std::make_shared<TensorNode>();
  out->shape = std::move(shape);
  out->data = std::move(data);
  check_finite(*out, name);

  std::vector<std::shared_ptr<TensorNode>> parent_nodes;
  parent_nodes.reserve(parents.size());
  for (const Tensor& t : parents) parent_nodes.push_back(node_of(t));
  record_list(
      out,
      [fn = std::move(backward)](TensorNode& self) {
        fn(BackwardContext(self));
      },
      parent_nodes);
  return Tensor(out);
}

}  // namespace detail

}  // namespace vpcnet
