#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vpcnet {

namespace detail {
struct TensorNode;

// Extension point for ops implemented outside tensor.cpp (loss functions
// whose forward pass runs nearest-neighbour or matching code).
class BackwardContext;
}

enum class Activation { kNone, kRelu, kTanh };

// Reverse-mode autodiff over dense float64 tensors. A Tensor is a cheap
// handle onto a graph node; ops build the graph, backward() walks it once
// in reverse topological order. Every op validates shapes up front and
// checks its output for NaN/Inf.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape,
                      bool requires_grad = false);
  static Tensor from_data(std::vector<std::size_t> shape,
                          std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rank() const;
  // rank-2 accessors
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  // Leaf tensors only; in-place mutation of interior nodes would silently
  // desync the recorded graph.
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Root must be scalar. Throws if called twice on the same root.
  void backward() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// While a guard is alive, ops run eagerly without recording the graph;
// forward values are identical, memory for intermediates is reclaimed as
// handles go out of scope.
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

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// x: n x c, bias: {c}
Tensor add_rowvec(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);
Tensor relu(const Tensor& x);
Tensor tanh_activation(const Tensor& x);
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);
// n x c -> {c}; column-wise max, ties route gradient to the lowest row.
Tensor max_pool_points(const Tensor& x);
Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor concat_rows(const Tensor& a, const Tensor& b);
// {c} -> n x c
Tensor tile_rows(const Tensor& x, std::size_t n);
// n x c -> n*repeat x c, each row repeated `repeat` times consecutively
Tensor repeat_interleave_rows(const Tensor& x, std::size_t repeat);
Tensor gather_rows(const Tensor& x, std::vector<std::size_t> indices);
Tensor sum_all(const Tensor& x);
// Per-column batch statistics over the rows (population variance).
Tensor batch_norm_rows(const Tensor& x, const Tensor& gamma,
                       const Tensor& beta, double eps = 1e-5);
// matmul + bias + optional batch norm + activation. gamma/beta must be
// defined iff with_norm is true.
Tensor shared_mlp_layer(const Tensor& x, const Tensor& w, const Tensor& b,
                        Activation act, bool with_norm = false,
                        const Tensor& gamma = Tensor(),
                        const Tensor& beta = Tensor());

namespace detail {

class BackwardContext {
 public:
  explicit BackwardContext(TensorNode& node) : node_(node) {}
  std::span<const double> out_grad() const;
  std::span<const double> out_data() const;
  std::span<const double> parent_data(std::size_t i) const;
  bool parent_tracked(std::size_t i) const;
  // Accumulation target; allocates zeros on first use. Tracked parents only.
  std::span<double> parent_grad(std::size_t i) const;

 private:
  TensorNode& node_;
};

Tensor make_custom_op(const char* name, std::vector<std::size_t> shape,
                      std::vector<double> data, std::vector<Tensor> parents,
                      std::function<void(const BackwardContext&)> backward);

}  // namespace detail

}  // namespace vpcnet
