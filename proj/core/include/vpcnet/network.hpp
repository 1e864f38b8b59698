#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vpcnet/geometry.hpp"
#include "vpcnet/param_store.hpp"
#include "vpcnet/tensor.hpp"

namespace vpcnet {

struct NetConfig {
  bool enable_stn = true;
  bool enable_pfe = true;
  bool enable_refiner = true;
  bool refiner_fps = true;
  // Batch norm over the point dimension of shared layers; off by default
  // because desk runs train one cloud at a time. Never applied to the
  // single-row FC stacks, whose batch would be 1.
  bool use_batchnorm = false;
  std::size_t coarse_size = 1024;   // N
  std::size_t upsample_ratio = 16;  // r; must be a perfect square
  double grid_extent = 0.05;

  std::size_t dense_size() const { return coarse_size * upsample_ratio; }
  std::size_t latent_size() const { return enable_pfe ? 1280 : 1024; }
  std::size_t grid_side() const;  // u with u*u == upsample_ratio
};

struct EncoderOutput {
  Tensor transform;       // 3x3 alignment actually applied (identity if off)
  Tensor point_features;  // P1: n x 64
  Tensor f1;              // 256
  Tensor f2;              // 1024
  Tensor f3;              // 1280, or 1024 without the skip concat
};

struct CompletionOutput {
  Tensor coarse;   // N x 3
  Tensor dense;    // rN x 3
  Tensor refined;  // rN x 3; aliases dense when the refiner is disabled
};

// Point completion network: alignment T-Net, two-stage point encoder with a
// local/global skip concat, FC coarse decoder, grid-folding dense decoder,
// and a residual per-point refiner. Parameters live in an external store so
// checkpoints and optimizer state stay in one place.
class VpcNet {
 public:
  // An empty store is populated and seeded; a non-empty store is bound and
  // every expected path is shape-checked against the config.
  VpcNet(const NetConfig& config, ParamStore& params,
         std::uint64_t init_seed = 0);

  Tensor input_transform(const Tensor& points);  // n x 3 -> 3 x 3
  EncoderOutput encode(const Tensor& points);
  Tensor decode_coarse(const Tensor& f3);
  Tensor decode_dense(const Tensor& coarse, const Tensor& f3);
  // Merges input then dense (input rows first), farthest-point samples back
  // to rN when refiner_fps is set, and adds tanh-bounded offsets.
  Tensor refine(const Tensor& dense, const Tensor& input_points);
  CompletionOutput forward(const Tensor& points);
  CompletionOutput complete(const PointCloud& partial);

  const NetConfig& config() const { return config_; }
  ParamStore& params() { return *params_; }

 private:
  struct Layer {
    Tensor w, b, gamma, beta;
    std::string name;
    bool norm = false;
  };
  Layer bind_layer(const std::string& name, std::size_t in, std::size_t out,
                   bool norm);
  Tensor apply_layer(const Layer& layer, const Tensor& x, Activation act);
  void create_params(std::uint64_t init_seed);
  void validate_params() const;

  NetConfig config_;
  ParamStore* params_;
};

// Deterministic u x u folding grid flattened to r rows of (gi, gj), values
// spanning [-extent, extent] per axis.
std::vector<double> folding_grid(std::size_t upsample_ratio, double extent);

}  // namespace vpcnet
