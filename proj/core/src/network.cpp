#include "vpcnet/network.hpp"

#include <cmath>
#include <stdexcept>

#include "vpcnet/metrics.hpp"

namespace vpcnet {

namespace {

struct LayerSpec {
  std::string name;
  std::size_t in = 0, out = 0;
  bool shared = false;  // per-point layer, BN eligible
};

// Creation order is fixed so one seeded rng stream initializes every config
// reproducibly.
std::vector<LayerSpec> layer_specs(const NetConfig& cfg) {
  const std::size_t latent = cfg.latent_size();
  std::vector<LayerSpec> specs;
  if (cfg.enable_stn) {
    specs.push_back({"tnet.mlp1", 3, 64, true});
    specs.push_back({"tnet.mlp2", 64, 128, true});
    specs.push_back({"tnet.mlp3", 128, 1024, true});
    specs.push_back({"tnet.fc1", 1024, 512, false});
    specs.push_back({"tnet.fc2", 512, 256, false});
    specs.push_back({"tnet.out", 256, 9, false});
  }
  specs.push_back({"enc.mlp1", 3, 64, true});
  specs.push_back({"enc.mlp2", 64, 128, true});
  specs.push_back({"enc.mlp3", 128, 256, true});
  specs.push_back({"enc.mlp4", 320, 512, true});
  specs.push_back({"enc.mlp5", 512, 1024, true});
  specs.push_back({"dec.fc1", latent, 1024, false});
  specs.push_back({"dec.fc2", 1024, 1024, false});
  specs.push_back({"dec.fc3", 1024, 3 * cfg.coarse_size, false});
  specs.push_back({"fold.mlp1", 3 + latent + 2, 512, true});
  specs.push_back({"fold.mlp2", 512, 512, true});
  specs.push_back({"fold.mlp3", 512, 3, true});
  if (cfg.enable_refiner) {
    specs.push_back({"ref.enc1", 3, 64, true});
    specs.push_back({"ref.enc2", 64, 128, true});
    specs.push_back({"ref.enc3", 128, 1024, true});
    specs.push_back({"ref.dec1", 1088, 512, true});
    specs.push_back({"ref.dec2", 512, 256, true});
    specs.push_back({"ref.dec3", 256, 128, true});
    specs.push_back({"ref.out", 128, 3, true});
  }
  return specs;
}

bool norm_eligible(const NetConfig& cfg, const LayerSpec& spec) {
  // Shared per-point layers normalize over the point dimension. The folding
  // output stays raw so zero weights give an exact residual identity; the
  // refiner output keeps BN ahead of its tanh, which preserves the identity
  // too (zero input normalizes to beta = 0).
  if (!cfg.use_batchnorm || !spec.shared) return false;
  return spec.name != "fold.mlp3";
}

}  // namespace

std::size_t NetConfig::grid_side() const {
  const auto u = static_cast<std::size_t>(
      std::llround(std::sqrt(static_cast<double>(upsample_ratio))));
  if (u * u != upsample_ratio)
    throw std::invalid_argument("upsample ratio must be a perfect square");
  return u;
}

std::vector<double> folding_grid(std::size_t upsample_ratio, double extent) {
  NetConfig probe;
  probe.upsample_ratio = upsample_ratio;
  const std::size_t u = probe.grid_side();
  std::vector<double> axis(u, 0.0);
  for (std::size_t i = 0; i < u; ++i) {
    axis[i] = u == 1 ? 0.0
                     : -extent + 2.0 * extent * static_cast<double>(i) /
                                     static_cast<double>(u - 1);
  }
  std::vector<double> grid;
  grid.reserve(upsample_ratio * 2);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < u; ++j) {
      grid.push_back(axis[i]);
      grid.push_back(axis[j]);
    }
  return grid;
}

VpcNet::VpcNet(const NetConfig& config, ParamStore& params,
               std::uint64_t init_seed)
    : config_(config), params_(&params) {
  config_.grid_side();  // validates r
  if (config_.coarse_size == 0)
    throw std::invalid_argument("coarse size must be positive");
  if (!(config_.grid_extent > 0.0))
    throw std::invalid_argument("grid extent must be positive");
  if (params.size() == 0) {
    create_params(init_seed);
  } else {
    validate_params();
  }
}

void VpcNet::create_params(std::uint64_t init_seed) {
  DeterministicRng rng(mix_seed(init_seed, 0x6e6574));
  for (const LayerSpec& spec : layer_specs(config_)) {
    if (spec.name == "tnet.out") {
      params_->create_zeros(spec.name + ".w", {spec.in, spec.out});
      params_->create_from(spec.name + ".b", {spec.out},
                           {1, 0, 0, 0, 1, 0, 0, 0, 1});
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in));
    params_->create_uniform(spec.name + ".w", {spec.in, spec.out}, -bound,
                            bound, rng);
    params_->create_uniform(spec.name + ".b", {spec.out}, -bound, bound, rng);
    if (norm_eligible(config_, spec)) {
      params_->create_from(spec.name + ".bn.gamma", {spec.out},
                           std::vector<double>(spec.out, 1.0));
      params_->create_zeros(spec.name + ".bn.beta", {spec.out});
    }
  }
}

void VpcNet::validate_params() const {
  for (const LayerSpec& spec : layer_specs(config_)) {
    for (const auto& [suffix, shape] :
         std::vector<std::pair<std::string, std::vector<std::size_t>>>{
             {".w", {spec.in, spec.out}}, {".b", {spec.out}}}) {
      const std::string path = spec.name + suffix;
      if (!params_->contains(path))
        throw std::invalid_argument("checkpoint is missing parameter " + path +
                                    " required by this configuration");
      if (params_->at(path).shape() != shape)
        throw std::invalid_argument("parameter " + path +
                                    " has a shape inconsistent with this "
                                    "configuration");
    }
    if (norm_eligible(config_, spec)) {
      for (const std::string suffix : {".bn.gamma", ".bn.beta"}) {
        if (!params_->contains(spec.name + suffix))
          throw std::invalid_argument("checkpoint is missing parameter " +
                                      spec.name + suffix);
      }
    }
  }
  // Reject trainable leftovers from a different configuration.
  std::vector<std::string> expected;
  for (const LayerSpec& spec : layer_specs(config_)) {
    expected.push_back(spec.name + ".w");
    expected.push_back(spec.name + ".b");
    if (norm_eligible(config_, spec)) {
      expected.push_back(spec.name + ".bn.gamma");
      expected.push_back(spec.name + ".bn.beta");
    }
  }
  for (const auto& [path, tensor] : params_->entries()) {
    if (!tensor.requires_grad()) continue;
    bool known = false;
    for (const std::string& e : expected) known = known || e == path;
    if (!known)
      throw std::invalid_argument("checkpoint parameter " + path +
                                  " is not part of this configuration");
  }
}

VpcNet::Layer VpcNet::bind_layer(const std::string& name, std::size_t in,
                                 std::size_t out, bool norm) {
  Layer layer;
  layer.name = name;
  layer.w = params_->at(name + ".w");
  layer.b = params_->at(name + ".b");
  layer.norm = norm;
  if (norm) {
    layer.gamma = params_->at(name + ".bn.gamma");
    layer.beta = params_->at(name + ".bn.beta");
  }
  if (layer.w.shape() != std::vector<std::size_t>{in, out})
    throw std::logic_error("layer " + name + " bound with wrong shape");
  return layer;
}

Tensor VpcNet::apply_layer(const Layer& layer, const Tensor& x,
                           Activation act) {
  Tensor out = shared_mlp_layer(x, layer.w, layer.b, act, layer.norm,
                                layer.gamma, layer.beta);
  if (layer.norm && grad_enabled()) {
    // Running statistics are bookkeeping only; forward always uses batch
    // statistics. Updated on training passes, momentum 0.9.
    NoGradGuard no_grad;
    Tensor pre = add_rowvec(matmul(x, layer.w), layer.b);
    const std::size_t n = pre.rows(), c = pre.cols();
    Tensor& rm = params_->state("stats." + layer.name + ".running_mean", {c});
    Tensor& rv = params_->state("stats." + layer.name + ".running_var", {c});
    auto rmd = rm.mutable_data();
    auto rvd = rv.mutable_data();
    auto data = pre.data();
    for (std::size_t j = 0; j < c; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += data[i * c + j];
      m /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = data[i * c + j] - m;
        var += d * d;
      }
      var /= static_cast<double>(n);
      rmd[j] = 0.9 * rmd[j] + 0.1 * m;
      rvd[j] = 0.9 * rvd[j] + 0.1 * var;
    }
  }
  return out;
}

Tensor VpcNet::input_transform(const Tensor& points) {
  if (!config_.enable_stn)
    return Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const bool bn = config_.use_batchnorm;
  Tensor h = apply_layer(bind_layer("tnet.mlp1", 3, 64, bn), points,
                         Activation::kRelu);
  h = apply_layer(bind_layer("tnet.mlp2", 64, 128, bn), h, Activation::kRelu);
  h = apply_layer(bind_layer("tnet.mlp3", 128, 1024, bn), h, Activation::kRelu);
  Tensor pooled = reshape(max_pool_points(h), {1, 1024});
  Tensor fc = apply_layer(bind_layer("tnet.fc1", 1024, 512, false), pooled,
                          Activation::kRelu);
  fc = apply_layer(bind_layer("tnet.fc2", 512, 256, false), fc,
                   Activation::kRelu);
  Tensor out = apply_layer(bind_layer("tnet.out", 256, 9, false), fc,
                           Activation::kNone);
  return reshape(out, {3, 3});
}

EncoderOutput VpcNet::encode(const Tensor& points) {
  if (!points.defined() || points.rank() != 2 || points.cols() != 3 ||
      points.rows() == 0)
    throw std::invalid_argument("encode: expected a nonempty n x 3 tensor");
  const bool bn = config_.use_batchnorm;

  EncoderOutput out;
  out.transform = input_transform(points);
  Tensor aligned =
      config_.enable_stn ? matmul(points, out.transform) : points;

  out.point_features = apply_layer(bind_layer("enc.mlp1", 3, 64, bn), aligned,
                                   Activation::kRelu);
  Tensor h = apply_layer(bind_layer("enc.mlp2", 64, 128, bn),
                         out.point_features, Activation::kRelu);
  h = apply_layer(bind_layer("enc.mlp3", 128, 256, bn), h, Activation::kRelu);
  out.f1 = max_pool_points(h);

  Tensor fp = concat_cols(
      {out.point_features, tile_rows(out.f1, points.rows())});
  Tensor h2 = apply_layer(bind_layer("enc.mlp4", 320, 512, bn), fp,
                          Activation::kRelu);
  h2 = apply_layer(bind_layer("enc.mlp5", 512, 1024, bn), h2,
                   Activation::kRelu);
  out.f2 = max_pool_points(h2);

  out.f3 = config_.enable_pfe ? concat_cols({out.f2, out.f1}) : out.f2;
  return out;
}

Tensor VpcNet::decode_coarse(const Tensor& f3) {
  const std::size_t latent = config_.latent_size();
  Tensor v = reshape(f3, {1, latent});
  Tensor h = apply_layer(bind_layer("dec.fc1", latent, 1024, false), v,
                         Activation::kRelu);
  h = apply_layer(bind_layer("dec.fc2", 1024, 1024, false), h,
                  Activation::kRelu);
  h = apply_layer(bind_layer("dec.fc3", 1024, 3 * config_.coarse_size, false),
                  h, Activation::kNone);
  return reshape(h, {config_.coarse_size, 3});
}

Tensor VpcNet::decode_dense(const Tensor& coarse, const Tensor& f3) {
  const std::size_t r = config_.upsample_ratio;
  const std::size_t n_dense = config_.dense_size();
  const std::size_t latent = config_.latent_size();
  const bool bn = config_.use_batchnorm;

  Tensor tiled = repeat_interleave_rows(coarse, r);
  std::vector<double> grid_rows = folding_grid(r, config_.grid_extent);
  std::vector<double> grid_full;
  grid_full.reserve(n_dense * 2);
  for (std::size_t i = 0; i < config_.coarse_size; ++i)
    grid_full.insert(grid_full.end(), grid_rows.begin(), grid_rows.end());
  Tensor grid = Tensor::from_data({n_dense, 2}, std::move(grid_full));

  Tensor cat = concat_cols({tiled, tile_rows(f3, n_dense), grid});
  Tensor h = apply_layer(bind_layer("fold.mlp1", 3 + latent + 2, 512, bn), cat,
                         Activation::kRelu);
  h = apply_layer(bind_layer("fold.mlp2", 512, 512, bn), h, Activation::kRelu);
  h = apply_layer(bind_layer("fold.mlp3", 512, 3, false), h, Activation::kNone);
  return add(tiled, h);
}

Tensor VpcNet::refine(const Tensor& dense, const Tensor& input_points) {
  if (!config_.enable_refiner)
    throw std::logic_error("refine: refiner is disabled in this configuration");
  const std::size_t n_dense = config_.dense_size();
  const bool bn = config_.use_batchnorm;

  Tensor sampled = dense;
  if (config_.refiner_fps) {
    Tensor merged = concat_rows(input_points, dense);
    std::vector<Vec3> merged_points(merged.rows());
    auto data = merged.data();
    for (std::size_t i = 0; i < merged_points.size(); ++i)
      merged_points[i] = {data[3 * i], data[3 * i + 1], data[3 * i + 2]};
    sampled = gather_rows(
        merged, farthest_point_sample_indices(merged_points, n_dense));
  }

  Tensor h1 = apply_layer(bind_layer("ref.enc1", 3, 64, bn), sampled,
                          Activation::kRelu);
  Tensor h = apply_layer(bind_layer("ref.enc2", 64, 128, bn), h1,
                         Activation::kRelu);
  h = apply_layer(bind_layer("ref.enc3", 128, 1024, bn), h, Activation::kRelu);

  Tensor cat = concat_cols({h1, h});
  h = apply_layer(bind_layer("ref.dec1", 1088, 512, bn), cat,
                  Activation::kRelu);
  h = apply_layer(bind_layer("ref.dec2", 512, 256, bn), h, Activation::kRelu);
  h = apply_layer(bind_layer("ref.dec3", 256, 128, bn), h, Activation::kRelu);
  Tensor offsets = apply_layer(bind_layer("ref.out", 128, 3, bn), h,
                               Activation::kTanh);
  return add(sampled, offsets);
}

CompletionOutput VpcNet::forward(const Tensor& points) {
  EncoderOutput enc = encode(points);
  CompletionOutput out;
  out.coarse = decode_coarse(enc.f3);
  out.dense = decode_dense(out.coarse, enc.f3);
  out.refined =
      config_.enable_refiner ? refine(out.dense, points) : out.dense;
  return out;
}

CompletionOutput VpcNet::complete(const PointCloud& partial) {
  return forward(tensor_from_cloud(partial));
}

}  // namespace vpcnet
