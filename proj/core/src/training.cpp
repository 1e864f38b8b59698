#include "vpcnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace vpcnet {

double lr_schedule(const ScheduleConfig& config, std::size_t step) {
  if (config.decay_steps == 0) return std::max(config.lr0, config.lr_floor);
  const double k =
      static_cast<double>(step / config.decay_steps);
  return std::max(config.lr0 * std::pow(config.lr_decay, k), config.lr_floor);
}

double weight_schedule(const ScheduleConfig& config, std::size_t step) {
  if (config.ramp_steps == 0) return config.weight_end;
  const double t = std::min(
      1.0, static_cast<double>(step) / static_cast<double>(config.ramp_steps));
  return config.weight_start + (config.weight_end - config.weight_start) * t;
}

TotalLoss total_loss(const CompletionOutput& output, const Tensor& gt,
                     const PointCloud& gt_coarse, double gamma, double beta,
                     std::size_t emd_exact_limit) {
  if (!output.coarse.defined() || !output.dense.defined() ||
      !output.refined.defined())
    throw std::invalid_argument("total_loss: incomplete network output");
  if (output.coarse.rows() != gt_coarse.size())
    throw std::invalid_argument(
        "total_loss: coarse target size must match the coarse output");

  const EmdSolver solver = gt_coarse.size() <= emd_exact_limit
                               ? EmdSolver::kExact
                               : EmdSolver::kAuction;
  Tensor emd = emd_loss(output.coarse, gt_coarse, solver);
  Tensor dense_cd = chamfer_loss(output.dense, gt);
  Tensor refined_cd = chamfer_loss(output.refined, gt);

  TotalLoss result;
  result.terms.coarse_emd = emd.item();
  result.terms.dense_cd = dense_cd.item();
  result.terms.refined_cd = refined_cd.item();
  result.terms.gamma = gamma;
  result.terms.beta = beta;
  result.loss =
      add(add(emd, scale(dense_cd, gamma)), scale(refined_cd, beta));
  return result;
}

const char* StepLogRow::csv_header() {
  return "step,lr,gamma,coarse_emd,dense_cd,refined_cd";
}

std::string StepLogRow::csv_row() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g", step,
                lr, gamma, coarse_emd, dense_cd, refined_cd);
  return buf;
}

namespace {

std::size_t item_for_step(std::uint64_t seed, std::size_t step,
                          std::size_t count) {
  return static_cast<std::size_t>(
      mix_seed(mix_seed(seed, 0x747261696eULL), step) % count);
}

void write_curve_csv(const std::filesystem::path& file,
                     const std::vector<StepLogRow>& curve) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << StepLogRow::csv_header() << "\n";
  for (const StepLogRow& row : curve) os << row.csv_row() << "\n";
}

void clip_gradients(ParamStore& params, double clip) {
  double norm_sq = 0.0;
  std::vector<std::string> with_grad;
  for (const auto& [path, tensor] : params.entries()) {
    if (!tensor.requires_grad() || !tensor.has_grad()) continue;
    with_grad.push_back(path);
    for (double g : tensor.grad()) norm_sq += g * g;
  }
  const double norm = std::sqrt(norm_sq);
  if (norm <= clip) return;
  const double factor = clip / norm;
  for (const std::string& path : with_grad)
    for (double& g : params.at(path).mutable_grad()) g *= factor;
}

}  // namespace

TrainResult train(ParamStore& params, const std::vector<TrainItem>& data,
                  const TrainConfig& config) {
  if (data.empty()) throw std::invalid_argument("train: no training items");
  for (const TrainItem& item : data) {
    if (item.partial.empty() || item.complete.empty())
      throw std::invalid_argument("train: empty cloud in training item");
    if (item.complete.size() < config.net.coarse_size)
      throw std::invalid_argument(
          "train: complete cloud smaller than the coarse size");
  }

  VpcNet net(config.net, params, config.seed);
  const std::size_t start = static_cast<std::size_t>(adam_step_count(params));
  if (start > config.steps)
    throw std::invalid_argument(
        "train: checkpoint is already past the requested step count");

  // Per-item constants reused across steps.
  std::vector<Tensor> partial_in, gt;
  std::vector<PointCloud> gt_coarse;
  partial_in.reserve(data.size());
  gt.reserve(data.size());
  gt_coarse.reserve(data.size());
  for (const TrainItem& item : data) {
    partial_in.push_back(tensor_from_cloud(item.partial));
    gt.push_back(tensor_from_cloud(item.complete));
    gt_coarse.push_back(
        farthest_point_sample(item.complete, config.net.coarse_size));
  }

  if (!config.out_dir.empty())
    std::filesystem::create_directories(config.out_dir);

  TrainResult result;
  result.curve.reserve(config.steps - start);
  for (std::size_t step = start; step < config.steps; ++step) {
    const std::size_t idx = item_for_step(config.seed, step, data.size());
    const double lr = lr_schedule(config.schedule, step);
    const double weight = weight_schedule(config.schedule, step);

    try {
      CompletionOutput out = net.forward(partial_in[idx]);
      TotalLoss loss = total_loss(out, gt[idx], gt_coarse[idx], weight, weight,
                                  config.emd_exact_limit);
      params.zero_grad();
      loss.loss.backward();
      if (config.grad_clip > 0.0) clip_gradients(params, config.grad_clip);

      AdamOptions adam = config.adam;
      adam.lr = lr;
      adam_step(params, adam);

      StepLogRow row;
      row.step = step;
      row.lr = lr;
      row.gamma = weight;
      row.coarse_emd = loss.terms.coarse_emd;
      row.dense_cd = loss.terms.dense_cd;
      row.refined_cd = loss.terms.refined_cd;
      result.curve.push_back(row);
    } catch (const std::exception& e) {
      if (!config.out_dir.empty())
        write_curve_csv(config.out_dir / "diagnostic_dump.csv", result.curve);
      throw std::runtime_error("training aborted at step " +
                               std::to_string(step) + ": " + e.what());
    }

    if (config.checkpoint_every > 0 && !config.out_dir.empty() &&
        (step + 1) % config.checkpoint_every == 0 && step + 1 < config.steps) {
      params.save(config.out_dir /
                  ("checkpoint_" + std::to_string(step + 1) + ".ckpt"));
    }
  }

  if (!config.out_dir.empty()) {
    result.final_checkpoint = config.out_dir / "checkpoint_final.ckpt";
    params.save(result.final_checkpoint);
    write_curve_csv(config.out_dir / "curves.csv", result.curve);
  }
  return result;
}

bool windowed_means_non_increasing(std::span<const double> values,
                                   std::size_t window, double rel_slack) {
  if (window == 0) throw std::invalid_argument("window must be positive");
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t begin = 0; begin < values.size(); begin += window) {
    const std::size_t end = std::min(values.size(), begin + window);
    double mean = 0.0;
    for (std::size_t i = begin; i < end; ++i) mean += values[i];
    mean /= static_cast<double>(end - begin);
    if (mean > previous * (1.0 + rel_slack)) return false;
    previous = mean;
  }
  return true;
}

}  // namespace vpcnet
