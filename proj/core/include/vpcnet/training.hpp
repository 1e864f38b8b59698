#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vpcnet/metrics.hpp"
#include "vpcnet/network.hpp"
#include "vpcnet/param_store.hpp"

namespace vpcnet {

struct ScheduleConfig {
  double lr0 = 1e-4;
  double lr_decay = 0.7;
  std::size_t decay_steps = 50000;
  double lr_floor = 1e-6;
  double weight_start = 0.01;
  double weight_end = 1.0;
  std::size_t ramp_steps = 50000;
};

// Staircase decay clipped from below: lr0 * decay^floor(step/decay_steps).
double lr_schedule(const ScheduleConfig& config, std::size_t step);
// Linear ramp for the dense/refined loss weights; gamma and beta share it.
double weight_schedule(const ScheduleConfig& config, std::size_t step);

struct LossTerms {
  double coarse_emd = 0.0;
  double dense_cd = 0.0;
  double refined_cd = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
};

struct TotalLoss {
  Tensor loss;
  LossTerms terms;
};

// coarse_emd + gamma * dense_cd + beta * refined_cd, with the coarse target
// already subsampled to the coarse size. The matching uses the exact solver
// up to emd_exact_limit points and the auction solver beyond.
TotalLoss total_loss(const CompletionOutput& output, const Tensor& gt,
                     const PointCloud& gt_coarse, double gamma, double beta,
                     std::size_t emd_exact_limit = 256);

struct TrainItem {
  PointCloud partial;
  PointCloud complete;
};

struct TrainConfig {
  NetConfig net;
  ScheduleConfig schedule;
  AdamOptions adam;  // lr is driven by the schedule
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
  double grad_clip = 0.0;            // global-norm clip; 0 disables
  std::size_t emd_exact_limit = 256;
  std::filesystem::path out_dir;     // empty: keep everything in memory
};

struct StepLogRow {
  std::size_t step = 0;
  double lr = 0.0;
  double gamma = 0.0;
  double coarse_emd = 0.0;
  double dense_cd = 0.0;
  double refined_cd = 0.0;

  static const char* csv_header();
  std::string csv_row() const;
};

struct TrainResult {
  std::vector<StepLogRow> curve;
  std::filesystem::path final_checkpoint;  // empty without out_dir
};

// Runs optimization steps start..steps-1 where start is the optimizer step
// already recorded in the store, so loading a mid-run checkpoint and calling
// train with the same total step count reproduces the uninterrupted run
// bit-exactly. The per-step training item is a pure function of (seed, step).
// A non-finite loss aborts with a diagnostic curve dump when out_dir is set.
TrainResult train(ParamStore& params, const std::vector<TrainItem>& data,
                  const TrainConfig& config);

// Means of consecutive `window`-sized chunks never increase beyond the
// previous mean scaled by (1 + rel_slack). Trailing partial chunks count.
bool windowed_means_non_increasing(std::span<const double> values,
                                   std::size_t window, double rel_slack);

}  // namespace vpcnet
