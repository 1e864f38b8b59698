#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vpcnet/io.hpp"
#include "vpcnet/registration.hpp"

namespace vpcnet {

// Worker-pool map over [0, count). fn(i) must confine writes to slot i.
// threads <= 1 runs inline; the first exception is rethrown after the join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

struct CliOptions {
  RunConfig config;
  std::size_t threads = 1;
};

// Subcommand entry points, exposed for tests. Each prints a one-line summary
// on success and returns the process exit code: 0 ok, 1 error, 2 empty input.
int cmd_datagen(const std::string& mesh_dir, const std::string& out_dir,
                const CliOptions& options);
int cmd_train(const CliOptions& options, const std::string& run_name = "",
              const std::string& init_checkpoint = "");
int cmd_complete(const std::string& checkpoint_path,
                 const std::string& input_path, const std::string& output_path,
                 const CliOptions& options);
int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_csv, const CliOptions& options);
int cmd_robustness(const std::string& checkpoint_path,
                   const std::string& mesh_path,
                   const std::vector<double>& ratios,
                   const std::string& out_csv, const CliOptions& options);
int cmd_register(const std::string& partial_dir,
                 const std::string& complete_dir, const std::string& out_csv,
                 RotationMetric metric, const CliOptions& options);

// Full command-line surface; args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace vpcnet
