#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vpcnet/random.hpp"
#include "vpcnet/tensor.hpp"

namespace vpcnet {

// Named registry of parameter and state tensors. Iteration order is
// lexicographic by path and fixes the checkpoint record order. Paths under
// "optim." and "stats." are bookkeeping state and load as non-trainable;
// every other path loads as a trainable leaf.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  // All create_* calls throw on duplicate paths.
  Tensor& create_uniform(const std::string& path,
                         std::vector<std::size_t> shape, double low,
                         double high, DeterministicRng& rng);
  Tensor& create_zeros(const std::string& path,
                       std::vector<std::size_t> shape, bool trainable = true);
  Tensor& create_from(const std::string& path, std::vector<std::size_t> shape,
                      std::vector<double> data, bool trainable = true);

  bool contains(const std::string& path) const;
  Tensor& at(const std::string& path);
  const Tensor& at(const std::string& path) const;

  // Fetches non-trainable running state, creating it zero-filled on first use.
  Tensor& state(const std::string& path, const std::vector<std::size_t>& shape);

  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;
  void zero_grad();

  const std::map<std::string, Tensor>& entries() const { return entries_; }

  std::vector<std::uint8_t> serialize() const;
  void save(const std::filesystem::path& file) const;
  static ParamStore deserialize(const std::vector<std::uint8_t>& bytes);
  static ParamStore load(const std::filesystem::path& file);

 private:
  std::map<std::string, Tensor> entries_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected update over every trainable entry. A missing gradient
// counts as zero; a non-finite gradient is an error. First and second
// moments and the step counter live in the store under "optim." paths so a
// checkpoint captures the full optimizer state.
void adam_step(ParamStore& store, const AdamOptions& options);
std::uint64_t adam_step_count(const ParamStore& store);

}  // namespace vpcnet
