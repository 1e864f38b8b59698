#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "vpcnet/datagen.hpp"
#include "vpcnet/geometry.hpp"
#include "vpcnet/network.hpp"
#include "vpcnet/training.hpp"

namespace vpcnet {

// Malformed input file. byte_offset points at the offending byte.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, std::size_t byte_offset, const std::string& why);
  const std::string& path() const { return path_; }
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::string path_;
  std::size_t byte_offset_;
};

// PLY: binary-little-endian is canonical on output; ASCII accepted on input.
// Coordinates are float32 on disk and round-trip bit-exactly.
PointCloud read_ply_cloud(const std::string& path);
void write_ply(const std::string& path, const PointCloud& cloud);

PointCloud read_xyz_cloud(const std::string& path);
void write_xyz(const std::string& path, const PointCloud& cloud);

TriangleMesh read_obj_mesh(const std::string& path);
TriangleMesh read_ply_mesh(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);

// Dispatch by extension: .ply/.xyz for clouds, .obj/.ply for meshes.
PointCloud read_point_cloud(const std::string& path);
TriangleMesh read_mesh(const std::string& path);

// Git-style content hash: sha1 over "blob <size>\0" + bytes.
std::string sha1_blob_hex(const std::string& bytes);
std::string sha1_file_hex(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Flat `key = value` run configuration. Unknown keys are rejected and every
// value is echoed back out in a fixed order for provenance.
struct RunConfig {
  std::size_t n = 1024;
  std::size_t r = 16;
  double grid_extent = 0.05;
  bool stn = true;
  bool pfe = true;
  bool refiner = true;
  bool refiner_fps = true;
  bool batchnorm = false;
  std::size_t steps = 1000;
  double lr0 = 1e-4;
  double lr_decay = 0.7;
  // 0 scales the reference schedule (50k of 100k steps) to this run's length.
  std::size_t decay_steps = 0;
  std::size_t ramp_steps = 0;
  double grad_clip = 0.0;
  std::size_t checkpoint_every = 0;
  std::size_t n_gt = 16384;
  std::size_t views = 8;
  std::size_t image_width = 160;
  std::size_t image_height = 120;
  double focal_px = 150.0;
  std::uint64_t seed = 0;
  std::string data_dir;
  std::string out_dir;

  static RunConfig parse(const std::string& text, const std::string& origin);
  static RunConfig load(const std::string& path);
  // Canonical key = value listing; parse(echo()) is the identity.
  std::string echo() const;

  NetConfig net_config() const;
  ScheduleConfig schedule_config() const;
  DatagenConfig datagen_config() const;
  TrainConfig train_config() const;
};

}  // namespace vpcnet
