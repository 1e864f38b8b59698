#include "vpcnet/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "vpcnet/datagen.hpp"
#include "vpcnet/metrics.hpp"
#include "vpcnet/network.hpp"
#include "vpcnet/training.hpp"

namespace fs = std::filesystem;

namespace vpcnet {

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers =
      std::min(std::max<std::size_t>(threads, 1), count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<fs::path> list_files_sorted(const fs::path& dir,
                                        const std::set<std::string>& exts) {
  if (!fs::is_directory(dir))
    throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (exts.count(ext)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

// Retained as long as the completed output: exact-solver sizes keep zeros
// exact, larger clouds are FPS-reduced for the auction solver.
double eval_emd(const PointCloud& a, const PointCloud& b) {
  constexpr std::size_t kCap = 1024;
  const std::size_t m = std::min({a.size(), b.size(), kCap});
  const PointCloud pa = a.size() > m ? farthest_point_sample(a, m) : a;
  const PointCloud pb = b.size() > m ? farthest_point_sample(b, m) : b;
  if (m <= 256) return emd_exact(pa, pb).mean_cost;
  return emd_approx(pa, pb).mean_cost;
}

struct LoadedNet {
  ParamStore params;
  NetConfig net;
};

LoadedNet load_checkpoint_net(const std::string& checkpoint_path,
                              const RunConfig& config) {
  if (!fs::exists(checkpoint_path))
    throw std::runtime_error("checkpoint not found: " + checkpoint_path);
  LoadedNet loaded{ParamStore::load(checkpoint_path), config.net_config()};
  return loaded;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d_%H%M%S", &tm);
  return buf;
}

int do_datagen(const std::string& mesh_dir, const std::string& out_dir,
               const CliOptions& options) {
  const auto mesh_files =
      list_files_sorted(mesh_dir, {".obj", ".ply"});
  if (mesh_files.empty()) {
    std::cerr << "no mesh files (.obj/.ply) in " << mesh_dir << "\n";
    return 2;
  }

  std::set<std::string> seen;
  for (const fs::path& p : mesh_files) {
    const std::string id = p.stem().string();
    if (!seen.insert(id).second)
      throw std::runtime_error("duplicate instance id '" + id + "' in " +
                               mesh_dir);
  }

  struct InstanceResult {
    std::string id;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string message;
    std::size_t complete_points = 0;
    std::vector<std::size_t> partial_points;
  };
  std::vector<InstanceResult> results(mesh_files.size());

  const fs::path out_root(out_dir);
  fs::create_directories(out_root);
  const DatagenConfig gen = options.config.datagen_config();

  parallel_for(mesh_files.size(), options.threads, [&](std::size_t i) {
    InstanceResult& res = results[i];
    res.id = mesh_files[i].stem().string();
    res.seed = instance_seed(options.config.seed, res.id);
    try {
      const TriangleMesh mesh =
          normalize_mesh_to_unit_box(read_mesh(mesh_files[i].string()));
      const GeneratedInstance instance = make_pair(mesh, gen, res.seed);
      const fs::path dir = out_root / res.id;
      fs::create_directories(dir);
      write_ply((dir / "complete.ply").string(), instance.complete);
      res.complete_points = instance.complete.size();
      for (std::size_t k = 0; k < instance.partials.size(); ++k) {
        write_ply((dir / ("partial_" + std::to_string(k) + ".ply")).string(),
                  instance.partials[k]);
        res.partial_points.push_back(instance.partials[k].size());
      }
      res.ok = true;
    } catch (const std::exception& e) {
      res.message = e.what();
    }
  });

  std::size_t generated = 0;
  std::string manifest = "id,view,points,seed\n";
  for (const InstanceResult& res : results) {
    if (!res.ok) {
      std::cerr << "warning: skipping " << res.id << ": " << res.message
                << "\n";
      continue;
    }
    ++generated;
    manifest += res.id + ",-1," + std::to_string(res.complete_points) + "," +
                std::to_string(res.seed) + "\n";
    for (std::size_t k = 0; k < res.partial_points.size(); ++k)
      manifest += res.id + "," + std::to_string(k) + "," +
                  std::to_string(res.partial_points[k]) + "," +
                  std::to_string(res.seed) + "\n";
  }
  if (generated == 0) {
    std::cerr << "all " << mesh_files.size() << " meshes failed\n";
    return 1;
  }
  write_file((out_root / "manifest.csv").string(), manifest);
  std::cout << "generated " << generated << "/" << mesh_files.size()
            << " instances, " << gen.views << " views each -> " << out_dir
            << "\n";
  return 0;
}

int do_train(const CliOptions& options, const std::string& run_name,
             const std::string& init_checkpoint) {
  const RunConfig& config = options.config;
  if (config.data_dir.empty())
    throw std::runtime_error("train needs data_dir (set it in the config)");

  std::vector<fs::path> instance_dirs;
  if (!fs::is_directory(config.data_dir))
    throw std::runtime_error(config.data_dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(config.data_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "complete.ply"))
      instance_dirs.push_back(entry.path());
  std::sort(instance_dirs.begin(), instance_dirs.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });

  std::vector<TrainItem> items;
  for (const fs::path& dir : instance_dirs) {
    const PointCloud complete = read_ply_cloud((dir / "complete.ply").string());
    std::vector<std::pair<std::size_t, fs::path>> partials;
    for (const fs::path& p : list_files_sorted(dir, {".ply"})) {
      const std::string stem = p.stem().string();
      if (stem.rfind("partial_", 0) != 0) continue;
      partials.emplace_back(std::stoul(stem.substr(8)), p);
    }
    std::sort(partials.begin(), partials.end());
    for (const auto& [k, path] : partials)
      items.push_back({read_ply_cloud(path.string()), complete});
  }
  if (items.empty()) {
    std::cerr << "no training pairs under " << config.data_dir << "\n";
    return 2;
  }

  const fs::path out_base =
      config.out_dir.empty() ? fs::path("runs") : fs::path(config.out_dir);
  std::string name = run_name.empty() ? "run_" + timestamp_utc() : run_name;
  fs::path run_dir = out_base / name;
  if (run_name.empty()) {
    for (int suffix = 2; fs::exists(run_dir); ++suffix)
      run_dir = out_base / (name + "_" + std::to_string(suffix));
  } else if (fs::exists(run_dir)) {
    throw std::runtime_error("run directory already exists: " +
                             run_dir.string());
  }
  fs::create_directories(run_dir);
  write_file((run_dir / "config.txt").string(), config.echo());

  ParamStore params;
  if (!init_checkpoint.empty()) {
    if (!fs::exists(init_checkpoint))
      throw std::runtime_error("checkpoint not found: " + init_checkpoint);
    params = ParamStore::load(init_checkpoint);
  }

  TrainConfig train_config = config.train_config();
  train_config.out_dir = run_dir;
  const TrainResult result = train(params, items, train_config);

  const std::string hash = sha1_file_hex(result.final_checkpoint.string());
  write_file((run_dir / "checkpoint_hash.txt").string(),
             hash + "  " + result.final_checkpoint.filename().string() + "\n");

  const double final_cd =
      result.curve.empty() ? 0.0 : result.curve.back().refined_cd;
  std::cout << "trained " << config.steps << " steps on " << items.size()
            << " pairs -> " << run_dir.string() << " (refined CD "
            << format_short(final_cd) << ")\n";
  return 0;
}

int do_complete(const std::string& checkpoint_path,
                const std::string& input_path, const std::string& output_path,
                const CliOptions& options) {
  LoadedNet loaded = load_checkpoint_net(checkpoint_path, options.config);
  VpcNet net(loaded.net, loaded.params);

  const PointCloud input = read_point_cloud(input_path);
  if (input.empty()) {
    std::cerr << "empty input cloud: " << input_path << "\n";
    return 2;
  }
  NoGradGuard guard;
  const CompletionOutput output = net.complete(input);
  const PointCloud refined = cloud_from_tensor(output.refined);
  write_ply(output_path, refined);
  std::cout << "completed " << input.size() << " -> " << refined.size()
            << " points -> " << output_path << "\n";
  return 0;
}

int do_eval(const std::string& pred_dir, const std::string& gt_dir,
            const std::string& out_csv, const CliOptions& options) {
  const auto pred_files = list_files_sorted(pred_dir, {".ply", ".xyz"});
  if (pred_files.empty()) {
    std::cerr << "no point cloud files in " << pred_dir << "\n";
    return 2;
  }
  const auto gt_files = list_files_sorted(gt_dir, {".ply", ".xyz"});
  std::set<std::string> pred_names, gt_names;
  for (const fs::path& p : pred_files) pred_names.insert(p.filename().string());
  for (const fs::path& p : gt_files) gt_names.insert(p.filename().string());
  if (pred_names != gt_names) {
    for (const std::string& name : pred_names)
      if (!gt_names.count(name))
        throw std::runtime_error("mismatched file pairs: " + name +
                                 " has no ground truth in " + gt_dir);
    for (const std::string& name : gt_names)
      if (!pred_names.count(name))
        throw std::runtime_error("mismatched file pairs: " + name +
                                 " has no prediction in " + pred_dir);
  }

  std::vector<MetricReport> reports(pred_files.size());
  parallel_for(pred_files.size(), options.threads, [&](std::size_t i) {
    const PointCloud pred = read_point_cloud(pred_files[i].string());
    const PointCloud gt = read_point_cloud(
        (fs::path(gt_dir) / pred_files[i].filename()).string());
    MetricReport& report = reports[i];
    report.instance_id = pred_files[i].stem().string();
    report.cd = chamfer(pred, gt);
    report.emd = eval_emd(pred, gt);
    report.overlap = overlap_ratio(pred, gt, default_overlap_voxel(gt));
  });

  std::string csv = std::string(MetricReport::csv_header()) + "\n";
  MetricReport mean;
  mean.instance_id = "mean";
  for (const MetricReport& report : reports) {
    csv += report.csv_row() + "\n";
    mean.cd += report.cd;
    mean.emd += report.emd;
    mean.overlap += report.overlap;
  }
  const double count = static_cast<double>(reports.size());
  mean.cd /= count;
  mean.emd /= count;
  mean.overlap /= count;
  csv += mean.csv_row() + "\n";
  write_file(out_csv, csv);

  std::cout << "evaluated " << reports.size() << " pairs: mean CD "
            << format_short(mean.cd) << ", mean EMD "
            << format_short(mean.emd) << " -> " << out_csv << "\n";
  return 0;
}

int do_robustness(const std::string& checkpoint_path,
                  const std::string& mesh_path,
                  const std::vector<double>& ratios_in,
                  const std::string& out_csv, const CliOptions& options) {
  std::vector<double> ratios = ratios_in;
  if (ratios.empty()) ratios = {0.25, 0.4, 0.6, 0.8};
  for (double ratio : ratios)
    if (!(ratio > 0.0) || ratio > 1.0)
      throw std::runtime_error("visible ratio must lie in (0, 1], got " +
                               format_short(ratio));

  LoadedNet loaded = load_checkpoint_net(checkpoint_path, options.config);
  VpcNet net(loaded.net, loaded.params);

  const TriangleMesh mesh =
      normalize_mesh_to_unit_box(read_mesh(mesh_path));
  const std::string id = fs::path(mesh_path).stem().string();
  const std::uint64_t seed = instance_seed(options.config.seed, id);
  const PointCloud complete =
      dataset_complete_cloud(mesh, options.config.n_gt, seed);

  std::string csv = "visible_ratio,points,cd,emd\n";
  std::string shown;
  NoGradGuard guard;
  for (double ratio : ratios) {
    // Fresh rng per ratio on the shared stream: same direction, nested crops.
    DeterministicRng crop_rng(mix_seed(seed, kCropStream));
    const PointCloud partial = crop_to_visible_ratio(complete, ratio, crop_rng);
    const CompletionOutput output = net.complete(partial);
    const PointCloud refined = cloud_from_tensor(output.refined);
    const double cd = chamfer(refined, complete);
    const double emd = eval_emd(refined, complete);
    csv += format_double(ratio) + "," + std::to_string(partial.size()) + "," +
           format_double(cd) + "," + format_double(emd) + "\n";
    if (!shown.empty()) shown += ", ";
    shown += format_short(ratio) + ": CD " + format_short(cd);
  }
  write_file(out_csv, csv);
  std::cout << "robustness over " << ratios.size() << " ratios (" << shown
            << ") -> " << out_csv << "\n";
  return 0;
}

std::map<std::string, RigidTransform> read_transforms_csv(
    const fs::path& path) {
  if (!fs::exists(path))
    throw std::runtime_error("transforms file not found: " + path.string());
  const std::string data = read_file(path.string());
  std::map<std::string, RigidTransform> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    std::string line = data.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "id,qw,qx,qy,qz,tx,ty,tz")
        throw std::runtime_error(path.string() +
                                 ": expected header id,qw,qx,qy,qz,tx,ty,tz");
      continue;
    }
    std::vector<std::string> fields;
    std::size_t field_start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(field_start, i - field_start));
        field_start = i + 1;
      }
    }
    if (fields.size() != 8)
      throw std::runtime_error(path.string() + " line " +
                               std::to_string(line_no) +
                               ": expected 8 comma-separated fields");
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < 7; ++i) {
      try {
        std::size_t consumed = 0;
        v[i] = std::stod(fields[i + 1], &consumed);
        if (consumed != fields[i + 1].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + " line " +
                                 std::to_string(line_no) +
                                 ": malformed number '" + fields[i + 1] + "'");
      }
    }
    RigidTransform t;
    t.rotation = rotation_from_quaternion(v[0], v[1], v[2], v[3]);
    t.translation = {v[4], v[5], v[6]};
    if (!out.emplace(fields[0], t).second)
      throw std::runtime_error(path.string() + " line " +
                               std::to_string(line_no) + ": duplicate id '" +
                               fields[0] + "'");
  }
  return out;
}

int do_register(const std::string& partial_dir,
                const std::string& complete_dir, const std::string& out_csv,
                RotationMetric metric, const CliOptions& options) {
  const auto transforms =
      read_transforms_csv(fs::path(partial_dir) / "transforms.csv");
  if (transforms.empty()) {
    std::cerr << "no registration pairs listed in " << partial_dir
              << "/transforms.csv\n";
    return 2;
  }

  std::vector<std::string> ids;
  for (const auto& [id, t] : transforms) ids.push_back(id);

  for (const std::string& id : ids)
    for (const fs::path& dir : {fs::path(partial_dir), fs::path(complete_dir)})
      for (const char* role : {"_source.ply", "_target.ply"}) {
        const fs::path p = dir / (id + role);
        if (!fs::exists(p))
          throw std::runtime_error("mismatched file pairs: missing " +
                                   p.string());
      }

  struct PairRow {
    double rot_partial = 0.0, trans_partial = 0.0;
    double rot_complete = 0.0, trans_complete = 0.0;
    bool low_confidence = false;
  };
  std::vector<PairRow> rows(ids.size());

  parallel_for(ids.size(), options.threads, [&](std::size_t i) {
    const std::string& id = ids[i];
    const RigidTransform& gt = transforms.at(id);
    PairRow& row = rows[i];
    for (const bool completed : {false, true}) {
      const fs::path dir(completed ? complete_dir : partial_dir);
      const PointCloud source =
          read_point_cloud((dir / (id + "_source.ply")).string());
      const PointCloud target =
          read_point_cloud((dir / (id + "_target.ply")).string());
      const IcpResult res = icp(source, target);
      const double rot_err =
          metric == RotationMetric::kDoubled
              ? rotation_error_deg(gt.rotation, res.transform.rotation)
              : rotation_geodesic_deg(gt.rotation, res.transform.rotation);
      const double trans_err =
          translation_error(gt.translation, res.transform.translation);
      if (completed) {
        row.rot_complete = rot_err;
        row.trans_complete = trans_err;
      } else {
        row.rot_partial = rot_err;
        row.trans_partial = trans_err;
      }
      row.low_confidence = row.low_confidence || res.low_confidence;
    }
  });

  std::string csv =
      "example,rot_err_partial,trans_err_partial,rot_err_complete,"
      "trans_err_complete\n";
  PairRow mean;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const PairRow& row = rows[i];
    if (row.low_confidence)
      std::cerr << "warning: low-confidence registration for " << ids[i]
                << " (fewer than 30 source points)\n";
    csv += ids[i] + "," + format_double(row.rot_partial) + "," +
           format_double(row.trans_partial) + "," +
           format_double(row.rot_complete) + "," +
           format_double(row.trans_complete) + "\n";
    mean.rot_partial += row.rot_partial;
    mean.trans_partial += row.trans_partial;
    mean.rot_complete += row.rot_complete;
    mean.trans_complete += row.trans_complete;
  }
  const double count = static_cast<double>(ids.size());
  csv += "mean," + format_double(mean.rot_partial / count) + "," +
         format_double(mean.trans_partial / count) + "," +
         format_double(mean.rot_complete / count) + "," +
         format_double(mean.trans_complete / count) + "\n";
  write_file(out_csv, csv);

  std::cout << "registered " << ids.size() << " pairs: partial rot/trans "
            << format_short(mean.rot_partial / count) << "/"
            << format_short(mean.trans_partial / count)
            << ", complete rot/trans "
            << format_short(mean.rot_complete / count) << "/"
            << format_short(mean.trans_complete / count) << " -> " << out_csv
            << "\n";
  return 0;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_datagen(const std::string& mesh_dir, const std::string& out_dir,
                const CliOptions& options) {
  return guarded([&] { return do_datagen(mesh_dir, out_dir, options); });
}

int cmd_train(const CliOptions& options, const std::string& run_name,
              const std::string& init_checkpoint) {
  return guarded([&] { return do_train(options, run_name, init_checkpoint); });
}

int cmd_complete(const std::string& checkpoint_path,
                 const std::string& input_path, const std::string& output_path,
                 const CliOptions& options) {
  return guarded([&] {
    return do_complete(checkpoint_path, input_path, output_path, options);
  });
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_csv, const CliOptions& options) {
  return guarded([&] { return do_eval(pred_dir, gt_dir, out_csv, options); });
}

int cmd_robustness(const std::string& checkpoint_path,
                   const std::string& mesh_path,
                   const std::vector<double>& ratios,
                   const std::string& out_csv, const CliOptions& options) {
  return guarded([&] {
    return do_robustness(checkpoint_path, mesh_path, ratios, out_csv, options);
  });
}

int cmd_register(const std::string& partial_dir,
                 const std::string& complete_dir, const std::string& out_csv,
                 RotationMetric metric, const CliOptions& options) {
  return guarded([&] {
    return do_register(partial_dir, complete_dir, out_csv, metric, options);
  });
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"vehicle point cloud completion pipeline"};
  app.name("vpcnet");
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string config_path;
  std::size_t threads = 1;
  auto* seed_opt =
      app.add_option("--seed", seed, "override the configured rng seed");
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--threads", threads,
                 "worker threads for datagen, eval and register");

  auto* sc_datagen = app.add_subcommand(
      "datagen", "render a partial/complete dataset from a mesh directory");
  std::string mesh_dir, data_out;
  std::size_t views = 0, points = 0;
  sc_datagen->add_option("mesh-dir", mesh_dir, "directory of .obj/.ply meshes")
      ->required();
  sc_datagen->add_option("out-dir", data_out, "dataset output directory")
      ->required();
  auto* views_opt =
      sc_datagen->add_option("--views", views, "depth views per instance");
  auto* points_opt = sc_datagen->add_option(
      "--points", points, "points in each complete cloud");

  auto* sc_train =
      app.add_subcommand("train", "optimize a model on a generated dataset");
  std::string run_name, init_checkpoint, train_data, train_out;
  sc_train->add_option("--run-name", run_name,
                       "run directory name (default: timestamped)");
  sc_train->add_option("--init", init_checkpoint,
                       "checkpoint to load before training");
  auto* data_opt =
      sc_train->add_option("--data", train_data, "dataset directory");
  auto* out_opt =
      sc_train->add_option("--out", train_out, "base directory for runs");

  auto* sc_complete =
      app.add_subcommand("complete", "complete one partial cloud");
  std::string checkpoint, input_path, output_path;
  bool no_refiner_fps = false;
  sc_complete->add_option("checkpoint", checkpoint, "trained checkpoint")
      ->required();
  sc_complete->add_option("input", input_path, "partial cloud (.ply/.xyz)")
      ->required();
  sc_complete->add_option("output", output_path, "completed cloud (.ply)")
      ->required();
  sc_complete->add_flag("--no-refiner-fps", no_refiner_fps,
                        "skip farthest point sampling in the refiner");

  auto* sc_eval = app.add_subcommand(
      "eval", "chamfer/earth-mover metrics over paired directories");
  std::string pred_dir, gt_dir, eval_out = "metrics.csv";
  sc_eval->add_option("pred-dir", pred_dir, "predicted clouds")->required();
  sc_eval->add_option("gt-dir", gt_dir, "ground truth clouds")->required();
  sc_eval->add_option("--out", eval_out, "metrics CSV path");

  auto* sc_robust = app.add_subcommand(
      "robustness", "completion quality versus visible ratio");
  std::string robust_checkpoint, mesh_path, robust_out = "robustness.csv";
  std::vector<double> ratios;
  sc_robust->add_option("checkpoint", robust_checkpoint, "trained checkpoint")
      ->required();
  sc_robust->add_option("mesh", mesh_path, "source mesh (.obj/.ply)")
      ->required();
  sc_robust->add_option("--ratios", ratios, "visible ratios in (0, 1]")
      ->delimiter(',');
  sc_robust->add_option("--out", robust_out, "robustness CSV path");

  auto* sc_register = app.add_subcommand(
      "register", "icp registration table for partial versus completed pairs");
  std::string partial_dir, complete_dir, register_out = "registration.csv";
  std::string rot_metric = "doubled";
  sc_register->add_option("partial-dir", partial_dir,
                          "partial pairs + transforms.csv")
      ->required();
  sc_register->add_option("complete-dir", complete_dir, "completed pairs")
      ->required();
  sc_register->add_option("--out", register_out, "registration CSV path");
  sc_register
      ->add_option("--rot-metric", rot_metric,
                   "rotation error metric: doubled or geodesic")
      ->check(CLI::IsMember({"doubled", "geodesic"}));

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("vpcnet");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  return guarded([&]() -> int {
    CliOptions options;
    if (!config_path.empty()) options.config = RunConfig::load(config_path);
    if (seed_opt->count() > 0) options.config.seed = seed;
    options.threads = threads;

    if (sc_datagen->parsed()) {
      if (views_opt->count() > 0) options.config.views = views;
      if (points_opt->count() > 0) options.config.n_gt = points;
      return do_datagen(mesh_dir, data_out, options);
    }
    if (sc_train->parsed()) {
      if (data_opt->count() > 0) options.config.data_dir = train_data;
      if (out_opt->count() > 0) options.config.out_dir = train_out;
      return do_train(options, run_name, init_checkpoint);
    }
    if (sc_complete->parsed()) {
      if (no_refiner_fps) options.config.refiner_fps = false;
      return do_complete(checkpoint, input_path, output_path, options);
    }
    if (sc_eval->parsed()) return do_eval(pred_dir, gt_dir, eval_out, options);
    if (sc_robust->parsed())
      return do_robustness(robust_checkpoint, mesh_path, ratios, robust_out,
                           options);
    if (sc_register->parsed())
      return do_register(partial_dir, complete_dir, register_out,
                         rot_metric == "geodesic" ? RotationMetric::kGeodesic
                                                  : RotationMetric::kDoubled,
                         options);
    return 1;
  });
}

}  // namespace vpcnet
