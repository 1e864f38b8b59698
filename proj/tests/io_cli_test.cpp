#include "vpcnet/cli.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vpcnet/io.hpp"
#include "vpcnet/random.hpp"
#include "vpcnet/registration.hpp"

namespace vpcnet {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PointCloud float_quantized_cloud(std::size_t n, std::uint64_t seed) {
  DeterministicRng rng(seed);
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i)
    cloud.points.push_back(
        {static_cast<float>(rng.uniform(-2.0, 2.0)),
         static_cast<float>(rng.uniform(-2.0, 2.0)),
         static_cast<float>(rng.uniform(-2.0, 2.0))});
  return cloud;
}

TEST(Ply, BinaryRoundTripIsBitExact) {
  const fs::path dir = fresh_dir("vpcnet_ply_roundtrip");
  const std::string path = (dir / "cloud.ply").string();
  PointCloud cloud = float_quantized_cloud(257, 100);
  write_ply(path, cloud);
  PointCloud back = read_ply_cloud(path);
  ASSERT_EQ(back.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(back.points[i].x, cloud.points[i].x);
    EXPECT_EQ(back.points[i].y, cloud.points[i].y);
    EXPECT_EQ(back.points[i].z, cloud.points[i].z);
  }
  // identical content writes identical bytes
  const std::string again = (dir / "cloud2.ply").string();
  write_ply(again, cloud);
  EXPECT_EQ(read_file(path), read_file(again));
  fs::remove_all(dir);
}

TEST(Ply, AsciiWithCommentsAndExtraProperties) {
  const fs::path dir = fresh_dir("vpcnet_ply_ascii");
  const std::string path = (dir / "ascii.ply").string();
  write_file(path,
             "ply\n"
             "format ascii 1.0\n"
             "comment made by hand\n"
             "element vertex 2\n"
             "property float x\n"
             "property float y\n"
             "property float z\n"
             "property float confidence\n"
             "end_header\n"
             "1 2 3 0.9\n"
             "-4 5.5 6 0.1\n");
  PointCloud cloud = read_ply_cloud(path);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_DOUBLE_EQ(cloud.points[0].x, 1.0);
  EXPECT_DOUBLE_EQ(cloud.points[0].z, 3.0);
  EXPECT_DOUBLE_EQ(cloud.points[1].x, -4.0);
  EXPECT_DOUBLE_EQ(cloud.points[1].y, 5.5);
  fs::remove_all(dir);
}

TEST(Ply, MalformedFilesReportByteOffsets) {
  const fs::path dir = fresh_dir("vpcnet_ply_malformed");

  const std::string bad_magic = (dir / "bad_magic.ply").string();
  write_file(bad_magic, "plx\nformat ascii 1.0\nend_header\n");
  try {
    read_ply_cloud(bad_magic);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.path(), bad_magic);
    EXPECT_EQ(e.byte_offset(), 0u);
  }

  const std::string big_endian = (dir / "big_endian.ply").string();
  write_file(big_endian,
             "ply\nformat binary_big_endian 1.0\n"
             "element vertex 0\n"
             "property float x\nproperty float y\nproperty float z\n"
             "end_header\n");
  try {
    read_ply_cloud(big_endian);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 4u);  // the format line starts after "ply\n"
    EXPECT_NE(std::string(e.what()).find("binary_big_endian"),
              std::string::npos);
  }

  // binary payload shorter than the declared vertex count
  const std::string truncated = (dir / "truncated.ply").string();
  {
    PointCloud cloud = float_quantized_cloud(10, 101);
    write_ply(truncated, cloud);
    std::string bytes = read_file(truncated);
    bytes.resize(bytes.size() - 5);
    write_file(truncated, bytes);
    try {
      read_ply_cloud(truncated);
      FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.byte_offset(), bytes.size());
    }
  }

  const std::string bad_vertex = (dir / "bad_vertex.ply").string();
  write_file(bad_vertex,
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float x\nproperty float y\nproperty float z\n"
             "end_header\n1 2 oops\n");
  EXPECT_THROW(read_ply_cloud(bad_vertex), ParseError);

  fs::remove_all(dir);
}

TEST(Ply, MeshFacesWithFanTriangulation) {
  const fs::path dir = fresh_dir("vpcnet_ply_mesh");
  const std::string path = (dir / "quad.ply").string();
  write_file(path,
             "ply\n"
             "format ascii 1.0\n"
             "element vertex 4\n"
             "property float x\nproperty float y\nproperty float z\n"
             "element face 1\n"
             "property list uchar int vertex_indices\n"
             "end_header\n"
             "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
             "4 0 1 2 3\n");
  TriangleMesh mesh = read_ply_mesh(path);
  EXPECT_EQ(mesh.vertices().size(), 4u);
  ASSERT_EQ(mesh.triangles().size(), 2u);
  EXPECT_EQ(mesh.triangles()[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
  EXPECT_EQ(mesh.triangles()[1], (std::array<std::uint32_t, 3>{0, 2, 3}));

  // the same file read as a cloud ignores the face element
  EXPECT_EQ(read_ply_cloud(path).size(), 4u);

  const std::string no_faces = (dir / "cloudonly.ply").string();
  write_ply(no_faces, float_quantized_cloud(5, 102));
  EXPECT_THROW(read_ply_mesh(no_faces), std::runtime_error);

  const std::string bad_index = (dir / "bad_index.ply").string();
  write_file(bad_index,
             "ply\nformat ascii 1.0\nelement vertex 3\n"
             "property float x\nproperty float y\nproperty float z\n"
             "element face 1\nproperty list uchar int vertex_indices\n"
             "end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n");
  EXPECT_THROW(read_ply_mesh(bad_index), ParseError);
  fs::remove_all(dir);
}

TEST(Xyz, RoundTripPreservesDoubles) {
  const fs::path dir = fresh_dir("vpcnet_xyz");
  const std::string path = (dir / "cloud.xyz").string();
  DeterministicRng rng(103);
  PointCloud cloud = testutil::random_cloud(41, rng, -5.0, 5.0);
  write_xyz(path, cloud);
  PointCloud back = read_xyz_cloud(path);
  ASSERT_EQ(back.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    EXPECT_EQ(back.points[i].x, cloud.points[i].x);

  const std::string commented = (dir / "commented.xyz").string();
  write_file(commented, "# heading\n1 2 3\n\n4 5 6\n");
  EXPECT_EQ(read_xyz_cloud(commented).size(), 2u);

  const std::string short_line = (dir / "short.xyz").string();
  write_file(short_line, "1 2 3\n4 5\n");
  try {
    read_xyz_cloud(short_line);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 6u);  // second line
  }
  fs::remove_all(dir);
}

TEST(Obj, ReadsAllFaceFormsAndNegativeIndices) {
  const fs::path dir = fresh_dir("vpcnet_obj");
  const std::string path = (dir / "mesh.obj").string();
  write_file(path,
             "# comment\n"
             "v 0 0 0\n"
             "v 1 0 0\n"
             "v 1 1 0\n"
             "v 0 1 0\n"
             "f 1 2 3\n"
             "f 1/10 2/20 4/40\n"
             "f 1//5 3//6 4//7\n"
             "f 2/1/1 3/2/2 4/3/3\n"
             "f -3 -2 -1\n");
  TriangleMesh mesh = read_obj_mesh(path);
  EXPECT_EQ(mesh.vertices().size(), 4u);
  EXPECT_EQ(mesh.triangles().size(), 5u);
  // negative indices count back from the last vertex
  EXPECT_EQ(mesh.triangles()[4], (std::array<std::uint32_t, 3>{1, 2, 3}));

  // quad faces fan out
  const std::string quad = (dir / "quad.obj").string();
  write_file(quad, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_EQ(read_obj_mesh(quad).triangles().size(), 2u);

  const std::string no_faces = (dir / "points.obj").string();
  write_file(no_faces, "v 0 0 0\nv 1 0 0\n");
  EXPECT_THROW(read_obj_mesh(no_faces), std::runtime_error);

  const std::string bad_index = (dir / "bad.obj").string();
  write_file(bad_index, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
  EXPECT_THROW(read_obj_mesh(bad_index), ParseError);

  // write_obj output parses back to the same geometry
  const std::string rewritten = (dir / "rewritten.obj").string();
  write_obj(rewritten, mesh);
  TriangleMesh back = read_obj_mesh(rewritten);
  ASSERT_EQ(back.vertices().size(), mesh.vertices().size());
  for (std::size_t i = 0; i < mesh.vertices().size(); ++i)
    EXPECT_EQ(back.vertices()[i].x, mesh.vertices()[i].x);
  EXPECT_EQ(back.triangles(), mesh.triangles());
  fs::remove_all(dir);
}

TEST(Dispatch, ByExtension) {
  const fs::path dir = fresh_dir("vpcnet_dispatch");
  PointCloud cloud = float_quantized_cloud(6, 104);
  write_ply((dir / "a.ply").string(), cloud);
  write_xyz((dir / "a.xyz").string(), cloud);
  EXPECT_EQ(read_point_cloud((dir / "a.ply").string()).size(), 6u);
  EXPECT_EQ(read_point_cloud((dir / "a.xyz").string()).size(), 6u);
  write_file((dir / "a.txt").string(), "1 2 3\n");
  EXPECT_THROW(read_point_cloud((dir / "a.txt").string()),
               std::runtime_error);
  EXPECT_THROW(read_mesh((dir / "a.xyz").string()), std::runtime_error);

  write_file((dir / "m.obj").string(), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  EXPECT_EQ(read_mesh((dir / "m.obj").string()).triangles().size(), 1u);
  fs::remove_all(dir);
}

TEST(Sha1, MatchesKnownBlobDigests) {
  EXPECT_EQ(sha1_blob_hex(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(sha1_blob_hex("hello\n"),
            "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(sha1_blob_hex("what is up, doc?"),
            "bd9dbf5aae1a3862dd1526723246b20206e5fc37");

  const fs::path dir = fresh_dir("vpcnet_sha1");
  const std::string path = (dir / "blob.bin").string();
  write_file(path, "hello\n");
  EXPECT_EQ(sha1_file_hex(path), sha1_blob_hex("hello\n"));
  fs::remove_all(dir);
}

TEST(RunConfigFile, EchoParseIdentityAndDefaults) {
  RunConfig config;
  config.n = 32;
  config.r = 9;
  config.stn = false;
  config.lr0 = 2.5e-4;
  config.seed = 77;
  config.data_dir = "some/dir";
  const std::string echoed = config.echo();
  RunConfig back = RunConfig::parse(echoed, "<echo>");
  EXPECT_EQ(back.echo(), echoed);
  EXPECT_EQ(back.n, 32u);
  EXPECT_EQ(back.r, 9u);
  EXPECT_FALSE(back.stn);
  EXPECT_DOUBLE_EQ(back.lr0, 2.5e-4);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.data_dir, "some/dir");

  // every key appears exactly once in the echo
  for (const char* key : {"n = ", "r = ", "stn = ", "refiner_fps = ",
                          "n_gt = ", "image_width = ", "out_dir = "})
    EXPECT_NE(echoed.find(key), std::string::npos) << key;
}

TEST(RunConfigFile, ParsingRules) {
  RunConfig parsed = RunConfig::parse(
      "# full-line comment\n"
      "n = 64\n"
      "stn = off  # trailing comment\n"
      "pfe = yes\n"
      "refiner = 0\n"
      "\n"
      "lr0 = 1e-3\n",
      "<test>");
  EXPECT_EQ(parsed.n, 64u);
  EXPECT_FALSE(parsed.stn);
  EXPECT_TRUE(parsed.pfe);
  EXPECT_FALSE(parsed.refiner);
  EXPECT_DOUBLE_EQ(parsed.lr0, 1e-3);

  try {
    RunConfig::parse("n = 16\nbogus_key = 3\n", "<test>");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
    EXPECT_EQ(e.byte_offset(), 7u);
  }
  EXPECT_THROW(RunConfig::parse("n = minus\n", "<t>"), ParseError);
  EXPECT_THROW(RunConfig::parse("stn = maybe\n", "<t>"), ParseError);
  EXPECT_THROW(RunConfig::parse("just a line\n", "<t>"), ParseError);
}

TEST(RunConfigFile, DerivedConfigsAndAutoSchedule) {
  RunConfig config;
  config.n = 64;
  config.r = 4;
  config.steps = 2000;
  config.batchnorm = true;
  config.n_gt = 512;
  config.views = 3;
  config.image_width = 48;
  config.image_height = 36;
  config.focal_px = 45.0;

  const NetConfig net = config.net_config();
  EXPECT_EQ(net.coarse_size, 64u);
  EXPECT_EQ(net.upsample_ratio, 4u);
  EXPECT_TRUE(net.use_batchnorm);

  // zero horizons scale the reference schedule to half the run
  const ScheduleConfig schedule = config.schedule_config();
  EXPECT_EQ(schedule.decay_steps, 1000u);
  EXPECT_EQ(schedule.ramp_steps, 1000u);
  config.decay_steps = 300;
  config.ramp_steps = 200;
  EXPECT_EQ(config.schedule_config().decay_steps, 300u);
  EXPECT_EQ(config.schedule_config().ramp_steps, 200u);

  const DatagenConfig gen = config.datagen_config();
  EXPECT_EQ(gen.complete_points, 512u);
  EXPECT_EQ(gen.views, 3u);
  EXPECT_EQ(gen.intrinsics.width, 48u);
  EXPECT_DOUBLE_EQ(gen.intrinsics.focal_px, 45.0);

  const TrainConfig train = config.train_config();
  EXPECT_EQ(train.steps, 2000u);
  EXPECT_EQ(train.net.coarse_size, 64u);
}

TEST(ParallelFor, CoversEverySlotAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);

  parallel_for(0, 4, [&](std::size_t) { FAIL(); });

  EXPECT_THROW(parallel_for(10, 3,
                            [&](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

// Shared end-to-end fixture: two box meshes, a generated dataset and a tiny
// trained run. Built once; later tests reuse the artifacts.
struct Workspace {
  fs::path root, mesh_dir, data_dir, runs_dir;
  fs::path checkpoint;
  CliOptions options;
};

const Workspace& workspace() {
  static Workspace* ws = [] {
    auto* w = new Workspace;
    w->root = fresh_dir("vpcnet_cli_workspace");
    w->mesh_dir = w->root / "meshes";
    w->data_dir = w->root / "data";
    w->runs_dir = w->root / "runs";
    fs::create_directories(w->mesh_dir);

    write_obj((w->mesh_dir / "box_a.obj").string(),
              testutil::make_box_mesh({-0.5, -0.3, -0.2}, {0.5, 0.3, 0.2}));
    write_obj((w->mesh_dir / "box_b.obj").string(),
              testutil::make_box_mesh({-0.4, -0.4, -0.15}, {0.4, 0.4, 0.15}));

    RunConfig& config = w->options.config;
    config.n = 16;
    config.r = 4;
    config.steps = 3;
    config.lr0 = 1e-3;
    config.n_gt = 128;
    config.views = 2;
    config.image_width = 48;
    config.image_height = 36;
    config.focal_px = 45.0;
    config.seed = 5;
    config.data_dir = w->data_dir.string();
    config.out_dir = w->runs_dir.string();

    if (cmd_datagen(w->mesh_dir.string(), w->data_dir.string(), w->options) !=
        0)
      throw std::runtime_error("workspace datagen failed");
    if (cmd_train(w->options, "test_run") != 0)
      throw std::runtime_error("workspace train failed");
    w->checkpoint = w->runs_dir / "test_run" / "checkpoint_final.ckpt";
    return w;
  }();
  return *ws;
}

TEST(CliDatagen, LayoutDeterminismAndSeedSensitivity) {
  const Workspace& ws = workspace();
  EXPECT_TRUE(fs::exists(ws.data_dir / "manifest.csv"));
  for (const char* id : {"box_a", "box_b"}) {
    EXPECT_TRUE(fs::exists(ws.data_dir / id / "complete.ply"));
    EXPECT_TRUE(fs::exists(ws.data_dir / id / "partial_0.ply"));
    EXPECT_TRUE(fs::exists(ws.data_dir / id / "partial_1.ply"));
    EXPECT_FALSE(fs::exists(ws.data_dir / id / "partial_2.ply"));
    EXPECT_EQ(read_ply_cloud((ws.data_dir / id / "complete.ply").string())
                  .size(),
              128u);
  }
  const std::string manifest =
      read_file((ws.data_dir / "manifest.csv").string());
  EXPECT_EQ(manifest.find("id,view,points,seed\n"), 0u);
  EXPECT_NE(manifest.find("box_a,-1,128,"), std::string::npos);
  EXPECT_NE(manifest.find("box_b,1,"), std::string::npos);

  // a rerun reproduces every artifact byte for byte
  const fs::path second = ws.root / "data_again";
  ASSERT_EQ(cmd_datagen(ws.mesh_dir.string(), second.string(), ws.options), 0);
  for (const char* rel :
       {"manifest.csv", "box_a/complete.ply", "box_a/partial_0.ply",
        "box_b/partial_1.ply"}) {
    EXPECT_EQ(read_file((ws.data_dir / rel).string()),
              read_file((second / rel).string()))
        << rel;
  }

  // a different seed moves the data
  CliOptions reseeded = ws.options;
  reseeded.config.seed = 6;
  const fs::path third = ws.root / "data_reseeded";
  ASSERT_EQ(cmd_datagen(ws.mesh_dir.string(), third.string(), reseeded), 0);
  EXPECT_NE(read_file((ws.data_dir / "box_a/complete.ply").string()),
            read_file((third / "box_a/complete.ply").string()));
}

TEST(CliDatagen, EmptyMeshDirReturnsTwo) {
  const fs::path dir = fresh_dir("vpcnet_cli_empty_meshes");
  const fs::path out = dir / "out";
  EXPECT_EQ(cmd_datagen(dir.string(), out.string(), CliOptions{}), 2);
  EXPECT_EQ(cmd_datagen((dir / "missing").string(), out.string(),
                        CliOptions{}),
            1);
  fs::remove_all(dir);
}

TEST(CliTrain, RunDirectoryArtifacts) {
  const Workspace& ws = workspace();
  const fs::path run_dir = ws.runs_dir / "test_run";
  ASSERT_TRUE(fs::exists(run_dir));

  EXPECT_EQ(read_file((run_dir / "config.txt").string()),
            ws.options.config.echo());

  const std::string curves = read_file((run_dir / "curves.csv").string());
  EXPECT_EQ(curves.find("step,lr,gamma,coarse_emd,dense_cd,refined_cd\n"),
            0u);
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 4);  // header + 3

  ASSERT_TRUE(fs::exists(ws.checkpoint));
  const std::string hash_line =
      read_file((run_dir / "checkpoint_hash.txt").string());
  EXPECT_EQ(hash_line, sha1_file_hex(ws.checkpoint.string()) +
                           "  checkpoint_final.ckpt\n");

  // the checkpoint loads into a consistent net
  ParamStore store = ParamStore::load(ws.checkpoint.string());
  EXPECT_NO_THROW(VpcNet(ws.options.config.net_config(), store));

  // reusing the run name is refused
  EXPECT_EQ(cmd_train(ws.options, "test_run"), 1);
}

TEST(CliTrain, MissingDataDirFails) {
  CliOptions options;
  options.config.data_dir.clear();
  EXPECT_EQ(cmd_train(options, "never_created"), 1);
  options.config.data_dir = "/nonexistent/path";
  EXPECT_EQ(cmd_train(options, "never_created"), 1);
}

TEST(CliComplete, ProducesUpsampledCloud) {
  const Workspace& ws = workspace();
  const fs::path out = ws.root / "completed.ply";
  ASSERT_EQ(cmd_complete(ws.checkpoint.string(),
                         (ws.data_dir / "box_a" / "partial_0.ply").string(),
                         out.string(), ws.options),
            0);
  PointCloud completed = read_ply_cloud(out.string());
  EXPECT_EQ(completed.size(), 64u);  // n * r
  for (const Vec3& p : completed.points) {
    EXPECT_TRUE(std::isfinite(p.x));
    EXPECT_TRUE(std::isfinite(p.z));
  }

  // an empty input is reported as empty, not as an error
  const fs::path empty = ws.root / "empty.xyz";
  write_file(empty.string(), "");
  EXPECT_EQ(cmd_complete(ws.checkpoint.string(), empty.string(),
                         (ws.root / "unused.ply").string(), ws.options),
            2);

  EXPECT_EQ(cmd_complete((ws.root / "missing.ckpt").string(),
                         (ws.data_dir / "box_a" / "partial_0.ply").string(),
                         (ws.root / "unused.ply").string(), ws.options),
            1);
}

TEST(CliEval, PerfectPredictionsScoreZero) {
  const Workspace& ws = workspace();
  const fs::path pred = fresh_dir("vpcnet_eval_pred");
  const fs::path gt = fresh_dir("vpcnet_eval_gt");
  for (const char* id : {"box_a", "box_b"}) {
    const std::string bytes =
        read_file((ws.data_dir / id / "complete.ply").string());
    write_file((pred / (std::string(id) + ".ply")).string(), bytes);
    write_file((gt / (std::string(id) + ".ply")).string(), bytes);
  }

  const fs::path csv_path = pred / "metrics.csv";
  ASSERT_EQ(cmd_eval(pred.string(), gt.string(), csv_path.string(),
                     ws.options),
            0);
  const std::string csv = read_file(csv_path.string());
  EXPECT_EQ(csv.find("instance_id,cd,emd,overlap_ratio,rot_err_deg,trans_err\n"),
            0u);
  EXPECT_NE(csv.find("box_a,0,0,1,nan,nan\n"), std::string::npos);
  EXPECT_NE(csv.find("box_b,0,0,1,nan,nan\n"), std::string::npos);
  EXPECT_NE(csv.find("mean,0,0,1,nan,nan\n"), std::string::npos);

  // rerun is byte-identical
  const fs::path csv_again = pred / "metrics_again.csv";
  ASSERT_EQ(cmd_eval(pred.string(), gt.string(), csv_again.string(),
                     ws.options),
            0);
  EXPECT_EQ(read_file(csv_path.string()), read_file(csv_again.string()));

  // name mismatch is an error, an empty prediction dir is exit 2
  fs::remove(gt / "box_b.ply");
  EXPECT_EQ(cmd_eval(pred.string(), gt.string(),
                     (pred / "bad.csv").string(), ws.options),
            1);
  const fs::path empty = fresh_dir("vpcnet_eval_empty");
  EXPECT_EQ(cmd_eval(empty.string(), gt.string(),
                     (pred / "bad.csv").string(), ws.options),
            2);
  fs::remove_all(pred);
  fs::remove_all(gt);
  fs::remove_all(empty);
}

TEST(CliRobustness, SweepsDefaultRatios) {
  const Workspace& ws = workspace();
  const fs::path csv_path = ws.root / "robustness.csv";
  ASSERT_EQ(cmd_robustness(ws.checkpoint.string(),
                           (ws.mesh_dir / "box_a.obj").string(), {},
                           csv_path.string(), ws.options),
            0);
  const std::string csv = read_file(csv_path.string());
  ASSERT_EQ(csv.find("visible_ratio,points,cd,emd\n"), 0u);

  // four data rows with ceil(ratio * 128) points each
  std::vector<std::pair<double, std::size_t>> expected = {
      {0.25, 32}, {0.4, 52}, {0.6, 77}, {0.8, 103}};
  std::size_t pos = csv.find('\n') + 1;
  for (const auto& [ratio, points] : expected) {
    ASSERT_LT(pos, csv.size());
    const std::size_t end = csv.find('\n', pos);
    const std::string line = csv.substr(pos, end - pos);
    pos = end + 1;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = line.find(',', c1 + 1);
    EXPECT_DOUBLE_EQ(std::stod(line.substr(0, c1)), ratio);
    EXPECT_EQ(std::stoul(line.substr(c1 + 1, c2 - c1 - 1)), points);
  }
  EXPECT_EQ(pos, csv.size());

  EXPECT_EQ(cmd_robustness(ws.checkpoint.string(),
                           (ws.mesh_dir / "box_a.obj").string(), {1.5},
                           (ws.root / "bad.csv").string(), ws.options),
            1);
}

TEST(CliRegister, PartialVersusCompletedTable) {
  constexpr double kPi = std::numbers::pi;
  const fs::path partial_dir = fresh_dir("vpcnet_reg_partial");
  const fs::path complete_dir = fresh_dir("vpcnet_reg_complete");

  std::string transforms = "id,qw,qx,qy,qz,tx,ty,tz\n";
  DeterministicRng rng(110);
  for (const char* id : {"pair_a", "pair_b"}) {
    PointCloud surface = testutil::random_cloud(300, rng, -0.5, 0.5);
    RigidTransform motion;
    motion.rotation =
        rotation_about_axis(uniform_unit_vector(rng), 6.0 * kPi / 180.0);
    motion.translation = {rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                          rng.uniform(-0.1, 0.1)};

    DeterministicRng crop_a(mix_seed(111, surface.size())),
        crop_b(mix_seed(112, surface.size()));
    const PointCloud partial_source =
        crop_to_visible_ratio(surface, 0.5, crop_a);
    const PointCloud partial_target =
        motion.apply(crop_to_visible_ratio(surface, 0.5, crop_b));
    write_ply((partial_dir / (std::string(id) + "_source.ply")).string(),
              partial_source);
    write_ply((partial_dir / (std::string(id) + "_target.ply")).string(),
              partial_target);
    write_ply((complete_dir / (std::string(id) + "_source.ply")).string(),
              surface);
    write_ply((complete_dir / (std::string(id) + "_target.ply")).string(),
              motion.apply(surface));

    const auto q = motion.quaternion_wxyz();
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", id, q[0],
                  q[1], q[2], q[3], motion.translation.x,
                  motion.translation.y, motion.translation.z);
    transforms += line;
  }
  write_file((partial_dir / "transforms.csv").string(), transforms);

  const fs::path csv_path = partial_dir / "registration.csv";
  ASSERT_EQ(cmd_register(partial_dir.string(), complete_dir.string(),
                         csv_path.string(), RotationMetric::kDoubled,
                         CliOptions{}),
            0);
  const std::string csv = read_file(csv_path.string());
  EXPECT_EQ(csv.find("example,rot_err_partial,trans_err_partial,"
                     "rot_err_complete,trans_err_complete\n"),
            0u);
  EXPECT_NE(csv.find("pair_a,"), std::string::npos);
  EXPECT_NE(csv.find("pair_b,"), std::string::npos);
  EXPECT_NE(csv.find("mean,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  // complete rows recover the exact motion up to float32 storage
  std::size_t mean_pos = csv.rfind("mean,");
  std::vector<double> mean_fields;
  for (std::size_t p = csv.find(',', mean_pos); p != std::string::npos;) {
    const std::size_t next = csv.find_first_of(",\n", p + 1);
    mean_fields.push_back(std::stod(csv.substr(p + 1, next - p - 1)));
    p = csv[next] == ',' ? next : std::string::npos;
  }
  ASSERT_EQ(mean_fields.size(), 4u);
  EXPECT_LT(mean_fields[2], 0.1);    // complete rotation error, degrees
  EXPECT_LT(mean_fields[3], 0.001);  // complete translation error

  // missing files and empty tables
  fs::remove(complete_dir / "pair_b_target.ply");
  EXPECT_EQ(cmd_register(partial_dir.string(), complete_dir.string(),
                         (partial_dir / "bad.csv").string(),
                         RotationMetric::kDoubled, CliOptions{}),
            1);
  const fs::path empty_dir = fresh_dir("vpcnet_reg_empty");
  write_file((empty_dir / "transforms.csv").string(),
             "id,qw,qx,qy,qz,tx,ty,tz\n");
  EXPECT_EQ(cmd_register(empty_dir.string(), complete_dir.string(),
                         (empty_dir / "bad.csv").string(),
                         RotationMetric::kDoubled, CliOptions{}),
            2);
  write_file((empty_dir / "transforms.csv").string(),
             "id,qw,qx,qy,qz,tx,ty,tz\npair_x,1,0,0\n");
  EXPECT_EQ(cmd_register(empty_dir.string(), complete_dir.string(),
                         (empty_dir / "bad.csv").string(),
                         RotationMetric::kDoubled, CliOptions{}),
            1);
  fs::remove_all(partial_dir);
  fs::remove_all(complete_dir);
  fs::remove_all(empty_dir);
}

TEST(RunCliSurface, ExitCodesAndOverrides) {
  EXPECT_EQ(run_cli({}), 1);
  EXPECT_EQ(run_cli({"--help"}), 0);
  EXPECT_EQ(run_cli({"definitely-not-a-subcommand"}), 1);
  EXPECT_EQ(run_cli({"datagen"}), 1);  // missing required arguments

  const Workspace& ws = workspace();
  const fs::path config_path = ws.root / "run.conf";
  write_file(config_path.string(), ws.options.config.echo());

  // config file + seed override drive datagen through the full surface
  const fs::path out = ws.root / "data_cli";
  ASSERT_EQ(run_cli({"--config", config_path.string(), "--seed", "99",
                     "datagen", ws.mesh_dir.string(), out.string()}),
            0);
  EXPECT_TRUE(fs::exists(out / "box_a" / "complete.ply"));
  EXPECT_NE(read_file((out / "box_a" / "complete.ply").string()),
            read_file((ws.data_dir / "box_a" / "complete.ply").string()));

  // datagen honours --views over the config value
  const fs::path out_views = ws.root / "data_cli_views";
  ASSERT_EQ(run_cli({"--config", config_path.string(), "datagen",
                     ws.mesh_dir.string(), out_views.string(), "--views",
                     "1"}),
            0);
  EXPECT_TRUE(fs::exists(out_views / "box_a" / "partial_0.ply"));
  EXPECT_FALSE(fs::exists(out_views / "box_a" / "partial_1.ply"));

  // robustness with an explicit ratio list
  const fs::path robust_csv = ws.root / "robust_cli.csv";
  ASSERT_EQ(run_cli({"--config", config_path.string(), "robustness",
                     ws.checkpoint.string(),
                     (ws.mesh_dir / "box_a.obj").string(), "--ratios",
                     "0.5,1.0", "--out", robust_csv.string()}),
            0);
  const std::string robust = read_file(robust_csv.string());
  EXPECT_EQ(std::count(robust.begin(), robust.end(), '\n'), 3);  // header + 2

  // complete through the CLI surface with the fps toggle
  const fs::path completed = ws.root / "completed_cli.ply";
  ASSERT_EQ(run_cli({"--config", config_path.string(), "complete",
                     ws.checkpoint.string(),
                     (ws.data_dir / "box_a" / "partial_0.ply").string(),
                     completed.string(), "--no-refiner-fps"}),
            0);
  EXPECT_EQ(read_ply_cloud(completed.string()).size(), 64u);
}

}  // namespace
}  // namespace vpcnet
