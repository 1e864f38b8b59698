#include "vpcnet/param_store.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vpcnet/random.hpp"
#include "vpcnet/tensor.hpp"

namespace vpcnet {
namespace {

namespace fs = std::filesystem;

ParamStore make_sample_store() {
  ParamStore store;
  DeterministicRng rng(17);
  store.create_uniform("enc.w", {4, 3}, -0.5, 0.5, rng);
  store.create_uniform("enc.b", {3}, -0.1, 0.1, rng);
  store.create_zeros("dec.w", {3, 2});
  store.create_from("dec.b", {2}, {0.25, -2.5});
  store.state("optim.step", {1});
  store.state("stats.bn1.mean", {3});
  return store;
}

TEST(ParamStore, SerializeRoundTripBitExact) {
  ParamStore store = make_sample_store();
  const std::vector<std::uint8_t> bytes = store.serialize();
  ParamStore loaded = ParamStore::deserialize(bytes);
  EXPECT_EQ(loaded.serialize(), bytes);

  ASSERT_EQ(loaded.size(), store.size());
  for (const auto& [path, tensor] : store.entries()) {
    ASSERT_TRUE(loaded.contains(path)) << path;
    const Tensor& other = loaded.at(path);
    ASSERT_EQ(other.shape(), tensor.shape()) << path;
    EXPECT_EQ(testutil::max_abs_diff(other.data(), tensor.data()), 0.0)
        << path;
  }
}

TEST(ParamStore, TrainabilityFollowsPathPrefix) {
  ParamStore store = make_sample_store();
  ParamStore loaded = ParamStore::deserialize(store.serialize());
  EXPECT_TRUE(loaded.at("enc.w").requires_grad());
  EXPECT_TRUE(loaded.at("dec.b").requires_grad());
  EXPECT_FALSE(loaded.at("optim.step").requires_grad());
  EXPECT_FALSE(loaded.at("stats.bn1.mean").requires_grad());
}

TEST(ParamStore, SaveLoadFile) {
  const fs::path file =
      fs::temp_directory_path() / "vpcnet_param_store_test.ckpt";
  ParamStore store = make_sample_store();
  store.save(file);
  ParamStore loaded = ParamStore::load(file);
  EXPECT_EQ(loaded.serialize(), store.serialize());
  fs::remove(file);
}

TEST(ParamStore, SerializationOrderIsLexicographic) {
  // Same entries inserted in opposite orders serialize identically.
  ParamStore a, b;
  a.create_from("z.w", {1}, {1.0});
  a.create_from("a.w", {1}, {2.0});
  a.create_from("m.w", {1}, {3.0});
  b.create_from("m.w", {1}, {3.0});
  b.create_from("a.w", {1}, {2.0});
  b.create_from("z.w", {1}, {1.0});
  EXPECT_EQ(a.serialize(), b.serialize());

  std::vector<std::string> paths;
  for (const auto& [path, tensor] : a.entries()) paths.push_back(path);
  EXPECT_EQ(paths, (std::vector<std::string>{"a.w", "m.w", "z.w"}));
}

TEST(ParamStore, CorruptHeaderReportsByteOffset) {
  std::vector<std::uint8_t> bytes = make_sample_store().serialize();
  bytes[0] ^= 0xff;
  try {
    ParamStore::deserialize(bytes);
    FAIL() << "expected a parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos)
        << e.what();
  }
}

TEST(ParamStore, TruncatedPayloadReportsByteOffset) {
  std::vector<std::uint8_t> bytes = make_sample_store().serialize();
  bytes.resize(bytes.size() - 5);
  try {
    ParamStore::deserialize(bytes);
    FAIL() << "expected a parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos)
        << e.what();
  }
}

TEST(ParamStore, OutOfOrderRecordsRejected) {
  // Two single-entry stores spliced tail-to-head produce records in
  // descending path order, which the reader must refuse.
  ParamStore first, second;
  first.create_from("b.w", {1}, {1.0});
  second.create_from("a.w", {1}, {2.0});
  std::vector<std::uint8_t> a = first.serialize();
  std::vector<std::uint8_t> b = second.serialize();
  // header length: everything before the first record of a one-entry store
  // equals total size minus the record, and records are identical in layout
  ASSERT_EQ(a.size(), b.size());
  // splice: a's header + a's record + b's record (b's bytes after header)
  const std::size_t header = 9;  // 8-byte magic + version byte
  std::vector<std::uint8_t> spliced(a.begin(), a.end());
  spliced.insert(spliced.end(), b.begin() + header, b.end());
  EXPECT_THROW(ParamStore::deserialize(spliced), std::runtime_error);
}

TEST(ParamStore, DuplicatePathThrows) {
  ParamStore store;
  store.create_from("w", {1}, {1.0});
  EXPECT_THROW(store.create_from("w", {1}, {2.0}), std::invalid_argument);
  EXPECT_THROW(store.create_zeros("w", {1}), std::invalid_argument);
}

TEST(ParamStore, StatePathPrefixEnforced) {
  ParamStore store;
  EXPECT_THROW(store.state("weights.w", {1}), std::invalid_argument);
  Tensor& s = store.state("optim.m.w", {2});
  EXPECT_FALSE(s.requires_grad());
  // repeated access returns the same tensor
  Tensor& again = store.state("optim.m.w", {2});
  EXPECT_TRUE(s.same_node(again));
}

TEST(ParamStore, MissingPathThrows) {
  ParamStore store;
  EXPECT_THROW(store.at("nope"), std::invalid_argument);
}

TEST(ParamStore, ParameterCountExcludesState) {
  ParamStore store = make_sample_store();
  // enc.w 12 + enc.b 3 + dec.w 6 + dec.b 2
  EXPECT_EQ(store.parameter_count(), 23u);
}

TEST(ParamStore, AdamMomentsLiveInStore) {
  ParamStore store;
  Tensor& w = store.create_from("w", {2}, {1.0, -1.0});
  sum_all(w).backward();
  AdamOptions options;
  adam_step(store, options);
  EXPECT_TRUE(store.contains("optim.m.w"));
  EXPECT_TRUE(store.contains("optim.v.w"));
  EXPECT_TRUE(store.contains("optim.step"));
  EXPECT_EQ(adam_step_count(store), 1u);
  EXPECT_FALSE(store.at("optim.m.w").requires_grad());
}

TEST(ParamStore, AdamResumeFromCheckpointBitExact) {
  // Gradients are a pure function of the step index, so an interrupted run
  // restored from bytes must finish identically to the uninterrupted one.
  auto make = [] {
    ParamStore store;
    store.create_from("w", {3}, {0.9, -0.4, 0.1});
    return store;
  };
  auto drive = [](ParamStore& store, int from, int to) {
    AdamOptions options;
    options.lr = 0.01;
    for (int step = from; step < to; ++step) {
      store.zero_grad();
      Tensor& w = store.at("w");
      sum_all(w).backward();
      auto grad = w.mutable_grad();
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = std::sin(0.3 * step + static_cast<double>(i));
      adam_step(store, options);
    }
  };

  ParamStore full = make();
  drive(full, 0, 7);

  ParamStore head = make();
  drive(head, 0, 3);
  ParamStore tail = ParamStore::deserialize(head.serialize());
  drive(tail, 3, 7);

  EXPECT_EQ(tail.serialize(), full.serialize());
}

}  // namespace
}  // namespace vpcnet
