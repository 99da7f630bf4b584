#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "oracle.hpp"
#include "switchnet/checkpoint.hpp"
#include "switchnet/error.hpp"
#include "switchnet/io.hpp"

using namespace switchnet;

namespace {

SwitchNetworkModel sample_model(const Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  return oracle::random_model(5, arch, rng, 3.0);
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = oracle::temp_dir("ckpt");
  for (const auto& arch : {Architecture::single(4), Architecture::two(2, 8, 32), Architecture::two(3, 1, 2)}) {
    const auto model = sample_model(arch, 1);
    const auto path = dir / "m.swn";
    save_checkpoint(model, path);
    const auto back = load_checkpoint(path);
    EXPECT_EQ(back, model) << arch.describe();
    EXPECT_EQ(serialize_model(back), read_file(path));
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      Bits x(5);
      for (auto& b : x) b = bernoulli(rng, 0.5);
      EXPECT_EQ(joint_log_prob(back, x), joint_log_prob(model, x));
    }
  }
}

TEST(Checkpoint, ExtremeValuesSurvive) {
  SwitchNetworkModel model(2, Architecture::single(2));
  auto& b = model.conditional(1).blocks()[0];
  b.aux_bias(0) = 1e308;
  b.aux_bias(1) = -4.9e-324;
  b.switch_bias(0) = 0.1;
  b.aux_weights(1)[0] = -0.0;
  const auto back = deserialize_model(serialize_model(model));
  EXPECT_EQ(serialize_model(back), serialize_model(model));
  EXPECT_TRUE(std::signbit(back.conditional(1).blocks()[0].aux_weights(1)[0]));
}

TEST(Checkpoint, LayoutHeader) {
  const auto model = sample_model(Architecture::two(2, 3, 4), 3);
  const auto bytes = serialize_model(model);
  EXPECT_EQ(bytes.substr(0, 8), "SWNETCKP");
  std::uint32_t version = 0, kind = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&kind, bytes.data() + 12, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  EXPECT_EQ(kind, 2u);
  std::size_t total = 0;
  for (const auto& cm : model.conditionals()) total += cm.param_count();
  EXPECT_EQ(bytes.size(), 8 + 4 + 4 + 4 * 8 + total * 8 + 4);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto good = serialize_model(sample_model(Architecture::two(2, 2, 2), 4));
  auto magic = good;
  magic[0] = 'X';
  auto version = good;
  version[8] = 2;
  auto flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  auto kind = good;
  kind[12] = 7;
  for (const auto& bad : {magic, version, flipped, kind, good.substr(0, good.size() - 1), good.substr(0, 20),
                          std::string{}, good + "x"})
    EXPECT_THROW(deserialize_model(bad), DataError);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.swn"), DataError);
}

TEST(Checkpoint, EmptyFile) {
  const auto dir = oracle::temp_dir("ckpt_empty");
  std::ofstream(dir / "e.swn").close();
  EXPECT_THROW(load_checkpoint(dir / "e.swn"), DataError);
}
