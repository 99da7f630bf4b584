#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "switchnet/checkpoint.hpp"
#include "switchnet/diagnostics.hpp"
#include "switchnet/error.hpp"
#include "switchnet/trainer.hpp"

using namespace switchnet;

namespace {

Dataset small_data(std::size_t n, std::size_t rows, std::uint64_t seed) {
  return sample_from_table(gen_synthetic(n, seed), rows, seed + 1);
}

TrainConfig config_for(const Architecture& arch, std::size_t epochs, std::size_t batch, double lr) {
  TrainConfig c;
  c.arch = arch;
  c.epochs = epochs;
  c.batch_size = batch;
  c.learning_rate = lr;
  c.seed = 42;
  return c;
}

}  // namespace

TEST(TrainConfig, TextRoundTrip) {
  TrainConfig c = config_for(Architecture::two(2, 8, 32), 3000, 1000, 10.0);
  c.grad_mode = GradientMode::mcmc;
  c.mcmc_r = 7;
  c.mcmc_t = 9;
  c.checkpoint_every = 100;
  c.out_dir = "runs/x";
  const TrainConfig back = parse_config(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.arch, c.arch);
  EXPECT_EQ(back.learning_rate, 10.0);
}

TEST(TrainConfig, ParsesCommentsAndRejectsUnknownKeys) {
  const auto c = parse_config("# table 1\narch = single  # one layer\nm = 16\n\nlearning_rate=0.5\n");
  EXPECT_EQ(c.arch, Architecture::single(16));
  EXPECT_EQ(c.learning_rate, 0.5);
  EXPECT_THROW(parse_config("momentum = 0.9\n"), ConfigError);
  EXPECT_THROW(parse_config("m 4\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("grad_mode = adam\n"), ConfigError);
}

TEST(TrainConfig, Validation) {
  auto c = config_for(Architecture::single(2), 1, 10, 1.0);
  EXPECT_NO_THROW(c.validate(10));
  EXPECT_THROW(c.validate(5), ConfigError);
  c.grad_mode = GradientMode::mcmc;
  EXPECT_THROW(c.validate(10), ConfigError);
  c = config_for(Architecture::two(1, 17, 1), 1, 10, 1.0);
  EXPECT_THROW(c.validate(10), ConfigError);
  c.grad_mode = GradientMode::mcmc;
  EXPECT_NO_THROW(c.validate(10));
  c = config_for(Architecture::single(2), 1, 10, -1.0);
  EXPECT_THROW(c.validate(10), ConfigError);
  c = config_for(Architecture::single(2), 0, 10, 1.0);
  EXPECT_THROW(c.validate(10), ConfigError);
}

TEST(Trainer, ZeroLearningRateLeavesParametersUntouched) {
  const Dataset data = small_data(4, 50, 1);
  const auto cfg = config_for(Architecture::two(2, 2, 2), 3, 7, 0.0);
  ConditionalTrainer trainer(3, data, cfg, Rng(5));
  const ConditionalModel before = trainer.model();
  for (int e = 0; e < 3; ++e) trainer.run_epoch();
  EXPECT_EQ(trainer.model(), before);
}

TEST(Trainer, FullBatchEpochIsOneAscentStep) {
  const Dataset data = small_data(5, 64, 2);
  for (const auto& arch : {Architecture::single(3), Architecture::two(2, 3, 2)}) {
    const auto cfg = config_for(arch, 1, data.size(), 10.0);
    ConditionalTrainer trainer(4, data, cfg, Rng(9));
    const ConditionalModel theta0 = trainer.model();

    // Same stream: initialization first, then the epoch's permutation.
    Rng rng(9);
    ConditionalModel replay(4, arch);
    initialize_uniform(replay, rng);
    ASSERT_EQ(replay, theta0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);
    Batch batch;
    for (std::size_t r : order) batch.add(data.row(r).first(4), data.row(r)[4]);
    apply_step(replay, grad(theta0, batch), 10.0);

    trainer.run_epoch();
    EXPECT_EQ(trainer.model(), replay) << arch.describe();
  }
}

TEST(Trainer, SmallStepFullBatchAscentNeverDecreasesObjective) {
  const Dataset data = small_data(6, 80, 3);
  for (const auto& arch : {Architecture::single(4), Architecture::two(3, 3, 3)}) {
    const auto cfg = config_for(arch, 1, data.size(), 1e-3);
    ConditionalTrainer trainer(5, data, cfg, Rng(1));
    Rng init(77);
    initialize_uniform(trainer.model(), init, 1.0);
    const Batch batch = conditional_batch(data, 5);
    double prev = loglik(trainer.model(), batch);
    for (int step = 0; step < 50; ++step) {
      trainer.run_epoch();
      const double cur = loglik(trainer.model(), batch);
      EXPECT_GE(cur, prev - 1e-15);
      prev = cur;
    }
  }
}

TEST(Trainer, AllOnesColumnDrivesNllToZero) {
  Dataset data(1);
  for (int i = 0; i < 20; ++i) data.add_row(Bits{1});
  const auto trace = train_conditional(0, data, config_for(Architecture::single(1), 300, 20, 10.0));
  ASSERT_EQ(trace.nll.size(), 301u);
  EXPECT_NEAR(trace.nll[0], std::log(2.0), 0.06);
  for (std::size_t e = 2; e < trace.nll.size(); ++e) EXPECT_LE(trace.nll[e], trace.nll[e - 1]);
  EXPECT_LT(trace.nll.back(), 0.01);
}

TEST(Trainer, DivergenceGuardAborts) {
  const Dataset data = small_data(3, 30, 4);
  const auto cfg = config_for(Architecture::single(2), 5, 30, 1e9);
  EXPECT_THROW(train_conditional(2, data, cfg), NumericalError);
}

TEST(Trainer, RejectsOutOfRangeConditional) {
  const Dataset data = small_data(3, 30, 4);
  EXPECT_THROW(ConditionalTrainer(3, data, config_for(Architecture::single(1), 1, 10, 1.0), Rng(1)),
               ContractError);
}

TEST(TrainAll, SerialAndParallelGiveIdenticalCheckpoints) {
  const Dataset data = small_data(6, 200, 5);
  const auto cfg = config_for(Architecture::two(2, 2, 3), 4, 32, 10.0);
  TrainOptions serial, parallel;
  parallel.threads = 4;
  const auto a = train_all(data, cfg, serial);
  const auto b = train_all(data, cfg, parallel);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t e = 0; e < a.metrics.size(); ++e) EXPECT_EQ(a.metrics[e].nll_total, b.metrics[e].nll_total);
}

TEST(TrainAll, RerunsProduceIdenticalBytesAndSeedsMatter) {
  const Dataset data = small_data(5, 120, 6);
  auto cfg = config_for(Architecture::single(3), 3, 25, 10.0);
  const auto a = serialize_model(train_all(data, cfg).model);
  EXPECT_EQ(a, serialize_model(train_all(data, cfg).model));
  cfg.seed = 43;
  EXPECT_NE(a, serialize_model(train_all(data, cfg).model));
}

TEST(TrainAll, MatchesPerConditionalTraining) {
  const Dataset data = small_data(4, 60, 7);
  const auto cfg = config_for(Architecture::two(1, 2, 2), 3, 16, 10.0);
  const auto all = train_all(data, cfg);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto trace = train_conditional(k, data, cfg);
    EXPECT_EQ(trace.model, all.model.conditional(k));
    for (std::size_t e = 0; e <= 3; ++e) EXPECT_EQ(trace.nll[e], all.metrics[e].nll_per_k[k]);
  }
  for (const auto& rec : all.metrics)
    EXPECT_DOUBLE_EQ(rec.nll_total, std::accumulate(rec.nll_per_k.begin(), rec.nll_per_k.end(), 0.0));
}

TEST(TrainAll, ConditionalIgnoresLaterColumns) {
  const Dataset data = small_data(5, 100, 8);
  Dataset perturbed(5);
  Rng rng(3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    Bits row(data.row(i).begin(), data.row(i).end());
    row[3] = bernoulli(rng, 0.5);  // column k + 2 for k = 1
    perturbed.add_row(row);
  }
  const auto cfg = config_for(Architecture::single(2), 5, 20, 10.0);
  const auto a = train_all(data, cfg);
  const auto b = train_all(perturbed, cfg);
  EXPECT_EQ(a.model.conditional(0), b.model.conditional(0));
  EXPECT_EQ(a.model.conditional(1), b.model.conditional(1));
}

TEST(TrainAll, EpochZeroIsInitialFullPassAndCallbackSeesEveryEpoch) {
  const Dataset data = small_data(3, 40, 9);
  const auto cfg = config_for(Architecture::single(2), 4, 8, 10.0);
  std::vector<std::size_t> seen;
  TrainOptions opts;
  opts.on_epoch = [&](const MetricsRecord& r, const SwitchNetworkModel& m) {
    seen.push_back(r.epoch);
    EXPECT_EQ(m.n(), 3u);
  };
  const auto result = train_all(data, cfg, opts);
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3, 4}));

  SwitchNetworkModel init(3, cfg.arch);
  initialize_uniform(init, cfg.seed);
  double expect = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) expect -= joint_log_prob(init, data.row(i));
  EXPECT_NEAR(result.metrics[0].nll_total, expect / data.size(), 1e-12);
  EXPECT_EQ(metrics_line(result.metrics[0]).rfind("0,", 0), 0u);
}

TEST(TrainAll, McmcModeTrainsBeyondEnumerationLimit) {
  const Dataset data = small_data(3, 40, 10);
  auto cfg = config_for(Architecture::two(1, 18, 2), 2, 20, 1.0);
  cfg.grad_mode = GradientMode::mcmc;
  cfg.mcmc_r = 2;
  cfg.mcmc_t = 3;
  const auto result = train_all(data, cfg);
  ASSERT_EQ(result.metrics.size(), 3u);
  for (const auto& r : result.metrics) EXPECT_TRUE(std::isfinite(r.nll_total));
}
