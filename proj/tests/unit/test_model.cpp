#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "switchnet/error.hpp"
#include "switchnet/model.hpp"

using namespace switchnet;

TEST(Sigmoid, KnownValues) {
  EXPECT_DOUBLE_EQ(sigmoid(std::log(3.0)), 0.75);
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(1.0), 0.7310585786300049, 1e-16);
  EXPECT_NEAR(sigmoid(-1.0), 1.0 - 0.7310585786300049, 1e-16);
}

TEST(Sigmoid, ExtremeArgumentsStayFinite) {
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-9);
  EXPECT_NEAR(log_sigmoid(800.0), 0.0, 1e-300);
  EXPECT_NEAR(log_sigmoid(std::log(3.0)), std::log(0.75), 1e-15);
}

TEST(SwitchBlock, SoftmaxOfLn2AndZero) {
  SwitchBlock b(0, 2);
  b.switch_bias(0) = std::log(2.0);
  b.switch_bias(1) = 0.0;
  const auto s = switch_probs(b, {});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
}

TEST(SwitchBlock, ParameterLayout) {
  SwitchBlock b(3, 2);
  EXPECT_EQ(b.param_count(), 2u * 2u * (3u + 1u));
  std::iota(b.values().begin(), b.values().end(), 0.0);
  EXPECT_EQ(b.aux_weights(1)[0], 3.0);
  EXPECT_EQ(b.aux_bias(0), 6.0);
  EXPECT_EQ(b.switch_weights(0)[2], 10.0);
  EXPECT_EQ(b.switch_bias(1), 15.0);
}

TEST(SwitchBlock, BiasOnlyWhenInputEmpty) {
  SwitchBlock b(0, 1);
  b.aux_bias(0) = std::log(3.0);
  EXPECT_DOUBLE_EQ(block_mixture_prob(b, {}), 0.75);
}

TEST(SwitchBlock, RejectsWrongInputLength) {
  SwitchBlock b(3, 2);
  const Bits x{1, 0};
  EXPECT_THROW(block_mixture_prob(b, x), ContractError);
  EXPECT_THROW(SwitchBlock(2, 0), ContractError);
}

TEST(SwitchBlock, SwitchProbsFormDistributionAndMixtureIsConvex) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = uniform_index(rng, 8);
    const std::size_t m = 1 + uniform_index(rng, 6);
    SwitchBlock b(d, m);
    for (double& v : b.values()) v = uniform(rng, -6.0, 6.0);
    Bits x(d);
    for (auto& bit : x) bit = bernoulli(rng, 0.5);
    const auto s = switch_probs(b, x);
    const auto a = aux_probs(b, x);
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-12);
    for (double v : s) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0 + 1e-15);
    }
    const double p = block_mixture_prob(b, x);
    EXPECT_GE(p, *std::min_element(a.begin(), a.end()) - 1e-15);
    EXPECT_LE(p, *std::max_element(a.begin(), a.end()) + 1e-15);
    EXPECT_NEAR(p, oracle::block_prob(b, x), 1e-13);
  }
}

TEST(SwitchBlock, SoftmaxSurvivesHugeLogits) {
  SwitchBlock b(0, 2);
  b.switch_bias(0) = 1e4;
  b.switch_bias(1) = 1e4 - std::log(3.0);
  const auto s = switch_probs(b, {});
  EXPECT_NEAR(s[0], 0.75, 1e-12);
  EXPECT_NEAR(s[1], 0.25, 1e-12);
}

TEST(SwitchBlock, OutputProbabilitiesAreComplementary) {
  Rng rng(3);
  BlockActivation act;
  for (int trial = 0; trial < 100; ++trial) {
    SwitchBlock b(4, 3);
    for (double& v : b.values()) v = uniform(rng, -30.0, 30.0);
    Bits x{1, 0, 1, 1};
    evaluate_block(b, x, act);
    EXPECT_NEAR(act.prob_one + act.prob_zero, 1.0, 4e-16);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(act.aux_one[j] + act.aux_zero[j], 1.0, 4e-16);
  }
}

TEST(SingleLayer, WidthOneIsPlainLogistic) {
  Rng rng(5);
  ConditionalModel cm(4, Architecture::single(1));
  initialize_uniform(cm, rng, 2.0);
  const auto& b = cm.output_block();
  for (std::uint64_t c = 0; c < 16; ++c) {
    const Bits x = config_bits(c, 4);
    double u = b.aux_bias(0);
    for (std::size_t t = 0; t < 4; ++t) u += b.aux_weights(0)[t] * x[t];
    EXPECT_NEAR(conditional_prob(cm, x), sigmoid(u), 1e-15);
  }
}

TEST(Architecture, Validation) {
  EXPECT_THROW(Architecture::single(0).validate(), ConfigError);
  EXPECT_THROW(Architecture::two(2, 0, 3).validate(), ConfigError);
  Architecture bad = Architecture::single(2);
  bad.l = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_EQ(Architecture::two(2, 8, 32).describe(), "two(m1=2,l=8,m2=32)");
  EXPECT_EQ(Architecture::single(4).describe(), "single(m=4)");
}

TEST(ConditionalModel, BlockShapes) {
  ConditionalModel cm(5, Architecture::two(2, 3, 4));
  ASSERT_EQ(cm.blocks().size(), 4u);
  for (const auto& b : cm.first_layer()) {
    EXPECT_EQ(b.input_dim(), 5u);
    EXPECT_EQ(b.width(), 2u);
  }
  EXPECT_EQ(cm.output_block().input_dim(), 3u);
  EXPECT_EQ(cm.output_block().width(), 4u);
  EXPECT_EQ(cm.param_count(), 3u * 2u * 2u * 6u + 2u * 4u * 4u);
}

TEST(TwoLayer, ConditionalMatchesBruteForce) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = uniform_index(rng, 6);
    const auto arch = Architecture::two(1 + uniform_index(rng, 3), 1 + uniform_index(rng, 4),
                                        1 + uniform_index(rng, 3));
    ConditionalModel cm(k, arch);
    initialize_uniform(cm, rng, 3.0);
    Bits x(k);
    for (auto& b : x) b = bernoulli(rng, 0.5);
    EXPECT_NEAR(conditional_prob(cm, x), oracle::cond_prob(cm, x), 1e-13);
  }
}

TEST(TwoLayer, EvaluatorRefusesHugeL) {
  ConditionalModel cm(1, Architecture::two(1, kMaxExactIntermediates + 1, 1));
  EXPECT_THROW(ConditionalEvaluator{cm}, ContractError);
}

TEST(TwoLayer, LogProbUsesLogSpaceWhenMarginalUnderflows) {
  // p(y = 1 | f) = sigmoid(-650) for every f, far below the linear-space cutoff
  ConditionalModel cm(2, Architecture::two(2, 3, 2));
  Rng rng(4);
  initialize_uniform(cm, rng, 1.0);
  auto& second = cm.blocks()[3];
  for (std::size_t j = 0; j < 2; ++j) {
    for (double& w : second.aux_weights(j)) w = 0.0;
    second.aux_bias(j) = -650.0;
  }
  const ConditionalEvaluator eval(cm);
  const Bits x{1, 0};
  EXPECT_NEAR(eval.log_prob(x, 1), -650.0, 1e-9);
  EXPECT_NEAR(eval.log_prob(x, 0), 0.0, 1e-12);
}

TEST(IntermediatePrior, ProductTreeMatchesDirectProduct) {
  const std::vector<double> p1{0.2, 0.9, 0.5}, p0{0.8, 0.1, 0.5};
  std::vector<double> w;
  intermediate_prior(p1, p0, w);
  ASSERT_EQ(w.size(), 8u);
  for (std::uint64_t c = 0; c < 8; ++c) {
    double expect = 1.0;
    for (std::size_t i = 0; i < 3; ++i) expect *= (c >> i) & 1u ? p1[i] : p0[i];
    EXPECT_NEAR(w[c], expect, 1e-16);
  }
}

TEST(JointLogProb, ZeroModelGivesLnHalfPerBit) {
  SwitchNetworkModel one(1, Architecture::single(3));
  const Bits x{1};
  EXPECT_DOUBLE_EQ(joint_log_prob(one, x), std::log(0.5));
  SwitchNetworkModel ten(10, Architecture::two(2, 3, 2));
  EXPECT_NEAR(joint_log_prob(ten, Bits(10, 0)), -10.0 * std::log(2.0), 1e-12);
}

TEST(JointLogProb, RejectsWrongLength) {
  SwitchNetworkModel model(3, Architecture::single(1));
  EXPECT_THROW(joint_log_prob(model, Bits(2, 0)), ContractError);
}

TEST(Normalization, RandomModelsSumToOne) {
  Rng rng(23);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 12);
    const auto arch = trial % 2 ? Architecture::single(1 + uniform_index(rng, 4))
                                : Architecture::two(1 + uniform_index(rng, 2), 1 + uniform_index(rng, 3),
                                                    1 + uniform_index(rng, 3));
    const auto model = oracle::random_model(n, arch, rng, 2.0);
    const ModelEvaluator eval(model);
    double total = 0.0;
    for (std::uint64_t c = 0; c < (1u << n); ++c) total += std::exp(eval.joint_log_prob(config_bits(c, n)));
    EXPECT_NEAR(total, 1.0, 1e-9) << arch.describe() << " n=" << n;
  }
}

TEST(JointLogProb, MatchesOracleProduct) {
  Rng rng(29);
  const auto model = oracle::random_model(5, Architecture::two(2, 2, 3), rng, 2.0);
  for (std::uint64_t c = 0; c < 32; ++c) {
    const Bits x = config_bits(c, 5);
    EXPECT_NEAR(joint_log_prob(model, x), std::log(oracle::joint_prob(model, x)), 1e-12);
  }
}

TEST(Initialization, UniformWithinScaleAndSeeded) {
  SwitchNetworkModel a(6, Architecture::two(2, 3, 4)), b(6, Architecture::two(2, 3, 4));
  initialize_uniform(a, 99);
  initialize_uniform(b, 99);
  EXPECT_EQ(a, b);
  for (const auto& cm : a.conditionals())
    for (const auto& blk : cm.blocks())
      for (double v : blk.values()) {
        EXPECT_GE(v, -0.05);
        EXPECT_LE(v, 0.05);
      }
  initialize_uniform(b, 100);
  EXPECT_NE(a, b);
}

TEST(Sampling, ZeroModelIsFairCoinPerBit) {
  SwitchNetworkModel model(6, Architecture::single(2));
  Rng rng(1);
  std::vector<int> ones(6, 0);
  for (int i = 0; i < 10000; ++i) {
    const Bits x = sample_vector(model, rng);
    for (std::size_t k = 0; k < 6; ++k) ones[k] += x[k];
  }
  for (int c : ones) {
    EXPECT_GE(c / 10000.0, 0.47);
    EXPECT_LE(c / 10000.0, 0.53);
  }
}

TEST(Sampling, SaturatedBiasGivesAllOnes) {
  SwitchNetworkModel model(8, Architecture::single(1));
  for (auto& cm : model.conditionals()) cm.blocks()[0].aux_bias(0) = 50.0;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_vector(model, rng), Bits(8, 1));
}

TEST(Sampling, DeterministicForSeed) {
  Rng init(3);
  const auto model = oracle::random_model(12, Architecture::two(2, 2, 2), init);
  Rng r1(77), r2(77);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_vector(model, r1), sample_vector(model, r2));
}

TEST(Sampling, FrequenciesMatchJointDistribution) {
  Rng init(8);
  const auto model = oracle::random_model(3, Architecture::single(2), init, 2.0);
  Rng rng(9);
  std::vector<double> counts(8, 0.0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) counts[config_index(sample_vector(model, rng))] += 1.0;
  for (std::uint64_t c = 0; c < 8; ++c) {
    const double p = oracle::joint_prob(model, config_bits(c, 3));
    EXPECT_NEAR(counts[c] / draws, p, 5.0 * std::sqrt(p * (1 - p) / draws) + 1e-4);
  }
}
