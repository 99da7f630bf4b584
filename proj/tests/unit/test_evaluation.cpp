#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "oracle.hpp"
#include "switchnet/error.hpp"
#include "switchnet/evaluation.hpp"

using namespace switchnet;

namespace {

DistributionTable random_table(std::size_t n, Rng& rng, double zero_fraction = 0.0) {
  std::vector<double> p(std::size_t{1} << n);
  double total = 0.0;
  for (double& v : p) {
    v = uniform01(rng) < zero_fraction ? 0.0 : uniform01(rng);
    total += v;
  }
  if (total == 0.0) p[0] = total = 1.0;
  for (double& v : p) v /= total;
  return DistributionTable(n, std::move(p));
}

}  // namespace

TEST(ModelDistribution, ZeroModelIsUniform) {
  const SwitchNetworkModel model(6, Architecture::two(2, 2, 2));
  const auto t = model_distribution(model);
  for (double p : t.probs()) EXPECT_NEAR(p, 1.0 / 64.0, 1e-16);
}

TEST(ModelDistribution, HandSetTwoBitModel) {
  SwitchNetworkModel model(2, Architecture::single(1));
  model.conditional(0).blocks()[0].aux_bias(0) = std::log(3.0);
  auto& second = model.conditional(1).blocks()[0];
  second.aux_weights(0)[0] = 40.0;
  second.aux_bias(0) = -20.0;
  const double s = 0.9999999979388463;  // sigmoid(20)
  const auto t = model_distribution(model);
  EXPECT_NEAR(t[0b00], 0.25 * s, 1e-15);
  EXPECT_NEAR(t[0b01], 0.25 * (1 - s), 1e-15);
  EXPECT_NEAR(t[0b10], 0.75 * (1 - s), 1e-15);
  EXPECT_NEAR(t[0b11], 0.75 * s, 1e-15);
}

TEST(ModelDistribution, TwoLayerMatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    const auto arch = Architecture::two(1 + uniform_index(rng, 3), 1 + uniform_index(rng, 3),
                                        1 + uniform_index(rng, 3));
    const auto model = oracle::random_model(n, arch, rng, 2.0);
    const auto t = model_distribution(model);
    for (std::uint64_t c = 0; c < t.probs().size(); ++c)
      EXPECT_NEAR(t[c], oracle::joint_prob(model, config_bits(c, n)), 1e-14);
  }
}

TEST(ModelDistribution, RandomModelsSumToOne) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 12);
    const auto arch = trial % 2 ? Architecture::single(1 + uniform_index(rng, 5))
                                : Architecture::two(1 + uniform_index(rng, 3), 1 + uniform_index(rng, 4),
                                                    1 + uniform_index(rng, 3));
    const auto t = model_distribution(oracle::random_model(n, arch, rng, 3.0));
    EXPECT_NEAR(std::accumulate(t.probs().begin(), t.probs().end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Divergences, BasicProperties) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_table(5, rng, 0.2), q = random_table(5, rng, 0.2), r = random_table(5, rng);
    const double tv = tv_distance(p, q);
    EXPECT_GE(tv, 0.0);
    EXPECT_LE(tv, 1.0);
    EXPECT_DOUBLE_EQ(tv, tv_distance(q, p));
    EXPECT_LE(tv_distance(p, r), tv_distance(p, q) + tv_distance(q, r) + 1e-15);
    const double js = js_divergence(p, q);
    EXPECT_GE(js, 0.0);
    EXPECT_LE(js, std::log(2.0));
    EXPECT_NEAR(js, js_divergence(q, p), 1e-15);
    EXPECT_NEAR(js_sqrt(p, q), std::sqrt(js), 1e-15);
    // the square root of JS is a metric
    EXPECT_LE(js_sqrt(p, r), js_sqrt(p, q) + js_sqrt(q, r) + 1e-12);
    // Pinsker-type bound: JS <= TV ln 2
    EXPECT_LE(js, tv * std::log(2.0) + 1e-15);
    EXPECT_EQ(tv_distance(p, p), 0.0);
    EXPECT_NEAR(js_divergence(p, p), 0.0, 1e-15);
  }
}

TEST(Divergences, DisjointSupports) {
  const DistributionTable p(1, {1.0, 0.0}), q(1, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 1.0);
  EXPECT_NEAR(js_divergence(p, q), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isinf(kl_divergence(p, q)));
  EXPECT_THROW(tv_distance(p, DistributionTable(2, {0.25, 0.25, 0.25, 0.25})), ContractError);
}

TEST(Entropy, KnownValues) {
  std::vector<double> point(1024, 0.0);
  point[17] = 1.0;
  EXPECT_EQ(entropy(DistributionTable(10, point)), 0.0);
  EXPECT_NEAR(entropy(DistributionTable(10, std::vector<double>(1024, 1.0 / 1024))), 6.931471805599453, 1e-12);
  EXPECT_NEAR(entropy(DistributionTable(1, {0.25, 0.75})), -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)),
              1e-15);
}

TEST(ExpectedNll, GibbsInequalityAndKlIdentity) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + uniform_index(rng, 5);
    const auto table = random_table(n, rng);
    const auto model = oracle::random_model(n, Architecture::two(2, 2, 3), rng, 2.0);
    const double nll = expected_nll(model, table);
    const double h = entropy(table);
    EXPECT_GE(nll, h - 1e-12);
    EXPECT_NEAR(nll - h, kl_divergence(table, model_distribution(model)), 1e-10);
  }
  const SwitchNetworkModel model(3, Architecture::single(1));
  EXPECT_THROW(expected_nll(model, random_table(4, rng)), ContractError);
}

TEST(TestNll, ZeroModelIsNLn2) {
  Rng rng(5);
  const SwitchNetworkModel model(9, Architecture::single(3));
  Dataset d(9);
  for (int i = 0; i < 20; ++i) {
    Bits row(9);
    for (auto& b : row) b = bernoulli(rng, 0.3);
    d.add_row(row);
  }
  EXPECT_NEAR(test_nll(model, d), 9 * std::log(2.0), 1e-12);
  EXPECT_THROW(test_nll(model, Dataset(8)), ContractError);
  EXPECT_THROW(test_nll(model, Dataset(9)), ContractError);
}

TEST(TestNll, SamplesFromTheModelAgreeWithItsEntropy) {
  Rng rng(6);
  const auto model = oracle::random_model(6, Architecture::single(3), rng, 2.0);
  const auto table = model_distribution(model);
  const Dataset d = sample_from_table(table, 20000, 7);
  const double h = entropy(table);
  double second = 0.0;
  for (std::uint64_t c = 0; c < table.probs().size(); ++c)
    if (table[c] > 0) second += table[c] * std::log(table[c]) * std::log(table[c]);
  const double se = std::sqrt((second - h * h) / 20000.0);
  EXPECT_NEAR(test_nll(model, d), h, 2 * se + 1e-3);
}

TEST(DictionaryRatio, Cases) {
  const std::set<std::string> lexicon{"the", "cat", "sat"};
  const std::vector<std::string> all{"the", "cat"}, half{"the", "dog"}, none{"zz", ""}, blank{"", "the"};
  EXPECT_EQ(dictionary_ratio(all, lexicon), 1.0);
  EXPECT_EQ(dictionary_ratio(half, lexicon), 0.5);
  EXPECT_EQ(dictionary_ratio(none, lexicon), 0.0);
  EXPECT_EQ(dictionary_ratio(blank, std::set<std::string>{"", "the"}), 0.5);
  EXPECT_THROW(dictionary_ratio(std::vector<std::string>{}, lexicon), ContractError);
}

TEST(Reports, JsonLineParses) {
  EvalReport r{"m16", "js", 0.25, "divergence-nats", {{"epochs", "3120"}}};
  const auto j = nlohmann::json::parse(r.to_json_line());
  EXPECT_EQ(j["model"], "m16");
  EXPECT_EQ(j["metric"], "js");
  EXPECT_EQ(j["value"].get<double>(), 0.25);
  EXPECT_EQ(j["convention"], "divergence-nats");
  EXPECT_EQ(j["metadata"]["epochs"], "3120");
  EXPECT_EQ(r.to_json_line().find('\n'), std::string::npos);
}

TEST(Reports, SummaryTableHasOneLinePerRow) {
  const std::vector<TableRow> rows{{"single(4)", 10, 6.9, 0.3, 0.02, 0.14}, {"two(2,8,32)", 20, 6.8, 0.1, 0.003, 0.05}};
  const auto text = format_summary_table(rows);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("two(2,8,32)"), std::string::npos);
  EXPECT_NE(text.find("6.800000"), std::string::npos);
}
