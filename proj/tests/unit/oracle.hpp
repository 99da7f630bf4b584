#pragma once

// Reference computations written straight from the model definition. They
// share only the parameter accessors with the library: no activation caches,
// no product trees, no log-space tricks.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "switchnet/bits.hpp"
#include "switchnet/data.hpp"
#include "switchnet/likelihood.hpp"
#include "switchnet/model.hpp"
#include "switchnet/random.hpp"

namespace oracle {

using namespace switchnet;

inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline double block_prob(const SwitchBlock& b, BitSpan x) {
  const std::size_t m = b.width();
  std::vector<double> e(m);
  double z = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double v = b.switch_bias(j);
    for (std::size_t t = 0; t < x.size(); ++t) v += b.switch_weights(j)[t] * x[t];
    e[j] = std::exp(v);
    z += e[j];
  }
  double p = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double u = b.aux_bias(j);
    for (std::size_t t = 0; t < x.size(); ++t) u += b.aux_weights(j)[t] * x[t];
    p += e[j] / z * logistic(u);
  }
  return p;
}

/// p(x_{k+1} = 1 | prefix), summing over every intermediate configuration.
inline double cond_prob(const ConditionalModel& cm, BitSpan prefix) {
  if (!cm.is_two_layer()) return block_prob(cm.output_block(), prefix);
  const std::size_t l = cm.intermediate_count();
  std::vector<double> P(l);
  for (std::size_t i = 0; i < l; ++i) P[i] = block_prob(cm.blocks()[i], prefix);
  double total = 0.0;
  Bits f(l);
  for (std::uint64_t c = 0; c < (1u << l); ++c) {
    double prior = 1.0;
    for (std::size_t i = 0; i < l; ++i) {
      f[i] = (c >> i) & 1u;
      prior *= f[i] ? P[i] : 1.0 - P[i];
    }
    total += prior * block_prob(cm.output_block(), f);
  }
  return total;
}

inline double joint_prob(const SwitchNetworkModel& model, BitSpan x) {
  double p = 1.0;
  for (std::size_t k = 0; k < model.n(); ++k) {
    const double q = cond_prob(model.conditional(k), x.first(k));
    p *= x[k] ? q : 1.0 - q;
  }
  return p;
}

inline double mean_loglik(const ConditionalModel& cm, const Batch& batch) {
  double s = 0.0;
  for (const auto& e : batch.examples()) {
    const double q = cond_prob(cm, e.prefix);
    s += std::log(e.target ? q : 1.0 - q);
  }
  return s / static_cast<double>(batch.size());
}

inline SwitchNetworkModel random_model(std::size_t n, const Architecture& arch, Rng& rng,
                                       double scale = 1.0) {
  SwitchNetworkModel model(n, arch);
  for (auto& cm : model.conditionals()) initialize_uniform(cm, rng, scale);
  return model;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("switchnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path data_dir() { return SWITCHNET_TEST_DATA; }

}  // namespace oracle
