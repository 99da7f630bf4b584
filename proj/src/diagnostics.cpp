#include "switchnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "switchnet/error.hpp"
#include "switchnet/mcmc.hpp"

namespace switchnet {

Batch conditional_batch(const Dataset& data, std::size_t k) {
  if (k >= data.n()) throw ContractError("conditional index out of range for the dataset");
  Batch batch;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const BitSpan row = data.row(i);
    batch.add(row.first(k), row[k]);
  }
  return batch;
}

Dataset random_rows(std::size_t n, std::size_t count, Rng& rng) {
  Dataset data(n, "random");
  data.reserve(count);
  Bits row(n);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& b : row) b = bernoulli(rng, 0.5) ? 1 : 0;
    data.add_row(row);
  }
  return data;
}

ConditionalModel random_conditional(std::size_t k, const Architecture& arch, Rng& rng,
                                    double scale) {
  ConditionalModel cm(k, arch);
  initialize_uniform(cm, rng, scale);
  return cm;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ContractError("vectors differ in length");
  double worst = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double scale = std::max({std::abs(a[p]), std::abs(b[p]), floor});
    worst = std::max(worst, std::abs(a[p] - b[p]) / scale);
  }
  return worst;
}

double relative_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("vectors differ in length");
  double diff = 0.0, norm = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    diff += (a[p] - b[p]) * (a[p] - b[p]);
    norm += b[p] * b[p];
  }
  if (norm == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(diff / norm);
}

FdComparison compare_with_finite_differences(const ConditionalModel& cm, const Batch& batch,
                                             double eps) {
  if (cm.is_two_layer() && cm.intermediate_count() > kGradCheckMaxIntermediates)
    throw ConfigError("finite-difference check enumerates 2^l configurations per probe; l = " +
                      std::to_string(cm.intermediate_count()) + " exceeds the gradcheck limit of " +
                      std::to_string(kGradCheckMaxIntermediates) +
                      " (lower --l, or check the MCMC estimator against a smaller exact model)");
  const auto analytic = grad(cm, batch).flatten();
  const auto numeric = finite_diff_grad(cm, batch, eps).flatten();
  return {max_relative_error(analytic, numeric, kGradCheckFloor), analytic.size()};
}

std::vector<McmcErrorRow> mcmc_error_sweep(const ConditionalModel& cm, const Batch& batch,
                                           std::span<const std::size_t> rounds, std::size_t steps,
                                           std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ConfigError("need at least one trial");
  const auto exact = grad(cm, batch).flatten();
  std::vector<McmcErrorRow> rows;
  for (std::size_t ri = 0; ri < rounds.size(); ++ri) {
    McmcErrorRow row;
    row.rounds = rounds[ri];
    row.steps = steps;
    std::vector<double> mean(exact.size(), 0.0);
    for (std::size_t trial = 0; trial < trials; ++trial) {
      McmcConfig cfg{rounds[ri], steps, derive_seed(derive_seed(seed, ri), trial)};
      const auto est = mcmc_grad(cm, batch, cfg).flatten();
      row.mean_error += relative_l2(est, exact);
      for (std::size_t p = 0; p < est.size(); ++p) mean[p] += est[p];
    }
    row.mean_error /= static_cast<double>(trials);
    for (double& v : mean) v /= static_cast<double>(trials);
    row.error_of_mean = relative_l2(mean, exact);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace switchnet
