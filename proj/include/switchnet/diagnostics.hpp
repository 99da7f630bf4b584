#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "switchnet/data.hpp"
#include "switchnet/likelihood.hpp"
#include "switchnet/model.hpp"
#include "switchnet/random.hpp"

namespace switchnet {

/// Batch of conditional k over every row of `data` (prefix = first k bits,
/// target = bit k). The batch views the dataset's storage.
Batch conditional_batch(const Dataset& data, std::size_t k);

/// `count` rows of n i.i.d. fair bits.
Dataset random_rows(std::size_t n, std::size_t count, Rng& rng);

/// Conditional k with parameters uniform in [-scale, scale].
ConditionalModel random_conditional(std::size_t k, const Architecture& arch, Rng& rng,
                                    double scale = 1.0);

/// max_p |a_p - b_p| / max(|a_p|, |b_p|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor);

/// ||a - b||_2 / ||b||_2.
double relative_l2(std::span<const double> a, std::span<const double> b);

/// Finite differences below this scale are dominated by rounding, so relative
/// errors are measured against max(|a|, |b|, kGradCheckFloor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Largest l for which gradcheck runs finite differences over the exact
/// likelihood (2 * params * 2^l likelihood terms per example).
inline constexpr std::size_t kGradCheckMaxIntermediates = 10;

struct FdComparison {
  double max_rel_error = 0.0;
  std::size_t params = 0;
};

FdComparison compare_with_finite_differences(const ConditionalModel& cm, const Batch& batch,
                                             double eps = 1e-5);

struct McmcErrorRow {
  std::size_t rounds = 0;
  std::size_t steps = 0;
  /// Mean over trials of relative_l2(estimate, exact).
  double mean_error = 0.0;
  /// relative_l2(mean over trials of the estimate, exact).
  double error_of_mean = 0.0;
};

/// For each r in `rounds`, runs `trials` independent MCMC gradient estimates
/// with t = `steps` and compares them with the exact gradient.
std::vector<McmcErrorRow> mcmc_error_sweep(const ConditionalModel& cm, const Batch& batch,
                                           std::span<const std::size_t> rounds, std::size_t steps,
                                           std::size_t trials, std::uint64_t seed);

}  // namespace switchnet
