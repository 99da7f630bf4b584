#pragma once

#include <span>
#include <vector>

namespace switchnet {

/// Exact posterior over intermediate configurations for one example:
///
///   post(c) = p(y | f_c) p(f_c | x) / W,   W = sum_c p(y | f_c) p(f_c | x)
///
/// `prob_one`/`prob_zero` are the first-layer P_i and 1 - P_i, `likelihood`
/// the second-layer p(y | f_c) for every configuration c (bit i of c is
/// f_{i+1}). Fills `post` and the posterior marginals E[F_i] and returns
/// log W. Switches to log space when W underflows. `marginal_zero`, when
/// given, receives P(F_i = 0) summed directly rather than as 1 - E[F_i].
double intermediate_posterior(std::span<const double> prob_one, std::span<const double> prob_zero,
                              std::span<const double> likelihood, std::vector<double>& post,
                              std::span<double> marginal, std::span<double> marginal_zero = {});

}  // namespace switchnet
