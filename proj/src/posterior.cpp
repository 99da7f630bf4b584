#include "switchnet/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "switchnet/model.hpp"

namespace switchnet {

double intermediate_posterior(std::span<const double> prob_one, std::span<const double> prob_zero,
                              std::span<const double> likelihood, std::vector<double>& post,
                              std::span<double> marginal, std::span<double> marginal_zero) {
  const std::size_t l = prob_one.size();
  const std::size_t configs = std::size_t{1} << l;
  intermediate_prior(prob_one, prob_zero, post);

  double total = 0.0;
  for (std::size_t c = 0; c < configs; ++c) {
    post[c] *= likelihood[c];
    total += post[c];
  }

  double log_total;
  if (total >= 1e-250) {
    log_total = std::log(total);
    const double inv = 1.0 / total;
    for (double& v : post) v *= inv;
  } else {
    // Rebuild in log space.
    post.assign(configs, 0.0);
    for (std::size_t i = 0; i < l; ++i) {
      const double lp1 = std::log(std::max(prob_one[i], kProbFloor));
      const double lp0 = std::log(std::max(prob_zero[i], kProbFloor));
      const std::size_t half = std::size_t{1} << i;
      for (std::size_t c = 0; c < half; ++c) {
        post[c | half] = post[c] + lp1;
        post[c] += lp0;
      }
    }
    double max_term = -INFINITY;
    for (std::size_t c = 0; c < configs; ++c) {
      post[c] += std::log(std::max(likelihood[c], kProbFloor));
      max_term = std::max(max_term, post[c]);
    }
    double sum = 0.0;
    for (double& v : post) {
      v = std::exp(v - max_term);
      sum += v;
    }
    for (double& v : post) v /= sum;
    log_total = std::max(max_term + std::log(sum), std::log(kProbFloor));
  }

  // Marginals by folding the highest remaining bit: after summing away bits
  // above i, the upper half of what is left is exactly the mass with f_i = 1.
  thread_local std::vector<double> fold;
  fold.assign(post.begin(), post.end());
  for (std::size_t i = l; i-- > 0;) {
    const std::size_t half = std::size_t{1} << i;
    double upper = 0.0, lower = 0.0;
    for (std::size_t c = 0; c < half; ++c) {
      upper += fold[c + half];
      lower += fold[c];
      fold[c] += fold[c + half];
    }
    marginal[i] = upper;
    if (!marginal_zero.empty()) marginal_zero[i] = lower;
  }
  return log_total;
}

}  // namespace switchnet
