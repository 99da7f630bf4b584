#pragma once

#include <cstddef>
#include <cstdint>

#include "switchnet/bits.hpp"
#include "switchnet/likelihood.hpp"
#include "switchnet/model.hpp"
#include "switchnet/random.hpp"

namespace switchnet {

/// Metropolis-Hastings settings for the two-layer gradient: r independent
/// chains per example, each run for t steps.
struct McmcConfig {
  std::size_t rounds = 10;  // r
  std::size_t steps = 20;   // t
  std::uint64_t seed = 0;

  void validate() const;
};

/// A configuration f_{[1:l]} of the intermediate variables.
using IntermediateConfig = Bits;

/// Draws f from the first-layer prior p(f | prefix), which doubles as the
/// independence proposal of the chain.
IntermediateConfig propose(const ConditionalModel& cm, BitSpan prefix, Rng& rng);

/// min(1, p(target | f_prop) / p(target | f_cur)) using the second layer only;
/// the proposal terms cancel against the prior. A current state with zero
/// likelihood accepts anything.
double acceptance_ratio(const ConditionalModel& cm, Bit target, BitSpan f_cur, BitSpan f_prop);

/// Unnormalized posterior weight p(target | f) p(f | prefix).
double posterior_weight(const ConditionalModel& cm, BitSpan prefix, Bit target, BitSpan f);

/// Starts from a proposal draw, runs `steps` Metropolis-Hastings transitions
/// and returns the final state.
IntermediateConfig mh_chain(const ConditionalModel& cm, BitSpan prefix, Bit target,
                            std::size_t steps, Rng& rng);

struct McmcEstimate {
  GradientSet gradient;
  /// Mean over the batch of log(mean of p(target | f) over every proposal
  /// drawn). Since proposals come from the prior this estimates the
  /// log-likelihood without enumerating 2^l configurations.
  double loglik_estimate = 0.0;
};

/// Monte Carlo gradient of the two-layer loglik(): for each example, r chains
/// of t steps; the score-function integrands are evaluated at each chain's
/// final state and averaged over chains, then over the batch. Cost is
/// O(batch * r * t * l * (m1 + m2)); nothing scales with 2^l.
McmcEstimate mcmc_estimate(const ConditionalModel& cm, const Batch& batch, const McmcConfig& cfg);

/// Uses a stream seeded from cfg.seed.
GradientSet mcmc_grad(const ConditionalModel& cm, const Batch& batch, const McmcConfig& cfg);

/// Same, drawing from a caller-supplied stream.
McmcEstimate mcmc_estimate(const ConditionalModel& cm, const Batch& batch, const McmcConfig& cfg,
                           Rng& rng);

}  // namespace switchnet
