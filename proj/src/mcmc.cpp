#include "switchnet/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "switchnet/error.hpp"

namespace switchnet {

void McmcConfig::validate() const {
  if (rounds == 0) throw ConfigError("MCMC rounds r must be >= 1");
  if (steps == 0) throw ConfigError("MCMC steps t must be >= 1");
}

namespace {

void require_two_layer(const ConditionalModel& cm) {
  if (!cm.is_two_layer())
    throw ContractError("MCMC gradients are only defined for two-layer conditionals");
}

void check_config(const ConditionalModel& cm, BitSpan f) {
  if (f.size() != cm.intermediate_count())
    throw ContractError("intermediate configuration must have length l = " +
                        std::to_string(cm.intermediate_count()));
}

void draw_from_prior(std::span<const double> prob_one, Rng& rng, Bits& f) {
  for (std::size_t i = 0; i < prob_one.size(); ++i) f[i] = bernoulli(rng, prob_one[i]) ? 1 : 0;
}

double target_prob(const BlockActivation& act, Bit target) {
  return target ? act.prob_one : act.prob_zero;
}

// State of one chain. `current`/`act` always describe the chain's state.
struct Chain {
  Bits current;
  Bits proposal;
  BlockActivation act;
  BlockActivation proposal_act;
  double likelihood_sum = 0.0;  // sum of p(target | f) over every prior draw
  std::size_t draws = 0;

  explicit Chain(std::size_t l) : current(l), proposal(l) {}

  void run(const SwitchBlock& second, std::span<const double> prob_one, Bit target,
           std::size_t steps, Rng& rng) {
    draw_from_prior(prob_one, rng, current);
    evaluate_block(second, current, act);
    double cur = target_prob(act, target);
    likelihood_sum += cur;
    ++draws;
    for (std::size_t s = 0; s < steps; ++s) {
      draw_from_prior(prob_one, rng, proposal);
      evaluate_block(second, proposal, proposal_act);
      const double prop = target_prob(proposal_act, target);
      likelihood_sum += prop;
      ++draws;
      const double u = uniform01(rng);
      const bool accept = cur <= 0.0 || u < std::min(1.0, prop / cur);
      if (accept) {
        std::swap(current, proposal);
        std::swap(act, proposal_act);
        cur = prop;
      }
    }
  }
};

}  // namespace

IntermediateConfig propose(const ConditionalModel& cm, BitSpan prefix, Rng& rng) {
  require_two_layer(cm);
  if (prefix.size() != cm.index()) throw ContractError("prefix length must equal the conditional index");
  const std::size_t l = cm.intermediate_count();
  std::vector<double> p1(l), p0(l);
  intermediate_probs(cm, prefix, p1, p0);
  IntermediateConfig f(l);
  draw_from_prior(p1, rng, f);
  return f;
}

double acceptance_ratio(const ConditionalModel& cm, Bit target, BitSpan f_cur, BitSpan f_prop) {
  require_two_layer(cm);
  check_config(cm, f_cur);
  check_config(cm, f_prop);
  BlockActivation act;
  evaluate_block(cm.output_block(), f_cur, act);
  const double cur = target_prob(act, target);
  evaluate_block(cm.output_block(), f_prop, act);
  const double prop = target_prob(act, target);
  if (cur <= 0.0) return 1.0;
  return std::min(1.0, prop / cur);
}

double posterior_weight(const ConditionalModel& cm, BitSpan prefix, Bit target, BitSpan f) {
  require_two_layer(cm);
  check_config(cm, f);
  if (prefix.size() != cm.index()) throw ContractError("prefix length must equal the conditional index");
  const std::size_t l = cm.intermediate_count();
  std::vector<double> p1(l), p0(l);
  intermediate_probs(cm, prefix, p1, p0);
  double prior = 1.0;
  for (std::size_t i = 0; i < l; ++i) prior *= f[i] ? p1[i] : p0[i];
  BlockActivation act;
  evaluate_block(cm.output_block(), f, act);
  return target_prob(act, target) * prior;
}

IntermediateConfig mh_chain(const ConditionalModel& cm, BitSpan prefix, Bit target,
                            std::size_t steps, Rng& rng) {
  require_two_layer(cm);
  if (steps == 0) throw ContractError("chain length t must be >= 1");
  if (prefix.size() != cm.index()) throw ContractError("prefix length must equal the conditional index");
  const std::size_t l = cm.intermediate_count();
  std::vector<double> p1(l), p0(l);
  intermediate_probs(cm, prefix, p1, p0);
  Chain chain(l);
  chain.run(cm.output_block(), p1, target, steps, rng);
  return chain.current;
}

McmcEstimate mcmc_estimate(const ConditionalModel& cm, const Batch& batch, const McmcConfig& cfg,
                           Rng& rng) {
  require_two_layer(cm);
  cfg.validate();
  batch.validate(cm.index());

  const std::size_t l = cm.intermediate_count();
  const auto first = cm.first_layer();
  const auto& second = cm.output_block();
  McmcEstimate est;
  est.gradient = GradientSet::zeros_like(cm);
  auto grad_blocks = est.gradient.blocks();

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const double inv_rounds = 1.0 / static_cast<double>(cfg.rounds);
  std::vector<double> p1(l), p0(l), coef(l);
  std::vector<BlockActivation> acts;
  Chain chain(l);
  double total = 0.0;

  for (const auto& e : batch.examples()) {
    intermediate_probs(cm, e.prefix, p1, p0, &acts);
    std::fill(coef.begin(), coef.end(), 0.0);
    chain.likelihood_sum = 0.0;
    chain.draws = 0;

    for (std::size_t r = 0; r < cfg.rounds; ++r) {
      chain.run(second, p1, e.target, cfg.steps, rng);
      // d/dP_i log p(f | x) at the final state
      for (std::size_t i = 0; i < l; ++i)
        coef[i] += chain.current[i] ? 1.0 / std::max(p1[i], kProbFloor)
                                    : -1.0 / std::max(p0[i], kProbFloor);
      const double dlog = e.target ? 1.0 / std::max(chain.act.prob_one, kProbFloor)
                                   : -1.0 / std::max(chain.act.prob_zero, kProbFloor);
      accumulate_block_gradient(second, chain.current, chain.act, dlog * inv_rounds * inv_batch,
                                grad_blocks[l]);
    }

    for (std::size_t i = 0; i < l; ++i)
      accumulate_block_gradient(first[i], e.prefix, acts[i], coef[i] * inv_rounds * inv_batch,
                                grad_blocks[i]);
    total += std::log(std::max(chain.likelihood_sum / static_cast<double>(chain.draws), kProbFloor));
  }
  est.loglik_estimate = total * inv_batch;
  return est;
}

McmcEstimate mcmc_estimate(const ConditionalModel& cm, const Batch& batch, const McmcConfig& cfg) {
  Rng rng(cfg.seed);
  return mcmc_estimate(cm, batch, cfg, rng);
}

GradientSet mcmc_grad(const ConditionalModel& cm, const Batch& batch, const McmcConfig& cfg) {
  return mcmc_estimate(cm, batch, cfg).gradient;
}

}  // namespace switchnet
