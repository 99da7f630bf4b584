#include "switchnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "switchnet/error.hpp"

namespace switchnet {

namespace {

double dot(std::span<const double> w, BitSpan x) {
  double sum = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) sum += w[t] * static_cast<double>(x[t]);
  return sum;
}

void check_input(const SwitchBlock& block, BitSpan input) {
  if (input.size() != block.input_dim()) {
    throw ContractError("switch block expects input of length " +
                        std::to_string(block.input_dim()) + ", got " +
                        std::to_string(input.size()));
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// --- SwitchBlock ------------------------------------------------------------

SwitchBlock::SwitchBlock(std::size_t input_dim, std::size_t width)
    : dim_(input_dim), width_(width), values_(2 * width * (input_dim + 1), 0.0) {
  if (width == 0) throw ContractError("switch block width must be positive");
}

// --- Architecture -----------------------------------------------------------

Architecture Architecture::single(std::size_t m) {
  Architecture a;
  a.kind = Kind::single_layer;
  a.m = m;
  return a;
}

Architecture Architecture::two(std::size_t m1, std::size_t l, std::size_t m2) {
  Architecture a;
  a.kind = Kind::two_layer;
  a.m = 0;
  a.m1 = m1;
  a.l = l;
  a.m2 = m2;
  return a;
}

void Architecture::validate() const {
  if (kind == Kind::single_layer) {
    if (m == 0) throw ConfigError("single-layer architecture needs m >= 1");
    if (m1 != 0 || l != 0 || m2 != 0)
      throw ConfigError("single-layer architecture does not take m1, l or m2");
  } else if (kind == Kind::two_layer) {
    if (m1 == 0 || l == 0 || m2 == 0)
      throw ConfigError("two-layer architecture needs m1, l, m2 >= 1");
  } else {
    throw ConfigError("unknown architecture kind");
  }
}

std::string Architecture::describe() const {
  std::ostringstream out;
  if (is_two_layer())
    out << "two(m1=" << m1 << ",l=" << l << ",m2=" << m2 << ")";
  else
    out << "single(m=" << m << ")";
  return out.str();
}

// --- ConditionalModel -------------------------------------------------------

ConditionalModel::ConditionalModel(std::size_t index, const Architecture& arch)
    : index_(index), arch_(arch) {
  arch.validate();
  if (arch.is_two_layer()) {
    blocks_.reserve(arch.l + 1);
    for (std::size_t i = 0; i < arch.l; ++i) blocks_.emplace_back(index, arch.m1);
    blocks_.emplace_back(arch.l, arch.m2);
  } else {
    blocks_.emplace_back(index, arch.m);
  }
}

std::span<const SwitchBlock> ConditionalModel::first_layer() const {
  if (!is_two_layer()) return {};
  return std::span<const SwitchBlock>(blocks_).first(arch_.l);
}

std::size_t ConditionalModel::param_count() const {
  std::size_t count = 0;
  for (const auto& b : blocks_) count += b.param_count();
  return count;
}

// --- SwitchNetworkModel -----------------------------------------------------

SwitchNetworkModel::SwitchNetworkModel(std::size_t n, const Architecture& arch) : arch_(arch) {
  if (n == 0) throw ContractError("model dimension n must be positive");
  conditionals_.reserve(n);
  for (std::size_t k = 0; k < n; ++k) conditionals_.emplace_back(k, arch);
}

SwitchNetworkModel::SwitchNetworkModel(const Architecture& arch,
                                       std::vector<ConditionalModel> conditionals)
    : arch_(arch), conditionals_(std::move(conditionals)) {
  if (conditionals_.empty()) throw ContractError("model dimension n must be positive");
  for (std::size_t k = 0; k < conditionals_.size(); ++k) {
    const auto& cm = conditionals_[k];
    if (cm.index() != k) throw ContractError("conditional at position k must have index k");
    if (!(cm.architecture() == arch)) throw ContractError("conditionals must share one architecture");
  }
}

void initialize_uniform(ConditionalModel& cm, Rng& rng, double scale) {
  for (auto& block : cm.blocks())
    for (double& v : block.values()) v = uniform(rng, -scale, scale);
}

void initialize_uniform(SwitchNetworkModel& model, std::uint64_t seed, double scale) {
  for (auto& cm : model.conditionals()) {
    Rng rng(derive_seed(seed, cm.index()));
    initialize_uniform(cm, rng, scale);
  }
}

// --- forward ----------------------------------------------------------------

void evaluate_block(const SwitchBlock& block, BitSpan input, BlockActivation& act) {
  check_input(block, input);
  const std::size_t m = block.width();
  act.switch_prob.resize(m);
  act.aux_one.resize(m);
  act.aux_zero.resize(m);

  double max_logit = -INFINITY;
  for (std::size_t j = 0; j < m; ++j) {
    const double v = dot(block.switch_weights(j), input) + block.switch_bias(j);
    act.switch_prob[j] = v;
    max_logit = std::max(max_logit, v);
  }
  double norm = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    act.switch_prob[j] = std::exp(act.switch_prob[j] - max_logit);
    norm += act.switch_prob[j];
  }
  double p1 = 0.0;
  double p0 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    act.switch_prob[j] /= norm;
    const double u = dot(block.aux_weights(j), input) + block.aux_bias(j);
    const double e = std::exp(-std::abs(u));
    const double big = 1.0 / (1.0 + e);
    const double small = e * big;
    act.aux_one[j] = u >= 0.0 ? big : small;
    act.aux_zero[j] = u >= 0.0 ? small : big;
    p1 += act.switch_prob[j] * act.aux_one[j];
    p0 += act.switch_prob[j] * act.aux_zero[j];
  }
  act.prob_one = p1;
  act.prob_zero = p0;
}

std::vector<double> switch_probs(const SwitchBlock& block, BitSpan input) {
  BlockActivation act;
  evaluate_block(block, input, act);
  return act.switch_prob;
}

std::vector<double> aux_probs(const SwitchBlock& block, BitSpan input) {
  BlockActivation act;
  evaluate_block(block, input, act);
  return act.aux_one;
}

double block_mixture_prob(const SwitchBlock& block, BitSpan input) {
  BlockActivation act;
  evaluate_block(block, input, act);
  return act.prob_one;
}

void intermediate_probs(const ConditionalModel& cm, BitSpan prefix, std::span<double> prob_one,
                        std::span<double> prob_zero, std::vector<BlockActivation>* acts) {
  const auto first = cm.first_layer();
  BlockActivation local;
  if (acts) acts->resize(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    BlockActivation& act = acts ? (*acts)[i] : local;
    evaluate_block(first[i], prefix, act);
    prob_one[i] = act.prob_one;
    prob_zero[i] = act.prob_zero;
  }
}

void intermediate_prior(std::span<const double> prob_one, std::span<const double> prob_zero,
                        std::vector<double>& weights) {
  const std::size_t l = prob_one.size();
  weights.assign(std::size_t{1} << l, 0.0);
  weights[0] = 1.0;
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t half = std::size_t{1} << i;
    for (std::size_t c = 0; c < half; ++c) {
      weights[c | half] = weights[c] * prob_one[i];
      weights[c] *= prob_zero[i];
    }
  }
}

// --- ConditionalEvaluator ---------------------------------------------------

ConditionalEvaluator::ConditionalEvaluator(const ConditionalModel& cm) : cm_(&cm) {
  if (!cm.is_two_layer()) return;
  const std::size_t l = cm.intermediate_count();
  if (l > kMaxExactIntermediates) {
    throw ContractError("exact evaluation needs l <= " + std::to_string(kMaxExactIntermediates) +
                        " (got l = " + std::to_string(l) + "); use the MCMC gradient mode");
  }
  const std::size_t configs = std::size_t{1} << l;
  table_one_.resize(configs);
  table_zero_.resize(configs);
  BlockActivation act;
  Bits f(l);
  for (std::size_t c = 0; c < configs; ++c) {
    for (std::size_t i = 0; i < l; ++i) f[i] = static_cast<Bit>((c >> i) & 1u);
    evaluate_block(cm.output_block(), f, act);
    table_one_[c] = act.prob_one;
    table_zero_[c] = act.prob_zero;
  }
}

namespace {

// log sum_c prior(c) * table(c), falling back to log space when the linear
// sum underflows.
double log_marginal(std::span<const double> prob_one, std::span<const double> prob_zero,
                    std::span<const double> table) {
  std::vector<double> prior;
  intermediate_prior(prob_one, prob_zero, prior);
  double total = 0.0;
  for (std::size_t c = 0; c < prior.size(); ++c) total += prior[c] * table[c];
  if (total >= 1e-250) return std::log(total);

  const std::size_t l = prob_one.size();
  std::vector<double> log_prior(prior.size(), 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    const double lp1 = std::log(std::max(prob_one[i], kProbFloor));
    const double lp0 = std::log(std::max(prob_zero[i], kProbFloor));
    const std::size_t half = std::size_t{1} << i;
    for (std::size_t c = 0; c < half; ++c) {
      log_prior[c | half] = log_prior[c] + lp1;
      log_prior[c] += lp0;
    }
  }
  double max_term = -INFINITY;
  for (std::size_t c = 0; c < log_prior.size(); ++c) {
    log_prior[c] += std::log(std::max(table[c], kProbFloor));
    max_term = std::max(max_term, log_prior[c]);
  }
  double sum = 0.0;
  for (double v : log_prior) sum += std::exp(v - max_term);
  return std::max(max_term + std::log(sum), std::log(kProbFloor));
}

}  // namespace

double ConditionalEvaluator::prob_one(BitSpan prefix) const {
  if (prefix.size() != cm_->index())
    throw ContractError("prefix length must equal the conditional index " +
                        std::to_string(cm_->index()));
  if (!cm_->is_two_layer()) return block_mixture_prob(cm_->output_block(), prefix);
  const std::size_t l = cm_->intermediate_count();
  std::vector<double> p1(l), p0(l), prior;
  intermediate_probs(*cm_, prefix, p1, p0);
  intermediate_prior(p1, p0, prior);
  double total = 0.0;
  for (std::size_t c = 0; c < prior.size(); ++c) total += prior[c] * table_one_[c];
  return total;
}

double ConditionalEvaluator::log_prob(BitSpan prefix, Bit target) const {
  if (prefix.size() != cm_->index())
    throw ContractError("prefix length must equal the conditional index " +
                        std::to_string(cm_->index()));
  if (!cm_->is_two_layer()) {
    BlockActivation act;
    evaluate_block(cm_->output_block(), prefix, act);
    return std::log(std::max(target ? act.prob_one : act.prob_zero, kProbFloor));
  }
  const std::size_t l = cm_->intermediate_count();
  std::vector<double> p1(l), p0(l);
  intermediate_probs(*cm_, prefix, p1, p0);
  return log_marginal(p1, p0, second_layer_table(target));
}

double conditional_prob(const ConditionalModel& cm, BitSpan prefix) {
  return ConditionalEvaluator(cm).prob_one(prefix);
}

// --- ModelEvaluator ---------------------------------------------------------

ModelEvaluator::ModelEvaluator(const SwitchNetworkModel& model) {
  evaluators_.reserve(model.n());
  for (const auto& cm : model.conditionals()) evaluators_.emplace_back(cm);
}

double ModelEvaluator::joint_log_prob(BitSpan x) const {
  if (x.size() != n())
    throw ContractError("vector length " + std::to_string(x.size()) +
                        " does not match model dimension " + std::to_string(n()));
  double total = 0.0;
  for (std::size_t k = 0; k < n(); ++k) total += evaluators_[k].log_prob(x.first(k), x[k]);
  return total;
}

Bits ModelEvaluator::sample(Rng& rng) const {
  Bits x(n());
  for (std::size_t k = 0; k < n(); ++k) {
    const double p = evaluators_[k].prob_one(BitSpan(x).first(k));
    x[k] = bernoulli(rng, p) ? 1 : 0;
  }
  return x;
}

double joint_log_prob(const SwitchNetworkModel& model, BitSpan x) {
  return ModelEvaluator(model).joint_log_prob(x);
}

Bits sample_vector(const SwitchNetworkModel& model, Rng& rng) {
  return ModelEvaluator(model).sample(rng);
}

}  // namespace switchnet
