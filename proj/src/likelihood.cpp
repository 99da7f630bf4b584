#include "switchnet/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <unordered_map>

#include "switchnet/error.hpp"
#include "switchnet/posterior.hpp"

namespace switchnet {

// --- GradientSet ------------------------------------------------------------

GradientSet GradientSet::zeros_like(const ConditionalModel& cm) {
  GradientSet g;
  g.blocks_.reserve(cm.blocks().size());
  for (const auto& b : cm.blocks()) g.blocks_.emplace_back(b.input_dim(), b.width());
  return g;
}

std::vector<double> GradientSet::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto& b : blocks_) out.insert(out.end(), b.values().begin(), b.values().end());
  return out;
}

std::size_t GradientSet::size() const {
  std::size_t count = 0;
  for (const auto& b : blocks_) count += b.param_count();
  return count;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks_)
    for (double v : b.values()) m = std::max(m, std::abs(v));
  return m;
}

bool GradientSet::all_finite() const {
  for (const auto& b : blocks_)
    for (double v : b.values())
      if (!std::isfinite(v)) return false;
  return true;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.blocks_.size() != blocks_.size()) throw ContractError("gradient shape mismatch");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    auto dst = blocks_[b].values();
    auto src = other.blocks_[b].values();
    if (dst.size() != src.size()) throw ContractError("gradient shape mismatch");
    for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += src[p];
  }
  return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
  for (auto& b : blocks_)
    for (double& v : b.values()) v *= factor;
  return *this;
}

void apply_step(ConditionalModel& cm, const GradientSet& gradient, double step) {
  auto blocks = cm.blocks();
  auto grads = gradient.blocks();
  if (blocks.size() != grads.size()) throw ContractError("gradient shape mismatch");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto theta = blocks[b].values();
    auto g = grads[b].values();
    if (theta.size() != g.size()) throw ContractError("gradient shape mismatch");
    for (std::size_t p = 0; p < theta.size(); ++p) theta[p] += step * g[p];
  }
}

std::vector<double> flatten_params(const ConditionalModel& cm) {
  std::vector<double> out;
  out.reserve(cm.param_count());
  for (const auto& b : cm.blocks()) out.insert(out.end(), b.values().begin(), b.values().end());
  return out;
}

void Batch::validate(std::size_t k) const {
  if (examples_.empty()) throw ContractError("batch is empty");
  for (const auto& e : examples_) {
    if (e.prefix.size() != k)
      throw ContractError("batch prefix length " + std::to_string(e.prefix.size()) +
                          " does not match conditional index " + std::to_string(k));
  }
}

// --- backward ---------------------------------------------------------------

void accumulate_block_gradient(const SwitchBlock& block, BitSpan input,
                               const BlockActivation& act, double scale, SwitchBlock& out) {
  const std::size_t m = block.width();
  const std::size_t d = block.input_dim();
  for (std::size_t j = 0; j < m; ++j) {
    const double s = act.switch_prob[j];
    // dp/du_j = s_j a_j (1 - a_j);  dp/dv_j = s_j (a_j - p).
    // a_j - p == (1 - p) - (1 - a_j); take the side without cancellation.
    const double du = scale * s * act.aux_one[j] * act.aux_zero[j];
    const double gap = act.prob_one > 0.5 ? act.prob_zero - act.aux_zero[j] : act.aux_one[j] - act.prob_one;
    const double dv = scale * s * gap;
    auto gw = out.aux_weights(j);
    auto ga = out.switch_weights(j);
    for (std::size_t t = 0; t < d; ++t) {
      if (input[t]) {
        gw[t] += du;
        ga[t] += dv;
      }
    }
    out.aux_bias(j) += du;
    out.switch_bias(j) += dv;
  }
}

namespace {

double floored(double p) { return std::max(p, kProbFloor); }

// Distinct prefixes of a batch with per-target multiplicities. Rows repeat
// heavily for small k, and every term of the objective depends only on
// (prefix, target).
struct PrefixGroup {
  BitSpan prefix;
  double count[2] = {0.0, 0.0};
};

std::vector<PrefixGroup> group_prefixes(const Batch& batch) {
  std::vector<PrefixGroup> groups;
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(batch.size());
  for (const auto& e : batch.examples()) {
    const std::string_view key(reinterpret_cast<const char*>(e.prefix.data()), e.prefix.size());
    auto [it, fresh] = index.try_emplace(key, groups.size());
    if (fresh) groups.push_back({e.prefix});
    groups[it->second].count[e.target ? 1 : 0] += 1.0;
  }
  return groups;
}

Objective single_layer_objective(const ConditionalModel& cm, const Batch& batch, bool with_grad) {
  Objective obj;
  if (with_grad) obj.gradient = GradientSet::zeros_like(cm);
  const auto& block = cm.output_block();
  const double inv = 1.0 / static_cast<double>(batch.size());
  BlockActivation act;
  double total = 0.0;
  for (const auto& g : group_prefixes(batch)) {
    evaluate_block(block, g.prefix, act);
    total += g.count[1] * std::log(floored(act.prob_one)) + g.count[0] * std::log(floored(act.prob_zero));
    if (with_grad) {
      const double dp = g.count[1] / floored(act.prob_one) - g.count[0] / floored(act.prob_zero);
      accumulate_block_gradient(block, g.prefix, act, dp * inv, obj.gradient.blocks()[0]);
    }
  }
  obj.loglik = total * inv;
  return obj;
}

Objective two_layer_objective(const ConditionalModel& cm, const Batch& batch, bool with_grad) {
  Objective obj;
  const std::size_t l = cm.intermediate_count();
  if (l > kMaxExactIntermediates)
    throw ContractError("exact likelihood needs l <= " + std::to_string(kMaxExactIntermediates));
  const std::size_t configs = std::size_t{1} << l;
  const double inv = 1.0 / static_cast<double>(batch.size());
  const auto groups = group_prefixes(batch);

  // p(y | f) for every f, with activations kept for the backward pass.
  const auto& second = cm.output_block();
  std::vector<BlockActivation> second_acts(configs);
  std::vector<double> table[2] = {std::vector<double>(configs), std::vector<double>(configs)};
  Bits f(l);
  for (std::size_t c = 0; c < configs; ++c) {
    for (std::size_t i = 0; i < l; ++i) f[i] = static_cast<Bit>((c >> i) & 1u);
    evaluate_block(second, f, second_acts[c]);
    table[1][c] = second_acts[c].prob_one;
    table[0][c] = second_acts[c].prob_zero;
  }

  if (with_grad) obj.gradient = GradientSet::zeros_like(cm);
  auto grad_blocks = obj.gradient.blocks();
  const auto first = cm.first_layer();

  // Posterior mass per configuration, summed over the batch, split by target.
  std::vector<double> mass[2] = {std::vector<double>(configs, 0.0),
                                 std::vector<double>(configs, 0.0)};
  std::vector<double> p1(l), p0(l), marginal(l), marginal_zero(l), coef(l), post;
  std::vector<BlockActivation> acts;
  double total = 0.0;

  for (const auto& g : groups) {
    intermediate_probs(cm, g.prefix, p1, p0, with_grad ? &acts : nullptr);
    std::fill(coef.begin(), coef.end(), 0.0);
    for (int y = 0; y < 2; ++y) {
      const double count = g.count[y];
      if (count == 0.0) continue;
      total += count * intermediate_posterior(p1, p0, table[y], post, marginal, marginal_zero);
      if (!with_grad) continue;
      auto& m = mass[y];
      for (std::size_t c = 0; c < configs; ++c) m[c] += count * post[c];
      // E_post[d/dP_i log p(F | x)] = mu_i / P_i - (1 - mu_i) / (1 - P_i)
      for (std::size_t i = 0; i < l; ++i)
        coef[i] += count * (marginal[i] / floored(p1[i]) - marginal_zero[i] / floored(p0[i]));
    }
    if (!with_grad) continue;
    for (std::size_t i = 0; i < l; ++i)
      accumulate_block_gradient(first[i], g.prefix, acts[i], coef[i] * inv, grad_blocks[i]);
  }

  if (with_grad) {
    // d/dtheta_2 log p(y | f) = +-(1 / p(y | f)) dp(1 | f)/dtheta_2
    for (std::size_t c = 0; c < configs; ++c) {
      if (mass[1][c] == 0.0 && mass[0][c] == 0.0) continue;
      const double w = mass[1][c] / floored(table[1][c]) - mass[0][c] / floored(table[0][c]);
      for (std::size_t i = 0; i < l; ++i) f[i] = static_cast<Bit>((c >> i) & 1u);
      accumulate_block_gradient(second, f, second_acts[c], w * inv, grad_blocks[l]);
    }
  }

  obj.loglik = total * inv;
  return obj;
}

Objective objective(const ConditionalModel& cm, const Batch& batch, bool with_grad) {
  batch.validate(cm.index());
  return cm.is_two_layer() ? two_layer_objective(cm, batch, with_grad)
                           : single_layer_objective(cm, batch, with_grad);
}

}  // namespace

double loglik(const ConditionalModel& cm, const Batch& batch) {
  return objective(cm, batch, false).loglik;
}

Objective loglik_and_grad(const ConditionalModel& cm, const Batch& batch) {
  return objective(cm, batch, true);
}

GradientSet grad(const ConditionalModel& cm, const Batch& batch) {
  return objective(cm, batch, true).gradient;
}

GradientSet finite_diff_grad(const ConditionalModel& cm, const Batch& batch, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite-difference step must be positive");
  batch.validate(cm.index());
  GradientSet out = GradientSet::zeros_like(cm);
  ConditionalModel probe = cm;
  for (std::size_t b = 0; b < probe.blocks().size(); ++b) {
    auto theta = probe.blocks()[b].values();
    auto g = out.blocks()[b].values();
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double saved = theta[p];
      theta[p] = saved + eps;
      const double up = loglik(probe, batch);
      theta[p] = saved - eps;
      const double down = loglik(probe, batch);
      theta[p] = saved;
      g[p] = (up - down) / (2.0 * eps);
    }
  }
  return out;
}

}  // namespace switchnet
