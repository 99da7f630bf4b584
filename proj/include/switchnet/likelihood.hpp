#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "switchnet/bits.hpp"
#include "switchnet/model.hpp"

namespace switchnet {

/// Per-parameter values shaped exactly like one ConditionalModel: one
/// SwitchBlock-shaped array per block, in the conditional's block order.
class GradientSet {
 public:
  GradientSet() = default;
  static GradientSet zeros_like(const ConditionalModel& cm);

  std::span<SwitchBlock> blocks() { return blocks_; }
  std::span<const SwitchBlock> blocks() const { return blocks_; }

  /// All entries, block after block.
  std::vector<double> flatten() const;
  std::size_t size() const;
  double max_abs() const;
  bool all_finite() const;

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double factor);

 private:
  std::vector<SwitchBlock> blocks_;
};

/// theta <- theta + step * gradient.
void apply_step(ConditionalModel& cm, const GradientSet& gradient, double step);

/// All parameters of `cm`, block after block (same order as GradientSet::flatten).
std::vector<double> flatten_params(const ConditionalModel& cm);

/// One (prefix, target) training pair. The prefix is a view into storage
/// owned by the caller, usually a Dataset row.
struct Example {
  BitSpan prefix;
  Bit target = 0;
};

/// Mini-batch of examples for one conditional.
class Batch {
 public:
  Batch() = default;
  explicit Batch(std::vector<Example> examples) : examples_(std::move(examples)) {}

  void add(BitSpan prefix, Bit target) { examples_.push_back({prefix, target}); }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  std::span<const Example> examples() const { return examples_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }

  /// Throws ContractError if empty or if any prefix length differs from k.
  void validate(std::size_t k) const;

 private:
  std::vector<Example> examples_;
};

/// Mean log-likelihood (nats) of the batch under the conditional. Two-layer
/// conditionals marginalize the intermediate variables exactly.
double loglik(const ConditionalModel& cm, const Batch& batch);

struct Objective {
  double loglik = 0.0;
  GradientSet gradient;
};

/// Mean log-likelihood and its exact gradient in one pass.
Objective loglik_and_grad(const ConditionalModel& cm, const Batch& batch);

/// Exact analytic gradient of loglik().
GradientSet grad(const ConditionalModel& cm, const Batch& batch);

/// Central differences (L(theta + eps e_p) - L(theta - eps e_p)) / 2 eps.
GradientSet finite_diff_grad(const ConditionalModel& cm, const Batch& batch, double eps = 1e-5);

/// Adds d(scale * p_one)/d(block params) into `out`, where p_one is the
/// block's output probability and `act` its forward pass at `input`.
void accumulate_block_gradient(const SwitchBlock& block, BitSpan input,
                               const BlockActivation& act, double scale, SwitchBlock& out);

}  // namespace switchnet
