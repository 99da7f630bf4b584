#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "switchnet/bits.hpp"
#include "switchnet/random.hpp"

namespace switchnet {

/// Largest l for which exact enumeration over the 2^l intermediate
/// configurations is allowed. Above this, only the MCMC gradient works.
inline constexpr std::size_t kMaxExactIntermediates = 16;

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbFloor = 1e-300;

/// Logistic function, stable for any finite argument.
double sigmoid(double x);

/// log(sigmoid(x)) without cancellation for large |x|.
double log_sigmoid(double x);

/// One adaptive switch over a d-dimensional binary input: m auxiliary
/// logistic separators and an m-way softmax selecting between them.
///
/// Parameters live in one flat array, in the same order the checkpoint
/// format uses: aux weights (m x d, row-major), aux biases (m), switch
/// weights (m x d), switch biases (m). A d = 0 block is bias-only.
class SwitchBlock {
 public:
  SwitchBlock() = default;
  SwitchBlock(std::size_t input_dim, std::size_t width);

  std::size_t input_dim() const { return dim_; }
  std::size_t width() const { return width_; }
  std::size_t param_count() const { return values_.size(); }

  std::span<double> aux_weights(std::size_t j) { return {values_.data() + j * dim_, dim_}; }
  std::span<const double> aux_weights(std::size_t j) const {
    return {values_.data() + j * dim_, dim_};
  }
  double& aux_bias(std::size_t j) { return values_[width_ * dim_ + j]; }
  double aux_bias(std::size_t j) const { return values_[width_ * dim_ + j]; }

  std::span<double> switch_weights(std::size_t j) {
    return {values_.data() + width_ * (dim_ + 1) + j * dim_, dim_};
  }
  std::span<const double> switch_weights(std::size_t j) const {
    return {values_.data() + width_ * (dim_ + 1) + j * dim_, dim_};
  }
  double& switch_bias(std::size_t j) { return values_[width_ * (2 * dim_ + 1) + j]; }
  double switch_bias(std::size_t j) const { return values_[width_ * (2 * dim_ + 1) + j]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool operator==(const SwitchBlock&) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// Network shape shared by every conditional of a model.
struct Architecture {
  enum class Kind : std::uint32_t { single_layer = 1, two_layer = 2 };

  Kind kind = Kind::single_layer;
  std::size_t m = 1;   // single-layer switch width
  std::size_t m1 = 0;  // first-layer switch width
  std::size_t l = 0;   // number of intermediate variables
  std::size_t m2 = 0;  // second-layer switch width

  static Architecture single(std::size_t m);
  static Architecture two(std::size_t m1, std::size_t l, std::size_t m2);

  bool is_two_layer() const { return kind == Kind::two_layer; }
  /// Throws ConfigError on zero widths.
  void validate() const;
  /// "single(m=4)" or "two(m1=2,l=8,m2=32)".
  std::string describe() const;

  bool operator==(const Architecture&) const = default;
};

/// Parameters of the k-th conditional p(x_{k+1} | x_{[1:k]}).
///
/// Blocks are stored in a fixed order: for a single-layer conditional the
/// one block; for a two-layer conditional the l first-layer blocks (input
/// dimension k, width m1) followed by the second-layer block (input dimension
/// l, width m2). Gradients use the same layout.
class ConditionalModel {
 public:
  ConditionalModel() = default;
  /// Zero-initialized parameters.
  ConditionalModel(std::size_t index, const Architecture& arch);

  std::size_t index() const { return index_; }
  const Architecture& architecture() const { return arch_; }
  bool is_two_layer() const { return arch_.is_two_layer(); }
  std::size_t intermediate_count() const { return is_two_layer() ? arch_.l : 0; }

  std::span<SwitchBlock> blocks() { return blocks_; }
  std::span<const SwitchBlock> blocks() const { return blocks_; }

  /// First-layer blocks; empty for a single-layer conditional.
  std::span<const SwitchBlock> first_layer() const;
  /// The block that emits x_{k+1}.
  const SwitchBlock& output_block() const { return blocks_.back(); }

  std::size_t param_count() const;

  bool operator==(const ConditionalModel&) const = default;

 private:
  std::size_t index_ = 0;
  Architecture arch_;
  std::vector<SwitchBlock> blocks_;
};

/// n conditionals chained into a joint distribution over {0,1}^n.
class SwitchNetworkModel {
 public:
  SwitchNetworkModel() = default;
  SwitchNetworkModel(std::size_t n, const Architecture& arch);
  /// Takes ownership of prebuilt conditionals; checks index and shape invariants.
  SwitchNetworkModel(const Architecture& arch, std::vector<ConditionalModel> conditionals);

  std::size_t n() const { return conditionals_.size(); }
  const Architecture& architecture() const { return arch_; }

  ConditionalModel& conditional(std::size_t k) { return conditionals_.at(k); }
  const ConditionalModel& conditional(std::size_t k) const { return conditionals_.at(k); }
  std::span<ConditionalModel> conditionals() { return conditionals_; }
  std::span<const ConditionalModel> conditionals() const { return conditionals_; }

  bool operator==(const SwitchNetworkModel&) const = default;

 private:
  Architecture arch_;
  std::vector<ConditionalModel> conditionals_;
};

/// Draws every parameter i.i.d. uniform in [-scale, scale].
void initialize_uniform(ConditionalModel& cm, Rng& rng, double scale = 0.05);

/// Initializes conditional k from the stream derive_seed(seed, k), so each
/// conditional's starting point does not depend on the others.
void initialize_uniform(SwitchNetworkModel& model, std::uint64_t seed, double scale = 0.05);

// --- forward computations --------------------------------------------------

/// Softmax over the switch logits x^T alpha_j + beta_j.
std::vector<double> switch_probs(const SwitchBlock& block, BitSpan input);

/// sigmoid(x^T w_j + b_j) for each auxiliary separator.
std::vector<double> aux_probs(const SwitchBlock& block, BitSpan input);

/// Probability that the block outputs 1: sum_j switch_j * aux_j.
double block_mixture_prob(const SwitchBlock& block, BitSpan input);

/// Everything a block's forward pass produces, kept for the backward pass.
struct BlockActivation {
  std::vector<double> switch_prob;  // softmax over switch logits
  std::vector<double> aux_one;      // sigmoid(u_j)
  std::vector<double> aux_zero;     // sigmoid(-u_j), exact complement
  double prob_one = 0.5;            // sum_j switch_j * aux_one_j
  double prob_zero = 0.5;           // sum_j switch_j * aux_zero_j
};

/// Forward pass that reuses `act`'s storage.
void evaluate_block(const SwitchBlock& block, BitSpan input, BlockActivation& act);

/// p(X_{k+1} = 1 | prefix). Two-layer conditionals marginalize exactly over
/// all 2^l intermediate configurations.
double conditional_prob(const ConditionalModel& cm, BitSpan prefix);

/// Evaluates one conditional repeatedly. For two-layer conditionals the
/// second-layer output probability of every intermediate configuration is
/// tabulated once at construction, since it does not depend on the prefix.
///
/// Holds a reference to `cm`; the conditional must outlive the evaluator and
/// stay unmodified. Const member functions are safe to call concurrently.
class ConditionalEvaluator {
 public:
  explicit ConditionalEvaluator(const ConditionalModel& cm);

  const ConditionalModel& model() const { return *cm_; }

  /// p(X_{k+1} = 1 | prefix).
  double prob_one(BitSpan prefix) const;
  /// log p(X_{k+1} = target | prefix), argument floored at kProbFloor.
  double log_prob(BitSpan prefix, Bit target) const;

  /// Second-layer p(x_{k+1} = 1 | f) for configuration index c, where bit i
  /// of c is f_{i+1}. Two-layer only.
  double second_layer_prob(std::uint64_t config, Bit target) const {
    return target ? table_one_[config] : table_zero_[config];
  }
  std::span<const double> second_layer_table(Bit target) const {
    return target ? std::span<const double>(table_one_) : std::span<const double>(table_zero_);
  }

 private:
  const ConditionalModel* cm_;
  std::vector<double> table_one_;
  std::vector<double> table_zero_;
};

/// First-layer success probabilities P_i = p(F_i = 1 | prefix) and their
/// complements, computed without cancellation.
void intermediate_probs(const ConditionalModel& cm, BitSpan prefix, std::span<double> prob_one,
                        std::span<double> prob_zero, std::vector<BlockActivation>* acts = nullptr);

/// Prior weights p(f | prefix) over all 2^l configurations, bit i of the
/// index being f_{i+1}. Built as a product tree.
void intermediate_prior(std::span<const double> prob_one, std::span<const double> prob_zero,
                        std::vector<double>& weights);

/// Whole-model evaluation with cached per-conditional tables.
class ModelEvaluator {
 public:
  explicit ModelEvaluator(const SwitchNetworkModel& model);

  std::size_t n() const { return evaluators_.size(); }
  const ConditionalEvaluator& conditional(std::size_t k) const { return evaluators_[k]; }

  /// sum_k log p(x_{k+1} | x_{[1:k]}), in nats.
  double joint_log_prob(BitSpan x) const;
  /// Ancestral sampling at temperature one.
  Bits sample(Rng& rng) const;

 private:
  std::vector<ConditionalEvaluator> evaluators_;
};

double joint_log_prob(const SwitchNetworkModel& model, BitSpan x);

Bits sample_vector(const SwitchNetworkModel& model, Rng& rng);

}  // namespace switchnet
