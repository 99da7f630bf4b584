#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "switchnet/data.hpp"
#include "switchnet/mcmc.hpp"
#include "switchnet/model.hpp"
#include "switchnet/random.hpp"

namespace switchnet {

enum class GradientMode { exact, mcmc };

/// Hyperparameters of one training run. Text form is "key = value" lines with
/// the keys arch, m, m1, l, m2, epochs, batch_size, learning_rate, seed,
/// grad_mode, mcmc_r, mcmc_t, checkpoint_every, out_dir; '#' starts a comment.
struct TrainConfig {
  Architecture arch = Architecture::single(1);
  std::size_t epochs = 1;
  std::size_t batch_size = 1000;
  double learning_rate = 10.0;
  std::uint64_t seed = 0;
  GradientMode grad_mode = GradientMode::exact;
  std::size_t mcmc_r = 10;
  std::size_t mcmc_t = 20;
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
  std::filesystem::path out_dir = "run";

  /// Throws ConfigError. A nonzero dataset_size also checks batch_size.
  void validate(std::size_t dataset_size = 0) const;

  /// Overlays the keys present in `text` on this config.
  void apply_text(std::string_view text);
  std::string to_text() const;
};

TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

/// Parameter magnitude above which training aborts as diverged.
inline constexpr double kDivergenceLimit = 1e6;

/// Trains one conditional. The model is initialized uniform in
/// [-0.05, 0.05] from `rng`; each epoch shuffles the rows with `rng` and takes
/// one ascent step theta += lr * grad per mini-batch (final short batch kept).
class ConditionalTrainer {
 public:
  ConditionalTrainer(std::size_t k, const Dataset& data, const TrainConfig& config, Rng rng);

  /// Mean loglik at the current parameters over the whole dataset (exact,
  /// or the MCMC estimate in MCMC mode).
  double full_loglik();
  /// One pass over the data. Returns the mean over mini-batches of the
  /// loglik each batch had before its update.
  double run_epoch();

  std::size_t epochs_done() const { return epochs_done_; }
  const ConditionalModel& model() const { return model_; }
  ConditionalModel& model() { return model_; }

 private:
  Batch make_batch(std::span<const std::size_t> rows) const;

  std::size_t k_;
  const Dataset* data_;
  TrainConfig config_;
  Rng rng_;
  ConditionalModel model_;
  std::vector<std::size_t> order_;
  std::size_t epochs_done_ = 0;
};

struct ConditionalTrace {
  ConditionalModel model;
  /// Per-epoch negative loglik; entry 0 is at initialization.
  std::vector<double> nll;
};

/// Uses the stream derive_seed(config.seed, k), which is what train_all uses.
ConditionalTrace train_conditional(std::size_t k, const Dataset& data, const TrainConfig& config);
ConditionalTrace train_conditional(std::size_t k, const Dataset& data, const TrainConfig& config,
                                   Rng rng);

struct MetricsRecord {
  std::size_t epoch = 0;
  double nll_total = 0.0;       // -sum_k L^(k), nats per sample vector
  std::vector<double> nll_per_k;
  double seconds = 0.0;         // wall clock since training started
};

struct TrainOptions {
  /// Worker threads over conditionals. Results do not depend on this.
  std::size_t threads = 1;
  /// Called after every epoch (and once for epoch 0) with the current model.
  std::function<void(const MetricsRecord&, const SwitchNetworkModel&)> on_epoch;
};

struct TrainResult {
  SwitchNetworkModel model;
  std::vector<MetricsRecord> metrics;
};

/// Trains all n conditionals; conditional k draws from derive_seed(seed, k).
TrainResult train_all(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});

/// "epoch,nll_total,seconds" CSV line for one record (no newline).
std::string metrics_line(const MetricsRecord& record);
inline constexpr const char* kMetricsHeader = "epoch,nll_total,seconds";

}  // namespace switchnet
