#include "switchnet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "switchnet/error.hpp"
#include "switchnet/io.hpp"
#include "switchnet/likelihood.hpp"

namespace switchnet {

// --- config -------------------------------------------------------------------

void TrainConfig::validate(std::size_t dataset_size) const {
  arch.validate();
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (dataset_size != 0 && batch_size > dataset_size)
    throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds the dataset size " +
                      std::to_string(dataset_size));
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be a finite nonnegative number");
  if (grad_mode == GradientMode::mcmc) {
    if (!arch.is_two_layer()) throw ConfigError("grad_mode = mcmc requires the two-layer architecture");
    if (mcmc_r == 0 || mcmc_t == 0) throw ConfigError("mcmc_r and mcmc_t must be >= 1");
  } else if (arch.is_two_layer() && arch.l > kMaxExactIntermediates) {
    throw ConfigError("exact gradients enumerate 2^l configurations; l = " + std::to_string(arch.l) +
                      " exceeds the limit of " + std::to_string(kMaxExactIntermediates) +
                      ", use grad_mode = mcmc");
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t as_size(std::string_view key, std::string_view value) {
  try {
    return static_cast<std::size_t>(parse_uint(value));
  } catch (const DataError&) {
    throw ConfigError("config key '" + std::string(key) + "' needs a nonnegative integer, got '" +
                      std::string(value) + "'");
  }
}

}  // namespace

void TrainConfig::apply_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));

    if (key == "arch") {
      if (value == "single")
        arch.kind = Architecture::Kind::single_layer;
      else if (value == "two")
        arch.kind = Architecture::Kind::two_layer;
      else
        throw ConfigError("arch must be 'single' or 'two', got '" + std::string(value) + "'");
    } else if (key == "m") {
      arch.m = as_size(key, value);
    } else if (key == "m1") {
      arch.m1 = as_size(key, value);
    } else if (key == "l") {
      arch.l = as_size(key, value);
    } else if (key == "m2") {
      arch.m2 = as_size(key, value);
    } else if (key == "epochs") {
      epochs = as_size(key, value);
    } else if (key == "batch_size") {
      batch_size = as_size(key, value);
    } else if (key == "learning_rate") {
      try {
        learning_rate = parse_double(value);
      } catch (const DataError&) {
        throw ConfigError("learning_rate must be a number, got '" + std::string(value) + "'");
      }
    } else if (key == "seed") {
      seed = as_size(key, value);
    } else if (key == "grad_mode") {
      if (value == "exact")
        grad_mode = GradientMode::exact;
      else if (value == "mcmc")
        grad_mode = GradientMode::mcmc;
      else
        throw ConfigError("grad_mode must be 'exact' or 'mcmc', got '" + std::string(value) + "'");
    } else if (key == "mcmc_r") {
      mcmc_r = as_size(key, value);
    } else if (key == "mcmc_t") {
      mcmc_t = as_size(key, value);
    } else if (key == "checkpoint_every") {
      checkpoint_every = as_size(key, value);
    } else if (key == "out_dir") {
      out_dir = std::string(value);
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  }
  if (arch.is_two_layer()) arch.m = 0;
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  if (arch.is_two_layer())
    out << "arch = two\nm1 = " << arch.m1 << "\nl = " << arch.l << "\nm2 = " << arch.m2 << "\n";
  else
    out << "arch = single\nm = " << arch.m << "\n";
  out << "epochs = " << epochs << "\n"
      << "batch_size = " << batch_size << "\n"
      << "learning_rate = " << format_double(learning_rate) << "\n"
      << "seed = " << seed << "\n"
      << "grad_mode = " << (grad_mode == GradientMode::mcmc ? "mcmc" : "exact") << "\n"
      << "mcmc_r = " << mcmc_r << "\n"
      << "mcmc_t = " << mcmc_t << "\n"
      << "checkpoint_every = " << checkpoint_every << "\n"
      << "out_dir = " << out_dir.string() << "\n";
  return out.str();
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig config;
  config.apply_text(text);
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

// --- ConditionalTrainer -------------------------------------------------------

ConditionalTrainer::ConditionalTrainer(std::size_t k, const Dataset& data, const TrainConfig& config,
                                       Rng rng)
    : k_(k), data_(&data), config_(config), rng_(std::move(rng)) {
  config.validate(data.size());
  if (k >= data.n())
    throw ContractError("conditional index " + std::to_string(k) + " out of range for n = " +
                        std::to_string(data.n()));
  model_ = ConditionalModel(k, config.arch);
  initialize_uniform(model_, rng_);
  order_.resize(data.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

Batch ConditionalTrainer::make_batch(std::span<const std::size_t> rows) const {
  std::vector<Example> examples;
  examples.reserve(rows.size());
  for (std::size_t r : rows) {
    const BitSpan row = data_->row(r);
    examples.push_back({row.first(k_), row[k_]});
  }
  return Batch(std::move(examples));
}

double ConditionalTrainer::full_loglik() {
  std::vector<std::size_t> all(data_->size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Batch batch = make_batch(all);
  if (config_.grad_mode == GradientMode::mcmc) {
    const McmcConfig cfg{config_.mcmc_r, config_.mcmc_t, 0};
    return mcmc_estimate(model_, batch, cfg, rng_).loglik_estimate;
  }
  return loglik(model_, batch);
}

double ConditionalTrainer::run_epoch() {
  shuffle(std::span<std::size_t>(order_), rng_);
  const McmcConfig mcmc{config_.mcmc_r, config_.mcmc_t, 0};
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order_.size(); start += config_.batch_size) {
    const std::size_t stop = std::min(order_.size(), start + config_.batch_size);
    const Batch batch = make_batch(std::span<const std::size_t>(order_).subspan(start, stop - start));

    double ll;
    GradientSet g;
    if (config_.grad_mode == GradientMode::mcmc) {
      auto est = mcmc_estimate(model_, batch, mcmc, rng_);
      ll = est.loglik_estimate;
      g = std::move(est.gradient);
    } else {
      auto obj = loglik_and_grad(model_, batch);
      ll = obj.loglik;
      g = std::move(obj.gradient);
    }
    if (!g.all_finite())
      throw NumericalError("non-finite gradient for conditional k = " + std::to_string(k_) +
                           " in epoch " + std::to_string(epochs_done_ + 1));
    apply_step(model_, g, config_.learning_rate);
    for (const auto& block : model_.blocks())
      for (double v : block.values())
        if (!(std::abs(v) <= kDivergenceLimit))
          throw NumericalError("parameters of conditional k = " + std::to_string(k_) +
                               " diverged (|theta| > 1e6) in epoch " +
                               std::to_string(epochs_done_ + 1) + "; lower the learning rate");
    total += ll;
    ++batches;
  }
  ++epochs_done_;
  return total / static_cast<double>(batches);
}

ConditionalTrace train_conditional(std::size_t k, const Dataset& data, const TrainConfig& config,
                                   Rng rng) {
  ConditionalTrainer trainer(k, data, config, std::move(rng));
  ConditionalTrace trace;
  trace.nll.reserve(config.epochs + 1);
  trace.nll.push_back(-trainer.full_loglik());
  for (std::size_t e = 0; e < config.epochs; ++e) trace.nll.push_back(-trainer.run_epoch());
  trace.model = trainer.model();
  return trace;
}

ConditionalTrace train_conditional(std::size_t k, const Dataset& data, const TrainConfig& config) {
  return train_conditional(k, data, config, Rng(derive_seed(config.seed, k)));
}

// --- train_all ----------------------------------------------------------------

namespace {

// Runs fn(k) for k in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

TrainResult train_all(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
  config.validate(data.size());
  const std::size_t n = data.n();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<ConditionalTrainer> trainers;
  trainers.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    trainers.emplace_back(k, data, config, Rng(derive_seed(config.seed, k)));

  const auto snapshot = [&] {
    std::vector<ConditionalModel> conditionals;
    conditionals.reserve(n);
    for (const auto& t : trainers) conditionals.push_back(t.model());
    return SwitchNetworkModel(config.arch, std::move(conditionals));
  };

  TrainResult result;
  std::vector<double> nll(n);
  const auto record = [&](std::size_t epoch) {
    MetricsRecord rec;
    rec.epoch = epoch;
    rec.nll_per_k = nll;
    rec.nll_total = std::accumulate(nll.begin(), nll.end(), 0.0);
    rec.seconds = elapsed();
    result.metrics.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec, snapshot());
  };

  parallel_for(n, options.threads, [&](std::size_t k) { nll[k] = -trainers[k].full_loglik(); });
  record(0);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    parallel_for(n, options.threads, [&](std::size_t k) { nll[k] = -trainers[k].run_epoch(); });
    record(epoch);
  }
  result.model = snapshot();
  return result;
}

std::string metrics_line(const MetricsRecord& record) {
  std::ostringstream out;
  out << record.epoch << ',' << format_double(record.nll_total) << ',' << format_double(record.seconds);
  return out.str();
}

}  // namespace switchnet
