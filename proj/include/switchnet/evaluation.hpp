#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "switchnet/data.hpp"
#include "switchnet/model.hpp"

namespace switchnet {

/// p(x) = exp(joint_log_prob(x)) for all 2^n configurations, computed by a
/// depth-first walk over prefixes so each conditional is evaluated once per
/// distinct prefix.
DistributionTable model_distribution(const SwitchNetworkModel& model);

/// (1/2) sum_x |p(x) - q(x)|.
double tv_distance(const DistributionTable& p, const DistributionTable& q);

/// sum_x p(x) log(p(x) / q(x)) in nats; infinite if p puts mass where q has none.
double kl_divergence(const DistributionTable& p, const DistributionTable& q);

/// Jensen-Shannon divergence in nats, in [0, ln 2].
double js_divergence(const DistributionTable& p, const DistributionTable& q);

/// sqrt(js_divergence): the Jensen-Shannon metric.
double js_sqrt(const DistributionTable& p, const DistributionTable& q);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(const DistributionTable& table);

/// -sum_x table(x) joint_log_prob(model, x).
double expected_nll(const SwitchNetworkModel& model, const DistributionTable& table);

/// Mean of -joint_log_prob over the dataset rows (nats per vector).
double test_nll(const SwitchNetworkModel& model, const Dataset& data);

/// Fraction of generated words present in the lexicon. Empty words never count.
double dictionary_ratio(std::span<const std::string> generated, const std::set<std::string>& lexicon);

/// One evaluation result, emitted as a JSON line.
struct EvalReport {
  std::string model_id;
  std::string metric;
  double value = 0.0;
  /// How to read `value`, e.g. "nats", "divergence-nats", "sqrt-divergence-nats".
  std::string convention;
  std::map<std::string, std::string> metadata;

  std::string to_json_line() const;
};

/// Summary text table: model, epochs, -(log-likelihood), TV, JS (both conventions).
struct TableRow {
  std::string model;
  std::size_t epochs = 0;
  double nll = 0.0;
  double tv = 0.0;
  double js = 0.0;
  double js_root = 0.0;
};
std::string format_summary_table(std::span<const TableRow> rows);

}  // namespace switchnet
