#include "switchnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include "json.hpp"

#include "switchnet/error.hpp"

namespace switchnet {

namespace {

void check_same_dim(const DistributionTable& p, const DistributionTable& q) {
  if (p.n() != q.n())
    throw ContractError("distribution dimensions differ (" + std::to_string(p.n()) + " vs " +
                        std::to_string(q.n()) + ")");
}

double xlogy_ratio(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return INFINITY;
  return x * std::log(x / y);
}

void walk(const ModelEvaluator& eval, Bits& prefix, double log_prob, std::vector<double>& out) {
  const std::size_t k = prefix.size();
  if (k == eval.n()) {
    out[config_index(prefix)] = std::exp(log_prob);
    return;
  }
  const auto& cond = eval.conditional(k);
  const double log_one = cond.log_prob(prefix, 1);
  const double log_zero = cond.log_prob(prefix, 0);
  prefix.push_back(0);
  walk(eval, prefix, log_prob + log_zero, out);
  prefix.back() = 1;
  walk(eval, prefix, log_prob + log_one, out);
  prefix.pop_back();
}

}  // namespace

DistributionTable model_distribution(const SwitchNetworkModel& model) {
  if (model.n() > DistributionTable::kMaxDim)
    throw ContractError("model_distribution needs n <= 20, got " + std::to_string(model.n()));
  const ModelEvaluator eval(model);
  std::vector<double> probs(std::size_t{1} << model.n());
  Bits prefix;
  prefix.reserve(model.n());
  walk(eval, prefix, 0.0, probs);
  return DistributionTable(model.n(), std::move(probs));
}

double tv_distance(const DistributionTable& p, const DistributionTable& q) {
  check_same_dim(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.probs().size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double kl_divergence(const DistributionTable& p, const DistributionTable& q) {
  check_same_dim(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.probs().size(); ++i) sum += xlogy_ratio(p[i], q[i]);
  return sum;
}

double js_divergence(const DistributionTable& p, const DistributionTable& q) {
  check_same_dim(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.probs().size(); ++i) {
    const double mid = 0.5 * (p[i] + q[i]);
    sum += 0.5 * xlogy_ratio(p[i], mid) + 0.5 * xlogy_ratio(q[i], mid);
  }
  return std::clamp(sum, 0.0, std::log(2.0));
}

double js_sqrt(const DistributionTable& p, const DistributionTable& q) {
  return std::sqrt(js_divergence(p, q));
}

double entropy(const DistributionTable& table) {
  double h = 0.0;
  for (double p : table.probs())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double expected_nll(const SwitchNetworkModel& model, const DistributionTable& table) {
  if (model.n() != table.n())
    throw ContractError("model has n = " + std::to_string(model.n()) + " but the table has n = " +
                        std::to_string(table.n()));
  const ModelEvaluator eval(model);
  double sum = 0.0;
  for (std::size_t i = 0; i < table.probs().size(); ++i) {
    if (table[i] == 0.0) continue;
    sum -= table[i] * eval.joint_log_prob(config_bits(i, table.n()));
  }
  return sum;
}

double test_nll(const SwitchNetworkModel& model, const Dataset& data) {
  if (model.n() != data.n())
    throw ContractError("model has n = " + std::to_string(model.n()) + " but the dataset has n = " +
                        std::to_string(data.n()));
  if (data.empty()) throw ContractError("test_nll of an empty dataset");
  const ModelEvaluator eval(model);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum -= eval.joint_log_prob(data.row(i));
  return sum / static_cast<double>(data.size());
}

double dictionary_ratio(std::span<const std::string> generated, const std::set<std::string>& lexicon) {
  if (generated.empty()) throw ContractError("dictionary_ratio needs at least one generated word");
  std::size_t hits = 0;
  for (const auto& w : generated)
    if (!w.empty() && lexicon.contains(w)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(generated.size());
}

std::string EvalReport::to_json_line() const {
  nlohmann::ordered_json j;
  j["model"] = model_id;
  j["metric"] = metric;
  j["value"] = value;
  j["convention"] = convention;
  j["metadata"] = metadata;
  return j.dump();
}

std::string format_summary_table(std::span<const TableRow> rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-34s %8s %14s %12s %14s %14s\n", "Model", "Epochs",
                "-(Log-lik)", "TV", "JS (div)", "JS (sqrt)");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-34s %8zu %14.6f %12.6f %14.6f %14.6f\n", r.model.c_str(),
                  r.epochs, r.nll, r.tv, r.js, r.js_root);
    out += line;
  }
  return out;
}

}  // namespace switchnet
