#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "switchnet/checkpoint.hpp"
#include "switchnet/data.hpp"
#include "switchnet/diagnostics.hpp"
#include "switchnet/error.hpp"
#include "switchnet/evaluation.hpp"
#include "switchnet/io.hpp"
#include "switchnet/trainer.hpp"

namespace switchnet::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> config;
};

struct GenDataArgs {
  std::size_t n = 10;
  std::size_t count = 0;
  std::size_t test_count = 0;
  std::string images;
  int threshold = 150;
  std::size_t crop = 0;
  std::size_t downsample = 1;
  std::size_t limit = 0;
  std::string input;
};

struct TrainArgs {
  std::string data;
  std::optional<std::string> arch;
  std::optional<std::size_t> m, m1, l, m2, epochs, batch, r, t, checkpoint_every;
  std::optional<double> lr;
  std::optional<std::string> grad_mode;
  std::size_t threads = 1;
};

struct SampleArgs {
  std::string model;
  std::size_t count = 100;
  std::string format = "raw-bits";
  std::string output;
};

struct EvalArgs {
  std::vector<std::string> models;
  std::vector<std::string> names;
  std::string table;
  std::string data;
  std::string samples;
  std::string lexicon;
  std::string train;
  std::string test;
  std::string m_values = "1,2,4,8,32";
  std::size_t epochs = 100;
  std::size_t batch = 1000;
  double lr = 10.0;
  std::size_t threads = 1;
};

struct GradcheckArgs {
  std::string mode = "both";
  std::size_t instances = 50;
  std::size_t batch = 16;
  std::optional<std::size_t> l;
  std::string r_values = "1,10,50";
  std::size_t t = 20;
  std::size_t trials = 100;
  std::size_t mcmc_batch = 256;
  std::size_t mcmc_k = 10;
  std::size_t mcmc_m1 = 8;
  std::size_t mcmc_m2 = 4;
};

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(static_cast<std::size_t>(parse_uint(item)));
    } catch (const DataError&) {
      throw ConfigError(std::string(what) + " must be a comma-separated list of integers, got '" +
                        text + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

/// Lines of a sample word file; blank lines are kept as empty words.
std::vector<std::string> read_sample_words(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    words.push_back(first == std::string::npos
                        ? std::string{}
                        : line.substr(first, line.find_last_not_of(" \t\r") - first + 1));
  }
  return words;
}

std::string pgm_grid(const Dataset& samples) {
  const std::size_t n = samples.n();
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n)
    throw ConfigError("pgm-grid needs n to be a perfect square, got n = " + std::to_string(n));
  const std::size_t count = samples.size();
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  const std::size_t rows = (count + cols - 1) / cols;
  const std::size_t width = cols * (side + 1) + 1;
  const std::size_t height = rows * (side + 1) + 1;
  std::string pixels(width * height, static_cast<char>(128));
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t top = (s / cols) * (side + 1) + 1;
    const std::size_t left = (s % cols) * (side + 1) + 1;
    const BitSpan bits = samples.row(s);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c)
        pixels[(top + r) * width + left + c] = static_cast<char>(bits[r * side + c] ? 255 : 0);
  }
  return "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n" + pixels;
}

class Runner {
 public:
  Runner(const std::vector<std::string>& args, std::ostream& out) : args_(args), out_(out) {}

  fs::path out_dir(const char* fallback) const {
    if (globals.out_dir) return *globals.out_dir;
    if (globals.config) return load_config(*globals.config).out_dir;
    return fallback;
  }

  std::uint64_t seed() const {
    if (globals.seed) return *globals.seed;
    if (globals.config) return load_config(*globals.config).seed;
    return 0;
  }

  RunManifest& start(const fs::path& dir, const std::string& command,
                     std::optional<std::uint64_t> run_seed = {}) {
    fs::create_directories(dir);
    manifest_.emplace(dir, args_, command);
    manifest_->add_seed("seed", run_seed ? *run_seed : seed());
    manifest_->begin();
    return *manifest_;
  }

  /// Marks the active manifest failed, if a run got that far.
  void fail(const std::string& message) {
    if (manifest_) {
      try {
        manifest_->finish(false, message);
      } catch (...) {
      }
    }
  }

  int gen_synthetic(const GenDataArgs& a) {
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "gen-data synthetic");
    const std::uint64_t s = seed();
    if (a.count == 0) throw ConfigError("--count must be >= 1");
    const auto table = switchnet::gen_synthetic(a.n, derive_seed(s, 0));
    save_table(table, dir / "table.txt");
    save_dataset(sample_from_table(table, a.count, derive_seed(s, 1)), dir / "data.txt");
    manifest.add_output("table", dir / "table.txt");
    manifest.add_output("dataset", dir / "data.txt");
    if (a.test_count > 0) {
      save_dataset(sample_from_table(table, a.test_count, derive_seed(s, 2)), dir / "test.txt");
      manifest.add_output("test-dataset", dir / "test.txt");
    }
    out_ << "synthetic n=" << a.n << " entropy=" << format_double(entropy(table)) << " nats\n";
    manifest.finish(true);
    return kOk;
  }

  int gen_mnist(const GenDataArgs& a) {
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "gen-data mnist");
    manifest.add_input("images", a.images);
    MnistOptions opts;
    opts.threshold = a.threshold;
    opts.crop = a.crop;
    opts.downsample = a.downsample;
    opts.limit = a.limit;
    const Dataset data = load_mnist_binary(a.images, opts);
    save_dataset(data, dir / "data.txt");
    manifest.add_output("dataset", dir / "data.txt");
    out_ << "mnist n=" << data.n() << " count=" << data.size() << "\n";
    manifest.finish(true);
    return kOk;
  }

  int gen_words(const GenDataArgs& a) {
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "gen-data words");
    manifest.add_input("wordlist", a.input);
    const auto words = read_word_list(a.input);
    if (words.empty()) throw DataError(a.input + ": no words");
    Dataset data;
    try {
      data = words_dataset(words, "words:" + fs::path(a.input).filename().string());
    } catch (const ContractError& e) {
      throw DataError(a.input + ": " + e.what());
    }
    save_dataset(data, dir / "data.txt");
    const std::set<std::string> lexicon(words.begin(), words.end());
    std::string text;
    for (const auto& w : lexicon) text += w + "\n";
    atomic_write(dir / "lexicon.txt", text);
    manifest.add_output("dataset", dir / "data.txt");
    manifest.add_output("lexicon", dir / "lexicon.txt");
    out_ << "words count=" << data.size() << " distinct=" << lexicon.size() << "\n";
    manifest.finish(true);
    return kOk;
  }

  TrainConfig resolve_train_config(const TrainArgs& a) const {
    TrainConfig config;
    if (globals.config) config = load_config(*globals.config);
    if (a.arch) {
      const bool two = *a.arch == "two";
      if (!two && *a.arch != "single") throw ConfigError("--arch must be 'single' or 'two'");
      const Architecture base = config.arch;
      config.arch.kind = two ? Architecture::Kind::two_layer : Architecture::Kind::single_layer;
      if (base.kind != config.arch.kind) config.arch.m = config.arch.m1 = config.arch.l = config.arch.m2 = 0;
    }
    if (a.m) config.arch.m = *a.m;
    if (a.m1) config.arch.m1 = *a.m1;
    if (a.l) config.arch.l = *a.l;
    if (a.m2) config.arch.m2 = *a.m2;
    if (a.epochs) config.epochs = *a.epochs;
    if (a.batch) config.batch_size = *a.batch;
    if (a.lr) config.learning_rate = *a.lr;
    if (a.grad_mode) {
      if (*a.grad_mode == "exact")
        config.grad_mode = GradientMode::exact;
      else if (*a.grad_mode == "mcmc")
        config.grad_mode = GradientMode::mcmc;
      else
        throw ConfigError("--grad-mode must be 'exact' or 'mcmc'");
    }
    if (a.r) config.mcmc_r = *a.r;
    if (a.t) config.mcmc_t = *a.t;
    if (a.checkpoint_every) config.checkpoint_every = *a.checkpoint_every;
    if (globals.seed) config.seed = *globals.seed;
    if (globals.out_dir) config.out_dir = *globals.out_dir;
    return config;
  }

  int train(const TrainArgs& a) {
    const TrainConfig config = resolve_train_config(a);
    config.validate();
    const Dataset data = load_dataset(a.data);
    config.validate(data.size());
    const fs::path dir = config.out_dir;
    auto& manifest = start(dir, "train", config.seed);
    manifest.set_config(config.to_text());
    manifest.add_input("dataset", a.data);
    manifest.begin();

    atomic_write(dir / "config.txt", config.to_text());
    const fs::path metrics_tmp = dir / "metrics.csv.part";
    const fs::path per_k_tmp = dir / "metrics_per_k.csv.part";
    std::ofstream metrics(metrics_tmp, std::ios::trunc);
    std::ofstream per_k(per_k_tmp, std::ios::trunc);
    metrics << kMetricsHeader << "\n";
    per_k << "epoch";
    for (std::size_t k = 0; k < data.n(); ++k) per_k << ",nll_" << k;
    per_k << "\n";

    std::vector<fs::path> snapshots;
    TrainOptions options;
    options.threads = a.threads;
    options.on_epoch = [&](const MetricsRecord& rec, const SwitchNetworkModel& model) {
      metrics << metrics_line(rec) << "\n" << std::flush;
      per_k << rec.epoch;
      for (double v : rec.nll_per_k) per_k << ',' << format_double(v);
      per_k << "\n" << std::flush;
      if (config.checkpoint_every > 0 && rec.epoch > 0 && rec.epoch % config.checkpoint_every == 0 &&
          rec.epoch < config.epochs) {
        char name[40];
        std::snprintf(name, sizeof name, "model_epoch%06zu.swn", rec.epoch);
        save_checkpoint(model, dir / name);
        snapshots.push_back(dir / name);
      }
      if (rec.epoch == 0 || rec.epoch == config.epochs || rec.epoch % 100 == 0)
        out_ << "epoch " << rec.epoch << " nll " << format_double(rec.nll_total) << "\n" << std::flush;
    };

    TrainResult result;
    try {
      result = train_all(data, config, options);
    } catch (...) {
      metrics.close();
      per_k.close();
      fs::remove(metrics_tmp);
      fs::remove(per_k_tmp);
      throw;
    }
    metrics.close();
    per_k.close();
    fs::rename(metrics_tmp, dir / "metrics.csv");
    fs::rename(per_k_tmp, dir / "metrics_per_k.csv");
    save_checkpoint(result.model, dir / "model.swn");

    manifest.add_output("checkpoint", dir / "model.swn");
    manifest.add_output("metrics", dir / "metrics.csv");
    manifest.add_output("metrics-per-k", dir / "metrics_per_k.csv");
    manifest.add_output("config", dir / "config.txt");
    for (const auto& p : snapshots) manifest.add_output("snapshot", p);
    manifest.finish(true);
    return kOk;
  }

  int sample(const SampleArgs& a) {
    const fs::path dir = out_dir(".");
    if (a.format != "raw-bits" && a.format != "pgm-grid" && a.format != "words")
      throw ConfigError("--format must be raw-bits, pgm-grid or words");
    if (a.count == 0) throw ConfigError("--count must be >= 1");
    const SwitchNetworkModel model = load_checkpoint(a.model);
    if (a.format == "words" && model.n() != kWordBits)
      throw ConfigError("--format words needs a 40-bit model, this one has n = " +
                        std::to_string(model.n()));
    auto& manifest = start(dir, "sample");
    manifest.add_input("checkpoint", a.model);

    Rng rng(seed());
    const ModelEvaluator eval(model);
    Dataset samples(model.n(), "samples:" + fs::path(a.model).filename().string());
    samples.reserve(a.count);
    for (std::size_t i = 0; i < a.count; ++i) samples.add_row(eval.sample(rng));

    fs::path target;
    if (a.format == "raw-bits") {
      target = dir / (a.output.empty() ? "samples.txt" : a.output);
      save_dataset(samples, target);
    } else if (a.format == "pgm-grid") {
      target = dir / (a.output.empty() ? "samples.pgm" : a.output);
      atomic_write(target, pgm_grid(samples));
    } else {
      target = dir / (a.output.empty() ? "words.txt" : a.output);
      std::string text;
      for (std::size_t i = 0; i < samples.size(); ++i) text += decode_bits(samples.row(i)) + "\n";
      atomic_write(target, text);
    }
    manifest.add_output("samples", target);
    out_ << "wrote " << a.count << " samples to " << target.string() << "\n";
    manifest.finish(true);
    return kOk;
  }

  void write_reports(const fs::path& dir, const std::vector<EvalReport>& reports, RunManifest& manifest) {
    std::string text;
    for (const auto& r : reports) {
      text += r.to_json_line() + "\n";
      out_ << r.metric << " = " << format_double(r.value) << " (" << r.convention << ")\n";
    }
    atomic_write(dir / "report.jsonl", text);
    manifest.add_output("report", dir / "report.jsonl");
  }

  int eval_table(const EvalArgs& a) {
    if (a.models.empty()) throw ConfigError("--model is required");
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "eval table-metrics");
    manifest.add_input("table", a.table);
    const DistributionTable truth = load_table(a.table);
    std::vector<EvalReport> reports;
    std::vector<TableRow> rows;
    reports.push_back({"truth", "entropy", entropy(truth), "nats", {{"n", std::to_string(truth.n())}}});
    for (std::size_t i = 0; i < a.models.size(); ++i) {
      manifest.add_input("checkpoint", a.models[i]);
      const SwitchNetworkModel model = load_checkpoint(a.models[i]);
      if (model.n() != truth.n())
        throw DataError("model has n = " + std::to_string(model.n()) + " but the table has n = " +
                        std::to_string(truth.n()));
      const std::string id = i < a.names.size() ? a.names[i] : fs::path(a.models[i]).stem().string();
      const DistributionTable learned = model_distribution(model);
      const std::map<std::string, std::string> meta{{"n", std::to_string(model.n())},
                                                    {"architecture", model.architecture().describe()}};
      TableRow row{id, a.epochs, expected_nll(model, truth), tv_distance(learned, truth),
                   js_divergence(learned, truth), js_sqrt(learned, truth)};
      reports.push_back({id, "expected_nll", row.nll, "nats", meta});
      reports.push_back({id, "tv", row.tv, "total-variation", meta});
      reports.push_back({id, "js", row.js, "divergence-nats", meta});
      reports.push_back({id, "js_sqrt", row.js_root, "sqrt-divergence-nats", meta});
      rows.push_back(row);
    }
    write_reports(dir, reports, manifest);
    atomic_write(dir / "summary.txt", format_summary_table(rows));
    manifest.add_output("summary", dir / "summary.txt");
    manifest.finish(true);
    return kOk;
  }

  int eval_test_nll(const EvalArgs& a) {
    if (a.models.size() != 1) throw ConfigError("test-nll takes exactly one --model");
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "eval test-nll");
    manifest.add_input("checkpoint", a.models[0]);
    manifest.add_input("dataset", a.data);
    const SwitchNetworkModel model = load_checkpoint(a.models[0]);
    const Dataset data = load_dataset(a.data);
    if (model.n() != data.n())
      throw DataError("model has n = " + std::to_string(model.n()) + " but the dataset has n = " +
                      std::to_string(data.n()));
    const std::string id = a.names.empty() ? fs::path(a.models[0]).stem().string() : a.names[0];
    write_reports(dir,
                  {{id, "test_nll", test_nll(model, data), "nats-per-vector",
                    {{"n", std::to_string(data.n())}, {"count", std::to_string(data.size())}}}},
                  manifest);
    manifest.finish(true);
    return kOk;
  }

  int eval_dict(const EvalArgs& a) {
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "eval dict-ratio");
    manifest.add_input("samples", a.samples);
    manifest.add_input("lexicon", a.lexicon);
    const auto generated = read_sample_words(a.samples);
    if (generated.empty()) throw DataError(a.samples + ": no words");
    const auto lex_words = read_word_list(a.lexicon);
    const std::set<std::string> lexicon(lex_words.begin(), lex_words.end());
    const double ratio = dictionary_ratio(generated, lexicon);
    const auto hits = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(generated.size())));
    write_reports(dir,
                  {{fs::path(a.samples).stem().string(), "dict_ratio", ratio, "fraction",
                    {{"generated", std::to_string(generated.size())},
                     {"in_lexicon", std::to_string(hits)},
                     {"lexicon_size", std::to_string(lexicon.size())}}}},
                  manifest);
    manifest.finish(true);
    return kOk;
  }

  int eval_sweep(const EvalArgs& a) {
    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "eval sweep");
    manifest.add_input("train", a.train);
    manifest.add_input("test", a.test);
    const Dataset train = load_dataset(a.train);
    const Dataset test = load_dataset(a.test);
    if (train.n() != test.n()) throw DataError("train and test datasets differ in n");
    const auto widths = parse_list(a.m_values, "--m");

    TrainConfig config;
    config.epochs = a.epochs;
    config.batch_size = std::min(a.batch, train.size());
    config.learning_rate = a.lr;
    config.seed = seed();
    manifest.set_config(config.to_text());

    std::string csv = "m,params,train_nll,test_nll\n";
    std::vector<EvalReport> reports;
    TrainOptions options;
    options.threads = a.threads;
    for (std::size_t m : widths) {
      config.arch = Architecture::single(m);
      const TrainResult result = train_all(train, config, options);
      const double tr = test_nll(result.model, train);
      const double te = test_nll(result.model, test);
      std::size_t params = 0;
      for (const auto& cm : result.model.conditionals()) params += cm.param_count();
      csv += std::to_string(m) + "," + std::to_string(params) + "," + format_double(tr) + "," +
             format_double(te) + "\n";
      const std::map<std::string, std::string> meta{{"m", std::to_string(m)},
                                                    {"epochs", std::to_string(a.epochs)}};
      reports.push_back({"single(m=" + std::to_string(m) + ")", "train_nll", tr, "nats-per-vector", meta});
      reports.push_back({"single(m=" + std::to_string(m) + ")", "test_nll", te, "nats-per-vector", meta});
    }
    atomic_write(dir / "sweep.csv", csv);
    manifest.add_output("sweep", dir / "sweep.csv");
    write_reports(dir, reports, manifest);
    manifest.finish(true);
    return kOk;
  }

  int gradcheck(const GradcheckArgs& a) {
    const bool do_exact = a.mode == "exact" || a.mode == "both";
    const bool do_mcmc = a.mode == "mcmc" || a.mode == "both";
    if (!do_exact && !do_mcmc) throw ConfigError("--mode must be exact, mcmc or both");
    if (a.l && *a.l == 0) throw ConfigError("--l must be >= 1");
    if (do_exact && a.l && *a.l > kGradCheckMaxIntermediates)
      throw ConfigError("exact gradcheck enumerates 2^l intermediate configurations for every "
                        "finite-difference probe; --l " + std::to_string(*a.l) +
                        " exceeds the limit of " + std::to_string(kGradCheckMaxIntermediates) +
                        ". Use --mode mcmc or a smaller --l.");
    const std::size_t mcmc_l = a.l.value_or(8);
    if (do_mcmc && mcmc_l > kMaxExactIntermediates)
      throw ConfigError("the MCMC check compares against the exact gradient, which needs l <= " +
                        std::to_string(kMaxExactIntermediates));

    const fs::path dir = out_dir(".");
    auto& manifest = start(dir, "gradcheck");
    const std::uint64_t s = seed();
    std::ostringstream report;
    bool pass = true;

    if (do_exact) {
      Rng rng(derive_seed(s, 0));
      double worst = 0.0;
      for (std::size_t i = 0; i < a.instances; ++i) {
        const std::size_t k = uniform_index(rng, 7);
        Architecture arch;
        if (i % 2 == 0) {
          arch = Architecture::single(1 + uniform_index(rng, 4));
        } else {
          const std::size_t m1 = 1 + uniform_index(rng, 3);
          const std::size_t l = a.l ? *a.l : 1 + uniform_index(rng, 4);
          arch = Architecture::two(m1, l, 1 + uniform_index(rng, 3));
        }
        const ConditionalModel cm = random_conditional(k, arch, rng);
        const Dataset rows = random_rows(k + 1, a.batch, rng);
        const auto cmp = compare_with_finite_differences(cm, conditional_batch(rows, k));
        worst = std::max(worst, cmp.max_rel_error);
      }
      const bool ok = worst < 1e-4;
      pass = pass && ok;
      report << "finite differences: instances=" << a.instances << " max_rel_error=" << format_double(worst)
             << " " << (ok ? "PASS" : "FAIL") << "\n";
    }

    if (do_mcmc) {
      Rng rng(derive_seed(s, 1));
      const auto rounds = parse_list(a.r_values, "--r");
      const ConditionalModel cm =
          random_conditional(a.mcmc_k, Architecture::two(a.mcmc_m1, mcmc_l, a.mcmc_m2), rng);
      const Dataset rows = random_rows(a.mcmc_k + 1, a.mcmc_batch, rng);
      const auto sweep = mcmc_error_sweep(cm, conditional_batch(rows, a.mcmc_k), rounds, a.t, a.trials,
                                          derive_seed(s, 2));
      std::string csv = "r,t,trials,mean_rel_l2_error,rel_l2_error_of_mean\n";
      bool monotone = true;
      for (std::size_t i = 0; i < sweep.size(); ++i) {
        const auto& row = sweep[i];
        csv += std::to_string(row.rounds) + "," + std::to_string(row.steps) + "," +
               std::to_string(a.trials) + "," + format_double(row.mean_error) + "," +
               format_double(row.error_of_mean) + "\n";
        if (i > 0 && !(row.mean_error < sweep[i - 1].mean_error)) monotone = false;
      }
      atomic_write(dir / "gradcheck_mcmc.csv", csv);
      manifest.add_output("mcmc-errors", dir / "gradcheck_mcmc.csv");
      pass = pass && monotone;
      report << "mcmc: l=" << mcmc_l << " m1=" << a.mcmc_m1 << " m2=" << a.mcmc_m2
             << " batch=" << a.mcmc_batch << "\n" << csv
             << "mean error decreasing in r: " << (monotone ? "PASS" : "FAIL") << "\n";
    }

    report << (pass ? "gradcheck PASS" : "gradcheck FAIL") << "\n";
    atomic_write(dir / "gradcheck.txt", report.str());
    manifest.add_output("report", dir / "gradcheck.txt");
    out_ << report.str();
    manifest.finish(pass, pass ? "" : "gradient check failed");
    return pass ? kOk : kNumericalFailure;
  }

  Globals globals;

 private:
  std::vector<std::string> args_;
  std::ostream& out_;
  std::optional<RunManifest> manifest_;
};

int map_exception(Runner& runner, std::ostream& err) {
  try {
    throw;
  } catch (const std::exception& e) {
    runner.fail(e.what());
  } catch (...) {
    runner.fail("unknown error");
  }
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ContractError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep switch networks for binary data", "switchnet"};
  app.require_subcommand(1);
  app.fallthrough();

  Runner runner(args, out);
  auto& g = runner.globals;
  std::uint64_t seed_value = 0;
  std::string out_dir_value, config_value;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master random seed (default 0)");
  auto* out_opt = app.add_option("--out-dir", out_dir_value, "Directory for every output file");
  auto* cfg_opt = app.add_option("--config", config_value, "key = value training config file")
                      ->check(CLI::ExistingFile);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a binary dataset");
  gen_cmd->require_subcommand(1);
  auto* gen_syn = gen_cmd->add_subcommand("synthetic", "Random table over {0,1}^n and samples from it");
  gen_syn->add_option("--n", gen.n, "Dimension (1..20)")->required();
  gen_syn->add_option("--count", gen.count, "Training samples")->required();
  gen_syn->add_option("--test-count", gen.test_count, "Held-out samples (0 = none)");
  auto* gen_mnist = gen_cmd->add_subcommand("mnist", "Binarize an IDX3 image file");
  gen_mnist->add_option("--images", gen.images, "IDX3 images, optionally gzipped")->required()->check(CLI::ExistingFile);
  gen_mnist->add_option("--threshold", gen.threshold, "Pixels above this become 1");
  gen_mnist->add_option("--crop", gen.crop, "Side of the centered square kept (0 = whole image)");
  gen_mnist->add_option("--downsample", gen.downsample, "Average f x f blocks first");
  gen_mnist->add_option("--limit", gen.limit, "Keep the first N images (0 = all)");
  auto* gen_words = gen_cmd->add_subcommand("words", "Encode a word list as 40-bit vectors");
  gen_words->add_option("--input", gen.input, "One word per line")->required()->check(CLI::ExistingFile);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train all conditionals with SGD");
  train_cmd->add_option("--data", tr.data, "Dataset file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--arch", tr.arch, "single or two");
  train_cmd->add_option("--m", tr.m, "Single-layer switch width");
  train_cmd->add_option("--m1", tr.m1, "First-layer switch width");
  train_cmd->add_option("--l", tr.l, "Number of intermediate variables");
  train_cmd->add_option("--m2", tr.m2, "Second-layer switch width");
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch", tr.batch, "Mini-batch size");
  train_cmd->add_option("--lr", tr.lr, "Learning rate");
  train_cmd->add_option("--grad-mode", tr.grad_mode, "exact or mcmc");
  train_cmd->add_option("--r", tr.r, "MCMC chains per example");
  train_cmd->add_option("--t", tr.t, "MCMC steps per chain");
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Snapshot every N epochs (0 = final only)");
  train_cmd->add_option("--threads", tr.threads, "Worker threads over conditionals")->check(CLI::PositiveNumber);

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Ancestral sampling from a checkpoint");
  sample_cmd->add_option("--model", sa.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--count", sa.count, "Number of samples");
  sample_cmd->add_option("--format", sa.format, "raw-bits, pgm-grid or words");
  sample_cmd->add_option("--output", sa.output, "File name inside --out-dir");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate models");
  eval_cmd->require_subcommand(1);
  auto* ev_table = eval_cmd->add_subcommand("table-metrics", "NLL, TV and JS against a ground-truth table");
  ev_table->add_option("--model", ev.models, "Checkpoint (repeatable)")->required()->check(CLI::ExistingFile);
  ev_table->add_option("--name", ev.names, "Row label per --model");
  ev_table->add_option("--table", ev.table, "Distribution file")->required()->check(CLI::ExistingFile);
  ev_table->add_option("--epochs", ev.epochs, "Epoch count shown in the summary");
  auto* ev_nll = eval_cmd->add_subcommand("test-nll", "Mean NLL of a dataset");
  ev_nll->add_option("--model", ev.models, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev_nll->add_option("--name", ev.names, "Report label");
  ev_nll->add_option("--data", ev.data, "Dataset file")->required()->check(CLI::ExistingFile);
  auto* ev_dict = eval_cmd->add_subcommand("dict-ratio", "Fraction of sampled words found in a lexicon");
  ev_dict->add_option("--samples", ev.samples, "Word file from sample --format words")->required()->check(CLI::ExistingFile);
  ev_dict->add_option("--lexicon", ev.lexicon, "One word per line")->required()->check(CLI::ExistingFile);
  auto* ev_sweep = eval_cmd->add_subcommand("sweep", "Train/test NLL across single-layer widths");
  ev_sweep->add_option("--train", ev.train, "Training dataset")->required()->check(CLI::ExistingFile);
  ev_sweep->add_option("--test", ev.test, "Held-out dataset")->required()->check(CLI::ExistingFile);
  ev_sweep->add_option("--m", ev.m_values, "Comma-separated widths");
  ev_sweep->add_option("--epochs", ev.epochs);
  ev_sweep->add_option("--batch", ev.batch);
  ev_sweep->add_option("--lr", ev.lr);
  ev_sweep->add_option("--threads", ev.threads)->check(CLI::PositiveNumber);

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Analytic vs finite-difference and MCMC vs exact gradients");
  gc_cmd->add_option("--mode", gc.mode, "exact, mcmc or both");
  gc_cmd->add_option("--instances", gc.instances, "Random instances for the finite-difference check");
  gc_cmd->add_option("--batch", gc.batch, "Examples per finite-difference instance");
  gc_cmd->add_option("--l", gc.l, "Intermediate count for two-layer instances");
  gc_cmd->add_option("--r", gc.r_values, "Comma-separated chain counts");
  gc_cmd->add_option("--t", gc.t, "Steps per chain");
  gc_cmd->add_option("--trials", gc.trials, "MCMC estimates per r");
  gc_cmd->add_option("--mcmc-batch", gc.mcmc_batch);
  gc_cmd->add_option("--mcmc-k", gc.mcmc_k);
  gc_cmd->add_option("--m1", gc.mcmc_m1);
  gc_cmd->add_option("--m2", gc.mcmc_m2);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (*seed_opt) g.seed = seed_value;
  if (*out_opt) g.out_dir = out_dir_value;
  if (*cfg_opt) g.config = config_value;

  try {
    if (*gen_syn) return runner.gen_synthetic(gen);
    if (*gen_mnist) return runner.gen_mnist(gen);
    if (*gen_words) return runner.gen_words(gen);
    if (*train_cmd) return runner.train(tr);
    if (*sample_cmd) return runner.sample(sa);
    if (*ev_table) return runner.eval_table(ev);
    if (*ev_nll) return runner.eval_test_nll(ev);
    if (*ev_dict) return runner.eval_dict(ev);
    if (*ev_sweep) return runner.eval_sweep(ev);
    if (*gc_cmd) return runner.gradcheck(gc);
  } catch (...) {
    return map_exception(runner, err);
  }
  err << app.help();
  return kUsage;
}

}  // namespace switchnet::cli
