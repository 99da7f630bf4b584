#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "switchnet/checkpoint.hpp"
#include "switchnet/data.hpp"
#include "switchnet/diagnostics.hpp"
#include "switchnet/error.hpp"
#include "switchnet/evaluation.hpp"
#include "switchnet/likelihood.hpp"
#include "switchnet/mcmc.hpp"
#include "switchnet/trainer.hpp"

namespace py = pybind11;
using namespace switchnet;

namespace {

using BitArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using ProbArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Dataset to_dataset(const BitArray& x) {
  if (x.ndim() != 2) throw ContractError("expected a 2-D array of bits");
  const auto rows = static_cast<std::size_t>(x.shape(0)), n = static_cast<std::size_t>(x.shape(1));
  Dataset data(n);
  data.reserve(rows);
  const std::uint8_t* p = x.data();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (p[i * n + j] > 1) throw ContractError("array entries must be 0 or 1");
    data.add_row(BitSpan(p + i * n, n));
  }
  return data;
}

py::array_t<std::uint8_t> to_array(const Dataset& data) {
  py::array_t<std::uint8_t> out({data.size(), data.n()});
  std::copy(data.bits().begin(), data.bits().end(), out.mutable_data());
  return out;
}

Bits to_bits(const BitArray& x) {
  if (x.ndim() != 1) throw ContractError("expected a 1-D array of bits");
  return Bits(x.data(), x.data() + x.size());
}

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

DistributionTable to_table(const ProbArray& p) {
  std::size_t n = 0;
  while ((std::size_t{1} << n) < static_cast<std::size_t>(p.size())) ++n;
  return DistributionTable(n, std::vector<double>(p.data(), p.data() + p.size()));
}

}  // namespace

PYBIND11_MODULE(_switchnet, m) {
  m.doc() = "Deep switch networks for binary data";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<Architecture>(m, "Architecture")
      .def_static("single", &Architecture::single, py::arg("m"))
      .def_static("two", &Architecture::two, py::arg("m1"), py::arg("l"), py::arg("m2"))
      .def_property_readonly("is_two_layer", &Architecture::is_two_layer)
      .def_readonly("m", &Architecture::m)
      .def_readonly("m1", &Architecture::m1)
      .def_readonly("l", &Architecture::l)
      .def_readonly("m2", &Architecture::m2)
      .def("__eq__", [](const Architecture& a, const Architecture& b) { return a == b; })
      .def("__repr__", &Architecture::describe);

  py::class_<SwitchNetworkModel>(m, "Model")
      .def(py::init([](std::size_t n, const Architecture& arch) {
             arch.validate();
             return SwitchNetworkModel(n, arch);
           }),
           py::arg("n"), py::arg("arch"))
      .def_property_readonly("n", &SwitchNetworkModel::n)
      .def_property_readonly("architecture", &SwitchNetworkModel::architecture)
      .def_property_readonly("param_count",
                             [](const SwitchNetworkModel& model) {
                               std::size_t total = 0;
                               for (const auto& cm : model.conditionals()) total += cm.param_count();
                               return total;
                             })
      .def("initialize",
           [](SwitchNetworkModel& model, std::uint64_t seed, double scale) { initialize_uniform(model, seed, scale); },
           py::arg("seed"), py::arg("scale") = 0.05)
      .def("params",
           [](const SwitchNetworkModel& model, std::size_t k) { return to_array(flatten_params(model.conditional(k))); },
           py::arg("k"), "Parameters of conditional k, block after block")
      .def("joint_log_prob",
           [](const SwitchNetworkModel& model, const BitArray& x) { return joint_log_prob(model, to_bits(x)); })
      .def("log_prob_rows",
           [](const SwitchNetworkModel& model, const BitArray& x) {
             const Dataset data = to_dataset(x);
             const ModelEvaluator eval(model);
             std::vector<double> out(data.size());
             for (std::size_t i = 0; i < data.size(); ++i) out[i] = eval.joint_log_prob(data.row(i));
             return to_array(out);
           })
      .def(
          "sample",
          [](const SwitchNetworkModel& model, std::size_t count, std::uint64_t seed) {
            const ModelEvaluator eval(model);
            Rng rng(seed);
            Dataset out(model.n());
            for (std::size_t i = 0; i < count; ++i) out.add_row(eval.sample(rng));
            return to_array(out);
          },
          py::arg("count"), py::arg("seed") = 0)
      .def("distribution",
           [](const SwitchNetworkModel& model) { return to_array(model_distribution(model).probs()); })
      .def("to_bytes", [](const SwitchNetworkModel& model) { return py::bytes(serialize_model(model)); })
      .def_static("from_bytes", [](const py::bytes& b) { return deserialize_model(std::string(b)); })
      .def("save", [](const SwitchNetworkModel& model, const std::filesystem::path& p) { save_checkpoint(model, p); })
      .def_static("load", &load_checkpoint)
      .def("__eq__", [](const SwitchNetworkModel& a, const SwitchNetworkModel& b) { return a == b; });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def(py::init(&parse_config), py::arg("text"))
      .def_readwrite("arch", &TrainConfig::arch)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property(
          "grad_mode", [](const TrainConfig& c) { return c.grad_mode == GradientMode::mcmc ? "mcmc" : "exact"; },
          [](TrainConfig& c, const std::string& v) {
            if (v != "exact" && v != "mcmc") throw ConfigError("grad_mode must be 'exact' or 'mcmc'");
            c.grad_mode = v == "mcmc" ? GradientMode::mcmc : GradientMode::exact;
          })
      .def_readwrite("mcmc_r", &TrainConfig::mcmc_r)
      .def_readwrite("mcmc_t", &TrainConfig::mcmc_t)
      .def("to_text", &TrainConfig::to_text);

  m.def(
      "train",
      [](const BitArray& x, const TrainConfig& config, std::size_t threads,
         std::function<void(std::size_t, double)> on_epoch) {
        const Dataset data = to_dataset(x);
        config.validate(data.size());
        TrainOptions opts;
        opts.threads = threads;
        if (on_epoch)
          opts.on_epoch = [&](const MetricsRecord& r, const SwitchNetworkModel&) {
            py::gil_scoped_acquire gil;
            on_epoch(r.epoch, r.nll_total);
          };
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train_all(data, config, opts);
        }
        std::vector<double> nll;
        for (const auto& r : result.metrics) nll.push_back(r.nll_total);
        return py::make_tuple(std::move(result.model), to_array(nll));
      },
      py::arg("data"), py::arg("config"), py::arg("threads") = 1, py::arg("on_epoch") = nullptr,
      "Train every conditional. Returns (model, nll per epoch with entry 0 at initialization).");

  m.def(
      "conditional_loglik",
      [](const SwitchNetworkModel& model, std::size_t k, const BitArray& x) {
        const Dataset data = to_dataset(x);
        return loglik(model.conditional(k), conditional_batch(data, k));
      },
      py::arg("model"), py::arg("k"), py::arg("data"));
  m.def(
      "conditional_grad",
      [](const SwitchNetworkModel& model, std::size_t k, const BitArray& x) {
        const Dataset data = to_dataset(x);
        return to_array(grad(model.conditional(k), conditional_batch(data, k)).flatten());
      },
      py::arg("model"), py::arg("k"), py::arg("data"));
  m.def(
      "finite_diff_grad",
      [](const SwitchNetworkModel& model, std::size_t k, const BitArray& x, double eps) {
        const Dataset data = to_dataset(x);
        return to_array(finite_diff_grad(model.conditional(k), conditional_batch(data, k), eps).flatten());
      },
      py::arg("model"), py::arg("k"), py::arg("data"), py::arg("eps") = 1e-5);
  m.def(
      "mcmc_grad",
      [](const SwitchNetworkModel& model, std::size_t k, const BitArray& x, std::size_t r, std::size_t t,
         std::uint64_t seed) {
        const Dataset data = to_dataset(x);
        return to_array(mcmc_grad(model.conditional(k), conditional_batch(data, k), McmcConfig{r, t, seed}).flatten());
      },
      py::arg("model"), py::arg("k"), py::arg("data"), py::arg("r") = 10, py::arg("t") = 20, py::arg("seed") = 0);

  m.def(
      "gen_synthetic", [](std::size_t n, std::uint64_t seed) { return to_array(gen_synthetic(n, seed).probs()); },
      py::arg("n"), py::arg("seed"));
  m.def(
      "sample_table",
      [](const ProbArray& p, std::size_t count, std::uint64_t seed) {
        return to_array(sample_from_table(to_table(p), count, seed));
      },
      py::arg("probs"), py::arg("count"), py::arg("seed"));

  m.def("entropy", [](const ProbArray& p) { return entropy(to_table(p)); });
  m.def("tv_distance", [](const ProbArray& p, const ProbArray& q) { return tv_distance(to_table(p), to_table(q)); });
  m.def("js_divergence",
        [](const ProbArray& p, const ProbArray& q) { return js_divergence(to_table(p), to_table(q)); });
  m.def("kl_divergence",
        [](const ProbArray& p, const ProbArray& q) { return kl_divergence(to_table(p), to_table(q)); });
  m.def("expected_nll",
        [](const SwitchNetworkModel& model, const ProbArray& p) { return expected_nll(model, to_table(p)); });
  m.def("test_nll", [](const SwitchNetworkModel& model, const BitArray& x) { return test_nll(model, to_dataset(x)); });

  m.def("encode_word", [](const std::string& w) { return to_array(words_dataset(std::vector<std::string>{w})).attr("reshape")(-1); });
  m.def("decode_bits", [](const BitArray& x) { return decode_bits(to_bits(x)); });

  m.def(
      "load_mnist",
      [](const std::filesystem::path& path, int threshold, std::size_t crop, std::size_t downsample,
         std::size_t limit) {
        return to_array(load_mnist_binary(path, MnistOptions{threshold, crop, downsample, limit}));
      },
      py::arg("path"), py::arg("threshold") = 150, py::arg("crop") = 0, py::arg("downsample") = 1,
      py::arg("limit") = 0);
  m.def("load_dataset", [](const std::filesystem::path& p) { return to_array(load_dataset(p)); });
  m.def("save_dataset", [](const BitArray& x, const std::filesystem::path& p) { save_dataset(to_dataset(x), p); });
}
