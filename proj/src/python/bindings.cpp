#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "salgan/cli/app.hpp"
#include "salgan/cli/checkpoint.hpp"
#include "salgan/cli/config.hpp"
#include "salgan/errors.hpp"
#include "salgan/metrics/metrics.hpp"
#include "salgan/oracle/oracle.hpp"
#include "salgan/pairing/pairing.hpp"
#include "salgan/training/reward.hpp"

namespace py = pybind11;
using namespace salgan;

namespace {

using Ids = std::vector<std::vector<TokenId>>;

std::vector<TokenSequence> to_sequences(const Ids& ids) {
  std::vector<TokenSequence> out;
  out.reserve(ids.size());
  for (const auto& v : ids) out.emplace_back(v);
  return out;
}

Ids to_ids(const std::vector<TokenSequence>& seqs) {
  Ids out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(s.ids);
  return out;
}

// Canonical JSON of a config file (or the defaults) after overrides.
std::string config_json(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  cli::ExperimentConfig c = path ? cli::load_config(*path) : cli::ExperimentConfig{};
  for (const auto& o : overrides) cli::apply_override(c, o);
  c.validate();
  return cli::serialize_config(c);
}

py::dict checkpoint_dict(const std::string& path) {
  const cli::Checkpoint c = cli::load_checkpoint(path);
  py::dict meta, arrays;
  for (const auto& [k, v] : c.meta) meta[py::str(k)] = v;
  for (const auto& r : c.records) arrays[py::str(r.name)] = py::make_tuple(r.dims, r.data);
  py::dict out;
  out["fingerprint"] = c.fingerprint;
  out["round"] = c.round;
  out["step"] = c.step;
  out["meta"] = meta;
  out["arrays"] = arrays;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-adversarial text GAN lab: metrics, oracle sampling, rewards and the command line.";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "SalganError")); });
  // Instances carry the library error kind, e.g. "ConfigError".
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object err = type(py::str(e.what()));
      err.attr("kind") = e.kind();
      PyErr_SetObject(type.ptr(), err.ptr());
    }
  });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> argv{"salgan"};
    argv.insert(argv.end(), args.begin(), args.end());
    py::gil_scoped_release release;
    return cli::run(argv);
  }, py::arg("args"), "Runs one subcommand; returns the process exit code.");

  m.def("config_json", &config_json, py::arg("path") = std::nullopt,
        py::arg("overrides") = std::vector<std::string>{});
  m.def("config_fingerprint", [](const std::optional<std::string>& path) {
    return cli::config_fingerprint(path ? cli::load_config(*path) : cli::ExperimentConfig{});
  }, py::arg("path") = std::nullopt);
  m.def("load_checkpoint", &checkpoint_dict, py::arg("path"));

  m.def("bleu_forward", [](const Ids& gen, const Ids& test, std::size_t n, double eps) {
    return metrics::bleu_forward(to_sequences(gen), to_sequences(test), n, eps);
  }, py::arg("generated"), py::arg("test"), py::arg("n"), py::arg("epsilon") = 1e-9);
  m.def("bleu_backward", [](const Ids& test, const Ids& gen, std::size_t n, double eps) {
    return metrics::bleu_backward(to_sequences(test), to_sequences(gen), n, eps);
  }, py::arg("test"), py::arg("generated"), py::arg("n"), py::arg("epsilon") = 1e-9);
  m.def("frechet_distance", [](std::vector<std::vector<double>> a, std::vector<std::vector<double>> b) {
    return metrics::frechet_distance(metrics::FeatureMatrix(std::move(a)), metrics::FeatureMatrix(std::move(b)));
  }, py::arg("a"), py::arg("b"));

  m.def("reward", [](double better, double worse, double tie, double w_better, double w_worse, double w_tie) {
    return training::reward(models::Comparison{Real(better), Real(worse), Real(tie)},
                            training::RewardWeights{w_better, w_worse, w_tie});
  }, py::arg("p_better"), py::arg("p_worse"), py::arg("p_tie"), py::arg("w_better") = 1.0,
     py::arg("w_worse") = -0.1, py::arg("w_tie") = 0.0);
  m.def("scheduled_weights", [](std::int64_t iter, std::int64_t total) {
    training::RewardSchedule s;
    s.total = total;
    const training::RewardWeights w = training::scheduled_weights(s, iter);
    return py::make_tuple(w.better, w.worse);
  }, py::arg("iter"), py::arg("total"), "(w_better, w_worse) under the default schedule.");
  m.def("pair_counts", [](std::size_t n_real, std::size_t n_gen) {
    const auto c = pairing::available_pair_counts(n_real, n_gen);
    return py::make_tuple(c.unordered, c.ordered);
  }, py::arg("n_real"), py::arg("n_generated"));

  py::class_<oracle::OracleModel>(m, "Oracle")
      .def(py::init([](std::uint64_t seed, std::size_t vocab, std::size_t seq_len, std::size_t embed,
                       std::size_t hidden) { return oracle::make_oracle(seed, vocab, seq_len, embed, hidden); }),
           py::arg("seed"), py::arg("vocab"), py::arg("seq_len"), py::arg("embed") = 32, py::arg("hidden") = 32)
      .def_property_readonly("vocab", &oracle::OracleModel::vocab)
      .def_property_readonly("seq_len", &oracle::OracleModel::seq_len)
      .def("sample", [](const oracle::OracleModel& o, std::size_t count, std::uint64_t seed, std::uint64_t stream) {
        return to_ids(oracle::sample_corpus(o.params(), o.seq_len(), count, seed, stream));
      }, py::arg("count"), py::arg("seed"), py::arg("stream") = 0)
      .def("nll", [](const oracle::OracleModel& o, const Ids& samples) {
        return oracle::nll_oracle(o, to_sequences(samples));
      }, py::arg("samples"), "Mean per-token NLL of the samples under the oracle.");
}
