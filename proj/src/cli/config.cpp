#include "salgan/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

namespace {

using Json = nlohmann::json;

// Calls f(key, field&) for every field in canonical order. The same visitor
// drives parsing, serialization, and the key list, so they cannot disagree.
template <class Config, class F>
void visit_fields(Config& c, F&& f) {
  f("mode", c.mode);
  f("seed", c.seed);
  f("output_dir", c.output_dir);
  f("oracle.seed", c.oracle.seed);
  f("oracle.embed", c.oracle.embed);
  f("oracle.hidden", c.oracle.hidden);
  f("model.vocab", c.model.vocab);
  f("model.embed", c.model.embed);
  f("model.hidden", c.model.hidden);
  f("model.seq_len", c.model.seq_len);
  f("model.init_scale", c.model.init_scale);
  f("data.n_train", c.data.n_train);
  f("data.n_test", c.data.n_test);
  f("data.seed", c.data.seed);
  f("data.train_corpus", c.data.train_corpus);
  f("data.test_corpus", c.data.test_corpus);
  f("disc.embed", c.disc.embed);
  f("disc.widths", c.disc.widths);
  f("disc.counts", c.disc.counts);
  f("disc.dropout_keep", c.disc.dropout_keep);
  f("disc.l2", c.disc.l2);
  f("pretrain.epochs", c.pretrain.epochs);
  f("pretrain.batch", c.pretrain.batch);
  f("pretrain.lr", c.pretrain.lr);
  f("pretrain.early_snapshot", c.pretrain.early_snapshot);
  f("pretrain.eval_every", c.pretrain.eval_every);
  f("train.k", c.train.k);
  f("train.g", c.train.g);
  f("train.rollouts", c.train.rollouts);
  f("train.references", c.train.references);
  f("train.batch", c.train.batch);
  f("train.rounds", c.train.rounds);
  f("train.memory", c.train.memory);
  f("train.variant", c.train.variant);
  f("train.granularity", c.train.granularity);
  f("train.gen_lr", c.train.gen_lr);
  f("train.disc_lr", c.train.disc_lr);
  f("train.checkpoint_share", c.train.checkpoint_share);
  f("train.checkpoint_samples", c.train.checkpoint_samples);
  f("train.eval_every", c.train.eval_every);
  f("reward.w_better_start", c.reward.w_better_start);
  f("reward.w_worse_start", c.reward.w_worse_start);
  f("reward.w_tie", c.reward.w_tie);
  f("reward.w_better_end", c.reward.w_better_end);
  f("reward.w_worse_end", c.reward.w_worse_end);
  f("metrics.sample_count", c.metrics.sample_count);
  f("metrics.eval_seed", c.metrics.eval_seed);
  f("metrics.bleu_epsilon", c.metrics.bleu_epsilon);
}

const char* type_name(const std::string&) { return "a string"; }
const char* type_name(const std::size_t&) { return "a nonnegative integer"; }
const char* type_name(const double&) { return "a number"; }
const char* type_name(const std::vector<std::size_t>&) { return "a list of nonnegative integers"; }

bool fits(const Json& v, const std::string&) { return v.is_string(); }
bool fits(const Json& v, const std::size_t&) { return v.is_number_unsigned(); }
bool fits(const Json& v, const double&) { return v.is_number(); }
bool fits(const Json& v, const std::vector<std::size_t>& x) {
  if (!v.is_array()) return false;
  for (const auto& e : v)
    if (!fits(e, x.empty() ? std::size_t{} : x[0])) return false;
  return true;
}

template <class T>
void assign(const std::string& key, const Json& v, T& field) {
  if (!fits(v, field))
    throw ConfigError("config key '" + key + "' must be " + type_name(field) + ", got " + v.dump());
  field = v.get<T>();
}

void assign_json(ExperimentConfig& c, const std::string& key, const Json& v) {
  bool found = false;
  visit_fields(c, [&](const char* k, auto& field) {
    if (key == k) {
      assign(key, v, field);
      found = true;
    }
  });
  if (!found) throw ConfigError("unknown config key '" + key + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(mode == "synthetic" || mode == "corpus", "mode must be 'synthetic' or 'corpus', got '" + mode + "'");
  require(model.vocab >= kReservedTokens + 1 || synthetic(), "model.vocab too small for a corpus vocabulary");
  require(model.vocab >= 2, "model.vocab must be at least 2");
  require(model.embed > 0 && model.hidden > 0, "model.embed and model.hidden must be positive");
  require(model.seq_len > 0, "model.seq_len must be positive");
  require(model.init_scale > 0.0, "model.init_scale must be positive");
  require(oracle.embed > 0 && oracle.hidden > 0, "oracle dimensions must be positive");
  if (synthetic())
    require(data.n_train > 0 && data.n_test > 0, "data.n_train and data.n_test must be positive");
  require(disc.embed > 0, "disc.embed must be positive");
  require(!disc.widths.empty() && disc.widths.size() == disc.counts.size(),
          "disc.widths and disc.counts must be nonempty and the same length");
  for (std::size_t i = 0; i < disc.widths.size(); ++i)
    require(disc.widths[i] > 0 && disc.counts[i] > 0, "filter widths and counts must be positive");
  require(pretrain.early_snapshot >= 0.0 && pretrain.early_snapshot <= 1.0,
          "pretrain.early_snapshot must lie in [0, 1]");
  require(pretrain.epochs > 0 && pretrain.batch > 0, "pretrain.epochs and pretrain.batch must be positive");
  require(train.checkpoint_samples > 0 || train.checkpoint_share == 0.0,
          "train.checkpoint_samples must be positive when train.checkpoint_share is set");
  train_config(*this).validate();
}

ExperimentConfig parse_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) assign_json(c, key, value);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out = "{\n";
  bool first = true;
  visit_fields(config, [&](const char* key, const auto& field) {
    if (!first) out += ",\n";
    first = false;
    out += "  " + Json(key).dump() + ": " + Json(field).dump();
  });
  out += "\n}\n";
  return out;
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' must have the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  // A bare word for a string field parses as a string; quoted JSON also works.
  bool is_string_field = false;
  visit_fields(config, [&](const char* k, auto& field) {
    if (key == k) is_string_field = std::is_same_v<std::decay_t<decltype(field)>, std::string>;
  });
  if (is_string_field && !value.is_string()) value = raw;
  assign_json(config, key, value);
}

std::string config_fingerprint(const ExperimentConfig& c) {
  std::string basis;
  visit_fields(c, [&](const char* key, const auto& field) {
    const std::string k = key;
    const bool shape = k == "mode" || k.rfind("oracle.", 0) == 0 || k.rfind("model.", 0) == 0 ||
                       k.rfind("data.", 0) == 0 || k == "disc.embed" || k == "disc.widths" ||
                       k == "disc.counts";
    if (shape && k != "model.init_scale") basis += k + "=" + Json(field).dump() + ";";
  });
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(basis)));
  return buf;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  ExperimentConfig c;
  visit_fields(c, [&](const char* key, auto&) { out.emplace_back(key); });
  return out;
}

training::TrainConfig train_config(const ExperimentConfig& c) {
  training::TrainConfig t;
  t.disc_steps = c.train.k;
  t.gen_steps = c.train.g;
  t.rollouts = c.train.rollouts;
  t.references = c.train.references;
  t.batch = c.train.batch;
  t.rounds = c.train.rounds;
  t.memory = c.train.memory;
  t.seq_len = c.model.seq_len;
  t.variant = training::parse_variant(c.train.variant);
  t.granularity = training::parse_granularity(c.train.granularity);
  t.gen_lr = c.train.gen_lr;
  t.disc_lr = c.train.disc_lr;
  t.dropout_keep = c.disc.dropout_keep;
  t.l2 = c.disc.l2;
  t.checkpoint_share = c.train.checkpoint_share;
  t.schedule.start = {c.reward.w_better_start, c.reward.w_worse_start, c.reward.w_tie};
  t.schedule.end = {c.reward.w_better_end, c.reward.w_worse_end, c.reward.w_tie};
  t.eval_every = c.train.eval_every;
  t.seed = c.seed;
  return t;
}

training::PretrainConfig pretrain_config(const ExperimentConfig& c) {
  training::PretrainConfig p;
  p.epochs = c.pretrain.epochs;
  p.batch = c.pretrain.batch;
  p.lr = c.pretrain.lr;
  p.snapshots = {c.pretrain.early_snapshot, 1.0};
  p.eval_every = c.pretrain.eval_every;
  p.seed = c.seed;
  return p;
}

models::GeneratorDims generator_dims(const ExperimentConfig& c) {
  return {c.model.vocab, c.model.embed, c.model.hidden};
}

models::EncoderDims encoder_dims(const ExperimentConfig& c) {
  models::EncoderDims d;
  d.vocab = c.model.vocab;
  d.embed = c.disc.embed;
  d.widths = c.disc.widths;
  d.counts = c.disc.counts;
  if (!c.synthetic()) d.pad_id = kPadToken;
  return d;
}

}  // namespace cli
SALGAN_NAMESPACE_END
