#include "salgan/cli/app.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "salgan/cli/corpus.hpp"
#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

namespace fs = std::filesystem;

namespace {

const char* const kLockName = ".salgan.lock";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string metrics_csv(const std::vector<training::MetricsRecord>& log) {
  std::string out = training::metrics_csv_header() + "\n";
  for (const auto& r : log) out += training::metrics_csv_row(r) + "\n";
  return out;
}

std::string replay_csv(const std::vector<training::ReplayRecord>& log) {
  std::string out = training::replay_csv_header() + "\n";
  for (const auto& r : log) out += training::replay_csv_row(r) + "\n";
  return out;
}

/// Wall-clock notes kept out of every CSV so that those stay reproducible.
class RunLog {
 public:
  explicit RunLog(const fs::path& dir) : out_(dir / "run.log", std::ios::app), t0_(clock::now()) {}
  void note(const std::string& msg) {
    const double s = std::chrono::duration<double>(clock::now() - t0_).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "[%8.2fs] ", s);
    out_ << buf << msg << '\n';
    out_.flush();
    std::cerr << buf << msg << '\n';
  }

 private:
  using clock = std::chrono::steady_clock;
  std::ofstream out_;
  clock::time_point t0_;
};

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Experiment config (flat JSON)");
  cmd->add_option("--out", c.out, "Run directory (overrides output_dir)");
  cmd->add_option("--seed", c.seed, "Run seed (overrides seed)");
  cmd->add_option("--set", c.overrides, "Override a config key: key=value")->take_all();
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

fs::path prepare_dir(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory '" + dir.string() + "': " + ec.message());
  return dir;
}

Checkpoint base_checkpoint(const ExperimentConfig& cfg, const std::string& kind) {
  Checkpoint c;
  c.fingerprint = config_fingerprint(cfg);
  c.meta["kind"] = kind;
  c.meta["seed"] = std::to_string(cfg.seed);
  return c;
}

Checkpoint load_checked(const fs::path& path, const ExperimentConfig& cfg) {
  Checkpoint c = load_checkpoint(path.string());
  require_fingerprint(c, config_fingerprint(cfg), path.string());
  return c;
}

/// The generator of any generator-bearing checkpoint.
models::GeneratorParams checkpoint_generator(const Checkpoint& c, const ExperimentConfig& cfg) {
  for (const char* prefix : {"gen", "oracle", "evaluator"})
    if (c.find(std::string(prefix) + "/embedding"))
      return get_generator(c, prefix, prefix == std::string("oracle")
                                          ? models::GeneratorDims{cfg.model.vocab, cfg.oracle.embed, cfg.oracle.hidden}
                                          : generator_dims(cfg));
  throw FormatError("checkpoint holds no generator");
}

// ---- corpus-mode artifacts ----

struct CorpusFiles {
  fs::path vocab, train, test, evaluator;
  explicit CorpusFiles(const fs::path& dir)
      : vocab(dir / "vocab.txt"), train(dir / "train.txt"), test(dir / "test.txt"),
        evaluator(dir / "evaluator.ckpt") {}
};

void build_corpus_artifacts(const ExperimentConfig& cfg, const fs::path& dir, RunLog* log) {
  if (cfg.data.train_corpus.empty() || cfg.data.test_corpus.empty())
    throw ConfigError("corpus mode needs data.train_corpus and data.test_corpus");
  const CorpusFiles f(dir);
  Vocab vocab;
  if (fs::exists(f.vocab)) {
    vocab = load_vocab(f.vocab.string());
  } else {
    vocab = build_vocab(cfg.data.train_corpus, cfg.model.vocab - kReservedTokens);
    save_vocab(vocab, f.vocab.string());
  }
  if (vocab.size() > cfg.model.vocab)
    throw ConfigError("vocabulary has " + std::to_string(vocab.size()) + " entries but model.vocab is " +
                      std::to_string(cfg.model.vocab));
  for (const auto& [src, dst] : {std::pair{cfg.data.train_corpus, f.train}, std::pair{cfg.data.test_corpus, f.test}}) {
    EncodedCorpus enc = encode_corpus(vocab, src, cfg.model.seq_len);
    if (enc.skipped_empty)
      std::cerr << "salgan: warning: skipped " << enc.skipped_empty << " empty lines in " << src << '\n';
    write_id_corpus(dst.string(), enc.sequences);
  }
  const auto test = read_id_corpus(f.test.string());
  if (log) log->note("training the held-out evaluator LSTM");
  Checkpoint c = base_checkpoint(cfg, "evaluator");
  put_generator(c, "evaluator", train_evaluator(cfg, test));
  save_checkpoint(f.evaluator.string(), c);
}

// ---- pretraining ----

training::PretrainResult load_or_pretrain(const Experiment& exp, const fs::path& dir, RunLog& log) {
  const ExperimentConfig& cfg = exp.config();
  const fs::path final_path = dir / "pretrain.ckpt", early_path = dir / "pretrain_early.ckpt";
  training::PretrainResult pr;
  if (fs::exists(final_path) && fs::exists(early_path)) {
    const Checkpoint fc = load_checked(final_path, cfg), ec = load_checked(early_path, cfg);
    if (fc.meta.count("seed") && fc.meta.at("seed") != std::to_string(cfg.seed))
      throw ConfigError("'" + final_path.string() + "' was pretrained with seed " + fc.meta.at("seed") +
                        ", not " + std::to_string(cfg.seed));
    pr.generator = get_generator(fc, "gen", generator_dims(cfg));
    pr.adam = get_adam(fc, "adam.mle", models::GeneratorParams::names(), std::as_const(pr.generator).arrays());
    pr.snapshots = {{cfg.pretrain.early_snapshot, get_generator(ec, "gen", generator_dims(cfg))},
                    {1.0, pr.generator}};
    log.note("loaded pretrained generator from " + final_path.string());
    return pr;
  }
  log.note("MLE pretraining for " + std::to_string(cfg.pretrain.epochs) + " epochs");
  pr = exp.pretrain(cfg.seed);
  Checkpoint fc = base_checkpoint(cfg, "pretrain");
  fc.round = cfg.pretrain.epochs;
  put_generator(fc, "gen", pr.generator);
  put_adam(fc, "adam.mle", models::GeneratorParams::names(), pr.adam);
  save_checkpoint(final_path.string(), fc);
  Checkpoint ec = base_checkpoint(cfg, "pretrain");
  ec.meta["fraction"] = training::format_number(pr.snapshots[0].first);
  put_generator(ec, "gen", pr.snapshots[0].second);
  save_checkpoint(early_path.string(), ec);
  write_text(dir / "pretrain_metrics.csv", metrics_csv(pr.log));
  return pr;
}

// ---- summaries ----

std::string summary_csv(const training::TrainResult& r) {
  std::string out = "metric,value\n";
  auto row = [&](const std::string& k, std::optional<double> v) {
    if (v) out += k + "," + training::format_number(*v) + "\n";
  };
  auto sum = [](const training::Evaluation& e) -> std::optional<double> {
    if (e.nll_oracle && e.nll_gen) return *e.nll_oracle + *e.nll_gen;
    return std::nullopt;
  };
  row("initial_nll_oracle", r.initial.nll_oracle);
  row("initial_nll_gen", r.initial.nll_gen);
  row("initial_nll_sum", sum(r.initial));
  row("initial_score", r.initial.score);
  row("best_nll_oracle", r.best.nll_oracle);
  row("best_nll_gen", r.best.nll_gen);
  row("best_nll_sum", sum(r.best));
  row("best_score", r.best.score);
  row("best_round", static_cast<double>(r.best_round));
  return out;
}

std::string report_csv(const metrics::EvalReport& rep, std::int64_t iter) {
  training::MetricsRecord rec;
  rec.iter = iter;
  rec.phase = training::Phase::Eval;
  rec.nll_oracle = rep.nll_oracle;
  rec.nll_gen = rep.nll_gen;
  return training::metrics_csv_header() + "," + metrics::extension_csv_header() + "\n" +
         training::metrics_csv_row(rec) + "," + metrics::extension_csv_row(rep) + "\n";
}

std::string render(const Vocab* vocab, const TokenSequence& s) {
  return vocab ? decode(*vocab, s) : format_ids(s);
}

// ---- subcommands ----

struct Options {
  Common common;
  std::string variant, granularity;
  std::string checkpoint;
  bool init = false;
  std::size_t count = 0;
  std::string sample, text, reference = "self";
  std::size_t references = 1;
  std::vector<std::string> runs;
  std::string corpus;
  std::size_t max_size = 0;
};

int cmd_make_oracle(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  if (!cfg.synthetic()) throw ConfigError("make-oracle needs mode 'synthetic'");
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  const auto orc = oracle::make_oracle(cfg.oracle.seed, cfg.model.vocab, cfg.model.seq_len, cfg.oracle.embed,
                                       cfg.oracle.hidden);
  Checkpoint c = base_checkpoint(cfg, "oracle");
  c.meta["oracle_seed"] = std::to_string(cfg.oracle.seed);
  put_generator(c, "oracle", orc.params());
  save_checkpoint((dir / "oracle.ckpt").string(), c);
  write_text(dir / "config.json", serialize_config(cfg));
  std::cout << (dir / "oracle.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_gen_data(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  RunLog log(dir);
  write_text(dir / "config.json", serialize_config(cfg));
  if (!cfg.synthetic()) {
    build_corpus_artifacts(cfg, dir, &log);
    log.note("wrote vocab.txt, train.txt, test.txt and evaluator.ckpt");
    return kExitOk;
  }
  const Experiment exp(cfg);
  write_id_corpus((dir / "train.txt").string(), {exp.train_set().begin(), exp.train_set().end()});
  write_id_corpus((dir / "test.txt").string(), {exp.test_set().begin(), exp.test_set().end()});
  log.note("wrote " + std::to_string(exp.train_set().size()) + " train and " +
           std::to_string(exp.test_set().size()) + " test sequences");
  return kExitOk;
}

int cmd_pretrain(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  RunLog log(dir);
  write_text(dir / "config.json", serialize_config(cfg));
  const Experiment exp = open_experiment(cfg, dir);
  std::error_code ec;
  fs::remove(dir / "pretrain.ckpt", ec);
  fs::remove(dir / "pretrain_early.ckpt", ec);
  const auto pr = load_or_pretrain(exp, dir, log);
  const auto e = exp.evaluate(pr.generator);
  log.note("pretrained: score " + training::format_number(e.score));
  return kExitOk;
}

int cmd_train(const Options& o) {
  Common common = o.common;
  if (!o.variant.empty()) common.overrides.push_back("train.variant=" + o.variant);
  if (!o.granularity.empty()) common.overrides.push_back("train.granularity=" + o.granularity);
  const ExperimentConfig cfg = resolve(common);
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  RunLog log(dir);
  write_text(dir / "config.json", serialize_config(cfg));
  const Experiment exp = open_experiment(cfg, dir);
  const auto pr = load_or_pretrain(exp, dir, log);
  const training::TrainConfig tc = train_config(cfg);
  log.note("adversarial training: variant " + cfg.train.variant + ", " + std::to_string(tc.rounds) + " rounds");
  std::optional<double> last_wb, last_ww;
  const auto result = exp.train(tc, pr, [&](const training::MetricsRecord& r) {
    if (r.phase == training::Phase::Gen) {
      last_wb = r.w_better;
      last_ww = r.w_worse;
    }
    if (r.phase == training::Phase::Eval) {
      std::string msg = "iter " + std::to_string(r.iter);
      if (r.nll_oracle) msg += " nll_oracle " + training::format_number(*r.nll_oracle);
      if (r.nll_gen) msg += " nll_gen " + training::format_number(*r.nll_gen);
      log.note(msg);
    }
  });
  write_text(dir / "metrics.csv", metrics_csv(result.log));
  write_text(dir / "replay.csv", replay_csv(result.replay));
  write_text(dir / "summary.csv", summary_csv(result));

  Checkpoint fin = base_checkpoint(cfg, "train");
  fin.round = result.rounds_done;
  fin.step = result.steps_done;
  fin.meta["variant"] = cfg.train.variant;
  if (last_wb) fin.meta["w_better"] = training::format_number(*last_wb);
  if (last_ww) fin.meta["w_worse"] = training::format_number(*last_ww);
  put_generator(fin, "gen", result.final_generator);
  put_adam(fin, "adam.gen", models::GeneratorParams::names(), result.gen_adam);
  if (result.comparator) {
    fin.meta["disc.kind"] = "comparator";
    put_comparator(fin, "disc", *result.comparator);
    put_adam(fin, "adam.disc", result.comparator->names(), result.disc_adam);
  } else {
    fin.meta["disc.kind"] = "binary";
    put_binary(fin, "disc", *result.binary);
    put_adam(fin, "adam.disc", result.binary->names(), result.disc_adam);
  }
  save_checkpoint((dir / "final.ckpt").string(), fin);

  Checkpoint best = base_checkpoint(cfg, "best");
  best.round = static_cast<std::uint64_t>(result.best_round);
  best.meta["score"] = training::format_number(result.best.score);
  put_generator(best, "gen", result.best_generator);
  save_checkpoint((dir / "best.ckpt").string(), best);
  log.note("best round " + std::to_string(result.best_round) + " score " +
           training::format_number(result.best.score));
  return kExitOk;
}

int cmd_eval(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  const Experiment exp = open_experiment(cfg, dir);
  models::GeneratorParams gen;
  std::int64_t iter = 0;
  if (o.init || o.checkpoint.empty()) {
    gen = exp.initial_generator(cfg.seed);
  } else {
    const Checkpoint c = load_checked(o.checkpoint, cfg);
    gen = checkpoint_generator(c, cfg);
    iter = c.step;
  }
  const metrics::EvalReport rep = exp.report(gen);
  for (const auto& [k, v] : rep.fields()) std::cout << k << " " << training::format_number(v) << '\n';
  write_text(dir / "eval.csv", report_csv(rep, iter));
  return kExitOk;
}

int cmd_generate(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  const fs::path ckpt = o.checkpoint.empty() ? dir / "best.ckpt" : fs::path(o.checkpoint);
  const models::GeneratorParams gen = checkpoint_generator(load_checked(ckpt, cfg), cfg);
  const std::size_t n = o.count ? o.count : 10;
  const auto samples = oracle::sample_corpus(gen, cfg.model.seq_len, n, cfg.seed, 1);
  write_id_corpus((dir / "samples.txt").string(), samples);
  std::optional<Vocab> vocab;
  if (!cfg.synthetic()) vocab = load_vocab(CorpusFiles(dir).vocab.string());
  for (const auto& s : samples) std::cout << render(vocab ? &*vocab : nullptr, s) << '\n';
  return kExitOk;
}

int cmd_inspect_reward(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  const fs::path dir = prepare_dir(cfg);
  const fs::path ckpt_path = o.checkpoint.empty() ? dir / "final.ckpt" : fs::path(o.checkpoint);
  const Checkpoint ckpt = load_checked(ckpt_path, cfg);
  std::optional<Vocab> vocab;
  if (!cfg.synthetic()) vocab = load_vocab(CorpusFiles(dir).vocab.string());
  const Vocab* vp = vocab ? &*vocab : nullptr;

  TokenSequence sample;
  if (!o.text.empty()) {
    if (!vp) throw UsageError("--text needs a corpus-mode run directory with a vocabulary");
    sample = encode_line(*vp, o.text, cfg.model.seq_len);
  } else if (!o.sample.empty()) {
    sample = parse_ids(o.sample);
  } else {
    throw UsageError("inspect-reward needs --sample or --text");
  }
  for (TokenId t : sample.ids)
    if (static_cast<std::size_t>(t) >= cfg.model.vocab)
      throw UsageError("sample token " + std::to_string(t) + " exceeds model.vocab");

  std::vector<TokenSequence> refs;
  if (o.reference == "self") {
    refs = oracle::sample_corpus(checkpoint_generator(ckpt, cfg), cfg.model.seq_len, o.references, cfg.seed, 2);
  } else if (o.reference == "real") {
    const Experiment exp = open_experiment(cfg, dir);
    Rng rng = substream(cfg.seed, {3});
    for (std::size_t i = 0; i < o.references; ++i)
      refs.push_back(exp.train_set()[std::uniform_int_distribution<std::size_t>(0, exp.train_set().size() - 1)(rng)]);
  } else {
    refs.push_back(parse_ids(o.reference));
  }

  const std::string kind = ckpt.meta.count("disc.kind") ? ckpt.meta.at("disc.kind") : "";
  if (kind.empty()) throw UsageError("checkpoint '" + ckpt_path.string() + "' holds no discriminator");
  training::RewardWeights w{cfg.reward.w_better_start, cfg.reward.w_worse_start, cfg.reward.w_tie};
  if (ckpt.meta.count("w_better")) w.better = std::stod(ckpt.meta.at("w_better"));
  if (ckpt.meta.count("w_worse")) w.worse = std::stod(ckpt.meta.at("w_worse"));

  const std::string sent = render(vp, sample);
  if (kind == "binary") {
    const auto d = get_binary(ckpt, "disc", encoder_dims(cfg));
    std::cout << "sentence\treference\td_sentence\td_reference\treward\n";
    const double ds = models::binary_discriminate(d, sample);
    for (const auto& r : refs) {
      const double dr = models::binary_discriminate(d, r);
      std::cout << sent << '\t' << render(vp, r) << '\t' << training::format_number(ds) << '\t'
                << training::format_number(dr) << '\t' << training::format_number(ds - dr) << '\n';
    }
    return kExitOk;
  }
  const auto d = get_comparator(ckpt, "disc", encoder_dims(cfg));
  std::cout << "sentence\treference\tp_better\tp_worse\tp_tie\treward\n";
  for (const auto& r : refs) {
    const models::Comparison c = models::compare(d, sample, r);
    std::cout << sent << '\t' << render(vp, r) << '\t' << training::format_number(c.better) << '\t'
              << training::format_number(c.worse) << '\t' << training::format_number(c.tie) << '\t'
              << training::format_number(training::reward(c, w)) << '\n';
  }
  return kExitOk;
}

int cmd_report(const Options& o) {
  std::vector<fs::path> runs;
  for (const auto& r : o.runs) {
    if (fs::exists(fs::path(r) / "summary.csv")) {
      runs.emplace_back(r);
      continue;
    }
    if (!fs::is_directory(r)) throw IoError("'" + r + "' is not a run directory");
    std::vector<fs::path> sub;
    for (const auto& e : fs::directory_iterator(r))
      if (fs::exists(e.path() / "summary.csv")) sub.push_back(e.path());
    std::sort(sub.begin(), sub.end());
    runs.insert(runs.end(), sub.begin(), sub.end());
  }
  if (runs.empty()) throw UsageError("report found no run directories with summary.csv");
  if (runs.size() < 2) std::cerr << "salgan: warning: one run only; reporting means without deviations\n";
  const std::string table = aggregate_report(runs);
  const fs::path out = o.common.out.empty() ? fs::path(o.runs.front()) : fs::path(o.common.out);
  fs::create_directories(out);
  RunLock lock(out);
  write_text(out / "report.csv", table);
  std::cout << table;
  return kExitOk;
}

int cmd_build_vocab(const Options& o) {
  const ExperimentConfig cfg = resolve(o.common);
  const std::string corpus = o.corpus.empty() ? cfg.data.train_corpus : o.corpus;
  if (corpus.empty()) throw ConfigError("build-vocab needs --corpus or data.train_corpus");
  const std::size_t max_size = o.max_size ? o.max_size : cfg.model.vocab - kReservedTokens;
  const fs::path dir = prepare_dir(cfg);
  RunLock lock(dir);
  const Vocab v = build_vocab(corpus, max_size);
  save_vocab(v, (dir / "vocab.txt").string());
  std::cout << v.size() << " entries written to " << (dir / "vocab.txt").string() << '\n';
  return kExitOk;
}

}  // namespace

RunLock::RunLock(const fs::path& dir) : path_(dir / kLockName) {
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
  if (fd < 0) {
    std::string holder;
    std::ifstream in(path_);
    std::getline(in, holder);
    throw StateError("run directory '" + dir.string() + "' is locked" +
                     (holder.empty() ? std::string() : " by pid " + holder) + "; remove " + path_.string() +
                     " if no run is active");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string error_line(const std::string& kind, const std::string& message) {
  return "salgan: error[" + kind + "]: " + one_line(message);
}

Experiment open_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  if (cfg.synthetic()) return Experiment(cfg);
  const CorpusFiles f(dir);
  if (!fs::exists(f.vocab) || !fs::exists(f.train) || !fs::exists(f.test) || !fs::exists(f.evaluator))
    build_corpus_artifacts(cfg, dir, nullptr);
  const Checkpoint ev = load_checked(f.evaluator, cfg);
  return Experiment(cfg, read_id_corpus(f.train.string()), read_id_corpus(f.test.string()),
                    get_generator(ev, "evaluator", generator_dims(cfg)));
}

std::vector<SummaryRow> read_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::vector<SummaryRow> rows;
  std::string line;
  std::getline(in, line);
  if (line != "metric,value") throw FormatError("'" + path.string() + "' is not a run summary");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("malformed summary line '" + line + "'");
    rows.push_back({line.substr(0, comma), std::stod(line.substr(comma + 1))});
  }
  return rows;
}

std::string aggregate_report(const std::vector<fs::path>& runs) {
  if (runs.empty()) throw UsageError("aggregate_report needs at least one run");
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : runs)
    for (const auto& row : read_summary(r / "summary.csv")) {
      if (!values.count(row.metric)) order.push_back(row.metric);
      values[row.metric].push_back(row.value);
    }
  const bool dev = runs.size() >= 2;
  std::string out = dev ? "metric,mean,std,n\n" : "metric,mean,n\n";
  for (const auto& m : order) {
    const auto& v = values[m];
    // Shifted by the first value so identical runs give an exact mean and 0 deviation.
    double shift = 0.0;
    for (double x : v) shift += x - v[0];
    shift /= static_cast<double>(v.size());
    const double mean = v[0] + shift;
    out += m + "," + training::format_number(mean);
    if (dev) {
      double ss = 0.0;
      for (double x : v) ss += (x - v[0] - shift) * (x - v[0] - shift);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      out += "," + training::format_number(sd);
    }
    out += "," + std::to_string(v.size()) + "\n";
  }
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Self-adversarial text GAN laboratory", "salgan"};
  app.require_subcommand(1);
  Options o;

  auto* make_oracle = app.add_subcommand("make-oracle", "Create and save the synthetic oracle");
  auto* gen_data = app.add_subcommand("gen-data", "Write train and test id files (corpus mode: encode text)");
  auto* pretrain = app.add_subcommand("pretrain", "MLE-pretrain the generator");
  auto* train = app.add_subcommand("train", "Adversarial training");
  auto* eval = app.add_subcommand("eval", "Evaluate a generator checkpoint");
  auto* generate = app.add_subcommand("generate", "Sample from a generator checkpoint");
  auto* inspect = app.add_subcommand("inspect-reward", "Show comparator probabilities and reward");
  auto* report = app.add_subcommand("report", "Aggregate run summaries into mean and deviation");
  auto* vocab = app.add_subcommand("build-vocab", "Build a vocabulary from a corpus");
  for (auto* c : {make_oracle, gen_data, pretrain, train, eval, generate, inspect, vocab}) add_common(c, o.common);

  train->add_option("--variant", o.variant, "sal|cal|binary-self|no-tie|no-schedule|no-replay");
  train->add_option("--replay-granularity", o.granularity, "round|step");
  eval->add_option("--checkpoint", o.checkpoint, "Generator checkpoint");
  eval->add_flag("--init", o.init, "Evaluate the untrained generator of this seed");
  generate->add_option("--checkpoint", o.checkpoint, "Generator checkpoint (default best.ckpt)");
  generate->add_option("--count", o.count, "Number of samples");
  inspect->add_option("--checkpoint", o.checkpoint, "Training checkpoint (default final.ckpt)");
  inspect->add_option("--sample", o.sample, "Sample as token ids");
  inspect->add_option("--text", o.text, "Sample as text (corpus mode)");
  inspect->add_option("--reference", o.reference, "self, real, or token ids");
  inspect->add_option("--references", o.references, "Number of references for self or real");
  report->add_option("runs", o.runs, "Run directories or a parent of run directories")->required();
  report->add_option("--out", o.common.out, "Where to write report.csv");
  vocab->add_option("--corpus", o.corpus, "Corpus file");
  vocab->add_option("--max-size", o.max_size, "Maximum corpus tokens kept");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return kExitOk;
    }
    std::cerr << error_line("UsageError", e.what()) << '\n';
    return kExitConfig;
  }

  try {
    if (*make_oracle) return cmd_make_oracle(o);
    if (*gen_data) return cmd_gen_data(o);
    if (*pretrain) return cmd_pretrain(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*generate) return cmd_generate(o);
    if (*inspect) return cmd_inspect_reward(o);
    if (*report) return cmd_report(o);
    if (*vocab) return cmd_build_vocab(o);
  } catch (const ConfigError& e) {
    std::cerr << error_line(e.kind(), e.what()) << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << error_line(e.kind(), e.what()) << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << error_line("RuntimeError", e.what()) << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace cli
SALGAN_NAMESPACE_END
