#include "salgan/training/loop.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "salgan/diffcore/tape.hpp"
#include "salgan/errors.hpp"
#include "salgan/training/memory.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

namespace {

// Top-level substream keys.
enum StreamKey : std::uint64_t {
  kInitKey = 1,
  kMemoryKey = 2,
  kDiscKey = 3,
  kDiscFakeKey = 4,
  kGenKey = 5,
  kMleKey = 6,
};

MetricsRecord record(std::int64_t iter, Phase phase) {
  MetricsRecord r;
  r.iter = iter;
  r.phase = phase;
  return r;
}

void append_field(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += format_number(*v);
}

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Mle: return "mle";
    case Phase::Disc: return "disc";
    case Phase::Gen: return "gen";
    case Phase::Eval: return "eval";
  }
  return "?";
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv_header() {
  return "iter,phase,d_loss,mean_reward,nll_oracle,nll_gen,w_better,w_worse,seconds";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::string out = std::to_string(r.iter) + "," + phase_name(r.phase);
  for (const auto* f : {&r.d_loss, &r.mean_reward, &r.nll_oracle, &r.nll_gen, &r.w_better,
                        &r.w_worse, &r.seconds})
    append_field(out, *f);
  return out;
}

std::string replay_csv_header() { return "iter,gen_phase,ref_tag_min,ref_tag_max"; }

std::string replay_csv_row(const ReplayRecord& r) {
  std::string out = std::to_string(r.iter) + "," + std::to_string(r.gen_phase) + ",";
  if (r.ref_tag_min) out += std::to_string(*r.ref_tag_min);
  out += ",";
  if (r.ref_tag_max) out += std::to_string(*r.ref_tag_max);
  return out;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Sal: return "sal";
    case Variant::Cal: return "cal";
    case Variant::BinarySelf: return "binary-self";
    case Variant::NoTie: return "no-tie";
    case Variant::NoSchedule: return "no-schedule";
    case Variant::NoReplay: return "no-replay";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::Sal, Variant::Cal, Variant::BinarySelf, Variant::NoTie,
                    Variant::NoSchedule, Variant::NoReplay})
    if (name == variant_name(v)) return v;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected sal, cal, binary-self, no-tie, no-schedule or no-replay)");
}

const char* granularity_name(ReplayGranularity g) {
  return g == ReplayGranularity::Round ? "round" : "step";
}

ReplayGranularity parse_granularity(std::string_view name) {
  if (name == "round") return ReplayGranularity::Round;
  if (name == "step") return ReplayGranularity::Step;
  throw ConfigError("unknown replay granularity '" + std::string(name) +
                    "' (expected round or step)");
}

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be at least 1");
  };
  positive(disc_steps, "train.k");
  positive(gen_steps, "train.g");
  positive(rollouts, "train.rollouts");
  positive(references, "train.refs");
  positive(batch, "train.batch");
  positive(rounds, "train.rounds");
  positive(memory, "train.memory");
  positive(seq_len, "sequence length");
  if (!(gen_lr > 0) || !(disc_lr > 0)) throw ConfigError("learning rates must be positive");
  if (!(dropout_keep > 0) || dropout_keep > 1) throw ConfigError("dropout keep must lie in (0, 1]");
  if (l2 < 0) throw ConfigError("l2 coefficient must be non-negative");
  if (checkpoint_share < 0 || checkpoint_share > 1)
    throw ConfigError("checkpoint share must lie in [0, 1]");
  schedule.start.validate();
  schedule.end.validate();
  if (disc_batch() == 0) throw ConfigError("train.batch too small for a balanced pair batch");
}

std::size_t TrainConfig::effective_memory() const {
  return variant == Variant::NoReplay ? 1 : memory;
}

std::size_t TrainConfig::comparator_classes() const { return variant == Variant::NoTie ? 2 : 3; }

std::size_t TrainConfig::disc_batch() const {
  const std::size_t unit = variant == Variant::BinarySelf ? 2 : comparator_classes();
  return batch - batch % unit;
}

double checkpoint_share_at(double share, std::size_t round, std::size_t rounds) {
  if (rounds == 0) return 0.0;
  const double half = static_cast<double>(rounds) / 2.0;
  const double r = static_cast<double>(round);
  if (r <= half) return share;
  return std::max(0.0, share * (static_cast<double>(rounds) - r) / (static_cast<double>(rounds) - half));
}

double training_nll(const GeneratorParams& gen, std::span<const TokenSequence> data) {
  if (data.empty()) throw UsageError("training_nll of empty data");
  double total = 0;
  std::size_t tokens = 0;
  for (const auto& s : data) {
    total += models::sequence_nll(gen, s) * static_cast<double>(s.size());
    tokens += s.size();
  }
  return total / static_cast<double>(tokens);
}

PretrainResult mle_pretrain(GeneratorParams gen, std::span<const TokenSequence> data,
                            const PretrainConfig& cfg, const Evaluator& evaluate) {
  if (data.empty()) throw UsageError("MLE pretraining needs nonempty data");
  if (cfg.epochs == 0) throw ConfigError("pretrain.epochs must be at least 1");
  if (cfg.batch == 0) throw ConfigError("pretrain.batch must be at least 1");
  for (double f : cfg.snapshots)
    if (f < 0.0 || f > 1.0) throw ConfigError("snapshot points must lie in [0, 1]");
  for (const auto& s : data)
    if (s.empty()) throw UsageError("MLE pretraining data contains an empty sequence");

  PretrainResult out;
  std::vector<std::size_t> snap_epoch;
  for (double f : cfg.snapshots)
    snap_epoch.push_back(static_cast<std::size_t>(std::llround(f * double(cfg.epochs))));
  out.snapshots.resize(cfg.snapshots.size());
  auto take_snapshots = [&](std::size_t epoch) {
    for (std::size_t i = 0; i < snap_epoch.size(); ++i)
      if (snap_epoch[i] == epoch) out.snapshots[i] = {cfg.snapshots[i], gen};
  };
  take_snapshots(0);

  diff::AdamState adam(diff::AdamConfig{cfg.lr});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = substream(cfg.seed, {kMleKey, epoch});
    std::shuffle(order.begin(), order.end(), rng);
    std::map<std::size_t, std::vector<std::size_t>> by_len;
    for (std::size_t i : order) by_len[data[i].size()].push_back(i);
    for (const auto& [len, idx] : by_len) {
      for (std::size_t start = 0; start < idx.size(); start += cfg.batch) {
        const std::size_t n = std::min(cfg.batch, idx.size() - start);
        std::vector<TokenSequence> batch;
        batch.reserve(n);
        for (std::size_t j = 0; j < n; ++j) batch.push_back(data[idx[start + j]]);
        const Real w = Real(1) / static_cast<Real>(n * len);
        std::vector<std::vector<Real>> weights(n, std::vector<Real>(len, w));
        diff::Tape tape;
        models::TapedGenerator g = models::bind(tape, gen);
        const diff::NodeId loss = models::weighted_sequence_nll(tape, g, gen.dims, batch, weights);
        auto grads = models::collect_gradients(tape.backward(loss), g);
        auto params = gen.arrays();
        diff::adam_step(params, grads, adam);
      }
    }
    take_snapshots(epoch);
    MetricsRecord rec = record(static_cast<std::int64_t>(epoch), Phase::Mle);
    const bool due = cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    if (evaluate && due) {
      Evaluation e = evaluate(gen);
      rec.nll_oracle = e.nll_oracle;
      rec.nll_gen = e.nll_gen;
    }
    out.log.push_back(rec);
  }
  out.generator = std::move(gen);
  out.adam = std::move(adam);
  return out;
}

double discriminator_step(models::ComparatorParams& d, diff::AdamState& adam,
                          std::span<const pairing::LabeledPair> batch, double keep, double l2,
                          Rng& rng) {
  if (batch.empty()) throw UsageError("discriminator_step needs a nonempty batch");
  std::vector<const TokenSequence*> first, second;
  std::vector<int> labels;
  for (const auto& p : batch) {
    first.push_back(p.first);
    second.push_back(p.second);
    labels.push_back(static_cast<int>(p.label));
  }
  std::optional<diff::DenseArray> mask;
  if (keep < 1.0)
    mask = models::dropout_mask(batch.size(), 2 * d.encoder.dims.feature_size(), keep, rng);
  diff::Tape tape;
  models::TapedComparator tc = models::bind(tape, d);
  models::PairBatchLoss loss =
      models::comparator_loss(tape, tc, d, first, second, labels, mask ? &*mask : nullptr, l2);
  const double ce = tape.value(loss.cross_entropy)[0];
  diff::Gradients g = tape.backward(loss.objective);
  std::vector<diff::DenseArray> grads;
  for (diff::NodeId id : tc.ids()) grads.push_back(g[id]);
  auto params = d.arrays();
  diff::adam_step(params, grads, adam);
  return ce;
}

double binary_discriminator_step(models::BinaryDiscParams& d, diff::AdamState& adam,
                                 std::span<const TokenSequence* const> real,
                                 std::span<const TokenSequence* const> generated, double keep,
                                 double l2, Rng& rng) {
  std::vector<const TokenSequence*> samples(real.begin(), real.end());
  samples.insert(samples.end(), generated.begin(), generated.end());
  if (samples.empty()) throw UsageError("binary discriminator step needs samples");
  std::vector<int> labels(real.size(), 1);
  labels.resize(samples.size(), 0);
  std::optional<diff::DenseArray> mask;
  if (keep < 1.0) mask = models::dropout_mask(samples.size(), d.encoder.dims.feature_size(), keep, rng);
  diff::Tape tape;
  models::TapedBinaryDisc td = models::bind(tape, d);
  models::PairBatchLoss loss =
      models::binary_disc_loss(tape, td, d, samples, labels, mask ? &*mask : nullptr, l2);
  const double ce = tape.value(loss.cross_entropy)[0];
  diff::Gradients g = tape.backward(loss.objective);
  std::vector<diff::DenseArray> grads;
  for (diff::NodeId id : td.ids()) grads.push_back(g[id]);
  auto params = d.arrays();
  diff::adam_step(params, grads, adam);
  return ce;
}

double pair_accuracy(const models::ComparatorParams& d,
                     std::span<const pairing::LabeledPair> pairs) {
  models::EncoderCache cache(d.encoder);
  std::size_t n = 0, correct = 0;
  for (const auto& p : pairs) {
    if (p.label == pairing::ComparisonLabel::Tie) continue;
    const models::Comparison c =
        models::compare_features(d, cache.encode(*p.first), cache.encode(*p.second));
    Real probs[3] = {c.better, c.worse, c.tie};
    const auto arg = std::max_element(probs, probs + d.classes) - probs;
    correct += arg == static_cast<int>(p.label);
    ++n;
  }
  return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

TrainResult sal_train(const TrainConfig& cfg, GeneratorParams gen,
                      const models::EncoderDims& disc_dims, const TrainData& data,
                      const Evaluator& evaluate, const ProgressFn& progress) {
  cfg.validate();
  if (data.real.empty()) throw UsageError("adversarial training needs real samples");
  const bool binary = cfg.variant == Variant::BinarySelf;
  const bool cal = cfg.variant == Variant::Cal;
  const std::uint64_t seed = cfg.seed;

  TrainResult out;
  Rng init = substream(seed, {kInitKey});
  if (binary)
    out.binary = models::init_binary_disc(disc_dims, init);
  else
    out.comparator = models::init_comparator(disc_dims, init, cfg.comparator_classes());

  diff::AdamState gen_adam(diff::AdamConfig{cfg.gen_lr});
  diff::AdamState disc_adam(diff::AdamConfig{cfg.disc_lr});
  MemoryBuffer memory(cfg.effective_memory());
  memory.update(sample_batch(gen, cfg.seq_len, cfg.batch, seed, std::vector<std::uint64_t>{kMemoryKey, 0}), 0);

  std::vector<const TokenSequence*> real_ptrs;
  std::vector<TaggedSample> real_refs;
  for (const auto& s : data.real) {
    real_ptrs.push_back(&s);
    real_refs.push_back({&s, -1});
  }
  std::vector<const TokenSequence*> pseudo, fake;
  for (const auto& s : data.pseudo_real) pseudo.push_back(&s);
  for (const auto& s : data.fake) fake.push_back(&s);
  const bool have_ckpt = !pseudo.empty() && !fake.empty() && !binary;

  const RolloutSettings rs{cfg.rollouts, cfg.references, cfg.seq_len};
  RewardSchedule schedule = cfg.schedule;
  const std::size_t total_gen = cfg.rounds * cfg.gen_steps;
  schedule.total = static_cast<std::int64_t>(total_gen) - 1;

  std::int64_t iter = 0;
  auto log = [&](MetricsRecord r) {
    out.log.push_back(r);
    if (progress) progress(r);
  };
  auto run_eval = [&](std::size_t round) {
    if (!evaluate) return;
    Evaluation e = evaluate(gen);
    MetricsRecord r = record(iter, Phase::Eval);
    r.nll_oracle = e.nll_oracle;
    r.nll_gen = e.nll_gen;
    log(r);
    if (round == 0) {
      out.initial = e;
      out.best = e;
      out.best_generator = gen;
    } else if (e.score < out.best.score) {
      out.best = e;
      out.best_generator = gen;
      out.best_round = static_cast<std::int64_t>(round);
    }
  };
  out.best_generator = gen;
  run_eval(0);

  std::size_t gen_index = 0;
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    const double share = have_ckpt ? checkpoint_share_at(cfg.checkpoint_share, round, cfg.rounds) : 0.0;
    for (std::size_t j = 0; j < cfg.disc_steps; ++j) {
      Rng rng = substream(seed, {kDiscKey, round, j});
      double loss;
      if (binary) {
        const std::size_t half = cfg.disc_batch() / 2;
        std::vector<const TokenSequence*> reals;
        for (std::size_t i = 0; i < half; ++i)
          reals.push_back(real_ptrs[std::uniform_int_distribution<std::size_t>(0, real_ptrs.size() - 1)(rng)]);
        const std::vector<TokenSequence> fresh = sample_batch(
            gen, cfg.seq_len, half, seed, std::vector<std::uint64_t>{kDiscFakeKey, round, j});
        std::vector<const TokenSequence*> fakes;
        for (const auto& s : fresh) fakes.push_back(&s);
        loss = binary_discriminator_step(*out.binary, disc_adam, reals, fakes, cfg.dropout_keep,
                                         cfg.l2, rng);
      } else {
        pairing::PairSource src;
        src.real = real_ptrs;
        src.generated = memory.samples();
        if (share > 0.0) {
          src.pseudo_real = pseudo;
          src.fake = fake;
        }
        pairing::BatchMix mix;
        mix.ties = cfg.comparator_classes() == 3;
        mix.checkpoint_share = share;
        const auto pairs = pairing::sample_pair_batch(src, cfg.disc_batch(), rng, mix);
        loss = discriminator_step(*out.comparator, disc_adam, pairs, cfg.dropout_keep, cfg.l2, rng);
      }
      MetricsRecord r = record(++iter, Phase::Disc);
      r.d_loss = loss;
      log(r);
    }

    for (std::size_t j = 0; j < cfg.gen_steps; ++j) {
      const RewardWeights w = cfg.variant == Variant::NoSchedule
                                  ? schedule.start
                                  : scheduled_weights(schedule, static_cast<std::int64_t>(gen_index));
      const std::vector<TaggedSample> mem_refs = cal ? std::vector<TaggedSample>{} : memory.samples();
      const std::span<const TaggedSample> refs = cal ? std::span<const TaggedSample>(real_refs)
                                                     : std::span<const TaggedSample>(mem_refs);
      const std::vector<std::uint64_t> keys{kGenKey, round, j};
      GeneratorStepResult res;
      if (binary) {
        BinaryScorer scorer(*out.binary);
        res = generator_step(gen, gen_adam, scorer, refs, rs, cfg.batch, seed, keys);
      } else {
        ComparatorScorer scorer(*out.comparator, w);
        res = generator_step(gen, gen_adam, scorer, refs, rs, cfg.batch, seed, keys);
      }
      ++gen_index;
      MetricsRecord r = record(++iter, Phase::Gen);
      r.mean_reward = res.mean_reward;
      if (!binary) {
        r.w_better = w.better;
        r.w_worse = w.worse;
      }
      log(r);
      ReplayRecord rep;
      rep.iter = iter;
      rep.gen_phase = cfg.granularity == ReplayGranularity::Round
                          ? static_cast<std::int64_t>(round)
                          : static_cast<std::int64_t>(gen_index);
      if (!cal) {
        rep.ref_tag_min = res.min_tag;
        rep.ref_tag_max = res.max_tag;
      }
      out.replay.push_back(rep);
      if (cfg.granularity == ReplayGranularity::Step)
        memory.update(sample_batch(gen, cfg.seq_len, cfg.batch, seed,
                                   std::vector<std::uint64_t>{kMemoryKey, gen_index}),
                      static_cast<std::int64_t>(gen_index));
    }
    if (cfg.granularity == ReplayGranularity::Round)
      memory.update(sample_batch(gen, cfg.seq_len, cfg.batch, seed,
                                 std::vector<std::uint64_t>{kMemoryKey, round}),
                    static_cast<std::int64_t>(round));

    const bool due = (cfg.eval_every > 0 && round % cfg.eval_every == 0) || round == cfg.rounds;
    if (due) run_eval(round);
  }
  out.final_generator = std::move(gen);
  out.gen_adam = std::move(gen_adam);
  out.disc_adam = std::move(disc_adam);
  out.rounds_done = cfg.rounds;
  out.steps_done = iter;
  if (!evaluate) out.best_generator = out.final_generator;
  return out;
}

TrainResult variant_train(const TrainConfig& config, GeneratorParams gen,
                          const models::EncoderDims& disc_dims, const TrainData& data,
                          const Evaluator& evaluate, const ProgressFn& progress) {
  return sal_train(config, std::move(gen), disc_dims, data, evaluate, progress);
}

}  // namespace training
SALGAN_NAMESPACE_END
