#include "salgan/cli/experiment.hpp"

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

namespace {

// Run-seed substream keys, disjoint from the training loop's.
enum : std::uint64_t {
  kGeneratorInitKey = 77,
  kPseudoRealKey = 31,
  kFakeKey = 32,
  kEvaluatorKey = 41,
};

std::size_t sample_count(const ExperimentConfig& c, std::size_t test_size) {
  return c.metrics.sample_count ? c.metrics.sample_count : test_size;
}

}  // namespace

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.synthetic()) throw UsageError("corpus experiments need encoded data and an evaluator");
  oracle_ = oracle::make_oracle(config_.oracle.seed, config_.model.vocab, config_.model.seq_len,
                                config_.oracle.embed, config_.oracle.hidden);
  oracle::SyntheticDataset d =
      oracle::generate_dataset(*oracle_, config_.data.n_train, config_.data.n_test, config_.data.seed);
  train_ = std::move(d.train);
  test_ = std::move(d.test);
}

Experiment::Experiment(ExperimentConfig config, std::vector<TokenSequence> train,
                       std::vector<TokenSequence> test, models::GeneratorParams evaluator)
    : config_(std::move(config)), evaluator_(std::move(evaluator)), train_(std::move(train)),
      test_(std::move(test)) {
  config_.validate();
  if (config_.synthetic()) throw UsageError("synthetic experiments build their own data");
  if (train_.empty() || test_.empty()) throw UsageError("corpus experiments need nonempty train and test sets");
  for (const auto* set : {&train_, &test_})
    for (const auto& s : *set)
      for (TokenId t : s.ids)
        if (t < 0 || static_cast<std::size_t>(t) >= config_.model.vocab)
          throw UsageError("token id " + std::to_string(t) + " exceeds model.vocab " +
                           std::to_string(config_.model.vocab));
}

const models::GeneratorParams& Experiment::embedder() const {
  return oracle_ ? oracle_->params() : *evaluator_;
}

metrics::EvalContext Experiment::eval_context() const {
  metrics::EvalContext ctx;
  ctx.mode = oracle_ ? metrics::EvalMode::Synthetic : metrics::EvalMode::Corpus;
  ctx.oracle = oracle();
  ctx.evaluator = evaluator_ ? &*evaluator_ : nullptr;
  ctx.test = test_;
  ctx.seq_len = config_.model.seq_len;
  ctx.sample_count = sample_count(config_, test_.size());
  ctx.seed = config_.metrics.eval_seed;
  return ctx;
}

training::Evaluation Experiment::evaluate(const models::GeneratorParams& gen) const {
  training::Evaluation e;
  const auto samples = oracle::sample_corpus(gen, config_.model.seq_len, sample_count(config_, test_.size()),
                                             config_.metrics.eval_seed, 0);
  e.nll_gen = oracle::mean_nll(gen, test_);
  if (oracle_) {
    e.nll_oracle = oracle::nll_oracle(*oracle_, samples);
    e.score = *e.nll_oracle;
  } else {
    e.score = oracle::mean_nll(*evaluator_, samples);
  }
  return e;
}

metrics::EvalReport Experiment::report(const models::GeneratorParams& gen) const {
  return metrics::evaluate_all(gen, eval_context());
}

models::GeneratorParams Experiment::initial_generator(std::uint64_t seed) const {
  Rng rng = substream(seed, {kGeneratorInitKey});
  return models::truncated_normal_generator(generator_dims(config_), rng, config_.model.init_scale);
}

training::PretrainResult Experiment::pretrain(std::uint64_t seed) const {
  training::PretrainConfig pc = pretrain_config(config_);
  pc.seed = seed;
  return training::mle_pretrain(initial_generator(seed), train_, pc,
                                [this](const models::GeneratorParams& g) { return evaluate(g); });
}

training::TrainData Experiment::train_data(const training::PretrainResult& pretrained,
                                           std::uint64_t seed) const {
  training::TrainData td;
  td.real = train_;
  if (config_.train.checkpoint_share > 0.0) {
    if (pretrained.snapshots.size() < 2)
      throw UsageError("checkpoint pairs need the early and final pretraining snapshots");
    const std::size_t n = config_.train.checkpoint_samples, T = config_.model.seq_len;
    td.fake = oracle::sample_corpus(pretrained.snapshots[0].second, T, n, seed, kFakeKey);
    td.pseudo_real = oracle::sample_corpus(pretrained.snapshots[1].second, T, n, seed, kPseudoRealKey);
  }
  return td;
}

training::TrainResult Experiment::train(const training::TrainConfig& tc,
                                        const training::PretrainResult& pretrained,
                                        const training::ProgressFn& progress) const {
  return training::variant_train(tc, pretrained.generator, encoder_dims(config_), train_data(pretrained, tc.seed),
                                 [this](const models::GeneratorParams& g) { return evaluate(g); }, progress);
}

models::GeneratorParams train_evaluator(const ExperimentConfig& config,
                                        std::span<const TokenSequence> heldout) {
  if (heldout.empty()) throw UsageError("the evaluator needs held-out text");
  Rng rng = substream(config.data.seed, {kEvaluatorKey});
  models::GeneratorParams g0 =
      models::truncated_normal_generator(generator_dims(config), rng, config.model.init_scale);
  training::PretrainConfig pc = pretrain_config(config);
  pc.seed = config.data.seed;
  pc.snapshots.clear();
  pc.eval_every = 0;
  return training::mle_pretrain(std::move(g0), heldout, pc).generator;
}

}  // namespace cli
SALGAN_NAMESPACE_END
