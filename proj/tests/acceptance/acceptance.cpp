// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Arguments select a subset by number; no arguments runs all of them.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "criteria.hpp"
#include "salgan/cli/app.hpp"
#include "salgan/cli/checkpoint.hpp"
#include "salgan/cli/config.hpp"
#include "salgan/cli/experiment.hpp"
#include "salgan/metrics/metrics.hpp"
#include "salgan/oracle/oracle.hpp"
#include "salgan/pairing/pairing.hpp"
#include "salgan/training/loop.hpp"

using namespace salgan;
using salgan_acceptance::CriterionResult;
namespace fs = std::filesystem;

namespace {

const std::string kProfile = std::string(SALGAN_SOURCE_DIR) + "/profiles/desk.json";
constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
// Fresh evaluation sample, disjoint from the one that picked the best round.
constexpr std::size_t kReevalSamples = 5000;
constexpr std::uint64_t kReevalSeed = 99991;
constexpr double kRequiredGain = 0.05;

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

struct Scores {
  double nll_oracle = 0.0;
  double nll_gen = 0.0;
  double sum() const { return nll_oracle + nll_gen; }
};

struct VariantRun {
  training::TrainResult result;
  Scores best;
};

struct SeedRuns {
  Scores mle;
  std::map<std::string, VariantRun> variants;
};

// Shared across criteria 3, 4, 7, 8 and 10; each variant is trained once.
class Study {
 public:
  Study() : config_(cli::load_config(kProfile)), experiment_(config_) {
    cli::ExperimentConfig reeval = config_;
    reeval.metrics.sample_count = kReevalSamples;
    reeval.metrics.eval_seed = kReevalSeed;
    judge_.emplace(reeval);
  }

  const cli::ExperimentConfig& config() const { return config_; }
  const cli::Experiment& experiment() const { return experiment_; }

  const training::PretrainResult& pretrained(std::uint64_t seed) {
    auto it = pretrained_.find(seed);
    if (it == pretrained_.end()) {
      const auto t0 = std::chrono::steady_clock::now();
      it = pretrained_.emplace(seed, experiment_.pretrain(seed)).first;
      seconds_ += elapsed(t0);
      runs_[seed].mle = rescore(it->second.generator);
      std::cerr << "  seed " << seed << " pretrained, MLE nll_oracle " << fmt(runs_[seed].mle.nll_oracle)
                << "\n";
    }
    return it->second;
  }

  const VariantRun& run(std::uint64_t seed, const std::string& variant) {
    const training::PretrainResult& pre = pretrained(seed);
    auto& slot = runs_[seed].variants;
    auto it = slot.find(variant);
    if (it == slot.end()) {
      const auto t0 = std::chrono::steady_clock::now();
      training::TrainConfig tc = cli::train_config(config_);
      tc.variant = training::parse_variant(variant);
      tc.seed = seed;
      VariantRun vr;
      vr.result = experiment_.train(tc, pre);
      vr.best = rescore(vr.result.best_generator);
      const double s = elapsed(t0);
      seconds_ += s;
      variant_seconds_[variant] += s;
      std::cerr << "  seed " << seed << " " << variant << " best round " << vr.result.best_round
                << ", nll_oracle " << fmt(vr.best.nll_oracle) << ", sum " << fmt(vr.best.sum()) << " ("
                << fmt(s, 1) << " s)\n";
      it = slot.emplace(variant, std::move(vr)).first;
    }
    return it->second;
  }

  const SeedRuns& seed_runs(std::uint64_t seed) const { return runs_.at(seed); }
  double variant_seconds(const std::string& v) const {
    auto it = variant_seconds_.find(v);
    return it == variant_seconds_.end() ? 0.0 : it->second;
  }
  double pretrain_seconds() const {
    double s = seconds_;
    for (const auto& [v, t] : variant_seconds_) s -= t;
    return s;
  }

 private:
  Scores rescore(const models::GeneratorParams& g) const {
    const training::Evaluation e = judge_->evaluate(g);
    return {*e.nll_oracle, *e.nll_gen};
  }

  cli::ExperimentConfig config_;
  cli::Experiment experiment_;
  std::optional<cli::Experiment> judge_;
  std::map<std::uint64_t, training::PretrainResult> pretrained_;
  std::map<std::uint64_t, SeedRuns> runs_;
  std::map<std::string, double> variant_seconds_;
  double seconds_ = 0.0;
};

Study& study() {
  static Study s;
  return s;
}

const std::vector<std::string> kLoggedVariants = {"sal", "binary-self", "cal", "no-tie"};

CriterionResult reward_formula() {
  CriterionResult cases = salgan_acceptance::reward_substitution();
  std::size_t checked = 0, outside = 0, binary_checked = 0, binary_outside = 0;
  for (std::uint64_t seed : kSeeds)
    for (const auto& v : kLoggedVariants)
      for (const auto& r : study().run(seed, v).result.log) {
        if (!r.mean_reward) continue;
        if (v == "binary-self") {
          ++binary_checked;
          if (*r.mean_reward < -1.0 || *r.mean_reward > 1.0) ++binary_outside;
        } else {
          ++checked;
          if (!r.w_better || !r.w_worse || *r.mean_reward < *r.w_worse || *r.mean_reward > *r.w_better)
            ++outside;
        }
      }
  std::ostringstream s;
  s << cases.detail << "; " << outside << " of " << checked
    << " logged comparator rewards outside [w_worse, w_better]; " << binary_outside << " of "
    << binary_checked << " binary-self rewards outside [-1, 1]";
  return {cases.pass && checked > 0 && outside == 0 && binary_outside == 0, s.str()};
}

CriterionResult schedule_endpoints() {
  const auto& log = study().run(kSeeds[0], "sal").result.log;
  const training::MetricsRecord *first = nullptr, *last = nullptr;
  for (const auto& r : log)
    if (r.phase == training::Phase::Gen) {
      if (!first) first = &r;
      last = &r;
    }
  if (!first || !first->w_better || !last->w_better) return {false, "no generator steps logged"};
  const bool ok = *first->w_better == 1.0 && *first->w_worse == -0.1 && *last->w_better == 0.8 &&
                  *last->w_worse == -0.2;
  auto num = [](const std::optional<double>& v) { return training::format_number(*v); };
  std::ostringstream s;
  s << "first generator step (iteration " << first->iter << ") " << num(first->w_better) << ", "
    << num(first->w_worse) << "; last (iteration " << last->iter << ") " << num(last->w_better) << ", "
    << num(last->w_worse);
  return {ok, s.str()};
}

CriterionResult pair_construction() {
  bool counts_ok = true, mirrors_ok = true, thirds_ok = true;
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto counts = pairing::available_pair_counts(n, n);
    if (counts.unordered != n * (2 * n - 1)) counts_ok = false;
    std::vector<TokenSequence> real, gen;
    for (std::size_t i = 0; i < n; ++i) {
      real.push_back(TokenSequence{4, static_cast<TokenId>(5 + i)});
      gen.push_back(TokenSequence{5, static_cast<TokenId>(5 + i)});
    }
    const auto pairs = pairing::build_pairs(real, gen);
    if (pairs.size() != counts.ordered) counts_ok = false;
    auto has_mirror = [&](const std::vector<pairing::LabeledPair>& set, const pairing::LabeledPair& p) {
      for (const auto& q : set)
        if (q.first == p.second && q.second == p.first && q.label == models::PairClass::Worse) return true;
      return false;
    };
    for (const auto& p : pairs)
      if (p.label == models::PairClass::Better && !has_mirror(pairs, p)) mirrors_ok = false;

    // Ties need two samples of one provenance.
    if (n < 2) continue;
    pairing::PairSource src;
    for (const auto& s : real) src.real.push_back(&s);
    for (const auto& s : gen) src.generated.push_back({&s, 0});
    Rng rng(n);
    const auto batch = pairing::sample_pair_batch(src, 60, rng);
    std::size_t per[3] = {0, 0, 0};
    for (const auto& p : batch) ++per[static_cast<int>(p.label)];
    if (batch.size() != 60 || per[0] != 20 || per[1] != 20 || per[2] != 20) thirds_ok = false;
    for (const auto& p : batch)
      if (p.label == models::PairClass::Better && !has_mirror(batch, p)) mirrors_ok = false;
  }
  std::ostringstream s;
  s << "counts " << (counts_ok ? "match" : "differ") << ", mirrors " << (mirrors_ok ? "complete" : "missing")
    << ", batch thirds " << (thirds_ok ? "exact" : "unequal") << " for n = 1..10 (batches from n = 2)";
  return {counts_ok && mirrors_ok && thirds_ok, s.str()};
}

CriterionResult discriminator_learnability() {
  constexpr std::size_t kSteps = 500, kHeldOut = 1000, kPool = 2000;
  const auto t0 = std::chrono::steady_clock::now();
  const cli::ExperimentConfig& cfg = study().config();
  const cli::Experiment& exp = study().experiment();
  const models::GeneratorParams& gen = study().pretrained(kSeeds[0]).generator;
  const std::size_t T = cfg.model.seq_len;
  training::TrainConfig tc = cli::train_config(cfg);

  const auto pool = oracle::sample_corpus(gen, T, kPool, 600, 1);
  const auto fresh = oracle::sample_corpus(gen, T, kHeldOut, 600, 2);
  pairing::PairSource src;
  for (const auto& s : exp.train_set()) src.real.push_back(&s);
  for (const auto& s : pool) src.generated.push_back({&s, 0});

  Rng init(601);
  models::ComparatorParams d = models::init_comparator(cli::encoder_dims(cfg), init, 3);
  diff::AdamState adam(diff::AdamConfig{tc.disc_lr});
  for (std::size_t step = 0; step < kSteps; ++step) {
    Rng rng = substream(602, {step});
    const auto batch = pairing::sample_pair_batch(src, tc.disc_batch(), rng);
    training::discriminator_step(d, adam, batch, tc.dropout_keep, tc.l2, rng);
  }

  const auto test = exp.test_set();
  std::vector<pairing::LabeledPair> held;
  for (std::size_t i = 0; i < std::min(kHeldOut, test.size()); ++i) {
    pairing::LabeledPair p;
    p.first = &test[i];
    p.second = &fresh[i];
    p.label = models::PairClass::Better;
    held.push_back(p);
    std::swap(p.first, p.second);
    p.label = models::PairClass::Worse;
    held.push_back(p);
  }
  const double acc = training::pair_accuracy(d, held);
  const double s = elapsed(t0);
  std::ostringstream out;
  out << "held-out cross-pair accuracy " << fmt(acc) << " after " << kSteps << " steps (" << held.size()
      << " pairs, " << fmt(s, 1) << " s, threshold 0.90)";
  return {acc >= 0.9 && s < 300.0, out.str()};
}

CriterionResult directional_reproduction() {
  std::size_t improved = 0;
  double sal_sum = 0.0, bin_sum = 0.0;
  std::ostringstream per_seed;
  for (std::uint64_t seed : kSeeds) {
    const VariantRun& sal = study().run(seed, "sal");
    const VariantRun& bin = study().run(seed, "binary-self");
    const Scores& mle = study().seed_runs(seed).mle;
    const double gain = mle.nll_oracle - sal.best.nll_oracle;
    if (gain >= kRequiredGain) ++improved;
    sal_sum += sal.best.sum();
    bin_sum += bin.best.sum();
    per_seed << " s" << seed << ":" << fmt(gain, 3);
  }
  const double n = static_cast<double>(std::size(kSeeds));
  const double seconds =
      study().pretrain_seconds() + study().variant_seconds("sal") + study().variant_seconds("binary-self");
  std::ostringstream s;
  s << improved << " of 5 seeds gain >= " << kRequiredGain << " nats (gains" << per_seed.str()
    << "); mean sum SAL " << fmt(sal_sum / n) << " vs binary-self " << fmt(bin_sum / n) << "; "
    << fmt(seconds / 60.0, 1) << " min";
  return {improved >= 3 && sal_sum <= bin_sum && seconds < 1800.0, s.str()};
}

CriterionResult ablation_orderings() {
  double sal = 0.0, cal = 0.0, notie = 0.0;
  std::vector<std::uint64_t> cal_fail, notie_fail;
  for (std::uint64_t seed : kSeeds) {
    const double a = study().run(seed, "sal").best.sum();
    const double b = study().run(seed, "cal").best.sum();
    const double c = study().run(seed, "no-tie").best.sum();
    sal += a;
    cal += b;
    notie += c;
    if (a > b) cal_fail.push_back(seed);
    if (a > c) notie_fail.push_back(seed);
  }
  auto list = [](const std::vector<std::uint64_t>& v) {
    std::string out;
    for (auto s : v) out += (out.empty() ? "" : " ") + std::to_string(s);
    return out.empty() ? std::string("none") : out;
  };
  const double n = static_cast<double>(std::size(kSeeds));
  std::ostringstream s;
  s << "mean sum SAL " << fmt(sal / n) << ", CAL " << fmt(cal / n) << ", no-tie " << fmt(notie / n)
    << "; seeds with SAL above CAL: " << list(cal_fail) << "; above no-tie: " << list(notie_fail);
  return {sal <= cal && sal <= notie, s.str()};
}

CriterionResult metric_oracles() {
  const std::vector<TokenSequence> ref{{4, 5, 6, 4}}, hyp{{4, 5, 4, 4}};
  const double bleu = metrics::bleu_forward(hyp, ref, 2);
  double worst_1d = 0.0;
  for (double d : {0.0, 0.5, 3.0}) {
    const metrics::FeatureMatrix a({{1.0}, {3.0}, {2.0}, {6.0}});
    const metrics::FeatureMatrix b({{1.0 + d}, {3.0 + d}, {2.0 + d}, {6.0 + d}});
    worst_1d = std::max(worst_1d, std::abs(metrics::frechet_distance(a, b) - d * d));
  }
  Rng rng(9);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> ra(60, std::vector<double>(4)), rb(80, std::vector<double>(4));
  for (auto& r : ra)
    for (auto& v : r) v = z(rng);
  for (auto& r : rb)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = 1.5 * z(rng) + 0.3 * double(j);
  const metrics::FeatureMatrix a(ra), b(rb);
  const double self = std::abs(metrics::frechet_distance(a, a));
  const double asym = std::abs(metrics::frechet_distance(a, b) - metrics::frechet_distance(b, a));
  std::ostringstream s;
  s.precision(3);
  s << "BLEU-2 " << std::setprecision(12) << bleu << std::setprecision(3) << "; 1-D FD error " << worst_1d
    << "; FD(A,A) " << self << "; FD asymmetry " << asym;
  return {std::abs(bleu - 0.5) < 1e-9 && worst_1d < 1e-9 && self < 1e-6 && asym < 1e-9, s.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("salgan_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

int cli_train(const fs::path& out, const std::vector<std::string>& extra) {
  std::vector<std::string> args{"salgan", "train", "--config", kProfile, "--out", out.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli::run(args);
}

bool same_bits(const models::GeneratorParams& a, const models::GeneratorParams& b) {
  const auto x = a.arrays(), y = b.arrays();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& u = x[i]->values();
    const auto& v = y[i]->values();
    if (u.size() != v.size() || std::memcmp(u.data(), v.data(), u.size() * sizeof(Real)) != 0) return false;
  }
  return true;
}

CriterionResult determinism() {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::vector<std::string> args{"--variant", "sal", "--seed", "7"};
  const int ca = cli_train(a, args), cb = cli_train(b, args);
  const std::string ma = slurp(a / "metrics.csv"), mb = slurp(b / "metrics.csv");
  const bool csv_same = ca == 0 && cb == 0 && !ma.empty() && ma == mb;

  const std::string file = slurp(a / "final.ckpt");
  const bool file_round_trip = !file.empty() && cli::encode_checkpoint(cli::decode_checkpoint(file)) == file;

  const fs::path mem = scratch("det_mem");
  fs::create_directories(mem);
  const models::GeneratorParams& g = study().run(kSeeds[0], "sal").result.final_generator;
  cli::Checkpoint c;
  cli::put_generator(c, "gen", g);
  cli::save_checkpoint((mem / "g.ckpt").string(), c);
  const models::GeneratorParams back =
      cli::get_generator(cli::load_checkpoint((mem / "g.ckpt").string()), "gen", g.dims);
  const bool params_round_trip = same_bits(g, back);
  for (const auto& p : {a, b, mem}) fs::remove_all(p);

  std::ostringstream s;
  s << "metrics.csv " << (csv_same ? "byte-identical" : "differs") << " (" << ma.size() << " bytes); checkpoint file "
    << (file_round_trip ? "re-encodes bitwise" : "changes on re-encode") << "; generator parameters "
    << (params_round_trip ? "round-trip bitwise" : "change on round trip");
  return {csv_same && file_round_trip && params_round_trip, s.str()};
}

CriterionResult replay_hygiene() {
  constexpr std::int64_t kMemory = 3;
  const fs::path dir = scratch("replay");
  const int code = cli_train(dir, {"--seed", "11", "--set", "train.memory=3", "--set", "train.rounds=20"});
  std::ifstream in(dir / "replay.csv");
  std::string line;
  std::getline(in, line);
  const bool header_ok = line == training::replay_csv_header();
  std::size_t rows = 0, stale = 0;
  std::int64_t worst_age = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string iter, phase, lo;
    std::getline(ss, iter, ',');
    std::getline(ss, phase, ',');
    std::getline(ss, lo, ',');
    if (lo.empty()) continue;
    ++rows;
    const std::int64_t age = std::stoll(phase) - std::stoll(lo);
    worst_age = std::max(worst_age, age);
    if (age > kMemory) ++stale;
  }
  fs::remove_all(dir);
  std::ostringstream s;
  s << rows << " generator steps logged with K = 3; oldest reference " << worst_age << " phases back; " << stale
    << " stale";
  return {code == 0 && header_ok && rows > 0 && stale == 0, s.str()};
}

struct Criterion {
  int id;
  std::function<CriterionResult()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, salgan_acceptance::gradient_correctness},
      {2, salgan_acceptance::policy_gradient_oracle},
      {3, reward_formula},
      {4, schedule_endpoints},
      {5, pair_construction},
      {6, discriminator_learnability},
      {7, directional_reproduction},
      {8, ablation_orderings},
      {9, metric_oracles},
      {10, determinism},
      {11, replay_hygiene},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    if (!r.pass) ++failures;
    std::cout << "criterion " << c.id << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.detail << "; "
              << fmt(elapsed(t0), 1) << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
