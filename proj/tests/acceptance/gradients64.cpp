#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "../support/pg_oracle.hpp"
#include "criteria.hpp"
#include "salgan/diffcore/gradcheck.hpp"
#include "salgan/models/comparator.hpp"
#include "salgan/models/generator.hpp"
#include "salgan/training/reward.hpp"

static_assert(sizeof(salgan::Real) == 8);

namespace salgan_acceptance {

using namespace salgan;
using diff::DenseArray;

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

std::vector<DenseArray> copy_generator(const models::GeneratorParams& p) {
  std::vector<DenseArray> out;
  for (const DenseArray* a : p.arrays()) out.push_back(*a);
  return out;
}

models::GeneratorParams with_generator(models::GeneratorParams p, const std::vector<DenseArray>& a) {
  auto dst = p.arrays();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = a[i];
  return p;
}

diff::GradCheckResult sequence_nll_check(std::uint64_t seed) {
  const models::GeneratorDims dims{3, 2, 3};
  Rng init(seed);
  const models::GeneratorParams p = models::normal_generator(dims, init);
  const std::vector<TokenSequence> seqs{{2, 0, 1}};
  const std::vector<std::vector<Real>> w{{Real(1) / 3, Real(1) / 3, Real(1) / 3}};
  diff::ScalarFn value = [&](const std::vector<DenseArray>& a) {
    return models::sequence_nll(with_generator(p, a), seqs[0]);
  };
  diff::GradientFn grad = [&](const std::vector<DenseArray>& a) {
    const models::GeneratorParams q = with_generator(p, a);
    diff::Tape tape;
    models::TapedGenerator g = models::bind(tape, q);
    return models::collect_gradients(tape.backward(models::weighted_sequence_nll(tape, g, dims, seqs, w)), g);
  };
  return diff::finite_difference_check(value, grad, copy_generator(p), kStep, kTolerance);
}

diff::GradCheckResult comparator_loss_check(std::uint64_t seed) {
  models::EncoderDims d;
  d.vocab = 3;
  d.embed = 3;
  d.widths = {2, 3};
  d.counts = {2, 3};
  Rng rng(seed);
  models::ComparatorParams c = models::init_comparator(d, rng);
  for (DenseArray* a : c.arrays())
    for (auto& v : a->values()) v = std::normal_distribution<double>(0, 0.5)(rng);
  const TokenSequence x1{0, 2, 1}, x2{2, 2, 0};
  const TokenSequence* first[] = {&x1, &x2, &x1};
  const TokenSequence* second[] = {&x2, &x1, &x1};
  const int labels[] = {0, 1, 2};
  auto with = [&](const std::vector<DenseArray>& arrays) {
    models::ComparatorParams q = c;
    auto dst = q.arrays();
    for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = arrays[i];
    return q;
  };
  std::vector<DenseArray> start;
  for (const DenseArray* a : c.arrays()) start.push_back(*a);
  diff::ScalarFn value = [&](const std::vector<DenseArray>& arrays) {
    const models::ComparatorParams q = with(arrays);
    diff::Tape t;
    models::TapedComparator tc = models::bind(t, q);
    return double(t.value(models::comparator_loss(t, tc, q, first, second, labels, nullptr, 0.2).objective)[0]);
  };
  diff::GradientFn grad = [&](const std::vector<DenseArray>& arrays) {
    const models::ComparatorParams q = with(arrays);
    diff::Tape t;
    models::TapedComparator tc = models::bind(t, q);
    diff::Gradients g = t.backward(models::comparator_loss(t, tc, q, first, second, labels, nullptr, 0.2).objective);
    std::vector<DenseArray> out;
    for (diff::NodeId id : tc.ids()) out.push_back(g[id]);
    return out;
  };
  return diff::finite_difference_check(value, grad, start, kStep, kTolerance);
}

}  // namespace

CriterionResult gradient_correctness() {
  double worst_nll = 0.0, worst_cmp = 0.0;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const diff::GradCheckResult a = sequence_nll_check(seed), b = comparator_loss_check(seed);
    ok = ok && a.passed && b.passed;
    worst_nll = std::max(worst_nll, a.max_relative_error);
    worst_cmp = std::max(worst_cmp, b.max_relative_error);
  }
  std::ostringstream s;
  s << "max relative error sequence_nll " << worst_nll << ", pair loss " << worst_cmp << " over 5 seeds";
  return {ok, s.str()};
}

CriterionResult policy_gradient_oracle() {
  Rng rng(21);
  const models::GeneratorParams g = models::normal_generator({3, 3, 3}, rng);
  const std::size_t T = 2;
  const auto value = [&](const std::vector<DenseArray>& a) {
    return pgtest::expected_reward(pgtest::with_params(g, a), T);
  };
  const auto gradient = [&](const std::vector<DenseArray>& a) {
    return pgtest::exact_gradient(pgtest::with_params(g, a), T);
  };
  const auto fd = diff::finite_difference_check(value, gradient, pgtest::copy_params(g), kStep, 1e-3);
  const auto mc = pgtest::compare_monte_carlo(g, T, 100000, 5, 3.0);
  const bool enumerated = pgtest::all_sequences(3, T).size() == 9;
  std::ostringstream s;
  s << "finite-difference error " << fd.max_relative_error << "; " << mc.outside << " of "
    << mc.coordinates << " coordinates outside 3 SE (worst z " << mc.worst_z << ")";
  return {enumerated && fd.passed && mc.outside == 0, s.str()};
}

CriterionResult reward_substitution() {
  const training::RewardWeights w{1.0, -0.1, 0.0};
  const double better = training::reward(models::Comparison{1, 0, 0}, w);
  const double tie = training::reward(models::Comparison{0, 0, 1}, w);
  const double mixed = training::reward(models::Comparison{0.5, 0.3, 0.2}, w);
  std::ostringstream s;
  s << "rewards " << better << " / " << tie << " / " << mixed;
  return {better == 1.0 && tie == 0.0 && std::abs(mixed - 0.47) < 1e-15, s.str()};
}

}  // namespace salgan_acceptance
