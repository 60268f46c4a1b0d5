#include "salgan/pairing/pairing.hpp"

#include <cmath>
#include <random>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace pairing {

namespace {

using L = ComparisonLabel;

std::size_t choose2(std::size_t n) { return n * (n - (n > 0)) / 2; }

std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Two distinct indices below n (n >= 2).
std::pair<std::size_t, std::size_t> pick_two(Rng& rng, std::size_t n) {
  const std::size_t i = pick(rng, n);
  std::size_t j = pick(rng, n - 1);
  if (j >= i) ++j;
  return {i, j};
}

struct Drawn {
  const TokenSequence* seq;
  SampleRef ref;
};

Drawn draw_real(const PairSource& s, std::size_t i) {
  return {s.real[i], {Provenance::Real, i, -1}};
}

Drawn draw_gen(const PairSource& s, std::size_t i) {
  return {s.generated[i].sequence, {Provenance::Generated, i, s.generated[i].tag}};
}

LabeledPair make(const Drawn& a, const Drawn& b, L label) {
  return {a.seq, b.seq, label, a.ref, b.ref};
}

void require(bool ok, const char* cls, const char* why) {
  if (!ok) throw ConfigError(std::string("pair class ") + cls + " has no source: " + why);
}

// A better-than-opponent pair (winner first), real vs generated or from
// the checkpoint sets.
std::pair<Drawn, Drawn> draw_cross(const PairSource& s, Rng& rng, bool checkpoint) {
  if (checkpoint) {
    const std::size_t i = pick(rng, s.pseudo_real.size()), j = pick(rng, s.fake.size());
    return {{s.pseudo_real[i], {Provenance::PseudoReal, i, -1}},
            {s.fake[j], {Provenance::Fake, j, -1}}};
  }
  return {draw_real(s, pick(rng, s.real.size())), draw_gen(s, pick(rng, s.generated.size()))};
}

LabeledPair draw_tie(const PairSource& s, Rng& rng, bool from_real) {
  if (from_real) {
    auto [i, j] = pick_two(rng, s.real.size());
    return make(draw_real(s, i), draw_real(s, j), L::Tie);
  }
  auto [i, j] = pick_two(rng, s.generated.size());
  return make(draw_gen(s, i), draw_gen(s, j), L::Tie);
}

}  // namespace

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Real: return "real";
    case Provenance::Generated: return "generated";
    case Provenance::PseudoReal: return "pseudo-real";
    case Provenance::Fake: return "fake";
  }
  return "?";
}

std::vector<LabeledPair> build_pairs(std::span<const TokenSequence> real,
                                     std::span<const TokenSequence> generated) {
  if (real.empty() || generated.empty())
    throw UsageError("build_pairs needs nonempty real and generated lists");
  std::vector<LabeledPair> out;
  out.reserve(available_pair_counts(real.size(), generated.size()).ordered);
  auto r = [&](std::size_t i) { return Drawn{&real[i], {Provenance::Real, i, -1}}; };
  auto g = [&](std::size_t i) { return Drawn{&generated[i], {Provenance::Generated, i, -1}}; };
  for (std::size_t i = 0; i < real.size(); ++i)
    for (std::size_t j = 0; j < generated.size(); ++j) {
      out.push_back(make(r(i), g(j), L::Better));
      out.push_back(make(g(j), r(i), L::Worse));
    }
  for (std::size_t i = 0; i < real.size(); ++i)
    for (std::size_t j = i + 1; j < real.size(); ++j) out.push_back(make(r(i), r(j), L::Tie));
  for (std::size_t i = 0; i < generated.size(); ++i)
    for (std::size_t j = i + 1; j < generated.size(); ++j)
      out.push_back(make(g(i), g(j), L::Tie));
  return out;
}

PairCounts available_pair_counts(std::size_t n_real, std::size_t n_generated) {
  return {choose2(n_real + n_generated),
          2 * n_real * n_generated + choose2(n_real) + choose2(n_generated)};
}

std::vector<LabeledPair> checkpoint_pairs(std::span<const TokenSequence> late,
                                          std::span<const TokenSequence> early) {
  if (late.empty() || early.empty())
    throw UsageError("checkpoint_pairs needs nonempty late and early sample lists");
  const std::size_t n = std::min(late.size(), early.size());
  std::vector<LabeledPair> out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Drawn l{&late[i], {Provenance::PseudoReal, i, -1}};
    const Drawn e{&early[i], {Provenance::Fake, i, -1}};
    out.push_back(make(l, e, L::Better));
    out.push_back(make(e, l, L::Worse));
  }
  return out;
}

std::vector<LabeledPair> sample_pair_batch(const PairSource& s, std::size_t batch_size, Rng& rng,
                                           const BatchMix& mix) {
  const std::size_t classes = mix.ties ? 3 : 2;
  if (batch_size == 0) throw UsageError("pair batch size must be positive");
  if (mix.checkpoint_share < 0.0 || mix.checkpoint_share > 1.0)
    throw ConfigError("checkpoint share must lie in [0, 1]");

  const bool have_cross = !s.real.empty() && !s.generated.empty();
  const bool have_ckpt = !s.pseudo_real.empty() && !s.fake.empty();
  const bool real_ties = s.real.size() >= 2, gen_ties = s.generated.size() >= 2;
  const char* why_cross = "needs at least one real and one generated sample";
  require(have_cross || (mix.checkpoint_share >= 1.0 && have_ckpt), "Better", why_cross);
  require(have_cross || (mix.checkpoint_share >= 1.0 && have_ckpt), "Worse", why_cross);
  if (mix.checkpoint_share > 0.0)
    require(have_ckpt, "Better", "checkpoint share set without pseudo-real and fake samples");
  if (mix.ties)
    require(real_ties || gen_ties, "Tie", "needs two samples of the same provenance");

  std::vector<LabeledPair> out;
  out.reserve(batch_size);

  if (mix.mode == BatchMix::Mode::UniformRandom) {
    std::bernoulli_distribution ckpt(mix.checkpoint_share);
    for (std::size_t k = 0; k < batch_size; ++k) {
      const auto label = static_cast<L>(pick(rng, classes));
      if (label == L::Tie) {
        const bool from_real = real_ties && (!gen_ties || pick(rng, 2) == 0);
        out.push_back(draw_tie(s, rng, from_real));
        continue;
      }
      auto [win, lose] = draw_cross(s, rng, mix.checkpoint_share > 0.0 && ckpt(rng));
      out.push_back(label == L::Better ? make(win, lose, L::Better) : make(lose, win, L::Worse));
    }
    return out;
  }

  if (batch_size % classes != 0)
    throw UsageError("strict balanced batches need a size divisible by " +
                     std::to_string(classes) + ", got " + std::to_string(batch_size));
  const std::size_t per = batch_size / classes;
  const auto n_ckpt = static_cast<std::size_t>(std::llround(mix.checkpoint_share * double(per)));
  std::vector<LabeledPair> worse;
  worse.reserve(per);
  for (std::size_t k = 0; k < per; ++k) {
    auto [win, lose] = draw_cross(s, rng, k < n_ckpt);
    out.push_back(make(win, lose, L::Better));
    worse.push_back(make(lose, win, L::Worse));
  }
  out.insert(out.end(), worse.begin(), worse.end());
  if (mix.ties) {
    for (std::size_t k = 0; k < per; ++k) {
      bool from_real = k % 2 == 0;
      // An odd count leaves one tie whose side is drawn at random.
      if (per % 2 == 1 && k + 1 == per) from_real = pick(rng, 2) == 0;
      if (!real_ties) from_real = false;
      if (!gen_ties) from_real = true;
      out.push_back(draw_tie(s, rng, from_real));
    }
  }
  return out;
}

}  // namespace pairing
SALGAN_NAMESPACE_END
