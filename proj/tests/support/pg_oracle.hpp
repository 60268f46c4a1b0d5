#pragma once

// Exhaustive-enumeration oracle for the REINFORCE gradient on tiny
// vocabularies: every sequence of length T over V tokens is visited.

#include <cmath>
#include <map>
#include <vector>

#include "salgan/models/generator.hpp"
#include "salgan/training/rollout.hpp"

namespace salgan::pgtest {

using models::GeneratorParams;
using diff::DenseArray;

inline std::vector<TokenSequence> all_sequences(std::size_t vocab, std::size_t len) {
  std::vector<TokenSequence> out{TokenSequence{}};
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<TokenSequence> next;
    for (const auto& s : out)
      for (std::size_t v = 0; v < vocab; ++v) {
        TokenSequence x = s;
        x.ids.push_back(static_cast<TokenId>(v));
        next.push_back(x);
      }
    out = std::move(next);
  }
  return out;
}

/// Fixed terminal reward; distinct value per sequence.
inline double toy_reward(const TokenSequence& s) {
  double key = 1.0;
  for (TokenId t : s.ids) key = 3.0 * key + t;
  return std::sin(1.7 * key) + 0.25;
}

inline std::vector<DenseArray> copy_params(const GeneratorParams& g) {
  std::vector<DenseArray> out;
  for (const DenseArray* a : g.arrays()) out.push_back(*a);
  return out;
}

inline GeneratorParams with_params(GeneratorParams g, const std::vector<DenseArray>& a) {
  auto dst = g.arrays();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = a[i];
  return g;
}

inline double sequence_prob(const GeneratorParams& g, const TokenSequence& s) {
  return std::exp(-static_cast<double>(s.size()) * models::sequence_nll(g, s));
}

/// J = sum_s P(s) r(s).
inline double expected_reward(const GeneratorParams& g, std::size_t len) {
  double j = 0.0;
  for (const auto& s : all_sequences(g.dims.vocab, len)) j += sequence_prob(g, s) * toy_reward(s);
  return j;
}

/// r(s) grad log P(s), i.e. one single-sample REINFORCE estimate.
inline std::vector<DenseArray> reinforce_sample(const GeneratorParams& g, const TokenSequence& s) {
  const TokenSequence batch[] = {s};
  std::vector<DenseArray> neg = training::policy_gradient(
      g, batch, {std::vector<double>(s.size(), toy_reward(s))});
  for (auto& a : neg)
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = -a[i];
  return neg;
}

/// sum_s P(s) r(s) grad log P(s).
inline std::vector<DenseArray> exact_gradient(const GeneratorParams& g, std::size_t len) {
  std::vector<DenseArray> total;
  for (const auto& s : all_sequences(g.dims.vocab, len)) {
    const double p = sequence_prob(g, s);
    const auto gs = reinforce_sample(g, s);
    if (total.empty())
      for (const auto& a : gs) total.push_back(DenseArray::zeros_like(a));
    for (std::size_t k = 0; k < gs.size(); ++k)
      for (std::size_t i = 0; i < gs[k].size(); ++i) total[k][i] += p * gs[k][i];
  }
  return total;
}

struct MonteCarloComparison {
  std::size_t coordinates = 0;
  std::size_t outside = 0;    // coordinates beyond `sigmas` standard errors
  double worst_z = 0.0;
};

/// Mean of `samples` single-sample estimates against the exact gradient.
/// Per-sequence estimates are cached; sampling runs through sample_sequence.
inline MonteCarloComparison compare_monte_carlo(const GeneratorParams& g, std::size_t len,
                                                std::size_t samples, std::uint64_t seed,
                                                double sigmas) {
  const auto exact = exact_gradient(g, len);
  std::map<std::vector<TokenId>, std::size_t> counts;
  Rng rng(seed);
  for (std::size_t n = 0; n < samples; ++n) ++counts[models::sample_sequence(g, len, rng).sequence.ids];
  std::vector<std::vector<double>> sum(exact.size()), sq(exact.size());
  for (std::size_t k = 0; k < exact.size(); ++k) {
    sum[k].assign(exact[k].size(), 0.0);
    sq[k].assign(exact[k].size(), 0.0);
  }
  for (const auto& [ids, c] : counts) {
    const auto gs = reinforce_sample(g, TokenSequence(ids));
    for (std::size_t k = 0; k < gs.size(); ++k)
      for (std::size_t i = 0; i < gs[k].size(); ++i) {
        sum[k][i] += double(c) * gs[k][i];
        sq[k][i] += double(c) * gs[k][i] * gs[k][i];
      }
  }
  MonteCarloComparison out;
  const double n = static_cast<double>(samples);
  for (std::size_t k = 0; k < exact.size(); ++k)
    for (std::size_t i = 0; i < exact[k].size(); ++i) {
      const double mean = sum[k][i] / n;
      const double var = std::max(0.0, sq[k][i] / n - mean * mean);
      const double se = std::sqrt(var / n);
      const double diff = std::abs(mean - exact[k][i]);
      ++out.coordinates;
      if (se == 0.0) {
        if (diff > 1e-12) ++out.outside;
        continue;
      }
      out.worst_z = std::max(out.worst_z, diff / se);
      if (diff > sigmas * se) ++out.outside;
    }
  return out;
}

}  // namespace salgan::pgtest
