#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "salgan/pairing/pairing.hpp"
#include "salgan/rng.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

using pairing::TaggedSample;

/// Sample batches from the last `capacity` generator phases, each tagged
/// with the phase that produced it.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(std::size_t capacity);

  /// Appends `batch` under `tag` and drops every batch tagged below
  /// tag - capacity + 1. Pointers handed out earlier stay valid until their
  /// batch is dropped.
  void update(std::vector<TokenSequence> batch, std::int64_t tag);

  std::size_t capacity() const { return capacity_; }
  bool empty() const { return batches_.empty(); }
  std::size_t batch_count() const { return batches_.size(); }
  std::size_t sample_count() const;
  std::vector<std::int64_t> tags() const;
  std::int64_t oldest_tag() const;
  std::int64_t newest_tag() const;

  /// Every retained sample, oldest batch first.
  std::vector<TaggedSample> samples() const;
  /// Uniform over all retained samples; StateError when empty.
  TaggedSample sample(Rng& rng) const;

 private:
  struct Batch {
    std::int64_t tag;
    std::vector<TokenSequence> samples;
  };
  std::size_t capacity_;
  std::deque<Batch> batches_;
};

}  // namespace training
SALGAN_NAMESPACE_END
