#include "salgan/training/memory.hpp"

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

MemoryBuffer::MemoryBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("memory capacity K must be at least 1");
}

void MemoryBuffer::update(std::vector<TokenSequence> batch, std::int64_t tag) {
  if (batch.empty()) throw UsageError("memory update with an empty batch");
  if (!batches_.empty() && tag <= batches_.back().tag)
    throw UsageError("memory tags must increase: " + std::to_string(tag) + " after " +
                     std::to_string(batches_.back().tag));
  batches_.push_back({tag, std::move(batch)});
  const std::int64_t keep_from = tag - static_cast<std::int64_t>(capacity_) + 1;
  while (batches_.front().tag < keep_from) batches_.pop_front();
}

std::size_t MemoryBuffer::sample_count() const {
  std::size_t n = 0;
  for (const auto& b : batches_) n += b.samples.size();
  return n;
}

std::vector<std::int64_t> MemoryBuffer::tags() const {
  std::vector<std::int64_t> out;
  for (const auto& b : batches_) out.push_back(b.tag);
  return out;
}

std::int64_t MemoryBuffer::oldest_tag() const {
  if (empty()) throw StateError("memory buffer is empty");
  return batches_.front().tag;
}

std::int64_t MemoryBuffer::newest_tag() const {
  if (empty()) throw StateError("memory buffer is empty");
  return batches_.back().tag;
}

std::vector<TaggedSample> MemoryBuffer::samples() const {
  std::vector<TaggedSample> out;
  out.reserve(sample_count());
  for (const auto& b : batches_)
    for (const auto& s : b.samples) out.push_back({&s, b.tag});
  return out;
}

TaggedSample MemoryBuffer::sample(Rng& rng) const {
  const std::size_t n = sample_count();
  if (n == 0) throw StateError("cannot draw a reference from an empty memory buffer");
  std::size_t k = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (const auto& b : batches_) {
    if (k < b.samples.size()) return {&b.samples[k], b.tag};
    k -= b.samples.size();
  }
  return {};
}

}  // namespace training
SALGAN_NAMESPACE_END
