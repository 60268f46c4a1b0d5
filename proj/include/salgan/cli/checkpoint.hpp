#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "salgan/diffcore/adam.hpp"
#include "salgan/models/comparator.hpp"
#include "salgan/models/generator.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

inline constexpr char kCheckpointMagic[] = "SALCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
  friend bool operator==(const CheckpointRecord&, const CheckpointRecord&) = default;
};

/// File layout, little-endian: 8-byte magic, u64 record count, then per
/// record u32 name length, name bytes, u32 rank, u64 dims, f32 data.
/// Metadata travels as empty records named "meta:<key>=<value>", written
/// first in key order, so save -> load -> save is byte-identical.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string fingerprint;
  std::uint64_t round = 0;
  std::int64_t step = 0;
  std::map<std::string, std::string> meta;
  std::vector<CheckpointRecord> records;

  const CheckpointRecord* find(const std::string& name) const;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// FormatError naming the expected magic on a bad header, on an unknown
/// version, and on truncation or trailing bytes. Nothing partial escapes.
Checkpoint decode_checkpoint(const std::string& bytes);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// ConfigError quoting both fingerprints when they differ.
void require_fingerprint(const Checkpoint& ckpt, const std::string& expected, const std::string& path);

void put_arrays(Checkpoint& ckpt, const std::string& prefix, const std::vector<std::string>& names,
                const std::vector<const diff::DenseArray*>& arrays);
/// FormatError when a record is missing or its shape differs from the target.
void get_arrays(const Checkpoint& ckpt, const std::string& prefix,
                const std::vector<std::string>& names, const std::vector<diff::DenseArray*>& arrays);

void put_generator(Checkpoint& ckpt, const std::string& prefix, const models::GeneratorParams& g);
models::GeneratorParams get_generator(const Checkpoint& ckpt, const std::string& prefix,
                                      const models::GeneratorDims& dims);

void put_comparator(Checkpoint& ckpt, const std::string& prefix, const models::ComparatorParams& d);
models::ComparatorParams get_comparator(const Checkpoint& ckpt, const std::string& prefix,
                                        const models::EncoderDims& dims);
void put_binary(Checkpoint& ckpt, const std::string& prefix, const models::BinaryDiscParams& d);
models::BinaryDiscParams get_binary(const Checkpoint& ckpt, const std::string& prefix,
                                    const models::EncoderDims& dims);

/// Moments under prefix/m and prefix/v; step and learning rate in metadata.
void put_adam(Checkpoint& ckpt, const std::string& prefix, const std::vector<std::string>& names,
              const diff::AdamState& adam);
diff::AdamState get_adam(const Checkpoint& ckpt, const std::string& prefix,
                         const std::vector<std::string>& names,
                         const std::vector<const diff::DenseArray*>& like);

}  // namespace cli
SALGAN_NAMESPACE_END
