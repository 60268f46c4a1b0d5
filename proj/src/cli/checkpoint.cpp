#include "salgan/cli/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "salgan/errors.hpp"
#include "salgan/training/loop.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

SALGAN_NAMESPACE_BEGIN
namespace cli {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr const char* kMetaPrefix = "meta:";

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <class T>
  T get(const char* what) {
    T v;
    need(sizeof(T), what);
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void read_floats(std::vector<float>& out, std::size_t count, const char* what) {
    if (count > (bytes_.size() - pos_) / sizeof(float)) truncated(what);
    out.resize(count);
    std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) truncated(what);
  }
  [[noreturn]] void truncated(const char* what) {
    throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::map<std::string, std::string> all_meta(const Checkpoint& c) {
  std::map<std::string, std::string> m = c.meta;
  m["fingerprint"] = c.fingerprint;
  m["round"] = std::to_string(c.round);
  m["step"] = std::to_string(c.step);
  return m;
}

template <class T>
T parse_number(const std::string& s, const std::string& key) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw FormatError("checkpoint metadata '" + key + "' is not a number: '" + s + "'");
  return v;
}

std::string name_of(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "/" + name;
}

std::string meta_value(const Checkpoint& c, const std::string& key) {
  auto it = c.meta.find(key);
  if (it == c.meta.end()) throw FormatError("checkpoint lacks metadata '" + key + "'");
  return it->second;
}

}  // namespace

const CheckpointRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& c) {
  const auto meta = all_meta(c);
  std::string out(kCheckpointMagic, kMagicSize);
  put<std::uint64_t>(out, meta.size() + c.records.size());
  for (const auto& [k, v] : meta) {
    if (k.find('=') != std::string::npos) throw UsageError("checkpoint metadata key '" + k + "' contains '='");
    const std::string name = kMetaPrefix + k + "=" + v;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, 1);
    put<std::uint64_t>(out, 0);
  }
  for (const auto& r : c.records) {
    if (r.name.rfind(kMetaPrefix, 0) == 0) throw UsageError("record name '" + r.name + "' is reserved");
    std::uint64_t n = 1;
    for (auto d : r.dims) n *= d;
    if (n != r.data.size()) throw ShapeError("record '" + r.name + "' data does not match its dims");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(r.data.data()), r.data.size() * sizeof(float));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicSize || bytes.compare(0, 7, kCheckpointMagic, 7) != 0)
    throw FormatError(std::string("not a checkpoint: expected magic ") + kCheckpointMagic);
  if (bytes[7] != kCheckpointMagic[7])
    throw FormatError(std::string("unsupported checkpoint version '") + bytes[7] + "', expected magic " +
                      kCheckpointMagic);
  Reader rd(bytes);
  rd.take(kMagicSize, "magic");
  const auto count = rd.get<std::uint64_t>("record count");
  Checkpoint c;
  std::map<std::string, std::string> meta;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = rd.get<std::uint32_t>("name length");
    CheckpointRecord r;
    r.name = rd.take(len, "record name");
    const auto rank = rd.get<std::uint32_t>("rank");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      r.dims.push_back(rd.get<std::uint64_t>("dims"));
      if (r.dims.back() != 0 && n > (std::uint64_t{1} << 40) / r.dims.back())
        throw FormatError("record '" + r.name + "' is implausibly large");
      n *= r.dims.back();
    }
    rd.read_floats(r.data, n, "record data");
    if (r.name.rfind(kMetaPrefix, 0) == 0) {
      const std::string kv = r.name.substr(std::strlen(kMetaPrefix));
      const auto eq = kv.find('=');
      if (eq == std::string::npos || n != 0) throw FormatError("malformed metadata record '" + r.name + "'");
      meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    } else {
      if (c.find(r.name)) throw FormatError("duplicate checkpoint record '" + r.name + "'");
      c.records.push_back(std::move(r));
    }
  }
  if (!rd.done()) throw FormatError("checkpoint has trailing bytes after the last record");
  for (const char* key : {"fingerprint", "round", "step"})
    if (!meta.count(key)) throw FormatError(std::string("checkpoint lacks metadata '") + key + "'");
  c.fingerprint = meta["fingerprint"];
  c.round = parse_number<std::uint64_t>(meta["round"], "round");
  c.step = parse_number<std::int64_t>(meta["step"], "step");
  meta.erase("fingerprint");
  meta.erase("round");
  meta.erase("step");
  c.meta = std::move(meta);
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into '" + path + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void require_fingerprint(const Checkpoint& ckpt, const std::string& expected, const std::string& path) {
  if (ckpt.fingerprint != expected)
    throw ConfigError("checkpoint '" + path + "' has config fingerprint " + ckpt.fingerprint +
                      " but the current config has " + expected);
}

void put_arrays(Checkpoint& ckpt, const std::string& prefix, const std::vector<std::string>& names,
                const std::vector<const diff::DenseArray*>& arrays) {
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    CheckpointRecord r;
    r.name = name_of(prefix, names[i]);
    for (auto d : arrays[i]->shape()) r.dims.push_back(d);
    r.data.assign(arrays[i]->storage().begin(), arrays[i]->storage().end());
    ckpt.records.push_back(std::move(r));
  }
}

void get_arrays(const Checkpoint& ckpt, const std::string& prefix, const std::vector<std::string>& names,
                const std::vector<diff::DenseArray*>& arrays) {
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const std::string name = name_of(prefix, names[i]);
    const CheckpointRecord* r = ckpt.find(name);
    if (!r) throw FormatError("checkpoint lacks record '" + name + "'");
    const diff::Shape want = arrays[i]->shape();
    const diff::Shape got(r->dims.begin(), r->dims.end());
    if (got != want)
      throw FormatError("record '" + name + "' has shape " + diff::shape_string(got) + ", expected " +
                        diff::shape_string(want));
    auto& dst = arrays[i]->storage();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<Real>(r->data[k]);
  }
}

void put_generator(Checkpoint& ckpt, const std::string& prefix, const models::GeneratorParams& g) {
  put_arrays(ckpt, prefix, models::GeneratorParams::names(), g.arrays());
}

models::GeneratorParams get_generator(const Checkpoint& ckpt, const std::string& prefix,
                                      const models::GeneratorDims& dims) {
  models::GeneratorParams g = models::zero_generator(dims);
  get_arrays(ckpt, prefix, models::GeneratorParams::names(), g.arrays());
  return g;
}

void put_comparator(Checkpoint& ckpt, const std::string& prefix, const models::ComparatorParams& d) {
  ckpt.meta[prefix + ".classes"] = std::to_string(d.classes);
  put_arrays(ckpt, prefix, d.names(), d.arrays());
}

models::ComparatorParams get_comparator(const Checkpoint& ckpt, const std::string& prefix,
                                        const models::EncoderDims& dims) {
  const auto classes = parse_number<std::size_t>(meta_value(ckpt, prefix + ".classes"), prefix + ".classes");
  if (classes != 2 && classes != 3) throw FormatError("comparator must have 2 or 3 classes");
  models::ComparatorParams d = models::zero_comparator(dims, classes);
  get_arrays(ckpt, prefix, d.names(), d.arrays());
  return d;
}

void put_binary(Checkpoint& ckpt, const std::string& prefix, const models::BinaryDiscParams& d) {
  put_arrays(ckpt, prefix, d.names(), d.arrays());
}

models::BinaryDiscParams get_binary(const Checkpoint& ckpt, const std::string& prefix,
                                    const models::EncoderDims& dims) {
  models::BinaryDiscParams d = models::zero_binary_disc(dims);
  get_arrays(ckpt, prefix, d.names(), d.arrays());
  return d;
}

void put_adam(Checkpoint& ckpt, const std::string& prefix, const std::vector<std::string>& names,
              const diff::AdamState& adam) {
  ckpt.meta[prefix + ".step"] = std::to_string(adam.step);
  ckpt.meta[prefix + ".lr"] = training::format_number(adam.config.learning_rate);
  if (adam.first_moment.empty()) return;
  std::vector<const diff::DenseArray*> m, v;
  for (const auto& a : adam.first_moment) m.push_back(&a);
  for (const auto& a : adam.second_moment) v.push_back(&a);
  put_arrays(ckpt, prefix + "/m", names, m);
  put_arrays(ckpt, prefix + "/v", names, v);
}

diff::AdamState get_adam(const Checkpoint& ckpt, const std::string& prefix,
                         const std::vector<std::string>& names,
                         const std::vector<const diff::DenseArray*>& like) {
  diff::AdamState adam;
  adam.step = parse_number<std::int64_t>(meta_value(ckpt, prefix + ".step"), prefix + ".step");
  adam.config.learning_rate = parse_number<double>(meta_value(ckpt, prefix + ".lr"), prefix + ".lr");
  if (!ckpt.find(name_of(prefix + "/m", names.at(0)))) return adam;
  for (const auto* a : like) {
    adam.first_moment.push_back(diff::DenseArray::zeros_like(*a));
    adam.second_moment.push_back(diff::DenseArray::zeros_like(*a));
  }
  std::vector<diff::DenseArray*> m, v;
  for (auto& a : adam.first_moment) m.push_back(&a);
  for (auto& a : adam.second_moment) v.push_back(&a);
  get_arrays(ckpt, prefix + "/m", names, m);
  get_arrays(ckpt, prefix + "/v", names, v);
  return adam;
}

}  // namespace cli
SALGAN_NAMESPACE_END
