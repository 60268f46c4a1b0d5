#include "salgan/cli/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

namespace {

const char* const kReservedNames[kReservedTokens] = {"<start>", "<pad>", kUnknownMarker, "<end>"};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

Vocab from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.id_to_token = std::move(tokens);
  for (std::size_t i = kReservedTokens; i < v.id_to_token.size(); ++i)
    v.token_to_id.emplace(v.id_to_token[i], static_cast<TokenId>(i));
  return v;
}

}  // namespace

Vocab build_vocab(const std::string& corpus_path, std::size_t max_size) {
  std::ifstream in = open_in(corpus_path);
  std::map<std::string, std::size_t> freq;
  std::string tok;
  while (in >> tok) ++freq[tok];
  if (freq.empty()) throw UsageError("corpus '" + corpus_path + "' contains no tokens");
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens(kReservedNames, kReservedNames + kReservedTokens);
  for (auto& [t, n] : ranked) tokens.push_back(t);
  return from_tokens(std::move(tokens));
}

void save_vocab(const Vocab& vocab, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& t : vocab.id_to_token) out << t << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

Vocab load_vocab(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  if (tokens.size() < kReservedTokens)
    throw FormatError("vocabulary '" + path + "' lacks the reserved entries");
  for (std::size_t i = 0; i < kReservedTokens; ++i)
    if (tokens[i] != kReservedNames[i])
      throw FormatError("vocabulary '" + path + "' line " + std::to_string(i + 1) + " must be " +
                        kReservedNames[i]);
  return from_tokens(std::move(tokens));
}

TokenSequence encode_line(const Vocab& vocab, const std::string& line, std::size_t seq_len) {
  std::istringstream ss(line);
  TokenSequence out;
  std::string tok;
  while (ss >> tok) out.ids.push_back(vocab.lookup(tok));
  if (seq_len > 0) {
    if (out.ids.size() > seq_len - 1) out.ids.resize(seq_len - 1);
    out.ids.push_back(kEndToken);
    out.ids.resize(seq_len, kPadToken);
  }
  return out;
}

EncodedCorpus encode_corpus(const Vocab& vocab, const std::string& corpus_path, std::size_t seq_len) {
  std::ifstream in = open_in(corpus_path);
  EncodedCorpus out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
      ++out.skipped_empty;
      continue;
    }
    out.sequences.push_back(encode_line(vocab, line, seq_len));
  }
  return out;
}

std::string decode(const Vocab& vocab, const TokenSequence& seq) {
  std::string out;
  for (TokenId t : seq.ids) {
    if (t == kEndToken) break;
    if (t == kPadToken) continue;
    const bool known = t >= static_cast<TokenId>(kReservedTokens) &&
                       static_cast<std::size_t>(t) < vocab.size();
    if (!out.empty()) out += ' ';
    out += known ? vocab.id_to_token[static_cast<std::size_t>(t)] : kUnknownMarker;
  }
  return out;
}

std::vector<std::string> decode(const Vocab& vocab, const std::vector<TokenSequence>& seqs) {
  std::vector<std::string> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(decode(vocab, s));
  return out;
}

std::string format_ids(const TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(seq[i]);
  }
  return out;
}

TokenSequence parse_ids(const std::string& text) {
  std::istringstream ss(text);
  TokenSequence out;
  std::string tok;
  while (ss >> tok) {
    TokenId v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || v < 0)
      throw FormatError("'" + tok + "' is not a token id");
    out.ids.push_back(v);
  }
  return out;
}

void write_id_corpus(const std::string& path, const std::vector<TokenSequence>& seqs) {
  std::ofstream out = open_out(path);
  for (const auto& s : seqs) out << format_ids(s) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<TokenSequence> read_id_corpus(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<TokenSequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_ids(line));
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cli
SALGAN_NAMESPACE_END
