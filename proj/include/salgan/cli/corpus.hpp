#pragma once

#include <string>
#include <vector>

#include "salgan/models/sequence.hpp"
#include "salgan/real.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

/// Text shown for ids that have no token: the unknown id and the markers.
inline constexpr const char* kUnknownMarker = "<unk>";

/// Tokens ranked by descending frequency, ties lexicographic, truncated to
/// `max_size` corpus tokens, after the reserved ids. IoError when the file
/// is unreadable; UsageError when it holds no tokens.
Vocab build_vocab(const std::string& corpus_path, std::size_t max_size);

/// One token per line, id order, reserved markers included.
void save_vocab(const Vocab& vocab, const std::string& path);
Vocab load_vocab(const std::string& path);

struct EncodedCorpus {
  std::vector<TokenSequence> sequences;
  std::size_t skipped_empty = 0;
};

/// Whitespace tokens, one sentence per line. Empty lines are skipped and
/// counted. With `seq_len` > 0, each sentence keeps at most seq_len - 1
/// tokens, then the end marker, then padding up to seq_len.
EncodedCorpus encode_corpus(const Vocab& vocab, const std::string& corpus_path,
                            std::size_t seq_len = 0);
TokenSequence encode_line(const Vocab& vocab, const std::string& line, std::size_t seq_len = 0);

/// Content tokens joined by single spaces; stops at the end marker and drops
/// padding. Unknown and out-of-range ids render as kUnknownMarker.
std::string decode(const Vocab& vocab, const TokenSequence& seq);
std::vector<std::string> decode(const Vocab& vocab, const std::vector<TokenSequence>& seqs);

/// Id files: one sequence per line, ids as decimal tokens.
void write_id_corpus(const std::string& path, const std::vector<TokenSequence>& seqs);
/// FormatError on a non-numeric or negative token.
std::vector<TokenSequence> read_id_corpus(const std::string& path);
TokenSequence parse_ids(const std::string& text);
std::string format_ids(const TokenSequence& seq);

}  // namespace cli
SALGAN_NAMESPACE_END
