#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace salgan {

using TokenId = std::int32_t;

/// Input fed before the first generated token.
inline constexpr TokenId kStartToken = 0;
inline constexpr TokenId kPadToken = 1;
inline constexpr TokenId kUnknownToken = 2;
inline constexpr TokenId kEndToken = 3;
inline constexpr std::size_t kReservedTokens = 4;

struct TokenSequence {
  std::vector<TokenId> ids;

  TokenSequence() = default;
  explicit TokenSequence(std::vector<TokenId> v) : ids(std::move(v)) {}
  TokenSequence(std::initializer_list<TokenId> v) : ids(v) {}

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  TokenId operator[](std::size_t i) const { return ids[i]; }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Token table for real corpora. Ids 0..3 are reserved for start, padding,
/// unknown, and end markers; corpus tokens follow in frequency order.
struct Vocab {
  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, TokenId> token_to_id;

  std::size_t size() const { return id_to_token.size(); }
  TokenId lookup(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnknownToken : it->second;
  }
};

}  // namespace salgan
