#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "deladas/diagnostics.hpp"

namespace deladas {

enum class TokenKind { Ident, Keyword, Int, Symbol, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  int line = 1;    // 1-based, first character of the token
  int column = 1;  // 1-based

  bool is(TokenKind k, std::string_view t) const {
    return kind == k && text == t;
  }
  bool is_keyword(std::string_view t) const { return is(TokenKind::Keyword, t); }
  bool is_symbol(std::string_view t) const { return is(TokenKind::Symbol, t); }
};

struct LexResult {
  std::vector<Token> tokens;  // always ends with an End token
  std::vector<Diagnostic> diagnostics;
};

inline bool is_deladas_keyword(std::string_view word) {
  static constexpr std::array<std::string_view, 12> kKeywords = {
      "forall", "exists", "in",   "deployment", "constraintset", "instancesof",
      "connectsto", "or", "and",  "host",       "components",    "hosts"};
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

/// Splits Deladas source text into tokens. `//` comments run to end of line.
/// Unknown characters produce an error diagnostic and are skipped so later
/// errors are still reported with positions.
inline LexResult tokenize(std::string_view source) {
  LexResult result;
  int line = 1, column = 1;
  size_t i = 0;

  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (i < source.size() && source[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
      ++i;
    }
  };

  auto is_ident_start = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  auto is_ident_char = [&](char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '_';
  };

  while (i < source.size()) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
      while (i < source.size() && source[i] != '\n') advance(1);
      continue;
    }
    int tok_line = line, tok_col = column;
    if (is_ident_start(c)) {
      size_t start = i;
      while (i < source.size() && is_ident_char(source[i])) advance(1);
      std::string word(source.substr(start, i - start));
      TokenKind kind =
          is_deladas_keyword(word) ? TokenKind::Keyword : TokenKind::Ident;
      result.tokens.push_back({kind, std::move(word), tok_line, tok_col});
      continue;
    }
    if (c >= '0' && c <= '9') {
      size_t start = i;
      while (i < source.size() && source[i] >= '0' && source[i] <= '9')
        advance(1);
      result.tokens.push_back({TokenKind::Int,
                               std::string(source.substr(start, i - start)),
                               tok_line, tok_col});
      continue;
    }
    // Two-character operators first.
    if (i + 1 < source.size()) {
      std::string_view two = source.substr(i, 2);
      if (two == "!=" || two == "<=" || two == ">=") {
        result.tokens.push_back(
            {TokenKind::Symbol, std::string(two), tok_line, tok_col});
        advance(2);
        continue;
      }
    }
    if (std::string_view("{}(),.:=<>").find(c) != std::string_view::npos) {
      result.tokens.push_back(
          {TokenKind::Symbol, std::string(1, c), tok_line, tok_col});
      advance(1);
      continue;
    }
    result.diagnostics.push_back(error_at(
        std::string("illegal character '") + c + "'", tok_line, tok_col));
    advance(1);
  }
  result.tokens.push_back({TokenKind::End, "", line, column});
  return result;
}

}  // namespace deladas
