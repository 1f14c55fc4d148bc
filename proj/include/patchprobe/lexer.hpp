#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace patchprobe {

enum class TokenKind {
    Identifier,
    IntegerLiteral,
    StringLiteral,
    CharLiteral,
    Operator,
    Punctuation,
    Keyword,
    Comment,
};

/// One lexical unit of a C-like source line. Integer and character literals
/// keep their spelling in `lexeme` (radix, suffixes) and carry the decoded
/// numeric value in `value`.
struct Token {
    TokenKind kind = TokenKind::Punctuation;
    std::string lexeme;
    std::size_t column = 0; // 0-based offset of the first character
    std::uint64_t value = 0;

    bool is(TokenKind k) const { return kind == k; }
    bool is(TokenKind k, const std::string& text) const { return kind == k && lexeme == text; }
};

/// Tokenize one line of C-like text with a character-at-a-time finite state
/// machine. Total: every input line produces a token list, unknown characters
/// become single-character punctuation. Comments are kept as Comment tokens
/// so annotations like //patch_code survive lexing.
std::vector<Token> lex_line(const std::string& text);

/// Join token lexemes with single spaces. lex_line(render_tokens(ts)) yields
/// a token list identical to ts (kind, lexeme, value) for any ts produced by
/// lex_line.
std::string render_tokens(const std::vector<Token>& tokens);

bool is_c_keyword(const std::string& word);

/// Identifiers that stand for literal values (NULL, true, ...) and therefore
/// never count as variables.
bool is_literal_identifier(const std::string& word);

/// Decoded value for a literal identifier (NULL -> 0, true -> 1, ...).
std::uint64_t literal_identifier_value(const std::string& word);

} // namespace patchprobe
