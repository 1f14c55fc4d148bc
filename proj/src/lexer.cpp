#include "patchprobe/lexer.hpp"

#include <array>
#include <cctype>
#include <cstdlib>
#include <unordered_set>

namespace patchprobe {

namespace {

const std::unordered_set<std::string>& keyword_set() {
    static const std::unordered_set<std::string> kw = {
        "if", "else", "for", "while", "do", "switch", "case", "default", "break",
        "continue", "return", "goto", "sizeof", "struct", "union", "enum", "typedef",
        "static", "extern", "register", "const", "volatile", "signed", "unsigned",
        "int", "char", "long", "short", "float", "double", "void", "inline",
        "restrict", "auto",
    };
    return kw;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Characters continuing a numeric lexeme once one has started. Hex digits,
// radix markers, suffixes and the decimal point are absorbed so literals like
// 0x1fUL or 1.5f stay one token.
bool is_number_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.';
}

bool is_operator_char(char c) {
    switch (c) {
    case '+': case '-': case '*': case '/': case '%':
    case '=': case '<': case '>': case '!': case '~':
    case '&': case '|': case '^': case '.':
        return true;
    default:
        return false;
    }
}

// Maximal-munch table of multi-character operators.
bool is_known_operator(const std::string& s) {
    static const std::unordered_set<std::string> ops = {
        "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^", ".",
        "==", "!=", "<=", ">=", "<<", ">>", "&&", "||", "->", "++", "--",
        "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=",
    };
    return ops.count(s) > 0;
}

std::uint64_t decode_integer(const std::string& lexeme) {
    // strtoull with base 0 understands 0x..., leading-0 octal and decimal;
    // it stops at suffixes and decimal points, which is what we want.
    return std::strtoull(lexeme.c_str(), nullptr, 0);
}

std::uint64_t decode_char(const std::string& lexeme) {
    // lexeme includes the surrounding quotes
    if (lexeme.size() < 3) return 0;
    if (lexeme[1] != '\\') return static_cast<unsigned char>(lexeme[1]);
    switch (lexeme[2]) {
    case 'n': return '\n';
    case 't': return '\t';
    case 'r': return '\r';
    case '0': return 0;
    case '\\': return '\\';
    case '\'': return '\'';
    case '"': return '"';
    default: return static_cast<unsigned char>(lexeme[2]);
    }
}

enum class State {
    Start,
    Identifier,
    Number,
    String,
    StringEscape,
    Char,
    CharEscape,
    Operator,
    LineComment,
    BlockComment,
    BlockCommentStar,
};

} // namespace

std::vector<Token> lex_line(const std::string& text) {
    std::vector<Token> tokens;
    State state = State::Start;
    std::string cur;
    std::size_t cur_start = 0;

    auto emit = [&](TokenKind kind) {
        if (cur.empty()) return;
        Token t;
        t.kind = kind;
        t.lexeme = cur;
        t.column = cur_start;
        if (kind == TokenKind::Identifier && keyword_set().count(cur)) {
            t.kind = TokenKind::Keyword;
        } else if (kind == TokenKind::IntegerLiteral) {
            t.value = decode_integer(cur);
        } else if (kind == TokenKind::CharLiteral) {
            t.value = decode_char(cur);
        }
        tokens.push_back(std::move(t));
        cur.clear();
    };

    // One pass, one character at a time; position i==text.size() feeds a
    // sentinel '\n' so every pending token is flushed.
    for (std::size_t i = 0; i <= text.size(); ++i) {
        const char c = i < text.size() ? text[i] : '\n';
        const bool at_end = i == text.size();

        switch (state) {
        case State::Start:
            if (at_end) break;
            cur_start = i;
            if (is_ident_start(c)) {
                cur += c;
                state = State::Identifier;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                cur += c;
                state = State::Number;
            } else if (c == '"') {
                cur += c;
                state = State::String;
            } else if (c == '\'') {
                cur += c;
                state = State::Char;
            } else if (is_operator_char(c)) {
                cur += c;
                state = State::Operator;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                // skip
            } else {
                cur += c;
                emit(TokenKind::Punctuation);
            }
            break;

        case State::Identifier:
            if (!at_end && is_ident_char(c)) {
                cur += c;
            } else {
                emit(TokenKind::Identifier);
                state = State::Start;
                --i;
            }
            break;

        case State::Number:
            if (!at_end && is_number_char(c)) {
                cur += c;
            } else {
                emit(TokenKind::IntegerLiteral);
                state = State::Start;
                --i;
            }
            break;

        case State::String:
            if (at_end) {
                emit(TokenKind::StringLiteral); // unterminated: lenient close
            } else if (c == '\\') {
                cur += c;
                state = State::StringEscape;
            } else if (c == '"') {
                cur += c;
                emit(TokenKind::StringLiteral);
                state = State::Start;
            } else {
                cur += c;
            }
            break;

        case State::StringEscape:
            if (at_end) {
                emit(TokenKind::StringLiteral);
            } else {
                cur += c;
                state = State::String;
            }
            break;

        case State::Char:
            if (at_end) {
                emit(TokenKind::CharLiteral);
            } else if (c == '\\') {
                cur += c;
                state = State::CharEscape;
            } else if (c == '\'') {
                cur += c;
                emit(TokenKind::CharLiteral);
                state = State::Start;
            } else {
                cur += c;
            }
            break;

        case State::CharEscape:
            if (at_end) {
                emit(TokenKind::CharLiteral);
            } else {
                cur += c;
                state = State::Char;
            }
            break;

        case State::Operator:
            if (cur == "/" && !at_end && c == '/') {
                cur += c;
                state = State::LineComment;
            } else if (cur == "/" && !at_end && c == '*') {
                cur += c;
                state = State::BlockComment;
            } else if (!at_end && is_operator_char(c) && is_known_operator(cur + c)) {
                cur += c;
            } else {
                // "." between digits would have been absorbed by Number;
                // a bare "." here is the member-access operator.
                emit(TokenKind::Operator);
                state = State::Start;
                --i;
            }
            break;

        case State::LineComment:
            if (at_end) {
                emit(TokenKind::Comment);
            } else {
                cur += c;
            }
            break;

        case State::BlockComment:
            if (at_end) {
                emit(TokenKind::Comment); // unterminated on this line
            } else {
                cur += c;
                if (c == '*') state = State::BlockCommentStar;
            }
            break;

        case State::BlockCommentStar:
            if (at_end) {
                emit(TokenKind::Comment);
            } else {
                cur += c;
                if (c == '/') {
                    emit(TokenKind::Comment);
                    state = State::Start;
                } else if (c != '*') {
                    state = State::BlockComment;
                }
            }
            break;
        }
    }

    return tokens;
}

std::string render_tokens(const std::vector<Token>& tokens) {
    std::string out;
    for (const Token& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t.lexeme;
    }
    return out;
}

bool is_c_keyword(const std::string& word) {
    return keyword_set().count(word) > 0;
}

bool is_literal_identifier(const std::string& word) {
    return word == "NULL" || word == "nullptr" || word == "true" || word == "false";
}

std::uint64_t literal_identifier_value(const std::string& word) {
    return word == "true" ? 1 : 0;
}

} // namespace patchprobe
