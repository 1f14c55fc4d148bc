#include "patchprobe/lexer.hpp"

#include <doctest.h>

using namespace patchprobe;

namespace {

bool same_tokens(const std::vector<Token>& a, const std::vector<Token>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].kind != b[i].kind || a[i].lexeme != b[i].lexeme || a[i].value != b[i].value) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE("lexer") {

TEST_CASE("classifies a simple condition") {
    auto tokens = lex_line("if (x > 0)");
    REQUIRE(tokens.size() == 6);
    CHECK(tokens[0].is(TokenKind::Keyword, "if"));
    CHECK(tokens[1].is(TokenKind::Punctuation, "("));
    CHECK(tokens[2].is(TokenKind::Identifier, "x"));
    CHECK(tokens[3].is(TokenKind::Operator, ">"));
    CHECK(tokens[4].is(TokenKind::IntegerLiteral, "0"));
    CHECK(tokens[5].is(TokenKind::Punctuation, ")"));
}

TEST_CASE("empty line lexes to nothing") {
    CHECK(lex_line("").empty());
    CHECK(lex_line("   \t  ").empty());
}

TEST_CASE("integer literals keep radix but carry canonical values") {
    auto tokens = lex_line("y = a+0x10;");
    REQUIRE(tokens.size() == 6);
    CHECK(tokens[4].is(TokenKind::IntegerLiteral, "0x10"));
    CHECK(tokens[4].value == 16);

    auto hex = lex_line("0x303 771 0755 'a'");
    CHECK(hex[0].value == 771);
    CHECK(hex[1].value == 771);
    CHECK(hex[2].value == 493);
    CHECK(hex[3].value == 97);
}

TEST_CASE("multi-character operators stay whole") {
    auto tokens = lex_line("a <<= b >> 2 && c->d");
    REQUIRE(tokens.size() == 9);
    CHECK(tokens[1].is(TokenKind::Operator, "<<="));
    CHECK(tokens[3].is(TokenKind::Operator, ">>"));
    CHECK(tokens[5].is(TokenKind::Operator, "&&"));
    CHECK(tokens[7].is(TokenKind::Operator, "->"));
}

TEST_CASE("comments become trailing comment tokens") {
    auto tokens = lex_line("x = 1; //patch_code");
    REQUIRE(tokens.size() == 5);
    CHECK(tokens.back().is(TokenKind::Comment, "//patch_code"));

    auto block = lex_line("/* note */ y = 2;");
    CHECK(block.front().is(TokenKind::Comment, "/* note */"));
}

TEST_CASE("strings and chars keep escapes in the lexeme") {
    auto tokens = lex_line("s = \"a\\\"b\"; c = '\\n';");
    CHECK(tokens[2].is(TokenKind::StringLiteral, "\"a\\\"b\""));
    CHECK(tokens[6].kind == TokenKind::CharLiteral);
    CHECK(tokens[6].value == '\n');
}

TEST_CASE("unknown characters become single punctuation tokens") {
    auto tokens = lex_line("a @ b");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[1].is(TokenKind::Punctuation, "@"));
}

TEST_CASE("render and re-lex is stable") {
    const char* lines[] = {
        "if (s->method->version >= TLS1_2_VERSION) {",
        "v3 = *(_DWORD *)(a1 + 8);",
        "while ( (unsigned int)count-- > 0x1fU )",
        "return foo(x + 14, \"text\", 'c'); // trailing",
        "x ^= y << 3; /* block */ z = ~w;",
    };
    for (const char* line : lines) {
        auto first = lex_line(line);
        auto second = lex_line(render_tokens(first));
        CHECK(same_tokens(first, second));
    }
}

} // TEST_SUITE
