#include "patchprobe/equation.hpp"

#include <algorithm>
#include <sstream>

namespace patchprobe {

const char* statement_kind_name(StatementKind kind) {
    switch (kind) {
    case StatementKind::Conditional: return "conditional";
    case StatementKind::Assignment: return "assignment";
    case StatementKind::Return: return "return";
    case StatementKind::FunctionCall: return "call";
    }
    return "conditional";
}

const char* binary_op_symbol(BinaryOp op) {
    switch (op) {
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::BitAnd: return "&";
    case BinaryOp::BitOr: return "|";
    case BinaryOp::BitXor: return "^";
    case BinaryOp::Shl: return "<<";
    case BinaryOp::Shr: return ">>";
    case BinaryOp::LogicalAnd: return "&&";
    case BinaryOp::LogicalOr: return "||";
    }
    return "?";
}

const char* unary_op_symbol(UnaryOp op) {
    switch (op) {
    case UnaryOp::LogicalNot: return "!";
    case UnaryOp::BitNot: return "~";
    case UnaryOp::Negate: return "-";
    }
    return "?";
}

ExprPtr Expr::variable(int index) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Variable;
    e->var_index = index;
    return e;
}

ExprPtr Expr::constant(std::uint64_t value) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Constant;
    e->value = value;
    return e;
}

ExprPtr Expr::unary(UnaryOp op, ExprPtr operand) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Unary;
    e->unary_op = op;
    e->operands = {std::move(operand)};
    return e;
}

ExprPtr Expr::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Binary;
    e->binary_op = op;
    e->operands = {std::move(lhs), std::move(rhs)};
    return e;
}

ExprPtr Expr::call(std::string callee, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Call;
    e->callee = std::move(callee);
    e->operands = std::move(args);
    return e;
}

namespace {

int binary_precedence(BinaryOp op) {
    switch (op) {
    case BinaryOp::LogicalOr: return 1;
    case BinaryOp::LogicalAnd: return 2;
    case BinaryOp::BitOr: return 3;
    case BinaryOp::BitXor: return 4;
    case BinaryOp::BitAnd: return 5;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 6;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 7;
    case BinaryOp::Shl:
    case BinaryOp::Shr: return 8;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 9;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return 10;
    }
    return 0;
}

std::optional<BinaryOp> binary_op_from(const std::string& s) {
    if (s == "==") return BinaryOp::Eq;
    if (s == "!=") return BinaryOp::Ne;
    if (s == "<") return BinaryOp::Lt;
    if (s == "<=") return BinaryOp::Le;
    if (s == ">") return BinaryOp::Gt;
    if (s == ">=") return BinaryOp::Ge;
    if (s == "+") return BinaryOp::Add;
    if (s == "-") return BinaryOp::Sub;
    if (s == "*") return BinaryOp::Mul;
    if (s == "/") return BinaryOp::Div;
    if (s == "%") return BinaryOp::Mod;
    if (s == "&") return BinaryOp::BitAnd;
    if (s == "|") return BinaryOp::BitOr;
    if (s == "^") return BinaryOp::BitXor;
    if (s == "<<") return BinaryOp::Shl;
    if (s == ">>") return BinaryOp::Shr;
    if (s == "&&") return BinaryOp::LogicalAnd;
    if (s == "||") return BinaryOp::LogicalOr;
    return std::nullopt;
}

// compound assignment -> the binary op it desugars to
std::optional<BinaryOp> compound_assignment_op(const std::string& s) {
    if (s == "+=") return BinaryOp::Add;
    if (s == "-=") return BinaryOp::Sub;
    if (s == "*=") return BinaryOp::Mul;
    if (s == "/=") return BinaryOp::Div;
    if (s == "%=") return BinaryOp::Mod;
    if (s == "&=") return BinaryOp::BitAnd;
    if (s == "|=") return BinaryOp::BitOr;
    if (s == "^=") return BinaryOp::BitXor;
    if (s == "<<=") return BinaryOp::Shl;
    if (s == ">>=") return BinaryOp::Shr;
    return std::nullopt;
}

struct ParseFail {};

/// Shared variable numbering for one statement.
class NormContext {
public:
    ExprPtr atom(const std::string& text) {
        auto it = index_by_text_.find(text);
        int index;
        if (it != index_by_text_.end()) {
            index = it->second;
        } else {
            index = next_++;
            index_by_text_.emplace(text, index);
            origin_[index] = text;
        }
        return Expr::variable(index);
    }

    const std::map<int, std::string>& origin() const { return origin_; }

private:
    std::map<std::string, int> index_by_text_;
    std::map<int, std::string> origin_;
    int next_ = 1;
};

class ExprParser {
public:
    ExprParser(const std::vector<Token>& tokens, NormContext& ctx) : tokens_(tokens), ctx_(ctx) {}

    ExprPtr parse_complete() {
        ExprPtr e = parse_expression();
        if (!done()) throw ParseFail{};
        return e;
    }

    ExprPtr parse_expression() { return parse_binary(1); }

private:
    const std::vector<Token>& tokens_;
    NormContext& ctx_;
    std::size_t pos_ = 0;

    bool done() const { return pos_ >= tokens_.size(); }
    const Token& peek() const {
        if (done()) throw ParseFail{};
        return tokens_[pos_];
    }
    const Token& take() {
        if (done()) throw ParseFail{};
        return tokens_[pos_++];
    }
    bool peek_punct(const char* s) const {
        return !done() && peek().kind == TokenKind::Punctuation && peek().lexeme == s;
    }
    bool peek_op(const char* s) const {
        return !done() && peek().kind == TokenKind::Operator && peek().lexeme == s;
    }

    ExprPtr parse_binary(int min_prec) {
        ExprPtr lhs = parse_unary();
        while (!done() && peek().kind == TokenKind::Operator) {
            auto op = binary_op_from(peek().lexeme);
            if (!op) break;
            int prec = binary_precedence(*op);
            if (prec < min_prec) break;
            take();
            ExprPtr rhs = parse_binary(prec + 1);
            lhs = Expr::binary(*op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (peek_op("!")) {
            take();
            return Expr::unary(UnaryOp::LogicalNot, parse_unary());
        }
        if (peek_op("~")) {
            take();
            return Expr::unary(UnaryOp::BitNot, parse_unary());
        }
        if (peek_op("-")) {
            take();
            return Expr::unary(UnaryOp::Negate, parse_unary());
        }
        if (peek_op("+")) {
            take();
            return parse_unary();
        }
        if (peek_op("*") || peek_op("&") || peek_op("++") || peek_op("--")) {
            // dereference / address-of chain: one opaque atom
            return ctx_.atom(absorb_primary_text());
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        if (t.kind == TokenKind::IntegerLiteral || t.kind == TokenKind::CharLiteral) {
            take();
            return Expr::constant(t.value);
        }
        if (t.kind == TokenKind::Identifier && is_literal_identifier(t.lexeme)) {
            take();
            return Expr::constant(literal_identifier_value(t.lexeme));
        }
        if (t.kind == TokenKind::StringLiteral) {
            take();
            return ctx_.atom(t.lexeme);
        }
        if (t.kind == TokenKind::Punctuation && t.lexeme == "(") {
            if (looks_like_cast(pos_)) {
                return ctx_.atom(absorb_primary_text());
            }
            take();
            ExprPtr inner = parse_expression();
            if (!peek_punct(")")) throw ParseFail{};
            take();
            return inner;
        }
        if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword) {
            if (t.kind == TokenKind::Keyword && t.lexeme == "sizeof") {
                return ctx_.atom(absorb_primary_text());
            }
            if (t.kind == TokenKind::Keyword) throw ParseFail{};
            std::string chain = absorb_chain_text();
            if (peek_punct("(")) {
                take();
                std::vector<ExprPtr> args;
                if (!peek_punct(")")) {
                    args.push_back(parse_expression());
                    while (peek_punct(",")) {
                        take();
                        args.push_back(parse_expression());
                    }
                }
                if (!peek_punct(")")) throw ParseFail{};
                take();
                return Expr::call(std::move(chain), std::move(args));
            }
            return ctx_.atom(chain);
        }
        throw ParseFail{};
    }

    // identifier ( -> ident | . ident | [ ... ] )*
    std::string absorb_chain_text() {
        std::string text = take().lexeme;
        while (!done()) {
            if ((peek_op("->") || peek_op(".")) && pos_ + 1 < tokens_.size() &&
                tokens_[pos_ + 1].kind == TokenKind::Identifier) {
                text += take().lexeme;
                text += take().lexeme;
            } else if (peek_punct("[")) {
                text += absorb_balanced_text("[", "]");
            } else {
                break;
            }
        }
        return text;
    }

    std::string absorb_balanced_text(const char* open, const char* close) {
        std::string text;
        int depth = 0;
        while (!done()) {
            const Token& t = take();
            text += t.lexeme;
            if (t.kind == TokenKind::Punctuation && t.lexeme == open) ++depth;
            if (t.kind == TokenKind::Punctuation && t.lexeme == close && --depth == 0) break;
        }
        return text;
    }

    // "(type)" / "(type *)" cast group heuristic. The group must be
    // type-shaped (keyword present, trailing '*', or a type-looking name)
    // and an operand must follow directly.
    bool looks_like_cast(std::size_t start) const {
        int depth = 0;
        bool has_keyword = false;
        bool trailing_star = false;
        std::vector<const Token*> names;
        for (std::size_t i = start; i < tokens_.size(); ++i) {
            const Token& t = tokens_[i];
            if (t.kind == TokenKind::Punctuation && t.lexeme == "(") {
                ++depth;
                continue;
            }
            if (t.kind == TokenKind::Punctuation && t.lexeme == ")") {
                if (--depth > 0) continue;
                if (i + 1 >= tokens_.size() || names.empty()) return false;
                bool typey = has_keyword || trailing_star;
                if (!typey && names.size() == 1) {
                    const std::string& n = names[0]->lexeme;
                    typey = n[0] == '_' || std::isupper(static_cast<unsigned char>(n[0])) ||
                            (n.size() > 2 && n.compare(n.size() - 2, 2, "_t") == 0);
                }
                if (!typey && names.size() > 1) typey = true; // "unsigned foo" style
                if (!typey) return false;
                const Token& next = tokens_[i + 1];
                return next.kind == TokenKind::Identifier ||
                       next.kind == TokenKind::IntegerLiteral ||
                       (next.kind == TokenKind::Punctuation && next.lexeme == "(") ||
                       (next.kind == TokenKind::Operator &&
                        (next.lexeme == "*" || next.lexeme == "&" || next.lexeme == "~"));
            }
            if (t.kind == TokenKind::Keyword) {
                has_keyword = true;
                trailing_star = false;
                continue;
            }
            if (t.kind == TokenKind::Identifier) {
                names.push_back(&t);
                trailing_star = false;
                continue;
            }
            if (t.kind == TokenKind::Operator && t.lexeme == "*") {
                trailing_star = true;
                continue;
            }
            return false;
        }
        return false;
    }

    // Consume one primary-shaped span as plain text: prefix operators, cast
    // groups, literals and chains, including call parens.
    std::string absorb_primary_text() {
        std::string text;
        while (!done() && peek().kind == TokenKind::Operator &&
               (peek().lexeme == "*" || peek().lexeme == "&" || peek().lexeme == "!" ||
                peek().lexeme == "~" || peek().lexeme == "-" || peek().lexeme == "++" ||
                peek().lexeme == "--")) {
            text += take().lexeme;
        }
        if (done()) {
            if (text.empty()) throw ParseFail{};
            return text;
        }
        if (peek().kind == TokenKind::Keyword && peek().lexeme == "sizeof") {
            text += take().lexeme;
            if (peek_punct("(")) text += absorb_balanced_text("(", ")");
            return text;
        }
        while (!done() && peek_punct("(")) {
            text += absorb_balanced_text("(", ")");
            // a cast group is followed by its operand; a plain group is done
            if (done()) return text;
            const Token& next = peek();
            const bool operand_follows =
                next.kind == TokenKind::Identifier || next.kind == TokenKind::IntegerLiteral ||
                (next.kind == TokenKind::Punctuation && next.lexeme == "(") ||
                (next.kind == TokenKind::Operator &&
                 (next.lexeme == "*" || next.lexeme == "&" || next.lexeme == "~"));
            if (!operand_follows) return text;
        }
        if (!done() &&
            (peek().kind == TokenKind::IntegerLiteral || peek().kind == TokenKind::CharLiteral ||
             peek().kind == TokenKind::StringLiteral)) {
            text += take().lexeme;
            return text;
        }
        if (!done() && peek().kind == TokenKind::Identifier) {
            text += absorb_chain_text();
            if (peek_punct("(")) text += absorb_balanced_text("(", ")");
            while (!done() && (peek_op("->") || peek_op("."))) {
                text += take().lexeme;
                if (!done() && peek().kind == TokenKind::Identifier) text += absorb_chain_text();
            }
            return text;
        }
        if (text.empty()) throw ParseFail{};
        return text;
    }
};

std::string tokens_text(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end && i < tokens.size(); ++i) {
        out += tokens[i].lexeme;
    }
    return out;
}

ExprPtr parse_or_atom(const std::vector<Token>& tokens, NormContext& ctx) {
    if (tokens.empty()) return nullptr;
    try {
        ExprParser parser(tokens, ctx);
        return parser.parse_complete();
    } catch (const ParseFail&) {
        return ctx.atom(tokens_text(tokens, 0, tokens.size()));
    }
}

int render_precedence(const ExprPtr& e) {
    switch (e->kind) {
    case Expr::Kind::Binary: return binary_precedence(e->binary_op);
    case Expr::Kind::Unary: return 11;
    default: return 12;
    }
}

void render_into(const ExprPtr& e, std::ostringstream& out, int parent_prec, bool right_side) {
    const int prec = render_precedence(e);
    bool parens = false;
    if (e->kind == Expr::Kind::Binary) {
        parens = prec < parent_prec || (prec == parent_prec && right_side);
    }
    if (parens) out << "(";
    switch (e->kind) {
    case Expr::Kind::Variable:
        out << "x" << e->var_index;
        break;
    case Expr::Kind::Constant:
        out << e->value;
        break;
    case Expr::Kind::Unary: {
        out << unary_op_symbol(e->unary_op);
        const ExprPtr& operand = e->operands[0];
        if (operand->kind == Expr::Kind::Binary || operand->kind == Expr::Kind::Unary) {
            out << "(";
            render_into(operand, out, 0, false);
            out << ")";
        } else {
            render_into(operand, out, 12, false);
        }
        break;
    }
    case Expr::Kind::Binary:
        render_into(e->operands[0], out, prec, false);
        out << " " << binary_op_symbol(e->binary_op) << " ";
        render_into(e->operands[1], out, prec, true);
        break;
    case Expr::Kind::Call:
        out << e->callee << "(";
        for (std::size_t i = 0; i < e->operands.size(); ++i) {
            if (i > 0) out << ", ";
            render_into(e->operands[i], out, 0, false);
        }
        out << ")";
        break;
    }
    if (parens) out << ")";
}

std::vector<Token> strip_comment_tokens(std::vector<Token> tokens) {
    tokens.erase(std::remove_if(tokens.begin(), tokens.end(),
                                [](const Token& t) { return t.kind == TokenKind::Comment; }),
                 tokens.end());
    return tokens;
}

std::optional<std::size_t> find_top_level_assignment(const std::vector<Token>& tokens) {
    int depth = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (t.kind == TokenKind::Punctuation && (t.lexeme == "(" || t.lexeme == "[")) ++depth;
        if (t.kind == TokenKind::Punctuation && (t.lexeme == ")" || t.lexeme == "]")) --depth;
        if (depth != 0 || t.kind != TokenKind::Operator) continue;
        if (t.lexeme == "=" || compound_assignment_op(t.lexeme)) return i;
    }
    return std::nullopt;
}

// span of tokens inside the first balanced paren group starting at/after `from`
std::pair<std::size_t, std::size_t> paren_group(const std::vector<Token>& tokens,
                                                std::size_t from) {
    std::size_t open = from;
    while (open < tokens.size() &&
           !(tokens[open].kind == TokenKind::Punctuation && tokens[open].lexeme == "(")) {
        ++open;
    }
    if (open >= tokens.size()) return {tokens.size(), tokens.size()};
    int depth = 0;
    for (std::size_t i = open; i < tokens.size(); ++i) {
        if (tokens[i].kind != TokenKind::Punctuation) continue;
        if (tokens[i].lexeme == "(") ++depth;
        if (tokens[i].lexeme == ")" && --depth == 0) return {open + 1, i};
    }
    return {tokens.size(), tokens.size()};
}

} // namespace

std::vector<StatementUnit> extract_statements(const std::vector<SourceLine>& lines) {
    std::vector<StatementUnit> units;

    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        std::vector<Token> tokens = strip_comment_tokens(lex_line(lines[idx].text));
        if (tokens.empty()) continue;

        // join continuation lines while parentheses stay open
        int depth = 0;
        for (const Token& t : tokens) {
            if (t.kind == TokenKind::Punctuation && t.lexeme == "(") ++depth;
            if (t.kind == TokenKind::Punctuation && t.lexeme == ")") --depth;
        }
        std::size_t joined = 0;
        while (depth > 0 && joined < 8 && idx + 1 < lines.size() &&
               lines[idx + 1].number == lines[idx + joined].number + 1) {
            ++joined;
            for (Token& t : strip_comment_tokens(lex_line(lines[idx + joined].text))) {
                if (t.kind == TokenKind::Punctuation && t.lexeme == "(") ++depth;
                if (t.kind == TokenKind::Punctuation && t.lexeme == ")") --depth;
                tokens.push_back(std::move(t));
            }
        }
        const int source_line = lines[idx].number;
        idx += joined;

        // strip leading close braces and else
        std::size_t start = 0;
        while (start < tokens.size() &&
               ((tokens[start].kind == TokenKind::Punctuation && tokens[start].lexeme == "}") ||
                (tokens[start].kind == TokenKind::Keyword && tokens[start].lexeme == "else"))) {
            ++start;
        }
        if (start >= tokens.size()) continue;
        tokens.erase(tokens.begin(), tokens.begin() + static_cast<long>(start));

        const Token& head = tokens.front();
        StatementUnit unit;
        unit.source_line = source_line;

        if (head.kind == TokenKind::Punctuation && head.lexeme == "#") continue;

        if (head.kind == TokenKind::Keyword && (head.lexeme == "if" || head.lexeme == "while")) {
            auto [b, e] = paren_group(tokens, 0);
            if (b >= e) continue;
            unit.kind = StatementKind::Conditional;
            unit.tokens.assign(tokens.begin() + static_cast<long>(b),
                               tokens.begin() + static_cast<long>(e));
            units.push_back(std::move(unit));
            continue;
        }
        if (head.kind == TokenKind::Keyword && head.lexeme == "for") {
            auto [b, e] = paren_group(tokens, 0);
            if (b >= e) continue;
            // middle clause between the top-level semicolons
            std::vector<Token> cond;
            int semis = 0;
            int inner = 0;
            for (std::size_t i = b; i < e; ++i) {
                const Token& t = tokens[i];
                if (t.kind == TokenKind::Punctuation && t.lexeme == "(") ++inner;
                if (t.kind == TokenKind::Punctuation && t.lexeme == ")") --inner;
                if (inner == 0 && t.kind == TokenKind::Punctuation && t.lexeme == ";") {
                    ++semis;
                    continue;
                }
                if (semis == 1) cond.push_back(t);
            }
            if (cond.empty()) continue;
            unit.kind = StatementKind::Conditional;
            unit.tokens = std::move(cond);
            units.push_back(std::move(unit));
            continue;
        }
        if (head.kind == TokenKind::Keyword && head.lexeme == "return") {
            unit.kind = StatementKind::Return;
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                if (tokens[i].kind == TokenKind::Punctuation && tokens[i].lexeme == ";") break;
                unit.tokens.push_back(tokens[i]);
            }
            units.push_back(std::move(unit));
            continue;
        }
        if (head.kind == TokenKind::Keyword &&
            (head.lexeme == "do" || head.lexeme == "switch" || head.lexeme == "case" ||
             head.lexeme == "default" || head.lexeme == "goto" || head.lexeme == "break" ||
             head.lexeme == "continue")) {
            continue;
        }

        if (find_top_level_assignment(tokens)) {
            unit.kind = StatementKind::Assignment;
            unit.tokens = tokens;
            if (unit.tokens.back().kind == TokenKind::Punctuation &&
                unit.tokens.back().lexeme == ";") {
                unit.tokens.pop_back();
            }
            units.push_back(std::move(unit));
            continue;
        }
        if (head.kind == TokenKind::Keyword) continue; // plain declarations, labels

        if (head.kind == TokenKind::Identifier && tokens.size() > 1 &&
            tokens[1].kind == TokenKind::Punctuation && tokens[1].lexeme == "(") {
            auto [b, e] = paren_group(tokens, 0);
            if (b > e || e >= tokens.size()) continue;
            unit.kind = StatementKind::FunctionCall;
            unit.tokens.assign(tokens.begin(), tokens.begin() + static_cast<long>(e) + 1);
            units.push_back(std::move(unit));
            continue;
        }
    }
    return units;
}

std::vector<StatementUnit> extract_statements(const ParsedFunction& func) {
    return extract_statements(func.lines);
}

namespace {

// Assignment target: skip declaration type keywords and pointer stars, then
// read a chain; anything irregular becomes one opaque atom.
ExprPtr normalize_assignment_target(const std::vector<Token>& lhs, NormContext& ctx) {
    std::size_t start = 0;
    while (start < lhs.size() && lhs[start].kind == TokenKind::Keyword) ++start;
    if (start > 0) {
        while (start < lhs.size() && lhs[start].kind == TokenKind::Operator &&
               lhs[start].lexeme == "*") {
            ++start;
        }
    }
    std::vector<Token> rest(lhs.begin() + static_cast<long>(start), lhs.end());
    if (rest.empty()) return ctx.atom(tokens_text(lhs, 0, lhs.size()));
    return parse_or_atom(rest, ctx);
}

} // namespace

NormalizedEquation normalize_statement(const StatementUnit& unit) {
    NormalizedEquation eq;
    eq.kind = unit.kind;
    NormContext ctx;

    switch (unit.kind) {
    case StatementKind::Conditional:
        eq.expr = parse_or_atom(unit.tokens, ctx);
        break;
    case StatementKind::Return:
        if (!unit.tokens.empty()) eq.expr = parse_or_atom(unit.tokens, ctx);
        break;
    case StatementKind::FunctionCall: {
        eq.expr = parse_or_atom(unit.tokens, ctx);
        break;
    }
    case StatementKind::Assignment: {
        auto pos = find_top_level_assignment(unit.tokens);
        if (!pos) {
            eq.expr = parse_or_atom(unit.tokens, ctx);
            break;
        }
        std::vector<Token> lhs(unit.tokens.begin(), unit.tokens.begin() + static_cast<long>(*pos));
        std::vector<Token> rhs(unit.tokens.begin() + static_cast<long>(*pos) + 1,
                               unit.tokens.end());
        eq.lhs = normalize_assignment_target(lhs, ctx);
        ExprPtr rhs_expr = rhs.empty() ? nullptr : parse_or_atom(rhs, ctx);
        if (auto op = compound_assignment_op(unit.tokens[*pos].lexeme)) {
            rhs_expr = Expr::binary(*op, eq.lhs, std::move(rhs_expr));
        }
        eq.expr = std::move(rhs_expr);
        break;
    }
    }

    eq.var_origin = ctx.origin();

    std::ostringstream canonical;
    switch (eq.kind) {
    case StatementKind::Conditional:
    case StatementKind::FunctionCall:
        if (eq.expr) render_into(eq.expr, canonical, 0, false);
        break;
    case StatementKind::Return:
        canonical << "return";
        if (eq.expr) {
            canonical << " ";
            render_into(eq.expr, canonical, 0, false);
        }
        break;
    case StatementKind::Assignment:
        if (eq.lhs) render_into(eq.lhs, canonical, 0, false);
        canonical << " = ";
        if (eq.expr) render_into(eq.expr, canonical, 0, false);
        break;
    }
    eq.canonical = canonical.str();
    return eq;
}

NormalizedEquation parse_conditional(const std::string& text) {
    StatementUnit unit;
    unit.kind = StatementKind::Conditional;
    unit.tokens = strip_comment_tokens(lex_line(text));
    return normalize_statement(unit);
}

std::vector<NormalizedEquation> normalize_lines(const std::vector<SourceLine>& lines) {
    std::vector<NormalizedEquation> out;
    for (const StatementUnit& unit : extract_statements(lines)) {
        out.push_back(normalize_statement(unit));
    }
    return out;
}

std::string render_expr(const ExprPtr& expr) {
    if (!expr) return "";
    std::ostringstream out;
    render_into(expr, out, 0, false);
    return out.str();
}

namespace {

void collect_variables(const ExprPtr& e, std::set<int>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Variable) out.insert(e->var_index);
    for (const ExprPtr& op : e->operands) collect_variables(op, out);
}

} // namespace

std::set<int> expr_variables(const ExprPtr& expr) {
    std::set<int> out;
    collect_variables(expr, out);
    return out;
}

int equation_variable_count(const NormalizedEquation& eq) {
    std::set<int> vars;
    collect_variables(eq.lhs, vars);
    collect_variables(eq.expr, vars);
    return static_cast<int>(vars.size());
}

bool expr_contains_call(const ExprPtr& expr) {
    if (!expr) return false;
    if (expr->kind == Expr::Kind::Call) return true;
    for (const ExprPtr& op : expr->operands) {
        if (expr_contains_call(op)) return true;
    }
    return false;
}

} // namespace patchprobe
