#include "patchprobe/syntax.hpp"

#include "patchprobe/errors.hpp"

#include <algorithm>

namespace patchprobe {

namespace {

struct PositionedToken {
    Token token;
    int line = 0;
};

struct TokenCursor {
    const std::vector<PositionedToken>* tokens = nullptr;
    std::size_t pos = 0;

    bool done() const { return pos >= tokens->size(); }
    const PositionedToken& peek() const { return (*tokens)[pos]; }
    const PositionedToken& take() { return (*tokens)[pos++]; }
    bool peek_is(TokenKind kind, const char* lexeme) const {
        return !done() && peek().token.kind == kind && peek().token.lexeme == lexeme;
    }
};

bool is_assignment_op(const Token& t) {
    if (t.kind != TokenKind::Operator) return false;
    const std::string& s = t.lexeme;
    if (s == "=" || s == "+=" || s == "-=" || s == "*=" || s == "/=" || s == "%=" ||
        s == "&=" || s == "|=" || s == "^=" || s == "<<=" || s == ">>=") {
        return true;
    }
    return false;
}

bool is_type_keyword(const Token& t) {
    if (t.kind != TokenKind::Keyword) return false;
    const std::string& s = t.lexeme;
    return s == "int" || s == "char" || s == "long" || s == "short" || s == "float" ||
           s == "double" || s == "void" || s == "unsigned" || s == "signed" ||
           s == "struct" || s == "union" || s == "enum" || s == "const" || s == "static";
}

class TreeBuilder {
public:
    explicit TreeBuilder(const std::vector<PositionedToken>& tokens) : cursor_{&tokens, 0} {}

    std::vector<SyntaxNode> parse_until_close() {
        std::vector<SyntaxNode> nodes;
        while (!cursor_.done()) {
            if (cursor_.peek_is(TokenKind::Punctuation, "}")) break;
            SyntaxNode node = parse_node();
            if (node.first_line > 0) nodes.push_back(std::move(node));
        }
        return nodes;
    }

private:
    TokenCursor cursor_;

    SyntaxNode parse_node() {
        const PositionedToken& head = cursor_.peek();
        if (head.token.kind == TokenKind::Keyword) {
            const std::string& kw = head.token.lexeme;
            if (kw == "if") return parse_if();
            if (kw == "else") return parse_else();
            if (kw == "for" || kw == "while") return parse_loop();
            if (kw == "do") return parse_do();
            if (kw == "switch") return parse_switch();
            if (kw == "return") return parse_return();
        }
        if (head.token.kind == TokenKind::Punctuation && head.token.lexeme == "{") {
            return parse_block();
        }
        return parse_statement();
    }

    void skip_parens() {
        if (!cursor_.peek_is(TokenKind::Punctuation, "(")) return;
        int depth = 0;
        while (!cursor_.done()) {
            const Token& t = cursor_.take().token;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "(") ++depth;
            if (t.kind == TokenKind::Punctuation && t.lexeme == ")") {
                if (--depth == 0) return;
            }
        }
    }

    // Body of a control structure: either a braced block or one statement.
    void parse_body_into(SyntaxNode& parent) {
        if (cursor_.done()) return;
        if (cursor_.peek_is(TokenKind::Punctuation, "{")) {
            parent.children.push_back(parse_block());
        } else if (!cursor_.peek_is(TokenKind::Punctuation, "}")) {
            parent.children.push_back(parse_node());
        }
        if (!parent.children.empty()) {
            parent.last_line = std::max(parent.last_line, parent.children.back().last_line);
        }
    }

    SyntaxNode parse_if() {
        SyntaxNode node;
        node.kind = NodeKind::If;
        node.first_line = node.last_line = cursor_.take().line; // 'if'
        skip_parens();
        parse_body_into(node);
        return node;
    }

    SyntaxNode parse_else() {
        SyntaxNode node;
        node.kind = NodeKind::Else;
        node.first_line = node.last_line = cursor_.take().line; // 'else'
        parse_body_into(node); // may itself start with 'if'
        return node;
    }

    SyntaxNode parse_loop() {
        SyntaxNode node;
        node.kind = NodeKind::Loop;
        node.first_line = node.last_line = cursor_.take().line; // 'for' / 'while'
        skip_parens();
        if (cursor_.peek_is(TokenKind::Punctuation, ";")) {
            node.last_line = std::max(node.last_line, cursor_.take().line); // `while (...);`
            return node;
        }
        parse_body_into(node);
        return node;
    }

    SyntaxNode parse_do() {
        SyntaxNode node;
        node.kind = NodeKind::Loop;
        node.first_line = node.last_line = cursor_.take().line; // 'do'
        parse_body_into(node);
        if (cursor_.peek_is(TokenKind::Keyword, "while")) {
            node.last_line = std::max(node.last_line, cursor_.take().line);
            skip_parens();
            if (cursor_.peek_is(TokenKind::Punctuation, ";")) {
                node.last_line = std::max(node.last_line, cursor_.take().line);
            }
        }
        return node;
    }

    SyntaxNode parse_switch() {
        SyntaxNode node;
        node.kind = NodeKind::Switch;
        node.first_line = node.last_line = cursor_.take().line;
        skip_parens();
        parse_body_into(node);
        return node;
    }

    SyntaxNode parse_return() {
        SyntaxNode node;
        node.kind = NodeKind::Return;
        node.first_line = node.last_line = cursor_.take().line;
        while (!cursor_.done()) {
            if (cursor_.peek_is(TokenKind::Punctuation, "}")) break;
            const PositionedToken& t = cursor_.take();
            node.last_line = std::max(node.last_line, t.line);
            if (t.token.kind == TokenKind::Punctuation && t.token.lexeme == ";") break;
        }
        return node;
    }

    SyntaxNode parse_block() {
        SyntaxNode node;
        node.kind = NodeKind::Block;
        node.first_line = node.last_line = cursor_.take().line; // '{'
        node.children = parse_until_close();
        if (!cursor_.done()) {
            node.last_line = std::max(node.last_line, cursor_.take().line); // '}'
        }
        for (const SyntaxNode& c : node.children) {
            node.last_line = std::max(node.last_line, c.last_line);
        }
        return node;
    }

    // Generic statement: consume to the first top-level ';'. A '{' at depth 0
    // turns the whole run into a block-bearing construct (unrecognized header).
    SyntaxNode parse_statement() {
        SyntaxNode node;
        node.kind = NodeKind::Statement;
        node.first_line = node.last_line = cursor_.peek().line;

        bool saw_assignment = false;
        bool first_is_type = false;
        bool call_shaped = false;
        int depth = 0;
        std::size_t count = 0;

        while (!cursor_.done()) {
            const Token& t = cursor_.peek().token;
            if (depth == 0 && t.kind == TokenKind::Punctuation && t.lexeme == "}") break;
            if (depth == 0 && t.kind == TokenKind::Punctuation && t.lexeme == "{") {
                // e.g. a macro-expanded header: absorb the block and stop
                SyntaxNode block = parse_block();
                node.kind = NodeKind::Block;
                node.last_line = std::max(node.last_line, block.last_line);
                node.children = std::move(block.children);
                return node;
            }

            const PositionedToken& pt = cursor_.take();
            node.last_line = std::max(node.last_line, pt.line);
            if (pt.token.kind == TokenKind::Punctuation) {
                if (pt.token.lexeme == "(" || pt.token.lexeme == "[") ++depth;
                if (pt.token.lexeme == ")" || pt.token.lexeme == "]") --depth;
                if (pt.token.lexeme == ";" && depth <= 0) break;
            }
            if (count == 0) {
                first_is_type = is_type_keyword(pt.token);
                if (pt.token.kind == TokenKind::Identifier && cursor_.peek_is(TokenKind::Punctuation, "(")) {
                    call_shaped = true;
                }
            }
            if (depth == 0 && is_assignment_op(pt.token)) saw_assignment = true;
            ++count;
        }

        if (saw_assignment) {
            node.kind = NodeKind::Assignment;
        } else if (first_is_type) {
            node.kind = NodeKind::Declaration;
        } else if (call_shaped) {
            node.kind = NodeKind::Call;
        }
        return node;
    }
};

// Enforce sibling-span disjointness on a line-granular tree. `} else {`
// style puts a closing brace and the next construct on one line; ownership
// of the shared line goes to the later sibling.
void normalize_siblings(SyntaxNode& node);

void shrink_to(SyntaxNode& node, int new_last) {
    node.last_line = std::min(node.last_line, new_last);
    auto& kids = node.children;
    kids.erase(std::remove_if(kids.begin(), kids.end(),
                              [&](const SyntaxNode& c) { return c.first_line > new_last; }),
               kids.end());
    for (SyntaxNode& c : kids) {
        if (c.last_line > new_last) shrink_to(c, new_last);
    }
}

void normalize_siblings(SyntaxNode& node) {
    auto& kids = node.children;
    std::stable_sort(kids.begin(), kids.end(), [](const SyntaxNode& a, const SyntaxNode& b) {
        return a.first_line < b.first_line;
    });
    std::vector<SyntaxNode> merged;
    for (SyntaxNode& child : kids) {
        if (!merged.empty() && child.first_line <= merged.back().last_line) {
            SyntaxNode& prev = merged.back();
            if (prev.first_line >= child.first_line) {
                // both start on the shared line: collapse into one leaf
                prev.kind = NodeKind::Statement;
                prev.last_line = std::max(prev.last_line, child.last_line);
                prev.children.clear();
                continue;
            }
            shrink_to(prev, child.first_line - 1);
            if (prev.first_line > prev.last_line) {
                merged.pop_back();
            }
        }
        merged.push_back(std::move(child));
    }
    kids = std::move(merged);
    for (SyntaxNode& child : kids) {
        child.first_line = std::max(child.first_line, node.first_line);
        child.last_line = std::min(child.last_line, node.last_line);
        normalize_siblings(child);
    }
}

} // namespace

const char* node_kind_name(NodeKind kind) {
    switch (kind) {
    case NodeKind::If: return "if";
    case NodeKind::Else: return "else";
    case NodeKind::Loop: return "loop";
    case NodeKind::Switch: return "switch";
    case NodeKind::Block: return "block";
    case NodeKind::Statement: return "statement";
    case NodeKind::Call: return "call";
    case NodeKind::Return: return "return";
    case NodeKind::Assignment: return "assignment";
    case NodeKind::Declaration: return "declaration";
    }
    return "statement";
}

SyntaxNode build_syntax_tree(const std::vector<std::string>& lines) {
    std::vector<PositionedToken> tokens;
    int brace_depth = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (Token& t : lex_line(lines[i])) {
            if (t.kind == TokenKind::Punctuation && t.lexeme == "{") ++brace_depth;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "}") --brace_depth;
            if (brace_depth < 0) throw Error(ErrorCode::UnbalancedBraces, "extra closing brace");
            tokens.push_back({std::move(t), static_cast<int>(i) + 1});
        }
    }
    if (brace_depth != 0) throw Error(ErrorCode::UnbalancedBraces, "braces do not balance");

    TreeBuilder builder(tokens);
    SyntaxNode root;
    root.kind = NodeKind::Block;
    root.first_line = 1;
    root.last_line = static_cast<int>(lines.size());
    root.children = builder.parse_until_close();
    normalize_siblings(root);
    return root;
}

SyntaxNode flat_syntax_tree(int line_count) {
    SyntaxNode root;
    root.kind = NodeKind::Block;
    root.first_line = 1;
    root.last_line = line_count;
    for (int i = 1; i <= line_count; ++i) {
        SyntaxNode leaf;
        leaf.kind = NodeKind::Statement;
        leaf.first_line = leaf.last_line = i;
        root.children.push_back(leaf);
    }
    return root;
}

namespace {

bool check_node(const SyntaxNode& node, int lo, int hi) {
    if (node.first_line < lo || node.last_line > hi || node.first_line > node.last_line) {
        return false;
    }
    int prev_end = node.first_line - 1;
    for (const SyntaxNode& child : node.children) {
        if (child.first_line <= prev_end) return false; // sibling overlap
        if (!check_node(child, node.first_line, node.last_line)) return false;
        prev_end = child.last_line;
    }
    return true;
}

} // namespace

bool check_span_nesting(const SyntaxNode& root, int line_count) {
    return check_node(root, 1, line_count);
}

std::vector<const SyntaxNode*> node_path_to_line(const SyntaxNode& root, int line) {
    std::vector<const SyntaxNode*> path;
    const SyntaxNode* cur = &root;
    while (true) {
        const SyntaxNode* next = nullptr;
        for (const SyntaxNode& child : cur->children) {
            if (child.contains(line)) {
                next = &child;
                break;
            }
        }
        if (next == nullptr) break;
        path.push_back(next);
        cur = next;
    }
    return path;
}

} // namespace patchprobe
