#pragma once

#include "patchprobe/lexer.hpp"

#include <string>
#include <vector>

namespace patchprobe {

enum class NodeKind {
    If,
    Else,
    Loop,
    Switch,
    Block,
    Statement,
    Call,
    Return,
    Assignment,
    Declaration,
};

const char* node_kind_name(NodeKind kind);

/// One node of the intra-function syntax tree. Spans are inclusive 1-based
/// line ranges, function-local. Children nest inside their parent's span and
/// sibling spans are pairwise disjoint.
struct SyntaxNode {
    NodeKind kind = NodeKind::Statement;
    int first_line = 0;
    int last_line = 0;
    std::vector<SyntaxNode> children;

    bool contains(int line) const { return line >= first_line && line <= last_line; }
};

struct SourceLine {
    int number = 0; // 1-based, function-local
    std::string text;
    bool is_patch_line = false;
};

/// A function body with per-line text and the syntax tree over it. Shared
/// carrier for annotated source functions and decompiled pseudocode.
struct ParsedFunction {
    std::string name;
    std::vector<SourceLine> lines;
    SyntaxNode root; // Block spanning every line
    bool structure_fallback = false; // true when structure came from brace counting only
    int file_start_line = 1; // 1-based line of `lines[0]` in the original file

    int line_count() const { return static_cast<int>(lines.size()); }
    const SourceLine& line(int number) const { return lines.at(static_cast<std::size_t>(number - 1)); }
    std::vector<Token> line_tokens(int number) const { return lex_line(line(number).text); }
};

/// Build a syntax tree over the given lines with a lenient brace/keyword
/// parser. Throws Error(UnbalancedBraces) when braces do not balance.
SyntaxNode build_syntax_tree(const std::vector<std::string>& lines);

/// Flat fallback tree: one Statement child per line under a root Block.
SyntaxNode flat_syntax_tree(int line_count);

/// Walk the tree and verify span nesting: children inside parents, siblings
/// disjoint, lines inside [1, line_count]. Returns false on any violation.
bool check_span_nesting(const SyntaxNode& root, int line_count);

/// Path of nodes (outermost first) whose spans contain `line`, excluding root.
std::vector<const SyntaxNode*> node_path_to_line(const SyntaxNode& root, int line);

} // namespace patchprobe
