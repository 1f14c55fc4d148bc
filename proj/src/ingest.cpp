#include "patchprobe/ingest.hpp"

#include "patchprobe/errors.hpp"

#include <algorithm>
#include <sstream>

namespace patchprobe {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

// Finest structural decomposition: contiguous line ranges whose edges are
// node boundaries. Structural nodes decompose into header range, children,
// footer range.
struct Atom {
    int first_line;
    int last_line;
};

void atomize(const SyntaxNode& node, std::vector<Atom>& out) {
    if (node.children.empty()) {
        out.push_back({node.first_line, node.last_line});
        return;
    }
    int cursor = node.first_line;
    for (const SyntaxNode& child : node.children) {
        if (child.first_line > cursor) {
            out.push_back({cursor, child.first_line - 1}); // header / gap lines
        }
        atomize(child, out);
        cursor = child.last_line + 1;
    }
    if (cursor <= node.last_line) {
        out.push_back({cursor, node.last_line}); // closing lines
    }
}

std::vector<Atom> function_atoms(const ParsedFunction& func) {
    std::vector<Atom> atoms;
    atomize(func.root, atoms);
    return atoms;
}

} // namespace

std::string PseudoFunction::render(bool numbered) const {
    std::ostringstream out;
    for (const SourceLine& line : lines) {
        if (numbered) out << line.number << ": ";
        out << line.text << "\n";
    }
    return out.str();
}

PseudoFunction parse_pseudocode(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    bool has_content = false;
    for (const std::string& l : lines) {
        if (l.find_first_not_of(" \t\r") != std::string::npos) {
            has_content = true;
            break;
        }
    }
    if (!has_content) throw Error(ErrorCode::EmptyInput, "pseudocode text is empty");

    PseudoFunction func;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        SourceLine sl;
        sl.number = static_cast<int>(i) + 1;
        sl.text = lines[i];
        func.lines.push_back(std::move(sl));
    }

    // name: last identifier before the first '(' ahead of the body brace
    func.name = "fn";
    for (const SourceLine& line : func.lines) {
        std::vector<Token> tokens = lex_line(line.text);
        bool found = false;
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            if (tokens[i].kind == TokenKind::Identifier &&
                tokens[i + 1].is(TokenKind::Punctuation, "(")) {
                func.name = tokens[i].lexeme;
                found = true;
                break;
            }
        }
        if (found) break;
        if (line.text.find('{') != std::string::npos) break;
    }

    std::vector<std::string> texts;
    texts.reserve(func.lines.size());
    for (const SourceLine& l : func.lines) texts.push_back(l.text);
    try {
        func.root = build_syntax_tree(texts);
        func.structure_fallback = false;
    } catch (const Error&) {
        func.root = flat_syntax_tree(func.line_count());
        func.structure_fallback = true;
    }
    return func;
}

int count_tokens(const ParsedFunction& func, int first_line, int last_line) {
    int count = 0;
    for (int n = std::max(1, first_line); n <= std::min(func.line_count(), last_line); ++n) {
        for (const Token& t : func.line_tokens(n)) {
            if (t.kind != TokenKind::Comment) ++count;
        }
    }
    return count;
}

std::vector<FunctionSegment> segment_function(const ParsedFunction& func, int token_limit) {
    std::vector<FunctionSegment> segments;
    if (func.line_count() == 0) return segments;

    std::vector<Atom> atoms = function_atoms(func);
    FunctionSegment cur;
    cur.first_line = 0;

    auto flush = [&]() {
        if (cur.first_line > 0) segments.push_back(cur);
        cur = FunctionSegment{};
    };

    for (const Atom& atom : atoms) {
        const int atom_tokens = count_tokens(func, atom.first_line, atom.last_line);
        if (atom_tokens > token_limit) {
            flush();
            segments.push_back({atom.first_line, atom.last_line, atom_tokens, true});
            continue;
        }
        if (cur.first_line == 0) {
            cur = {atom.first_line, atom.last_line, atom_tokens, false};
        } else if (cur.token_count + atom_tokens <= token_limit) {
            cur.last_line = atom.last_line;
            cur.token_count += atom_tokens;
        } else {
            flush();
            cur = {atom.first_line, atom.last_line, atom_tokens, false};
        }
    }
    flush();
    return segments;
}

namespace {

// Innermost-to-outermost loops containing the line.
std::vector<const SyntaxNode*> enclosing_loops(const ParsedFunction& func, int line) {
    std::vector<const SyntaxNode*> loops;
    for (const SyntaxNode* node : node_path_to_line(func.root, line)) {
        if (node->kind == NodeKind::Loop) loops.push_back(node);
    }
    return loops;
}

} // namespace

TruncatedSource truncate_source(const AnnotatedFunction& func, int token_limit,
                                const EnhancedSlice* slice) {
    std::vector<int> patch_lines = func.patch_line_numbers();
    if (patch_lines.empty()) {
        throw Error(ErrorCode::AnchorMissing, "function " + func.name + " has no patch line");
    }
    const int anchor = patch_lines.front();

    // mandatory span: the anchor plus every enclosing loop body, complete
    int span_first = anchor;
    int span_last = anchor;
    for (const SyntaxNode* loop : enclosing_loops(func, anchor)) {
        span_first = std::min(span_first, loop->first_line);
        span_last = std::max(span_last, loop->last_line);
    }

    std::vector<Atom> atoms = function_atoms(func);
    // indices of the first/last atom intersecting the mandatory span
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].last_line >= span_first) {
            lo = i;
            break;
        }
    }
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].first_line <= span_last) hi = i;
    }
    span_first = std::min(span_first, atoms[lo].first_line);
    span_last = std::max(span_last, atoms[hi].last_line);

    TruncatedSource out;
    out.token_count = count_tokens(func, span_first, span_last);
    out.over_limit = out.token_count > token_limit;

    // alternate upward/downward expansion, starting upward; continue on the
    // side that still fits, stop when neither does
    bool up_turn = true;
    bool up_open = lo > 0;
    bool down_open = hi + 1 < atoms.size();
    while (up_open || down_open) {
        const bool go_up = up_turn ? up_open : !down_open;
        if (go_up) {
            const Atom& next = atoms[lo - 1];
            const int cost = count_tokens(func, next.first_line, next.last_line);
            if (out.token_count + cost > token_limit) {
                up_open = false;
            } else {
                --lo;
                span_first = next.first_line;
                out.token_count += cost;
                up_open = lo > 0;
            }
        } else {
            const Atom& next = atoms[hi + 1];
            const int cost = count_tokens(func, next.first_line, next.last_line);
            if (out.token_count + cost > token_limit) {
                down_open = false;
            } else {
                ++hi;
                span_last = next.last_line;
                out.token_count += cost;
                down_open = hi + 1 < atoms.size();
            }
        }
        up_turn = !up_turn;
    }

    out.first_line = span_first;
    out.last_line = span_last;

    std::set<int> marked(patch_lines.begin(), patch_lines.end());
    const std::map<std::string, std::string>* subs = nullptr;
    if (slice != nullptr) {
        for (int n : slice->line_numbers()) marked.insert(n);
        subs = &slice->macro_substitutions;
    }

    std::ostringstream text;
    for (int n = span_first; n <= span_last; ++n) {
        const SourceLine& line = func.line(n);
        text << n << ": ";
        if (subs != nullptr && marked.count(n)) {
            text << apply_substitutions(line.text, *subs);
        } else {
            text << line.text;
        }
        if (marked.count(n)) {
            text << " //patch_code";
            out.slice_lines_in_span.push_back(n);
        }
        text << "\n";
    }
    out.rendered_text = text.str();
    return out;
}

std::string render_numbered(const ParsedFunction& func, int first_line, int last_line) {
    std::ostringstream out;
    for (int n = std::max(1, first_line); n <= std::min(func.line_count(), last_line); ++n) {
        out << n << ": " << func.line(n).text << "\n";
    }
    return out.str();
}

} // namespace patchprobe
