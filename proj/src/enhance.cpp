#include "patchprobe/enhance.hpp"

#include "patchprobe/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace patchprobe {

namespace {

bool glob_match(const std::string& pattern, const std::string& name) {
    // '*' wildcard only; enough for *.c / *.h style globs
    std::size_t p = 0, n = 0, star = std::string::npos, star_n = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            star_n = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++star_n;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::vector<std::string> identifier_tokens(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (t.kind != TokenKind::Identifier) continue;
        if (is_literal_identifier(t.lexeme)) continue;
        const bool call_position = i + 1 < tokens.size() &&
                                   tokens[i + 1].is(TokenKind::Punctuation, "(");
        if (call_position) continue;
        out.push_back(t.lexeme);
    }
    return out;
}

std::vector<Token> strip_comments(std::vector<Token> tokens) {
    tokens.erase(std::remove_if(tokens.begin(), tokens.end(),
                                [](const Token& t) { return t.kind == TokenKind::Comment; }),
                 tokens.end());
    return tokens;
}

std::optional<std::size_t> top_level_assignment(const std::vector<Token>& tokens) {
    int depth = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (t.kind == TokenKind::Punctuation && (t.lexeme == "(" || t.lexeme == "[")) ++depth;
        if (t.kind == TokenKind::Punctuation && (t.lexeme == ")" || t.lexeme == "]")) --depth;
        if (depth != 0 || t.kind != TokenKind::Operator) continue;
        const std::string& s = t.lexeme;
        if (s == "=" || s == "+=" || s == "-=" || s == "*=" || s == "/=" || s == "%=" ||
            s == "&=" || s == "|=" || s == "^=" || s == "<<=" || s == ">>=") {
            return i;
        }
    }
    return std::nullopt;
}

bool starts_with_type_keyword(const std::vector<Token>& tokens) {
    if (tokens.empty() || tokens[0].kind != TokenKind::Keyword) return false;
    const std::string& s = tokens[0].lexeme;
    return s == "int" || s == "char" || s == "long" || s == "short" || s == "float" ||
           s == "double" || s == "void" || s == "unsigned" || s == "signed" || s == "struct" ||
           s == "union" || s == "enum" || s == "const" || s == "static" || s == "register";
}

// Identifiers directly after struct/union/enum name the type, not a variable.
std::vector<std::string> declared_identifiers(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (t.kind != TokenKind::Identifier || is_literal_identifier(t.lexeme)) continue;
        if (i > 0 && tokens[i - 1].kind == TokenKind::Keyword &&
            (tokens[i - 1].lexeme == "struct" || tokens[i - 1].lexeme == "union" ||
             tokens[i - 1].lexeme == "enum")) {
            continue;
        }
        if (i + 1 < tokens.size() && tokens[i + 1].is(TokenKind::Punctuation, "(")) continue;
        out.push_back(t.lexeme);
    }
    return out;
}

struct MacroInvocation {
    std::size_t name_index = 0; // token index of the macro name
    std::size_t end_column = 0; // one past the closing paren (function-like)
    std::vector<std::string> args;
};

// Collect argument texts of a function-like invocation starting at the token
// after the name. Returns nullopt when no '(' follows directly.
std::optional<MacroInvocation> read_invocation(const std::string& text,
                                               const std::vector<Token>& tokens, std::size_t i) {
    if (i + 1 >= tokens.size() || !tokens[i + 1].is(TokenKind::Punctuation, "(")) {
        return std::nullopt;
    }
    MacroInvocation inv;
    inv.name_index = i;
    int depth = 0;
    std::size_t arg_start = tokens[i + 1].column + 1;
    for (std::size_t j = i + 1; j < tokens.size(); ++j) {
        const Token& t = tokens[j];
        if (t.kind != TokenKind::Punctuation) continue;
        if (t.lexeme == "(") ++depth;
        if (t.lexeme == ",") {
            if (depth == 1) {
                inv.args.push_back(text.substr(arg_start, t.column - arg_start));
                arg_start = t.column + 1;
            }
        }
        if (t.lexeme == ")") {
            if (--depth == 0) {
                if (t.column > arg_start) {
                    inv.args.push_back(text.substr(arg_start, t.column - arg_start));
                }
                inv.end_column = t.column + 1;
                return inv;
            }
        }
    }
    return std::nullopt;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

std::set<std::string> VariableSet::all() const {
    std::set<std::string> out = defined;
    out.insert(used.begin(), used.end());
    return out;
}

const char* slice_origin_name(SliceOrigin origin) {
    switch (origin) {
    case SliceOrigin::Patch: return "patch";
    case SliceOrigin::DataFlow: return "dataflow";
    case SliceOrigin::ControlFlow: return "controlflow";
    }
    return "patch";
}

std::vector<int> EnhancedSlice::line_numbers() const {
    std::vector<int> out;
    out.reserve(lines.size());
    for (const SliceLine& l : lines) out.push_back(l.number);
    return out;
}

std::string EnhancedSlice::render_text() const {
    std::ostringstream out;
    for (const SliceLine& l : lines) out << l.text << "\n";
    return out.str();
}

VariableSet collect_patch_variables(const AnnotatedFunction& func) {
    std::vector<int> patch_lines = func.patch_line_numbers();
    if (patch_lines.empty()) {
        throw Error(ErrorCode::NoPatchLines, "function " + func.name + " has no patch lines");
    }

    VariableSet vars;
    for (int number : patch_lines) {
        std::vector<Token> tokens = strip_comments(func.line_tokens(number));
        if (auto pos = top_level_assignment(tokens)) {
            std::vector<Token> lhs(tokens.begin(), tokens.begin() + static_cast<long>(*pos));
            std::vector<Token> rhs(tokens.begin() + static_cast<long>(*pos) + 1, tokens.end());
            for (const std::string& id : declared_identifiers(lhs)) vars.defined.insert(id);
            for (const std::string& id : identifier_tokens(rhs)) vars.used.insert(id);
        } else if (starts_with_type_keyword(tokens)) {
            for (const std::string& id : declared_identifiers(tokens)) vars.defined.insert(id);
        } else {
            for (const std::string& id : identifier_tokens(tokens)) vars.used.insert(id);
        }
    }
    return vars;
}

std::set<int> dataflow_slice(const AnnotatedFunction& func, const VariableSet& vars) {
    std::set<int> result;
    const std::set<std::string> watched = vars.all();
    if (watched.empty()) return result;

    for (const SourceLine& line : func.lines) {
        if (line.is_patch_line) continue;
        std::vector<Token> tokens = strip_comments(lex_line(line.text));
        for (const Token& t : tokens) {
            if (t.kind == TokenKind::Identifier && watched.count(t.lexeme)) {
                result.insert(line.number);
                break;
            }
        }
    }
    return result;
}

namespace {

// First statement line inside a control structure's body.
std::optional<int> first_statement_line(const SyntaxNode& node) {
    for (const SyntaxNode& child : node.children) {
        if (child.kind == NodeKind::Block) {
            if (!child.children.empty()) return child.children.front().first_line;
            continue;
        }
        return child.first_line;
    }
    return std::nullopt;
}

// Nearest statement starting after `line` in the path's ancestor chain.
std::optional<int> statement_after(const std::vector<const SyntaxNode*>& ancestors, int line) {
    for (auto it = ancestors.rbegin(); it != ancestors.rend(); ++it) {
        for (const SyntaxNode& sibling : (*it)->children) {
            if (sibling.first_line > line) return sibling.first_line;
        }
    }
    return std::nullopt;
}

bool is_control_kind(NodeKind kind) {
    return kind == NodeKind::If || kind == NodeKind::Else || kind == NodeKind::Loop ||
           kind == NodeKind::Switch;
}

} // namespace

std::set<int> controlflow_slice(const AnnotatedFunction& func) {
    std::set<int> result;
    const std::vector<int> patch_lines = func.patch_line_numbers();

    for (int patch_line : patch_lines) {
        std::vector<const SyntaxNode*> path = node_path_to_line(func.root, patch_line);

        for (std::size_t i = 0; i < path.size(); ++i) {
            const SyntaxNode* node = path[i];
            const bool is_function_body_block =
                node->kind == NodeKind::Block && i == 0; // outermost brace block
            if (!is_control_kind(node->kind) && node->kind != NodeKind::Block) continue;
            if (is_function_body_block) continue;

            std::vector<const SyntaxNode*> ancestors(path.begin(), path.begin() + static_cast<long>(i));
            ancestors.insert(ancestors.begin(), &func.root);

            if (is_control_kind(node->kind)) {
                result.insert(node->first_line);
            }
            if (auto first = first_statement_line(*node)) result.insert(*first);

            int block_end = node->last_line;

            if (node->kind == NodeKind::If) {
                // paired else branch, when present
                const SyntaxNode* parent = ancestors.back();
                for (std::size_t c = 0; c + 1 < parent->children.size(); ++c) {
                    if (&parent->children[c] != node) continue;
                    const SyntaxNode& next = parent->children[c + 1];
                    if (next.kind == NodeKind::Else) {
                        result.insert(next.first_line);
                        if (auto first = first_statement_line(next)) result.insert(*first);
                        block_end = next.last_line; // statement after the whole if-else
                    }
                    break;
                }
            }
            if (node->kind == NodeKind::Else) {
                // entry point of the structure is the paired if header
                const SyntaxNode* parent = ancestors.back();
                for (std::size_t c = 1; c < parent->children.size(); ++c) {
                    if (&parent->children[c] != node) continue;
                    const SyntaxNode& prev = parent->children[c - 1];
                    if (prev.kind == NodeKind::If) {
                        result.insert(prev.first_line);
                        if (auto first = first_statement_line(prev)) result.insert(*first);
                    }
                    break;
                }
            }

            if (auto after = statement_after(ancestors, block_end)) result.insert(*after);
        }
    }
    return result;
}

ProjectIndex ProjectIndex::scan(const fs::path& root, const std::vector<std::string>& globs) {
    ProjectIndex index;
    if (!fs::exists(root)) return index;

    std::vector<fs::path> files;
    if (fs::is_regular_file(root)) {
        files.push_back(root);
    } else {
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            for (const std::string& glob : globs) {
                if (glob_match(glob, name)) {
                    files.push_back(entry.path());
                    break;
                }
            }
        }
    }
    std::sort(files.begin(), files.end());

    for (const fs::path& file : files) {
        std::ifstream in(file);
        if (!in) continue;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && line.back() == '\\') {
                line.pop_back();
                std::string cont;
                if (!std::getline(in, cont)) break;
                line += " " + trim(cont);
            }
            std::size_t pos = line.find_first_not_of(" \t");
            if (pos == std::string::npos || line[pos] != '#') continue;
            std::size_t d = line.find("define", pos + 1);
            if (d == std::string::npos ||
                line.find_first_not_of(" \t", pos + 1) != d) {
                continue;
            }
            std::size_t name_start = line.find_first_not_of(" \t", d + 6);
            if (name_start == std::string::npos) continue;
            std::size_t name_end = name_start;
            while (name_end < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[name_end])) ||
                    line[name_end] == '_')) {
                ++name_end;
            }
            if (name_end == name_start) continue;

            Definition def;
            def.name = line.substr(name_start, name_end - name_start);
            def.path = file.string();
            std::size_t body_start = name_end;
            if (body_start < line.size() && line[body_start] == '(') {
                // function-like: parameter list directly after the name
                std::size_t close = line.find(')', body_start);
                if (close == std::string::npos) continue;
                std::vector<std::string> params;
                std::string plist = line.substr(body_start + 1, close - body_start - 1);
                std::stringstream ps(plist);
                std::string param;
                while (std::getline(ps, param, ',')) {
                    param = trim(param);
                    if (!param.empty()) params.push_back(param);
                }
                def.params = params;
                body_start = close + 1;
            }
            std::string body = trim(line.substr(body_start));
            // strip a trailing comment
            std::vector<Token> body_tokens = lex_line(body);
            if (!body_tokens.empty() && body_tokens.back().kind == TokenKind::Comment) {
                body = trim(body.substr(0, body_tokens.back().column));
            }
            def.body = body;
            index.defines_[def.name].push_back(std::move(def));
        }
    }
    return index;
}

const std::vector<ProjectIndex::Definition>* ProjectIndex::find(const std::string& name) const {
    auto it = defines_.find(name);
    return it == defines_.end() ? nullptr : &it->second;
}

std::size_t ProjectIndex::definition_count() const {
    std::size_t n = 0;
    for (const auto& [name, defs] : defines_) n += defs.size();
    return n;
}

namespace {

// Lower is closer: same file, same directory, then path distance.
long scope_score(const fs::path& define_path, const fs::path& reference) {
    if (reference.empty()) return 1000;
    std::error_code ec;
    if (fs::equivalent(define_path, reference, ec)) return 0;
    if (define_path == reference) return 0;
    if (define_path.parent_path() == reference.parent_path()) return 1;
    auto a = define_path.parent_path();
    auto b = reference.parent_path();
    auto ai = a.begin();
    auto bi = b.begin();
    while (ai != a.end() && bi != b.end() && *ai == *bi) {
        ++ai;
        ++bi;
    }
    long distance = 0;
    for (; ai != a.end(); ++ai) ++distance;
    for (; bi != b.end(); ++bi) ++distance;
    return 2 + distance;
}

bool is_single_expression(const std::string& body) {
    if (body.empty()) return false;
    for (const Token& t : lex_line(body)) {
        if (t.kind == TokenKind::Punctuation && (t.lexeme == ";" || t.lexeme == "{")) return false;
    }
    return true;
}

} // namespace

bool looks_like_macro(const std::string& identifier) {
    if (identifier.size() < 3) return false;
    if (!std::isupper(static_cast<unsigned char>(identifier[0]))) return false;
    for (char c : identifier) {
        if (!std::isupper(static_cast<unsigned char>(c)) &&
            !std::isdigit(static_cast<unsigned char>(c)) && c != '_') {
            return false;
        }
    }
    return true;
}

MacroResolution resolve_macros(const AnnotatedFunction& func, const ProjectIndex& index,
                               const std::set<int>& line_numbers,
                               const std::string& reference_file) {
    MacroResolution resolution;
    std::set<std::string> candidates;
    for (int number : line_numbers) {
        if (number < 1 || number > func.line_count()) continue;
        for (const Token& t : func.line_tokens(number)) {
            if (t.kind == TokenKind::Identifier && looks_like_macro(t.lexeme) &&
                !is_literal_identifier(t.lexeme)) {
                candidates.insert(t.lexeme);
            }
        }
    }

    for (const std::string& name : candidates) {
        const auto* defs = index.find(name);
        if (defs == nullptr || defs->empty()) {
            resolution.unresolved.push_back(name);
            continue;
        }
        const ProjectIndex::Definition* best = nullptr;
        long best_score = 0;
        for (const auto& def : *defs) {
            if (def.params && !is_single_expression(def.body)) continue;
            if (!def.params && def.body.empty()) continue;
            long score = scope_score(def.path, reference_file);
            if (best == nullptr || score < best_score ||
                (score == best_score && def.path < best->path)) {
                best = &def;
                best_score = score;
            }
        }
        if (best == nullptr) {
            resolution.unresolved.push_back(name);
            continue;
        }
        resolution.substitutions[name] = best->body;
        if (best->params) {
            // function-like macros get a "NAME()" companion entry holding
            // "(params) body"; apply_substitutions expands it per invocation
            std::string sig = "(";
            for (std::size_t i = 0; i < best->params->size(); ++i) {
                if (i > 0) sig += ",";
                sig += (*best->params)[i];
            }
            sig += ")";
            resolution.substitutions[name + "()"] = sig + " " + best->body;
        }
        resolution.sources[name] = best->path;
    }
    return resolution;
}

MacroResolution resolve_macros(const AnnotatedFunction& func, const ProjectIndex& index,
                               const std::string& reference_file) {
    std::set<int> lines;
    for (int n : func.patch_line_numbers()) lines.insert(n);
    try {
        VariableSet vars = collect_patch_variables(func);
        for (int n : dataflow_slice(func, vars)) lines.insert(n);
    } catch (const Error&) {
        // no patch lines: macro scan still covers whatever lines were given
    }
    for (int n : controlflow_slice(func)) lines.insert(n);
    return resolve_macros(func, index, lines, reference_file);
}

std::string apply_substitutions(const std::string& text,
                                const std::map<std::string, std::string>& substitutions) {
    if (substitutions.empty()) return text;
    std::vector<Token> tokens = lex_line(text);

    struct Splice {
        std::size_t begin;
        std::size_t end;
        std::string replacement;
    };
    std::vector<Splice> splices;

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (t.kind != TokenKind::Identifier) continue;
        auto it = substitutions.find(t.lexeme);
        if (it == substitutions.end()) continue;

        auto fn = substitutions.find(t.lexeme + "()");
        if (fn != substitutions.end()) {
            // function-like macro: companion value is "(params) body"
            const std::string& value = fn->second;
            auto inv = read_invocation(text, tokens, i);
            if (!inv) continue;
            std::size_t close = value.find(") ");
            if (close == std::string::npos) continue;
            std::string plist = value.substr(1, close - 1);
            std::string body = value.substr(close + 2);
            std::vector<std::string> params;
            std::stringstream ps(plist);
            std::string param;
            while (std::getline(ps, param, ',')) params.push_back(trim(param));

            std::map<std::string, std::string> args;
            for (std::size_t a = 0; a < params.size() && a < inv->args.size(); ++a) {
                args[params[a]] = trim(inv->args[a]);
            }
            splices.push_back({t.column, inv->end_column, apply_substitutions(body, args)});
        } else {
            splices.push_back({t.column, t.column + t.lexeme.size(), it->second});
        }
    }

    std::string out;
    std::size_t pos = 0;
    for (const Splice& s : splices) {
        if (s.begin < pos) continue; // overlapping (nested) splice already covered
        out += text.substr(pos, s.begin - pos);
        out += s.replacement;
        pos = s.end;
    }
    out += text.substr(pos);
    return out;
}

EnhancedSlice build_enhanced_slice(const AnnotatedFunction& func, const std::set<int>& dataflow,
                                   const std::set<int>& controlflow,
                                   const MacroResolution& macros) {
    EnhancedSlice slice;
    slice.version_tag = func.version_tag;
    slice.macro_substitutions = macros.substitutions;

    std::map<int, SliceOrigin> origin_by_line;
    for (int n : func.patch_line_numbers()) origin_by_line.emplace(n, SliceOrigin::Patch);
    for (int n : dataflow) origin_by_line.emplace(n, SliceOrigin::DataFlow);
    for (int n : controlflow) origin_by_line.emplace(n, SliceOrigin::ControlFlow);

    for (const auto& [number, origin] : origin_by_line) {
        if (number < 1 || number > func.line_count()) continue;
        SliceLine line;
        line.number = number;
        line.origin = origin;
        line.text = apply_substitutions(func.line(number).text, macros.substitutions);
        slice.lines.push_back(std::move(line));
    }
    return slice;
}

} // namespace patchprobe
