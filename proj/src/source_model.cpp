#include "patchprobe/source_model.hpp"

#include "patchprobe/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <unordered_set>

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

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

// "@@ -l,c +l,c @@ optional hint"
bool parse_hunk_header(const std::string& line, DiffHunk& hunk) {
    if (line.rfind("@@ -", 0) != 0) return false;
    const char* p = line.c_str() + 4;
    char* end = nullptr;
    hunk.old_start = static_cast<int>(std::strtol(p, &end, 10));
    if (end == p) return false;
    hunk.old_count = 1;
    if (*end == ',') {
        p = end + 1;
        hunk.old_count = static_cast<int>(std::strtol(p, &end, 10));
        if (end == p) return false;
    }
    while (*end == ' ') ++end;
    if (*end != '+') return false;
    p = end + 1;
    hunk.new_start = static_cast<int>(std::strtol(p, &end, 10));
    if (end == p) return false;
    hunk.new_count = 1;
    if (*end == ',') {
        p = end + 1;
        hunk.new_count = static_cast<int>(std::strtol(p, &end, 10));
        if (end == p) return false;
    }
    while (*end == ' ') ++end;
    if (end[0] != '@' || end[1] != '@') return false;
    const char* hint = end + 2;
    while (*hint == ' ') ++hint;
    hunk.function_hint = hint;
    return true;
}

std::string strip_diff_path(const std::string& header_path) {
    // "a/path" / "b/path" prefixes and trailing timestamps after a tab
    std::string path = header_path;
    auto tab = path.find('\t');
    if (tab != std::string::npos) path = path.substr(0, tab);
    if (path.rfind("a/", 0) == 0 || path.rfind("b/", 0) == 0) path = path.substr(2);
    return path;
}

} // namespace

std::vector<std::string> PatchDiff::added_lines() const {
    std::vector<std::string> out;
    for (const DiffHunk& h : hunks) {
        for (const DiffLine& l : h.lines) {
            if (l.tag == DiffLineTag::Added) out.push_back(l.text);
        }
    }
    return out;
}

std::vector<std::string> PatchDiff::deleted_lines() const {
    std::vector<std::string> out;
    for (const DiffHunk& h : hunks) {
        for (const DiffLine& l : h.lines) {
            if (l.tag == DiffLineTag::Deleted) out.push_back(l.text);
        }
    }
    return out;
}

const char* patch_kind_name(PatchKind kind) {
    switch (kind) {
    case PatchKind::AddOnly: return "add-only";
    case PatchKind::DeleteOnly: return "delete-only";
    case PatchKind::Edit: return "edit";
    }
    return "edit";
}

const char* version_tag_name(VersionTag tag) {
    return tag == VersionTag::PrePatch ? "pre-patch" : "patched";
}

PatchDiff parse_unified_diff(const std::string& text) {
    PatchDiff diff;
    int file_sections = 0;
    bool in_hunk = false;

    for (const std::string& raw : split_lines(text)) {
        if (raw.rfind("--- ", 0) == 0) {
            ++file_sections;
            if (file_sections > 1) {
                throw Error(ErrorCode::MultiFileDiff, "more than one file section");
            }
            in_hunk = false;
            continue;
        }
        if (raw.rfind("+++ ", 0) == 0) {
            diff.file_path = strip_diff_path(raw.substr(4));
            continue;
        }
        if (raw.rfind("@@", 0) == 0) {
            DiffHunk hunk;
            if (!parse_hunk_header(raw, hunk)) {
                throw Error(ErrorCode::MalformedDiff, "bad hunk header: " + raw);
            }
            if (!hunk.function_hint.empty() && !diff.function_hint) {
                diff.function_hint = hunk.function_hint;
            }
            diff.hunks.push_back(std::move(hunk));
            in_hunk = true;
            continue;
        }
        if (!in_hunk) continue; // git headers, index lines, commit message
        if (raw.rfind("diff ", 0) == 0 || raw == "\\ No newline at end of file") {
            in_hunk = raw[0] != 'd';
            continue;
        }
        DiffLine line;
        if (raw.empty() || raw[0] == ' ') {
            line.tag = DiffLineTag::Context;
            line.text = raw.empty() ? "" : raw.substr(1);
        } else if (raw[0] == '+') {
            line.tag = DiffLineTag::Added;
            line.text = raw.substr(1);
        } else if (raw[0] == '-') {
            line.tag = DiffLineTag::Deleted;
            line.text = raw.substr(1);
        } else {
            throw Error(ErrorCode::MalformedDiff, "unexpected line in hunk: " + raw);
        }
        diff.hunks.back().lines.push_back(std::move(line));
    }

    if (diff.hunks.empty()) {
        throw Error(ErrorCode::MalformedDiff, "no hunks found");
    }
    for (const DiffHunk& hunk : diff.hunks) {
        int old_seen = 0;
        int new_seen = 0;
        for (const DiffLine& line : hunk.lines) {
            if (line.tag != DiffLineTag::Added) ++old_seen;
            if (line.tag != DiffLineTag::Deleted) ++new_seen;
        }
        if (old_seen != hunk.old_count || new_seen != hunk.new_count) {
            std::ostringstream msg;
            msg << "hunk declares -" << hunk.old_count << "/+" << hunk.new_count
                << " but contains " << old_seen << "/" << new_seen << " lines";
            throw Error(ErrorCode::MalformedDiff, msg.str());
        }
    }
    return diff;
}

std::string serialize_diff(const PatchDiff& diff) {
    std::ostringstream out;
    out << "--- a/" << diff.file_path << "\n";
    out << "+++ b/" << diff.file_path << "\n";
    for (const DiffHunk& hunk : diff.hunks) {
        out << "@@ -" << hunk.old_start << "," << hunk.old_count << " +" << hunk.new_start << ","
            << hunk.new_count << " @@";
        if (!hunk.function_hint.empty()) out << " " << hunk.function_hint;
        out << "\n";
        for (const DiffLine& line : hunk.lines) {
            char tag = line.tag == DiffLineTag::Added ? '+'
                     : line.tag == DiffLineTag::Deleted ? '-'
                                                        : ' ';
            out << tag << line.text << "\n";
        }
    }
    return out.str();
}

PatchKind classify_patch(const PatchDiff& diff) {
    int added = 0;
    int deleted = 0;
    for (const DiffHunk& hunk : diff.hunks) {
        for (const DiffLine& line : hunk.lines) {
            if (is_blank(line.text)) continue;
            if (line.tag == DiffLineTag::Added) ++added;
            if (line.tag == DiffLineTag::Deleted) ++deleted;
        }
    }
    if (added == 0 && deleted == 0) {
        throw Error(ErrorCode::EmptyPatch, "no added and no deleted non-whitespace lines");
    }
    if (deleted == 0) return PatchKind::AddOnly;
    if (added == 0) return PatchKind::DeleteOnly;
    return PatchKind::Edit;
}

std::string collapse_whitespace(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

std::vector<int> AnnotatedFunction::patch_line_numbers() const {
    std::vector<int> out;
    for (const SourceLine& l : lines) {
        if (l.is_patch_line) out.push_back(l.number);
    }
    return out;
}

AnnotatedFunction extract_function(const std::string& source_text, const std::string& name,
                                   VersionTag version) {
    std::vector<std::string> file_lines = split_lines(source_text);

    struct FlatToken {
        Token token;
        int line;
    };
    std::vector<FlatToken> tokens;
    for (std::size_t i = 0; i < file_lines.size(); ++i) {
        for (Token& t : lex_line(file_lines[i])) {
            if (t.kind == TokenKind::Comment) continue;
            tokens.push_back({std::move(t), static_cast<int>(i) + 1});
        }
    }

    // Definition: name '(' ... ')' then '{' with no ';' in between.
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i].token.kind != TokenKind::Identifier || tokens[i].token.lexeme != name) continue;
        if (!(tokens[i + 1].token.kind == TokenKind::Punctuation && tokens[i + 1].token.lexeme == "(")) {
            continue;
        }
        std::size_t j = i + 1;
        int depth = 0;
        for (; j < tokens.size(); ++j) {
            const Token& t = tokens[j].token;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "(") ++depth;
            if (t.kind == TokenKind::Punctuation && t.lexeme == ")" && --depth == 0) break;
        }
        if (j >= tokens.size()) continue;
        std::size_t k = j + 1;
        bool is_definition = false;
        for (; k < tokens.size(); ++k) {
            const Token& t = tokens[k].token;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "{") {
                is_definition = true;
                break;
            }
            if (t.kind == TokenKind::Punctuation && (t.lexeme == ";" || t.lexeme == ")")) break;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "(") break; // another call
        }
        if (!is_definition) continue;

        // body: matching '}' from the '{' at k
        int body_depth = 0;
        std::size_t end = k;
        for (; end < tokens.size(); ++end) {
            const Token& t = tokens[end].token;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "{") ++body_depth;
            if (t.kind == TokenKind::Punctuation && t.lexeme == "}" && --body_depth == 0) break;
        }
        if (end >= tokens.size()) {
            throw Error(ErrorCode::UnbalancedBraces, "function body never closes: " + name);
        }

        int start_line = tokens[i].line;
        int end_line = tokens[end].line;

        AnnotatedFunction func;
        func.name = name;
        func.version_tag = version;
        func.file_start_line = start_line;
        for (int ln = start_line; ln <= end_line; ++ln) {
            SourceLine sl;
            sl.number = ln - start_line + 1;
            sl.text = file_lines[static_cast<std::size_t>(ln - 1)];
            func.lines.push_back(std::move(sl));
        }
        std::vector<std::string> body_texts;
        body_texts.reserve(func.lines.size());
        for (const SourceLine& l : func.lines) body_texts.push_back(l.text);
        func.root = build_syntax_tree(body_texts);
        return func;
    }

    throw Error(ErrorCode::FunctionNotFound, "no definition of '" + name + "' found");
}

AnnotatedFunction annotate_patch_lines(const AnnotatedFunction& func, const PatchDiff& diff) {
    const bool want_added = func.version_tag == VersionTag::Patched;

    // (collapsed text, projected file line) for each relevant diff line
    struct Wanted {
        std::string key;
        int projected_line;
    };
    std::vector<Wanted> wanted;
    for (const DiffHunk& hunk : diff.hunks) {
        int old_pos = hunk.old_start;
        int new_pos = hunk.new_start;
        for (const DiffLine& line : hunk.lines) {
            const bool matches = want_added ? line.tag == DiffLineTag::Added
                                            : line.tag == DiffLineTag::Deleted;
            if (matches && !is_blank(line.text)) {
                wanted.push_back({collapse_whitespace(line.text), want_added ? new_pos : old_pos});
            }
            if (line.tag != DiffLineTag::Added) ++old_pos;
            if (line.tag != DiffLineTag::Deleted) ++new_pos;
        }
    }

    AnnotatedFunction out = func;
    for (const Wanted& w : wanted) {
        int best = -1;
        long best_distance = 0;
        for (const SourceLine& line : out.lines) {
            if (collapse_whitespace(line.text) != w.key) continue;
            long file_line = out.file_start_line + line.number - 1;
            long distance = std::labs(file_line - w.projected_line);
            if (best == -1 || distance < best_distance) {
                best = line.number;
                best_distance = distance;
            }
        }
        if (best == -1) {
            throw Error(ErrorCode::PatchLineNotFound,
                        "diff line has no match in " + out.name + ": " + w.key);
        }
        out.lines[static_cast<std::size_t>(best - 1)].is_patch_line = true;
    }
    return out;
}

std::string render_annotated(const AnnotatedFunction& func, const std::vector<int>& extra_marked,
                             bool numbered) {
    std::unordered_set<int> extra(extra_marked.begin(), extra_marked.end());
    std::ostringstream out;
    for (const SourceLine& line : func.lines) {
        if (numbered) out << line.number << ": ";
        out << line.text;
        if (line.is_patch_line || extra.count(line.number)) out << " //patch_code";
        out << "\n";
    }
    return out.str();
}

} // namespace patchprobe
