#pragma once

#include "patchprobe/enhance.hpp"
#include "patchprobe/source_model.hpp"

#include <string>
#include <vector>

namespace patchprobe {

/// Decompiled pseudocode of one target function.
struct PseudoFunction : ParsedFunction {
    std::string render(bool numbered = false) const;
};

/// A token-bounded, structure-aligned chunk of a parsed function. Spans are
/// inclusive line ranges cut at syntax-node boundaries.
struct FunctionSegment {
    int first_line = 0;
    int last_line = 0;
    int token_count = 0;
    bool over_limit = false; // single atomic statement larger than the limit

    bool contains(int line) const { return line >= first_line && line <= last_line; }
};

using PseudoSegment = FunctionSegment;

/// Token-bounded window of annotated source around the first patch line.
struct TruncatedSource {
    int first_line = 0;
    int last_line = 0;
    int token_count = 0;
    bool over_limit = false; // structural completion forced the limit to be exceeded
    std::string rendered_text; // numbered lines with //patch_code suffixes
    std::vector<int> slice_lines_in_span;
};

/// Parse one function's decompiler output. Falls back to brace-depth (flat)
/// segmentation with `structure_fallback` set when the text does not parse.
/// Throws EmptyInput on blank input.
PseudoFunction parse_pseudocode(const std::string& text);

/// Number of lexer tokens on the given lines (comment tokens excluded).
int count_tokens(const ParsedFunction& func, int first_line, int last_line);

/// Split the function into contiguous segments covering every line, each at
/// most `token_limit` tokens, cut at syntax-node boundaries. A single atomic
/// statement over the limit becomes its own flagged segment.
std::vector<FunctionSegment> segment_function(const ParsedFunction& func, int token_limit);

inline std::vector<PseudoSegment> segment_pseudocode(const PseudoFunction& func, int token_limit) {
    return segment_function(func, token_limit);
}

/// Window the annotated source around its first patch line: enclosing loop
/// bodies complete first, then expansion alternates upward/downward one
/// syntax node at a time while the token limit allows. `slice` adds
/// //patch_code annotations for enhanced-slice lines and applies its macro
/// substitutions to the rendered text. Throws AnchorMissing when the function
/// has no patch line.
TruncatedSource truncate_source(const AnnotatedFunction& func, int token_limit,
                                const EnhancedSlice* slice = nullptr);

/// Render a line range of any parsed function with "N: " prefixes.
std::string render_numbered(const ParsedFunction& func, int first_line, int last_line);

} // namespace patchprobe
