#pragma once

#include "patchprobe/syntax.hpp"

#include <optional>
#include <string>
#include <vector>

namespace patchprobe {

enum class DiffLineTag { Context, Added, Deleted };

struct DiffLine {
    DiffLineTag tag = DiffLineTag::Context;
    std::string text; // without the leading marker character
};

struct DiffHunk {
    int old_start = 0;
    int old_count = 0;
    int new_start = 0;
    int new_count = 0;
    std::string function_hint; // trailing text of the @@ header, if any
    std::vector<DiffLine> lines;
};

/// A unified diff for a single file, hunk counts verified against content.
struct PatchDiff {
    std::string file_path;
    std::optional<std::string> function_hint;
    std::vector<DiffHunk> hunks;

    std::vector<std::string> added_lines() const;
    std::vector<std::string> deleted_lines() const;
};

enum class PatchKind { AddOnly, DeleteOnly, Edit };

const char* patch_kind_name(PatchKind kind);

enum class VersionTag { PrePatch, Patched };

const char* version_tag_name(VersionTag tag);

/// One function's source with per-line patch markers and its syntax tree.
struct AnnotatedFunction : ParsedFunction {
    VersionTag version_tag = VersionTag::PrePatch;

    std::vector<int> patch_line_numbers() const;
};

/// Parse a single-file unified diff. Throws MalformedDiff on bad headers or
/// count mismatches, MultiFileDiff when more than one file section appears.
PatchDiff parse_unified_diff(const std::string& text);

/// Re-render a PatchDiff in unified format; parse_unified_diff round-trips
/// hunk tags and counts through this.
std::string serialize_diff(const PatchDiff& diff);

/// AddOnly / DeleteOnly / Edit by the diff's non-whitespace added and deleted
/// line counts. Throws EmptyPatch when both are zero.
PatchKind classify_patch(const PatchDiff& diff);

/// Locate `name`'s definition in `source_text` and build its line-indexed,
/// syntax-aware representation. Lines are renumbered 1-based from the
/// signature line; the original file position is kept for tie-breaking.
AnnotatedFunction extract_function(const std::string& source_text, const std::string& name,
                                   VersionTag version = VersionTag::PrePatch);

/// Mark the function lines matching the diff's added (Patched) or deleted
/// (PrePatch) lines. Matching is whitespace-collapsed exact text; duplicate
/// matches resolve to the occurrence nearest the hunk's declared position.
/// Throws PatchLineNotFound when a diff line has no match. Idempotent.
AnnotatedFunction annotate_patch_lines(const AnnotatedFunction& func, const PatchDiff& diff);

/// Render the function with the verbatim suffix " //patch_code" appended to
/// marked lines. `extra_marked` adds further line numbers to annotate (used
/// for enhanced-slice lines) and `numbered` prefixes each line with "N: ".
std::string render_annotated(const AnnotatedFunction& func,
                             const std::vector<int>& extra_marked = {}, bool numbered = false);

/// Collapse every whitespace run to one space and trim; the text-matching key
/// used for diff-to-function line matching.
std::string collapse_whitespace(const std::string& text);

} // namespace patchprobe
