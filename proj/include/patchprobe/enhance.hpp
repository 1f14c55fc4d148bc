#pragma once

#include "patchprobe/source_model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace patchprobe {

/// Variables defined and used by the patch lines. Identifiers are lexer-level
/// tokens; field accesses are flattened into their components.
struct VariableSet {
    std::set<std::string> defined;
    std::set<std::string> used;

    std::set<std::string> all() const;
    bool empty() const { return defined.empty() && used.empty(); }
};

enum class SliceOrigin { Patch, DataFlow, ControlFlow };

const char* slice_origin_name(SliceOrigin origin);

struct SliceLine {
    int number = 0;
    std::string text; // macro substitutions applied
    SliceOrigin origin = SliceOrigin::Patch;
};

/// Patch-related code slice for one version: patch lines plus data-flow and
/// control-flow context, with macro substitutions applied to the text.
struct EnhancedSlice {
    VersionTag version_tag = VersionTag::PrePatch;
    std::vector<SliceLine> lines; // ordered by line number, no duplicates
    std::map<std::string, std::string> macro_substitutions;

    std::vector<int> line_numbers() const;
    std::string render_text() const;
};

/// Searchable index of #define directives across a source tree.
class ProjectIndex {
public:
    struct Definition {
        std::string name;
        std::optional<std::vector<std::string>> params; // set for function-like macros
        std::string body;
        std::string path;
    };

    ProjectIndex() = default;

    /// Scan `root` recursively for files matching the globs (default *.c, *.h)
    /// and collect their #define directives. Safe for concurrent read-only
    /// queries afterwards.
    static ProjectIndex scan(const std::filesystem::path& root,
                             const std::vector<std::string>& globs = {"*.c", "*.h"});

    const std::vector<Definition>* find(const std::string& name) const;
    std::size_t definition_count() const;

private:
    std::map<std::string, std::vector<Definition>> defines_;
};

struct MacroResolution {
    std::map<std::string, std::string> substitutions;
    std::map<std::string, std::string> sources; // macro -> path of the chosen #define
    std::vector<std::string> unresolved;
};

/// Defined/used variables across the function's patch lines. Throws
/// NoPatchLines when the function has no marked lines.
VariableSet collect_patch_variables(const AnnotatedFunction& func);

/// Non-patch lines that lexically define or use any of the given variables.
std::set<int> dataflow_slice(const AnnotatedFunction& func, const VariableSet& vars);

/// Control-structure context of each patch line: enclosing structure headers,
/// first statements of enclosing blocks, the statement after each block, and
/// the paired else/if branch.
std::set<int> controlflow_slice(const AnnotatedFunction& func);

/// Resolve ALL_CAPS-style identifiers on the given lines against the
/// project's #define directives. Conflicts prefer definitions near
/// `reference_file` (same file, then same directory, then shortest path
/// distance). Unresolved names are reported, never guessed.
MacroResolution resolve_macros(const AnnotatedFunction& func, const ProjectIndex& index,
                               const std::set<int>& line_numbers,
                               const std::string& reference_file = "");

/// Convenience overload covering patch lines plus both analysis slices.
MacroResolution resolve_macros(const AnnotatedFunction& func, const ProjectIndex& index,
                               const std::string& reference_file = "");

/// Assemble the slice: patch lines, then data-flow, then control-flow lines
/// (first origin wins), ordered and deduplicated, macro substitutions applied.
EnhancedSlice build_enhanced_slice(const AnnotatedFunction& func, const std::set<int>& dataflow,
                                   const std::set<int>& controlflow,
                                   const MacroResolution& macros);

/// Token-aware macro substitution: replaces identifier occurrences (and
/// function-like macro invocations) in `text`, leaving everything else
/// byte-identical.
std::string apply_substitutions(const std::string& text,
                                const std::map<std::string, std::string>& substitutions);

/// ALL_CAPS heuristic used to nominate macro candidates.
bool looks_like_macro(const std::string& identifier);

} // namespace patchprobe
