#pragma once

#include "patchprobe/enhance.hpp"
#include "patchprobe/ingest.hpp"
#include "patchprobe/provider.hpp"
#include "patchprobe/source_model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patchprobe {

/// Per-line mapping from source-slice lines to pseudocode lines.
struct LineMapping {
    std::vector<std::pair<int, std::vector<int>>> pairs;
    std::vector<int> unmatched_source_lines;
};

enum class Provenance { Forward, Reverse };

const char* provenance_name(Provenance p);

/// Pseudocode slice judged to correspond to one version's source slice.
struct LocalizationResult {
    VersionTag version_tag = VersionTag::PrePatch;
    LineMapping mapping;
    std::vector<SourceLine> pseudo_slice; // ordered, text + numbers
    Provenance provenance = Provenance::Forward;
    std::string provider_label;
    std::map<int, std::string> source_texts; // queried slice lines by number
};

/// Fill the localization template with the annotated source window and one
/// pseudocode segment. Throws OversizePrompt when the rendered prompt
/// exceeds the provider token budget.
Prompt build_localization_prompt(const TruncatedSource& src, const PseudoFunction& target,
                                 const FunctionSegment& segment, int prompt_token_budget);

/// Extract the first well-formed mapping dictionary from a provider response,
/// tolerating surrounding prose. When `pseudo_range` is given, mapped lines
/// outside it raise OutOfRangeLines. Throws UnparseableResponse when no
/// mapping object parses.
LineMapping parse_localization_response(const std::string& raw,
                                        std::optional<std::pair<int, int>> pseudo_range =
                                            std::nullopt);

std::string serialize_line_mapping(const LineMapping& mapping);

/// Token-level matcher used by the offline provider: for each slice line the
/// pseudo line with the highest normalized-token LCS ratio, threshold 0.5,
/// ties to the lowest line number. Integer literals compare by canonical
/// decimal value, so 0x303 matches 771. Line numbers are 1-based positions
/// in the input lists.
LineMapping heuristic_localize(const std::vector<std::string>& slice_lines,
                               const std::vector<std::string>& seg_lines);

/// LCS similarity of two token sequences (2*lcs / (n1+n2)); exposed for the
/// verification-side heuristic scoring.
double token_similarity(const std::string& a, const std::string& b);

/// Locate the pseudocode slice matching the source slice: prompts the
/// provider per segment, retries non-conforming responses with a reminder,
/// and keeps the segment covering the most slice lines (ties to the lowest
/// span start). Throws AllSegmentsFailed when every segment exhausts its
/// retries.
LocalizationResult localize(const TruncatedSource& src, const EnhancedSlice& slice,
                            const PseudoFunction& target, const ProviderClient& provider,
                            int token_limit, ProviderUsage* usage = nullptr,
                            std::ostream* audit = nullptr);

/// Reverse matching for add-only / delete-only patches: the located pseudo
/// slice becomes the query and the other version's source becomes the search
/// corpus, yielding the complementary version's result with reverse
/// provenance. Throws std::invalid_argument for edit-kind patches.
LocalizationResult reverse_match(const LocalizationResult& found,
                                 const AnnotatedFunction& other_version, PatchKind kind,
                                 const ProviderClient& provider, int token_limit,
                                 ProviderUsage* usage = nullptr, std::ostream* audit = nullptr);

} // namespace patchprobe
