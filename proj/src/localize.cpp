#include "patchprobe/localize.hpp"

#include "patchprobe/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace patchprobe {

using nlohmann::json;

const char* provenance_name(Provenance p) {
    return p == Provenance::Forward ? "forward" : "reverse";
}

namespace {

constexpr const char* kLocalizationTemplate =
    "Suppose you are a software reverse engineer with strong code analysis skills. You have the "
    "source code of a function and the pseudo code obtained through binary decompilation. Lines "
    "in the source code that end with \"//patch_code\" are patch codes. Can you identify the "
    "patch codes in the pseudo code that corresponds to the patch code? Must only output your "
    "findings as a JSON dictionary.\n"
    "- Output format:<json_format_sample>\n"
    "- Source code: <source_code>\n"
    "- Pseudocode: <pseudo_code>\n";

constexpr const char* kJsonFormatSample =
    " {\"<source line number of a patch code line>\": [<line numbers of the corresponding pseudo "
    "code lines>], \"12\": [34, 35]}\n";

std::string fill(std::string text, const std::string& placeholder, const std::string& content) {
    const std::string marker = "<" + placeholder + ">";
    auto pos = text.find(marker);
    if (pos != std::string::npos) text.replace(pos, marker.size(), content);
    return text;
}

int text_token_count(const std::string& text) {
    int count = 0;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        for (const Token& t : lex_line(line)) {
            if (t.kind != TokenKind::Comment) ++count;
        }
    }
    return count;
}

} // namespace

Prompt build_localization_prompt(const TruncatedSource& src, const PseudoFunction& target,
                                 const FunctionSegment& segment, int prompt_token_budget) {
    if (src.rendered_text.find("//patch_code") == std::string::npos) {
        throw Error(ErrorCode::AnchorMissing, "truncated source carries no //patch_code lines");
    }
    Prompt prompt;
    prompt.template_id = PromptTemplate::Localization;
    prompt.placeholders_filled["json_format_sample"] = kJsonFormatSample;
    prompt.placeholders_filled["source_code"] = "\n" + src.rendered_text;
    prompt.placeholders_filled["pseudo_code"] =
        "\n" + render_numbered(target, segment.first_line, segment.last_line);

    std::string text = kLocalizationTemplate;
    for (const auto& [name, content] : prompt.placeholders_filled) {
        text = fill(std::move(text), name, content);
    }
    prompt.rendered_text = std::move(text);

    if (text_token_count(prompt.rendered_text) > prompt_token_budget) {
        throw Error(ErrorCode::OversizePrompt,
                    "prompt exceeds token budget of " + std::to_string(prompt_token_budget));
    }
    return prompt;
}

namespace {

std::optional<LineMapping> try_parse_mapping(const std::string& candidate) {
    json parsed;
    try {
        parsed = json::parse(candidate);
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!parsed.is_object()) return std::nullopt;

    LineMapping mapping;
    for (const auto& [key, value] : parsed.items()) {
        if (key.empty() ||
            !std::all_of(key.begin(), key.end(),
                         [](unsigned char c) { return std::isdigit(c) != 0; })) {
            return std::nullopt; // not a line-number dictionary
        }
        if (!value.is_array()) return std::nullopt;
        std::vector<int> pseudo;
        for (const auto& item : value) {
            if (!item.is_number_integer()) return std::nullopt;
            pseudo.push_back(item.get<int>());
        }
        const int source_line = std::atoi(key.c_str());
        if (pseudo.empty()) {
            mapping.unmatched_source_lines.push_back(source_line);
        } else {
            std::sort(pseudo.begin(), pseudo.end());
            mapping.pairs.emplace_back(source_line, std::move(pseudo));
        }
    }
    std::sort(mapping.pairs.begin(), mapping.pairs.end());
    std::sort(mapping.unmatched_source_lines.begin(), mapping.unmatched_source_lines.end());
    return mapping;
}

} // namespace

LineMapping parse_localization_response(const std::string& raw,
                                        std::optional<std::pair<int, int>> pseudo_range) {
    // scan balanced {...} spans, first one that parses as a mapping wins
    std::optional<LineMapping> mapping;
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        for (std::size_t i = start; i < raw.size(); ++i) {
            if (raw[i] == '{') ++depth;
            if (raw[i] == '}') {
                if (--depth == 0) {
                    mapping = try_parse_mapping(raw.substr(start, i - start + 1));
                    break;
                }
            }
        }
        if (mapping) break;
    }
    if (!mapping) {
        throw Error(ErrorCode::UnparseableResponse, "no mapping object found in response");
    }
    if (pseudo_range) {
        for (const auto& [source_line, pseudo_lines] : mapping->pairs) {
            for (int p : pseudo_lines) {
                if (p < pseudo_range->first || p > pseudo_range->second) {
                    throw Error(ErrorCode::OutOfRangeLines,
                                "pseudo line " + std::to_string(p) + " outside segment [" +
                                    std::to_string(pseudo_range->first) + ", " +
                                    std::to_string(pseudo_range->second) + "]");
                }
            }
        }
    }
    return *mapping;
}

std::string serialize_line_mapping(const LineMapping& mapping) {
    json out = json::object();
    for (const auto& [source_line, pseudo_lines] : mapping.pairs) {
        out[std::to_string(source_line)] = pseudo_lines;
    }
    for (int line : mapping.unmatched_source_lines) {
        out[std::to_string(line)] = json::array();
    }
    return out.dump();
}

namespace {

std::vector<std::string> normalized_tokens(const std::string& text) {
    std::vector<std::string> out;
    for (const Token& t : lex_line(text)) {
        if (t.kind == TokenKind::Comment) continue;
        if (t.kind == TokenKind::IntegerLiteral) {
            out.push_back(std::to_string(t.value)); // 0x303 and 771 coincide
        } else {
            out.push_back(t.lexeme);
        }
    }
    return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace

double token_similarity(const std::string& a, const std::string& b) {
    std::vector<std::string> ta = normalized_tokens(a);
    std::vector<std::string> tb = normalized_tokens(b);
    if (ta.empty() && tb.empty()) return 1.0;
    if (ta.empty() || tb.empty()) return 0.0;
    return 2.0 * static_cast<double>(lcs_length(ta, tb)) /
           static_cast<double>(ta.size() + tb.size());
}

LineMapping heuristic_localize(const std::vector<std::string>& slice_lines,
                               const std::vector<std::string>& seg_lines) {
    constexpr double kThreshold = 0.5;
    LineMapping mapping;

    std::vector<std::vector<std::string>> seg_tokens;
    seg_tokens.reserve(seg_lines.size());
    for (const std::string& line : seg_lines) seg_tokens.push_back(normalized_tokens(line));

    for (std::size_t i = 0; i < slice_lines.size(); ++i) {
        std::vector<std::string> tokens = normalized_tokens(slice_lines[i]);
        double best_ratio = 0.0;
        int best_line = -1;
        for (std::size_t j = 0; j < seg_lines.size(); ++j) {
            if (tokens.empty() || seg_tokens[j].empty()) continue;
            const double ratio = 2.0 * static_cast<double>(lcs_length(tokens, seg_tokens[j])) /
                                 static_cast<double>(tokens.size() + seg_tokens[j].size());
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best_line = static_cast<int>(j) + 1;
            }
        }
        if (best_line > 0 && best_ratio >= kThreshold) {
            mapping.pairs.emplace_back(static_cast<int>(i) + 1, std::vector<int>{best_line});
        } else {
            mapping.unmatched_source_lines.push_back(static_cast<int>(i) + 1);
        }
    }
    return mapping;
}

namespace {

constexpr const char* kRetryReminder =
    "\nRemember: output only the JSON dictionary mapping source line numbers to pseudo code "
    "line numbers, with no other text.";

struct SegmentAttempt {
    LineMapping mapping;
    int coverage = 0;
    int span_start = 0;
    const FunctionSegment* segment = nullptr;
};

// query + parse with re-asks on non-conforming responses
std::optional<LineMapping> ask_with_retries(const ProviderClient& provider, Prompt prompt,
                                            std::pair<int, int> pseudo_range,
                                            ProviderUsage* usage, std::ostream* audit) {
    const int attempts = provider.config().max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string raw;
        try {
            raw = provider.query(prompt, usage, audit);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ReplayMiss) throw;
            return std::nullopt; // transport-level failure on this segment
        }
        try {
            return parse_localization_response(raw, pseudo_range);
        } catch (const Error&) {
            prompt.rendered_text += kRetryReminder;
        }
    }
    return std::nullopt;
}

} // namespace

LocalizationResult localize(const TruncatedSource& src, const EnhancedSlice& slice,
                            const PseudoFunction& target, const ProviderClient& provider,
                            int token_limit, ProviderUsage* usage, std::ostream* audit) {
    if (slice.lines.empty()) {
        throw std::invalid_argument("localize requires a non-empty slice");
    }

    std::set<int> slice_lines(src.slice_lines_in_span.begin(), src.slice_lines_in_span.end());

    std::vector<FunctionSegment> segments = segment_pseudocode(target, token_limit);
    std::optional<SegmentAttempt> best;
    bool any_success = false;

    for (const FunctionSegment& segment : segments) {
        Prompt prompt;
        try {
            prompt = build_localization_prompt(src, target, segment,
                                               provider.config().prompt_token_budget);
        } catch (const Error&) {
            continue; // oversize segment: skip
        }
        auto mapping = ask_with_retries(provider, std::move(prompt),
                                        {segment.first_line, segment.last_line}, usage, audit);
        if (!mapping) continue;
        any_success = true;

        // keep only queried slice lines
        LineMapping filtered;
        for (const auto& [source_line, pseudo_lines] : mapping->pairs) {
            if (slice_lines.count(source_line)) filtered.pairs.emplace_back(source_line, pseudo_lines);
        }
        int coverage = static_cast<int>(filtered.pairs.size());
        for (int line : slice_lines) {
            bool mapped = false;
            for (const auto& [source_line, pseudo_lines] : filtered.pairs) {
                if (source_line == line) mapped = true;
            }
            if (!mapped) filtered.unmatched_source_lines.push_back(line);
        }

        if (!best || coverage > best->coverage ||
            (coverage == best->coverage && segment.first_line < best->span_start)) {
            best = SegmentAttempt{std::move(filtered), coverage, segment.first_line, &segment};
        }
    }

    if (!any_success || !best) {
        throw Error(ErrorCode::AllSegmentsFailed,
                    "no pseudocode segment produced a parseable mapping");
    }

    LocalizationResult result;
    result.version_tag = slice.version_tag;
    result.provenance = Provenance::Forward;
    result.provider_label = provider.label();
    result.mapping = std::move(best->mapping);

    std::set<int> pseudo_lines;
    for (const auto& [source_line, mapped] : result.mapping.pairs) {
        pseudo_lines.insert(mapped.begin(), mapped.end());
    }
    for (int n : pseudo_lines) {
        if (n >= 1 && n <= target.line_count()) result.pseudo_slice.push_back(target.line(n));
    }
    for (const SliceLine& sl : slice.lines) {
        if (slice_lines.count(sl.number)) result.source_texts[sl.number] = sl.text;
    }
    return result;
}

LocalizationResult reverse_match(const LocalizationResult& found,
                                 const AnnotatedFunction& other_version, PatchKind kind,
                                 const ProviderClient& provider, int token_limit,
                                 ProviderUsage* usage, std::ostream* audit) {
    if (kind == PatchKind::Edit) {
        throw std::invalid_argument("reverse matching applies to add-only/delete-only patches");
    }
    if ((kind == PatchKind::AddOnly && found.version_tag != VersionTag::Patched) ||
        (kind == PatchKind::DeleteOnly && found.version_tag != VersionTag::PrePatch)) {
        throw std::invalid_argument("reverse matching starts from the forward-matched version");
    }

    // the located pseudo slice is the query; every line counts as patch code
    std::ostringstream query_block;
    for (const SourceLine& line : found.pseudo_slice) {
        query_block << line.number << ": " << line.text << " //patch_code\n";
    }

    std::set<int> query_lines;
    for (const SourceLine& line : found.pseudo_slice) query_lines.insert(line.number);

    std::vector<FunctionSegment> segments = segment_function(other_version, token_limit);
    std::optional<SegmentAttempt> best;
    bool any_success = false;

    for (const FunctionSegment& segment : segments) {
        Prompt prompt;
        prompt.template_id = PromptTemplate::Localization;
        prompt.placeholders_filled["json_format_sample"] = kJsonFormatSample;
        prompt.placeholders_filled["source_code"] = "\n" + query_block.str();
        prompt.placeholders_filled["pseudo_code"] =
            "\n" + render_numbered(other_version, segment.first_line, segment.last_line);
        std::string text = kLocalizationTemplate;
        for (const auto& [name, content] : prompt.placeholders_filled) {
            text = fill(std::move(text), name, content);
        }
        prompt.rendered_text = std::move(text);
        if (text_token_count(prompt.rendered_text) > provider.config().prompt_token_budget) {
            continue;
        }

        auto mapping = ask_with_retries(provider, std::move(prompt),
                                        {segment.first_line, segment.last_line}, usage, audit);
        if (!mapping) continue;
        any_success = true;

        LineMapping filtered;
        for (const auto& [query_line, source_lines] : mapping->pairs) {
            if (query_lines.count(query_line)) filtered.pairs.emplace_back(query_line, source_lines);
        }
        const int coverage = static_cast<int>(filtered.pairs.size());
        if (!best || coverage > best->coverage ||
            (coverage == best->coverage && segment.first_line < best->span_start)) {
            best = SegmentAttempt{std::move(filtered), coverage, segment.first_line, &segment};
        }
    }

    if (!any_success || !best) {
        throw Error(ErrorCode::AllSegmentsFailed,
                    "reverse matching produced no parseable mapping");
    }

    LocalizationResult result;
    result.version_tag = other_version.version_tag;
    result.provenance = Provenance::Reverse;
    result.provider_label = provider.label();

    // responses map pseudo-slice lines to source lines; invert to the
    // LineMapping orientation (source -> pseudo)
    std::map<int, std::vector<int>> by_source;
    std::set<int> matched_pseudo;
    for (const auto& [pseudo_line, source_lines] : best->mapping.pairs) {
        for (int s : source_lines) {
            by_source[s].push_back(pseudo_line);
            matched_pseudo.insert(pseudo_line);
        }
    }
    for (auto& [source_line, pseudo] : by_source) {
        std::sort(pseudo.begin(), pseudo.end());
        result.mapping.pairs.emplace_back(source_line, pseudo);
        result.source_texts[source_line] = other_version.line(source_line).text;
    }
    for (const SourceLine& line : found.pseudo_slice) {
        if (matched_pseudo.count(line.number)) result.pseudo_slice.push_back(line);
    }
    for (int q : query_lines) {
        if (!matched_pseudo.count(q)) result.mapping.unmatched_source_lines.push_back(q);
    }
    return result;
}

} // namespace patchprobe
