#include "patchprobe/verify.hpp"

#include "patchprobe/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace patchprobe {

using nlohmann::json;

const char* verdict_value_name(VerdictValue value) {
    switch (value) {
    case VerdictValue::Patched: return "patched";
    case VerdictValue::Vulnerable: return "vulnerable";
    case VerdictValue::Unknown: return "unknown";
    }
    return "unknown";
}

const char* verdict_basis_name(VerdictBasis basis) {
    return basis == VerdictBasis::Solver ? "solver" : "reasoning";
}

std::vector<NormalizedEquation> function_equations(const ParsedFunction& func) {
    std::vector<NormalizedEquation> out;
    std::set<std::pair<int, std::string>> seen;
    for (const StatementUnit& unit : extract_statements(func)) {
        NormalizedEquation eq = normalize_statement(unit);
        if (eq.canonical.empty()) continue;
        if (seen.emplace(static_cast<int>(eq.kind), eq.canonical).second) {
            out.push_back(std::move(eq));
        }
    }
    return out;
}

bool is_denylisted(const NormalizedEquation& eq) {
    return eq.canonical == "x1 == 0" || eq.canonical == "x1" || eq.canonical == "0 == x1";
}

std::vector<NormalizedEquation> unique_equations(const std::vector<NormalizedEquation>& version_a,
                                                 const std::vector<NormalizedEquation>& version_b) {
    std::set<std::pair<int, std::string>> b_keys;
    for (const NormalizedEquation& eq : version_b) {
        b_keys.emplace(static_cast<int>(eq.kind), eq.canonical);
    }
    std::vector<NormalizedEquation> out;
    std::set<std::pair<int, std::string>> emitted;
    for (const NormalizedEquation& eq : version_a) {
        if (is_denylisted(eq)) continue;
        const auto key = std::make_pair(static_cast<int>(eq.kind), eq.canonical);
        if (b_keys.count(key)) continue;
        if (emitted.insert(key).second) out.push_back(eq);
    }
    return out;
}

std::string localization_result_json(const LocalizationResult& result) {
    json mappings = json::array();
    for (const auto& [source_line, pseudo_lines] : result.mapping.pairs) {
        json entry;
        entry["source_line"] = source_line;
        auto text_it = result.source_texts.find(source_line);
        entry["source_text"] = text_it == result.source_texts.end() ? "" : text_it->second;
        entry["pseudo_lines"] = pseudo_lines;
        json texts = json::array();
        for (int p : pseudo_lines) {
            for (const SourceLine& line : result.pseudo_slice) {
                if (line.number == p) texts.push_back(line.text);
            }
        }
        entry["pseudo_text"] = texts;
        mappings.push_back(entry);
    }
    json out = {
        {"schema", "locresult-v1"},
        {"version", version_tag_name(result.version_tag)},
        {"provenance", provenance_name(result.provenance)},
        {"provider", result.provider_label},
        {"mappings", mappings},
        {"unmatched_source_lines", result.mapping.unmatched_source_lines},
    };
    return out.dump();
}

namespace {

constexpr const char* kVerificationTemplate =
    "You are a software reverse engineer analyzing decompiled pseudo code. Your task is to "
    "determine whether the code is patched or pre-patch version by analyzing the reliability of "
    "matching results. Must only output your findings as a JSON dictionary.\n"
    "- INPUT:\n"
    "1. Diff File: <patch_diff_label>\n"
    "2. patched version matches: <patch_result_json>\n"
    "3. pre-patch version matches: <vul_result_json>\n"
    "- ANALYSIS REQUIREMENTS: Evaluate each match in patched and pre-patch: Semantic "
    "correctness, Logic consistency, Context compatibility, Potential false matches. Compare "
    "quality of matches: Which version has more reliable matches, Which matches might be "
    "incorrect, Overall semantic alignment\n"
    "- RULES: Only one result (patched version or pre-patch version) corresponds to the correct "
    "version. Better semantic match determines the version\n"
    "- Output format: {\"version\": \"patched\" or \"pre-patch\", \"reason\": \"<short "
    "justification>\"}\n";

std::string fill(std::string text, const std::string& placeholder, const std::string& content) {
    const std::string marker = "<" + placeholder + ">";
    auto pos = text.find(marker);
    if (pos != std::string::npos) text.replace(pos, marker.size(), content);
    return text;
}

} // namespace

Prompt build_verification_prompt(const std::string& diff_label,
                                 const LocalizationResult& patch_match,
                                 const LocalizationResult& vul_match) {
    Prompt prompt;
    prompt.template_id = PromptTemplate::Verification;
    prompt.placeholders_filled["patch_diff_label"] = "\n" + diff_label;
    prompt.placeholders_filled["patch_result_json"] = localization_result_json(patch_match);
    prompt.placeholders_filled["vul_result_json"] = localization_result_json(vul_match);

    std::string text = kVerificationTemplate;
    for (const auto& [name, content] : prompt.placeholders_filled) {
        text = fill(std::move(text), name, content);
    }
    prompt.rendered_text = std::move(text);
    return prompt;
}

std::optional<VerdictValue> parse_verification_response(const std::string& raw) {
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < raw.size(); ++i) {
            if (raw[i] == '{') ++depth;
            if (raw[i] == '}' && --depth == 0) {
                end = i;
                break;
            }
        }
        if (end == std::string::npos) continue;
        json parsed;
        try {
            parsed = json::parse(raw.substr(start, end - start + 1));
        } catch (const json::exception&) {
            continue;
        }
        if (!parsed.is_object() || !parsed.contains("version") ||
            !parsed["version"].is_string()) {
            continue;
        }
        std::string version = parsed["version"].get<std::string>();
        std::transform(version.begin(), version.end(), version.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        // trim
        while (!version.empty() && std::isspace(static_cast<unsigned char>(version.front()))) {
            version.erase(version.begin());
        }
        while (!version.empty() && std::isspace(static_cast<unsigned char>(version.back()))) {
            version.pop_back();
        }
        if (version == "patched") return VerdictValue::Patched;
        if (version == "pre-patch") return VerdictValue::Vulnerable;
    }
    return std::nullopt;
}

namespace {

std::vector<NormalizedEquation> slice_equations(const LocalizationResult& result) {
    return normalize_lines(result.pseudo_slice);
}

// Match one unique set against the target pool; returns matched evidence.
std::vector<EvidenceItem> match_unique_set(const std::vector<NormalizedEquation>& unique_set,
                                           const std::vector<NormalizedEquation>& pool,
                                           const char* side, const DecideOptions& opts) {
    std::vector<EvidenceItem> hits;
    for (const NormalizedEquation& u : unique_set) {
        for (const NormalizedEquation& t : pool) {
            if (u.kind == StatementKind::Conditional) {
                if (t.kind != StatementKind::Conditional || !u.expr || !t.expr) continue;
                EquivalenceVerdict verdict;
                try {
                    verdict = check_equivalence(u, t, opts.width, EquivMode::Solver, opts.solver);
                } catch (const Error&) {
                    continue; // too many variables: not solver-matchable
                } catch (const std::invalid_argument&) {
                    continue;
                }
                if (verdict.value == EquivValue::Equal || verdict.value == EquivValue::Negated) {
                    EvidenceItem item;
                    item.side = side;
                    item.equation = u.canonical;
                    item.target = t.canonical;
                    item.relation = verdict.value == EquivValue::Equal ? "equal" : "negated";
                    item.equivalence = verdict;
                    item.width = opts.width;
                    hits.push_back(std::move(item));
                    break; // one target match per unique equation
                }
            } else {
                if (t.kind != u.kind || t.canonical != u.canonical) continue;
                EvidenceItem item;
                item.side = side;
                item.equation = u.canonical;
                item.target = t.canonical;
                item.relation = "canonical-equality";
                item.width = opts.width;
                hits.push_back(std::move(item));
                break;
            }
        }
    }
    return hits;
}

} // namespace

Verdict decide(const AnnotatedFunction& vul_func, const AnnotatedFunction& patch_func,
               const LocalizationResult& vul_result, const LocalizationResult& patch_result,
               const std::string& diff_label, const ProviderClient& provider,
               const DecideOptions& opts, ProviderUsage* usage, std::ostream* audit) {
    std::vector<NormalizedEquation> eq_vul = function_equations(vul_func);
    std::vector<NormalizedEquation> eq_patch = function_equations(patch_func);
    std::vector<NormalizedEquation> unique_patch = unique_equations(eq_patch, eq_vul);
    std::vector<NormalizedEquation> unique_vul = unique_equations(eq_vul, eq_patch);

    // target equation pool from both located slices
    std::vector<NormalizedEquation> pool;
    std::set<std::pair<int, std::string>> seen;
    for (const LocalizationResult* r : {&patch_result, &vul_result}) {
        for (NormalizedEquation& eq : slice_equations(*r)) {
            if (seen.emplace(static_cast<int>(eq.kind), eq.canonical).second) {
                pool.push_back(std::move(eq));
            }
        }
    }

    Verdict verdict;
    std::vector<EvidenceItem> patch_hits = match_unique_set(unique_patch, pool, "patched", opts);
    std::vector<EvidenceItem> vul_hits = match_unique_set(unique_vul, pool, "pre-patch", opts);
    verdict.evidence = patch_hits;
    verdict.evidence.insert(verdict.evidence.end(), vul_hits.begin(), vul_hits.end());

    if (!patch_hits.empty() && vul_hits.empty()) {
        verdict.value = VerdictValue::Patched;
        verdict.basis = VerdictBasis::Solver;
        return verdict;
    }
    if (!vul_hits.empty() && patch_hits.empty()) {
        verdict.value = VerdictValue::Vulnerable;
        verdict.basis = VerdictBasis::Solver;
        return verdict;
    }

    // conflict or no unique match: provider reasoning
    verdict.basis = VerdictBasis::Reasoning;
    Prompt prompt = build_verification_prompt(diff_label, patch_result, vul_result);
    const int attempts = provider.config().max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string raw;
        try {
            raw = provider.query(prompt, usage, audit);
        } catch (const Error& e) {
            verdict.value = VerdictValue::Unknown;
            verdict.diagnostic = std::string("provider failed: ") + e.what();
            return verdict;
        }
        if (auto value = parse_verification_response(raw)) {
            verdict.value = *value;
            verdict.reasoning = raw;
            return verdict;
        }
        prompt.rendered_text +=
            "\nRemember: output only the JSON dictionary with the version field.";
    }
    verdict.value = VerdictValue::Unknown;
    verdict.diagnostic = "provider exhausted: no parseable verification answer after " +
                         std::to_string(attempts) + " attempts";
    return verdict;
}

} // namespace patchprobe
