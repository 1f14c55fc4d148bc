#pragma once

#include "patchprobe/equation.hpp"
#include "patchprobe/equivalence.hpp"
#include "patchprobe/localize.hpp"
#include "patchprobe/provider.hpp"
#include "patchprobe/source_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace patchprobe {

enum class VerdictValue { Patched, Vulnerable, Unknown };
enum class VerdictBasis { Solver, Reasoning };

const char* verdict_value_name(VerdictValue value);
const char* verdict_basis_name(VerdictBasis basis);

/// One matched unique feature: the version-unique equation, the target
/// equation it matched, and how.
struct EvidenceItem {
    std::string side;     // "patched" or "pre-patch": whose unique set
    std::string equation; // unique equation canonical
    std::string target;   // target equation canonical
    std::string relation; // "equal", "negated" or "canonical-equality"
    std::optional<EquivalenceVerdict> equivalence; // solver relations carry the verdict
    int width = 0;
};

struct Verdict {
    VerdictValue value = VerdictValue::Unknown;
    VerdictBasis basis = VerdictBasis::Solver;
    std::vector<EvidenceItem> evidence;
    std::string reasoning;  // provider answer text when basis is Reasoning
    std::string diagnostic; // why Unknown
};

/// Equations of every recognizable statement in the function body, one entry
/// per distinct (kind, canonical) pair, deterministic order.
std::vector<NormalizedEquation> function_equations(const ParsedFunction& func);

/// Canonical forms too generic to discriminate versions (x1 == 0 and bare x1;
/// null comparisons land on x1 == 0 because null literals normalize to 0).
bool is_denylisted(const NormalizedEquation& eq);

/// Equations of `version_a` whose canonical form does not appear in
/// `version_b`, denylisted forms removed.
std::vector<NormalizedEquation> unique_equations(const std::vector<NormalizedEquation>& version_a,
                                                 const std::vector<NormalizedEquation>& version_b);

/// Versioned JSON rendering of a localization result for verification prompts
/// and reports.
std::string localization_result_json(const LocalizationResult& result);

/// Fill the verification template with the diff and both localization results.
Prompt build_verification_prompt(const std::string& diff_label,
                                 const LocalizationResult& patch_match,
                                 const LocalizationResult& vul_match);

/// First JSON object in the response carrying a version field valued
/// "patched" or "pre-patch" (case-insensitive); nullopt otherwise.
std::optional<VerdictValue> parse_verification_response(const std::string& raw);

struct DecideOptions {
    int width = 32;
    SolverOptions solver;
};

/// Decide which version the target matches. Unique equations of each version
/// are matched against the target slices: conditionals by solver equivalence
/// (Equal or Negated counts), other kinds by canonical equality. One side
/// matching wins with solver basis; a conflict or no match falls back to
/// provider reasoning; an exhausted provider yields Unknown.
Verdict decide(const AnnotatedFunction& vul_func, const AnnotatedFunction& patch_func,
               const LocalizationResult& vul_result, const LocalizationResult& patch_result,
               const std::string& diff_label, const ProviderClient& provider,
               const DecideOptions& opts = {}, ProviderUsage* usage = nullptr,
               std::ostream* audit = nullptr);

} // namespace patchprobe
