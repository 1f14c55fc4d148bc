#pragma once

#include "patchprobe/provider.hpp"
#include "patchprobe/verify.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace patchprobe {

struct PipelineConfig {
    ProviderConfig provider;
    int token_limit = 3000;
    int width = 32;
    SolverOptions solver;
    int workers = 0;            // 0 = one per processor core
    int rate_limit_workers = 4; // cap applied in remote mode
    std::string audit_dir;      // per-case prompt/response logs when set
    std::vector<std::string> project_globs = {"*.c", "*.h"};
};

/// Load configuration from a JSON file; missing fields keep their defaults.
/// Throws ConfigError on unreadable or malformed input.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j);

/// One test case: fixed directory layout
/// cases/<id>/{patch.diff, func_vul.c, func_patch.c, target_pseudo.c, meta.json}.
struct CaseInput {
    std::string case_id;
    std::filesystem::path diff_path;
    std::filesystem::path vul_source_path;
    std::filesystem::path patch_source_path;
    std::filesystem::path pseudo_path;
    std::string function_name;
    std::optional<bool> ground_truth_patched;
    std::filesystem::path project_dir; // macro search corpus (default: case dir)
};

/// Read a case directory (meta.json for the function name and ground truth).
CaseInput load_case(const std::filesystem::path& case_dir);

struct LocalizationSummary {
    Provenance provenance = Provenance::Forward;
    std::string provider_label;
    LineMapping mapping;
    std::vector<SourceLine> pseudo_slice;
};

struct CaseReport {
    std::string case_id;
    std::optional<PatchKind> patch_kind;
    Verdict verdict;
    std::map<std::string, LocalizationSummary> localizations; // by version tag name
    double offline_ms = 0.0; // source-side preparation
    double online_ms = 0.0;  // localization + verification against the target
    ProviderUsage usage;
    std::vector<std::string> unresolved_macros;
    std::optional<std::string> error;

    nlohmann::json to_json() const;
    static CaseReport from_json(const nlohmann::json& j);
};

/// Positive class is "patched". Undefined ratios carry a flag instead of a
/// made-up value.
struct Metrics {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_defined = false;
    bool recall_defined = false;
    bool f1_defined = false;

    nlohmann::json to_json() const;
};

/// TP/FP/FN/TN over (ground-truth-patched, verdict) pairs. Unknown verdicts
/// count as a "vulnerable" prediction; callers tally them separately.
Metrics compute_metrics(const std::vector<std::pair<bool, VerdictValue>>& pairs);

struct CorpusReport {
    std::vector<CaseReport> cases; // manifest order
    Metrics metrics;
    int unknown_count = 0;
    int error_count = 0;
    int scored_count = 0;

    nlohmann::json to_json() const;
};

/// Run one case end to end: enhancement, localization (with reverse matching
/// for add-only/delete-only patches) and verification. Failures produce a
/// report with the error field set, never an exception.
CaseReport run_case(const CaseInput& input, const PipelineConfig& cfg);
CaseReport run_case(const CaseInput& input, const PipelineConfig& cfg,
                    const ProviderClient& provider);

/// Run every case in the manifest (a JSON array of case directories or
/// {"dir": ...} descriptors, relative to the manifest) over a bounded worker
/// pool and compute corpus metrics. Throws ManifestMalformed.
CorpusReport run_corpus(const std::filesystem::path& manifest_path, const PipelineConfig& cfg);

/// Strip volatile fields (timings) for byte-stable comparison.
nlohmann::json corpus_report_stable_json(const CorpusReport& report);

} // namespace patchprobe
