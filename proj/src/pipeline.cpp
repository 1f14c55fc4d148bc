#include "patchprobe/pipeline.hpp"

#include "patchprobe/enhance.hpp"
#include "patchprobe/errors.hpp"
#include "patchprobe/ingest.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace patchprobe {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    if (j.contains("provider")) {
        const json& p = j.at("provider");
        const std::string mode = p.value("mode", "heuristic");
        if (mode == "remote") {
            cfg.provider.mode = ProviderMode::Remote;
        } else if (mode == "replay") {
            cfg.provider.mode = ProviderMode::Replay;
        } else if (mode == "heuristic") {
            cfg.provider.mode = ProviderMode::Heuristic;
        } else {
            throw Error(ErrorCode::ConfigError, "unknown provider mode: " + mode);
        }
        cfg.provider.endpoint = p.value("endpoint", "");
        cfg.provider.model_name = p.value("model", cfg.provider.model_name);
        cfg.provider.temperature = p.value("temperature", 1.0);
        cfg.provider.max_retries = p.value("max_retries", 3);
        cfg.provider.api_key_env = p.value("api_key_env", "");
        cfg.provider.replay_dir = p.value("replay_dir", "");
        cfg.provider.prompt_token_budget =
            p.value("prompt_token_budget", cfg.provider.prompt_token_budget);
        if (cfg.provider.temperature < 0.0 || cfg.provider.temperature > 2.0) {
            throw Error(ErrorCode::ConfigError, "temperature must lie in [0, 2]");
        }
        if (cfg.provider.max_retries < 0) {
            throw Error(ErrorCode::ConfigError, "max_retries must be >= 0");
        }
    }
    cfg.token_limit = j.value("token_limit", 3000);
    cfg.width = j.value("width", 32);
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        cfg.solver.solver_path = s.value("path", "");
        cfg.solver.timeout_ms = s.value("timeout_ms", 10'000);
        cfg.solver.node_limit = s.value("node_limit", cfg.solver.node_limit);
        if (s.contains("args")) {
            cfg.solver.solver_args = s.at("args").get<std::vector<std::string>>();
        }
    }
    cfg.workers = j.value("workers", 0);
    cfg.rate_limit_workers = j.value("rate_limit_workers", 4);
    cfg.audit_dir = j.value("audit_dir", "");
    if (j.contains("project_globs")) {
        cfg.project_globs = j.at("project_globs").get<std::vector<std::string>>();
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    json parsed;
    try {
        parsed = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, "config parse failure: " + std::string(e.what()));
    }
    return config_from_json(parsed);
}

CaseInput load_case(const fs::path& case_dir) {
    CaseInput input;
    input.case_id = case_dir.filename().string();
    input.diff_path = case_dir / "patch.diff";
    input.vul_source_path = case_dir / "func_vul.c";
    input.patch_source_path = case_dir / "func_patch.c";
    input.pseudo_path = case_dir / "target_pseudo.c";
    input.project_dir = case_dir;

    const fs::path meta_path = case_dir / "meta.json";
    if (fs::exists(meta_path)) {
        json meta;
        try {
            meta = json::parse(read_file(meta_path));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigError,
                        "meta.json parse failure in " + case_dir.string() + ": " + e.what());
        }
        input.case_id = meta.value("case_id", input.case_id);
        input.function_name = meta.value("function_name", "");
        if (meta.contains("ground_truth")) {
            const std::string gt = meta.at("ground_truth").get<std::string>();
            if (gt == "patched") {
                input.ground_truth_patched = true;
            } else if (gt == "vulnerable") {
                input.ground_truth_patched = false;
            } else {
                throw Error(ErrorCode::ConfigError, "ground_truth must be patched|vulnerable");
            }
        }
        if (meta.contains("project_dir")) {
            input.project_dir = case_dir / meta.at("project_dir").get<std::string>();
        }
    }
    return input;
}

namespace {

json line_mapping_json(const LineMapping& mapping) {
    json pairs = json::array();
    for (const auto& [source_line, pseudo_lines] : mapping.pairs) {
        pairs.push_back(json{{"source_line", source_line}, {"pseudo_lines", pseudo_lines}});
    }
    return json{{"schema", "linemap-v1"},
                {"pairs", pairs},
                {"unmatched_source_lines", mapping.unmatched_source_lines}};
}

LineMapping line_mapping_from_json(const json& j) {
    LineMapping mapping;
    for (const auto& entry : j.value("pairs", json::array())) {
        mapping.pairs.emplace_back(entry.at("source_line").get<int>(),
                                   entry.at("pseudo_lines").get<std::vector<int>>());
    }
    mapping.unmatched_source_lines =
        j.value("unmatched_source_lines", std::vector<int>{});
    return mapping;
}

json verdict_json(const Verdict& verdict) {
    json evidence = json::array();
    for (const EvidenceItem& item : verdict.evidence) {
        json e = {
            {"side", item.side},         {"equation", item.equation},
            {"target", item.target},     {"relation", item.relation},
            {"width", item.width},
        };
        if (item.equivalence) {
            json eq = {{"value", equiv_value_name(item.equivalence->value)},
                       {"method", equiv_method_name(item.equivalence->method)}};
            if (item.equivalence->witness) {
                json lhs = json::object();
                json rhs = json::object();
                for (const auto& [name, value] : item.equivalence->witness->lhs_assignment) {
                    lhs[name] = value;
                }
                for (const auto& [name, value] : item.equivalence->witness->rhs_assignment) {
                    rhs[name] = value;
                }
                eq["witness"] = json{{"lhs", lhs}, {"rhs", rhs}};
            }
            e["equivalence"] = eq;
        }
        evidence.push_back(e);
    }
    return json{{"value", verdict_value_name(verdict.value)},
                {"basis", verdict_basis_name(verdict.basis)},
                {"evidence", evidence},
                {"reasoning", verdict.reasoning},
                {"diagnostic", verdict.diagnostic}};
}

Verdict verdict_from_json(const json& j) {
    Verdict verdict;
    const std::string value = j.value("value", "unknown");
    verdict.value = value == "patched" ? VerdictValue::Patched
                  : value == "vulnerable" ? VerdictValue::Vulnerable
                                          : VerdictValue::Unknown;
    verdict.basis =
        j.value("basis", "solver") == std::string("solver") ? VerdictBasis::Solver
                                                            : VerdictBasis::Reasoning;
    verdict.reasoning = j.value("reasoning", "");
    verdict.diagnostic = j.value("diagnostic", "");
    for (const auto& e : j.value("evidence", json::array())) {
        EvidenceItem item;
        item.side = e.value("side", "");
        item.equation = e.value("equation", "");
        item.target = e.value("target", "");
        item.relation = e.value("relation", "");
        item.width = e.value("width", 0);
        if (e.contains("equivalence")) {
            const json& eq = e.at("equivalence");
            EquivalenceVerdict ev;
            const std::string v = eq.value("value", "unknown");
            ev.value = v == "equal" ? EquivValue::Equal
                     : v == "negated" ? EquivValue::Negated
                     : v == "inequivalent" ? EquivValue::Inequivalent
                                           : EquivValue::Unknown;
            ev.method = eq.value("method", "solver") == std::string("solver")
                            ? EquivMethod::Solver
                            : EquivMethod::Exhaustive;
            if (eq.contains("witness")) {
                EquivalenceWitness w;
                for (const auto& [name, value] : eq.at("witness").at("lhs").items()) {
                    w.lhs_assignment.emplace_back(name, value.get<std::uint64_t>());
                }
                for (const auto& [name, value] : eq.at("witness").at("rhs").items()) {
                    w.rhs_assignment.emplace_back(name, value.get<std::uint64_t>());
                }
                ev.witness = std::move(w);
            }
            item.equivalence = std::move(ev);
        }
        verdict.evidence.push_back(std::move(item));
    }
    return verdict;
}

json pseudo_slice_json(const std::vector<SourceLine>& slice) {
    json out = json::array();
    for (const SourceLine& line : slice) {
        out.push_back(json{{"number", line.number}, {"text", line.text}});
    }
    return out;
}

std::vector<SourceLine> pseudo_slice_from_json(const json& j) {
    std::vector<SourceLine> out;
    for (const auto& entry : j) {
        SourceLine line;
        line.number = entry.at("number").get<int>();
        line.text = entry.at("text").get<std::string>();
        out.push_back(std::move(line));
    }
    return out;
}

} // namespace

json CaseReport::to_json() const {
    json localization = json::object();
    for (const auto& [version, summary] : localizations) {
        localization[version] = json{
            {"provenance", provenance_name(summary.provenance)},
            {"provider", summary.provider_label},
            {"mapping", line_mapping_json(summary.mapping)},
            {"pseudo_slice", pseudo_slice_json(summary.pseudo_slice)},
        };
    }
    json out = {
        {"case_id", case_id},
        {"verdict", verdict_json(verdict)},
        {"localizations", localization},
        {"timing_ms", json{{"offline", offline_ms}, {"online", online_ms}}},
        {"phase_note", "localization and verification are online-phase costs"},
        {"provider_usage",
         json{{"prompts", usage.prompts_sent}, {"responses", usage.responses_received}}},
        {"unresolved_macros", unresolved_macros},
    };
    if (patch_kind) out["patch_kind"] = patch_kind_name(*patch_kind);
    if (error) out["error"] = *error;
    return out;
}

CaseReport CaseReport::from_json(const json& j) {
    CaseReport report;
    report.case_id = j.value("case_id", "");
    report.verdict = verdict_from_json(j.at("verdict"));
    if (j.contains("patch_kind")) {
        const std::string kind = j.at("patch_kind").get<std::string>();
        report.patch_kind = kind == "add-only" ? PatchKind::AddOnly
                          : kind == "delete-only" ? PatchKind::DeleteOnly
                                                  : PatchKind::Edit;
    }
    for (const auto& [version, summary] : j.value("localizations", json::object()).items()) {
        LocalizationSummary s;
        s.provenance = summary.value("provenance", "forward") == std::string("forward")
                           ? Provenance::Forward
                           : Provenance::Reverse;
        s.provider_label = summary.value("provider", "");
        s.mapping = line_mapping_from_json(summary.at("mapping"));
        s.pseudo_slice = pseudo_slice_from_json(summary.at("pseudo_slice"));
        report.localizations.emplace(version, std::move(s));
    }
    if (j.contains("timing_ms")) {
        report.offline_ms = j.at("timing_ms").value("offline", 0.0);
        report.online_ms = j.at("timing_ms").value("online", 0.0);
    }
    if (j.contains("provider_usage")) {
        report.usage.prompts_sent = j.at("provider_usage").value("prompts", 0);
        report.usage.responses_received = j.at("provider_usage").value("responses", 0);
    }
    report.unresolved_macros = j.value("unresolved_macros", std::vector<std::string>{});
    if (j.contains("error")) report.error = j.at("error").get<std::string>();
    return report;
}

json Metrics::to_json() const {
    json out = {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}};
    out["precision"] = precision_defined ? json(precision) : json(nullptr);
    out["recall"] = recall_defined ? json(recall) : json(nullptr);
    out["f1"] = f1_defined ? json(f1) : json(nullptr);
    return out;
}

Metrics compute_metrics(const std::vector<std::pair<bool, VerdictValue>>& pairs) {
    Metrics m;
    for (const auto& [truth_patched, verdict] : pairs) {
        const bool predicted_patched = verdict == VerdictValue::Patched;
        if (truth_patched && predicted_patched) ++m.tp;
        if (!truth_patched && predicted_patched) ++m.fp;
        if (truth_patched && !predicted_patched) ++m.fn;
        if (!truth_patched && !predicted_patched) ++m.tn;
    }
    if (m.tp + m.fp > 0) {
        m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
        m.precision_defined = true;
    }
    if (m.tp + m.fn > 0) {
        m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
        m.recall_defined = true;
    }
    if (m.precision_defined && m.recall_defined && m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        m.f1_defined = true;
    }
    return m;
}

json CorpusReport::to_json() const {
    json case_array = json::array();
    for (const CaseReport& report : cases) case_array.push_back(report.to_json());
    return json{{"cases", case_array},       {"metrics", metrics.to_json()},
                {"unknown_count", unknown_count}, {"error_count", error_count},
                {"scored_count", scored_count},   {"total", cases.size()}};
}

json corpus_report_stable_json(const CorpusReport& report) {
    json j = report.to_json();
    for (auto& c : j.at("cases")) c.erase("timing_ms");
    return j;
}

CaseReport run_case(const CaseInput& input, const PipelineConfig& cfg) {
    ProviderClient provider(cfg.provider);
    return run_case(input, cfg, provider);
}

CaseReport run_case(const CaseInput& input, const PipelineConfig& cfg,
                    const ProviderClient& provider) {
    CaseReport report;
    report.case_id = input.case_id;

    std::ofstream audit_stream;
    std::ostream* audit = nullptr;
    if (!cfg.audit_dir.empty()) {
        fs::create_directories(cfg.audit_dir);
        audit_stream.open(fs::path(cfg.audit_dir) / (input.case_id + ".log"));
        if (audit_stream) audit = &audit_stream;
    }

    try {
        if (input.function_name.empty()) {
            throw Error(ErrorCode::ConfigError,
                        "case " + input.case_id + " does not name a function");
        }

        const auto offline_start = std::chrono::steady_clock::now();

        const std::string diff_text = read_file(input.diff_path);
        PatchDiff diff = parse_unified_diff(diff_text);
        const PatchKind kind = classify_patch(diff);
        report.patch_kind = kind;

        AnnotatedFunction vul_func =
            extract_function(read_file(input.vul_source_path), input.function_name,
                             VersionTag::PrePatch);
        AnnotatedFunction patch_func =
            extract_function(read_file(input.patch_source_path), input.function_name,
                             VersionTag::Patched);
        if (kind != PatchKind::AddOnly) vul_func = annotate_patch_lines(vul_func, diff);
        if (kind != PatchKind::DeleteOnly) patch_func = annotate_patch_lines(patch_func, diff);

        ProjectIndex index = ProjectIndex::scan(input.project_dir, cfg.project_globs);

        struct Prepared {
            EnhancedSlice slice;
            TruncatedSource truncated;
        };
        auto prepare = [&](const AnnotatedFunction& func,
                           const fs::path& reference) -> Prepared {
            VariableSet vars = collect_patch_variables(func);
            std::set<int> df = dataflow_slice(func, vars);
            std::set<int> cf = controlflow_slice(func);
            std::set<int> macro_lines(cf.begin(), cf.end());
            for (int n : df) macro_lines.insert(n);
            for (int n : func.patch_line_numbers()) macro_lines.insert(n);
            MacroResolution macros =
                resolve_macros(func, index, macro_lines, reference.string());
            for (const std::string& name : macros.unresolved) {
                report.unresolved_macros.push_back(name);
            }
            Prepared prepared{build_enhanced_slice(func, df, cf, macros), TruncatedSource{}};
            prepared.truncated = truncate_source(func, cfg.token_limit, &prepared.slice);
            return prepared;
        };

        std::optional<Prepared> vul_prep;
        std::optional<Prepared> patch_prep;
        if (kind != PatchKind::AddOnly) vul_prep = prepare(vul_func, input.vul_source_path);
        if (kind != PatchKind::DeleteOnly) {
            patch_prep = prepare(patch_func, input.patch_source_path);
        }
        report.offline_ms = ms_since(offline_start);

        const auto online_start = std::chrono::steady_clock::now();
        PseudoFunction pseudo = parse_pseudocode(read_file(input.pseudo_path));

        LocalizationResult vul_result;
        LocalizationResult patch_result;
        switch (kind) {
        case PatchKind::Edit:
            patch_result = localize(patch_prep->truncated, patch_prep->slice, pseudo, provider,
                                    cfg.token_limit, &report.usage, audit);
            vul_result = localize(vul_prep->truncated, vul_prep->slice, pseudo, provider,
                                  cfg.token_limit, &report.usage, audit);
            break;
        case PatchKind::AddOnly:
            patch_result = localize(patch_prep->truncated, patch_prep->slice, pseudo, provider,
                                    cfg.token_limit, &report.usage, audit);
            vul_result = reverse_match(patch_result, vul_func, kind, provider, cfg.token_limit,
                                       &report.usage, audit);
            break;
        case PatchKind::DeleteOnly:
            vul_result = localize(vul_prep->truncated, vul_prep->slice, pseudo, provider,
                                  cfg.token_limit, &report.usage, audit);
            patch_result = reverse_match(vul_result, patch_func, kind, provider, cfg.token_limit,
                                         &report.usage, audit);
            break;
        }

        for (const LocalizationResult* r : {&patch_result, &vul_result}) {
            LocalizationSummary summary;
            summary.provenance = r->provenance;
            summary.provider_label = r->provider_label;
            summary.mapping = r->mapping;
            summary.pseudo_slice = r->pseudo_slice;
            report.localizations.emplace(version_tag_name(r->version_tag), std::move(summary));
        }

        DecideOptions decide_opts;
        decide_opts.width = cfg.width;
        decide_opts.solver = cfg.solver;
        report.verdict = decide(vul_func, patch_func, vul_result, patch_result, diff_text,
                                provider, decide_opts, &report.usage, audit);
        report.online_ms = ms_since(online_start);
    } catch (const Error& e) {
        report.error = e.what();
        report.verdict.value = VerdictValue::Unknown;
        report.verdict.diagnostic = e.what();
    } catch (const std::exception& e) {
        report.error = e.what();
        report.verdict.value = VerdictValue::Unknown;
        report.verdict.diagnostic = e.what();
    }
    return report;
}

CorpusReport run_corpus(const fs::path& manifest_path, const PipelineConfig& cfg) {
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const Error&) {
        throw Error(ErrorCode::ManifestMalformed, "cannot read " + manifest_path.string());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ManifestMalformed, e.what());
    }
    if (!manifest.is_array() || manifest.empty()) {
        throw Error(ErrorCode::ManifestMalformed,
                    "manifest must be a non-empty JSON array of case descriptors");
    }

    const fs::path base = manifest_path.parent_path();
    std::vector<CaseInput> inputs;
    for (const auto& entry : manifest) {
        fs::path dir;
        if (entry.is_string()) {
            dir = base / entry.get<std::string>();
        } else if (entry.is_object() && entry.contains("dir")) {
            dir = base / entry.at("dir").get<std::string>();
        } else {
            throw Error(ErrorCode::ManifestMalformed,
                        "case descriptor must be a path or {\"dir\": ...}");
        }
        inputs.push_back(load_case(dir));
        if (!inputs.back().ground_truth_patched.has_value()) {
            throw Error(ErrorCode::ManifestMalformed,
                        "corpus case " + inputs.back().case_id + " lacks ground_truth");
        }
    }

    ProviderClient provider(cfg.provider);

    unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    if (cfg.provider.mode == ProviderMode::Remote && cfg.rate_limit_workers > 0) {
        workers = std::min(workers, static_cast<unsigned>(cfg.rate_limit_workers));
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(inputs.size()));

    CorpusReport corpus;
    corpus.cases.resize(inputs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= inputs.size()) break;
            corpus.cases[i] = run_case(inputs[i], cfg, provider);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    std::vector<std::pair<bool, VerdictValue>> scored;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const CaseReport& report = corpus.cases[i];
        if (report.error) {
            ++corpus.error_count;
            continue;
        }
        if (report.verdict.value == VerdictValue::Unknown) ++corpus.unknown_count;
        scored.emplace_back(*inputs[i].ground_truth_patched, report.verdict.value);
    }
    corpus.scored_count = static_cast<int>(scored.size());
    corpus.metrics = compute_metrics(scored);
    return corpus;
}

} // namespace patchprobe
