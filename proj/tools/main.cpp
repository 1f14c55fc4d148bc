#include "patchprobe/equivalence.hpp"
#include "patchprobe/errors.hpp"
#include "patchprobe/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace patchprobe;

int write_report(const nlohmann::json& report, const std::string& path) {
    if (path.empty()) return 0;
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write report to " << path << "\n";
        return 1;
    }
    out << report.dump(2) << "\n";
    return 0;
}

PipelineConfig make_config(const std::string& config_path, const std::string& provider_mode,
                           int workers) {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!provider_mode.empty()) {
        if (provider_mode == "remote") {
            cfg.provider.mode = ProviderMode::Remote;
        } else if (provider_mode == "replay") {
            cfg.provider.mode = ProviderMode::Replay;
        } else if (provider_mode == "heuristic") {
            cfg.provider.mode = ProviderMode::Heuristic;
        } else {
            throw Error(ErrorCode::ConfigError, "unknown provider: " + provider_mode);
        }
    }
    if (workers > 0) cfg.workers = workers;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compile-free patch presence testing on decompiled pseudocode"};
    app.require_subcommand(1);

    std::string case_dir;
    std::string manifest_path;
    std::string config_path;
    std::string provider_mode;
    std::string report_path;
    std::string replay_dir;
    int workers = 0;

    auto* run_case_cmd = app.add_subcommand("run-case", "analyze one case directory");
    run_case_cmd->add_option("--case", case_dir, "case directory")->required();
    run_case_cmd->add_option("--provider", provider_mode, "remote|replay|heuristic");
    run_case_cmd->add_option("--config", config_path, "JSON configuration file");
    run_case_cmd->add_option("--report", report_path, "write the JSON report here");
    run_case_cmd->add_option("--replay-dir", replay_dir, "canned responses for replay mode");

    auto* run_corpus_cmd = app.add_subcommand("run-corpus", "analyze a manifest of cases");
    run_corpus_cmd->add_option("--manifest", manifest_path, "JSON array of case dirs")->required();
    run_corpus_cmd->add_option("--provider", provider_mode, "remote|replay|heuristic");
    run_corpus_cmd->add_option("--config", config_path, "JSON configuration file");
    run_corpus_cmd->add_option("--report", report_path, "write the JSON report here");
    run_corpus_cmd->add_option("--replay-dir", replay_dir, "canned responses for replay mode");
    run_corpus_cmd->add_option("--workers", workers, "worker count (default: cores)");

    std::string lhs;
    std::string rhs;
    int width = 32;
    std::string mode = "solver";
    auto* check_eq_cmd = app.add_subcommand("check-eq", "compare two conditional expressions");
    check_eq_cmd->add_option("--lhs", lhs, "left expression")->required();
    check_eq_cmd->add_option("--rhs", rhs, "right expression")->required();
    check_eq_cmd->add_option("--width", width, "bitvector width (1..32)");
    check_eq_cmd->add_option("--mode", mode, "solver|exhaustive");
    check_eq_cmd->add_option("--config", config_path, "JSON configuration file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check_eq_cmd->parsed()) {
            PipelineConfig cfg = make_config(config_path, "", 0);
            NormalizedEquation left = parse_conditional(lhs);
            NormalizedEquation right = parse_conditional(rhs);
            EquivMode equiv_mode =
                mode == "exhaustive" ? EquivMode::Exhaustive : EquivMode::Solver;
            EquivalenceVerdict verdict =
                check_equivalence(left, right, width, equiv_mode, cfg.solver);
            std::cout << "lhs: " << left.canonical << "\n";
            std::cout << "rhs: " << right.canonical << "\n";
            std::cout << "verdict: " << equiv_value_name(verdict.value) << " ("
                      << equiv_method_name(verdict.method) << ", width " << width << ")\n";
            if (verdict.witness) {
                std::cout << "witness:";
                for (const auto& [name, value] : verdict.witness->lhs_assignment) {
                    std::cout << " " << name << "=" << value;
                }
                std::cout << "\n";
            }
            if (!verdict.note.empty()) std::cout << "note: " << verdict.note << "\n";
            return 0;
        }

        PipelineConfig cfg = make_config(config_path, provider_mode, workers);
        if (!replay_dir.empty()) {
            cfg.provider.replay_dir = replay_dir;
            cfg.provider.mode = ProviderMode::Replay;
        }

        if (run_case_cmd->parsed()) {
            CaseInput input = load_case(case_dir);
            CaseReport report = run_case(input, cfg);
            std::cout << "case " << report.case_id << ": "
                      << verdict_value_name(report.verdict.value) << " ("
                      << verdict_basis_name(report.verdict.basis) << ")\n";
            if (report.error) std::cout << "error: " << *report.error << "\n";
            if (write_report(report.to_json(), report_path) != 0) return 1;
            return report.error ? 2 : 0;
        }

        if (run_corpus_cmd->parsed()) {
            CorpusReport corpus = run_corpus(manifest_path, cfg);
            std::cout << "cases: " << corpus.cases.size() << " (errors " << corpus.error_count
                      << ", unknown " << corpus.unknown_count << ")\n";
            const Metrics& m = corpus.metrics;
            std::cout << "tp " << m.tp << " fp " << m.fp << " fn " << m.fn << " tn " << m.tn
                      << "\n";
            auto show = [](bool defined, double v) {
                return defined ? std::to_string(v) : std::string("undefined");
            };
            std::cout << "precision " << show(m.precision_defined, m.precision) << ", recall "
                      << show(m.recall_defined, m.recall) << ", f1 " << show(m.f1_defined, m.f1)
                      << "\n";
            if (write_report(corpus.to_json(), report_path) != 0) return 1;
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::ManifestMalformed
                   ? 1
                   : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
