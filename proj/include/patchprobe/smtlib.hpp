#pragma once

#include "patchprobe/equivalence.hpp"

#include <optional>
#include <string>
#include <vector>

namespace patchprobe {

struct SmtOutcome {
    EquivValue value = EquivValue::Unknown;
    std::optional<std::vector<std::uint64_t>> witness_slots;
    std::string note;
};

/// SMT-LIB v2 script deciding the relation between two slot-renumbered
/// conditional expressions: declares one width-bit constant per slot, then
/// checks (in order) domain satisfiability, disagreement, agreement.
/// `ask_model` appends a witness query for the disagreement case.
std::string emit_equivalence_script(const ExprPtr& e1, const ExprPtr& e2, int num_slots,
                                    int width, bool ask_model);

/// Run the configured external solver over the equivalence script and map its
/// answers onto a verdict. Any transport, parse or timeout issue yields
/// Unknown with a note.
SmtOutcome compare_smt(const ExprPtr& e1, const ExprPtr& e2, int num_slots, int width,
                       const SolverOptions& opts);

/// Feed `input` to a subprocess and capture stdout. Returns nullopt on spawn
/// failure or when the deadline passes (the process is killed).
std::optional<std::string> run_subprocess(const std::string& path,
                                          const std::vector<std::string>& args,
                                          const std::string& input, int timeout_ms);

} // namespace patchprobe
