#pragma once

#include "patchprobe/equation.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patchprobe {

enum class EquivMode { Solver, Exhaustive };
enum class EquivValue { Equal, Negated, Inequivalent, Unknown };
enum class EquivMethod { Solver, Exhaustive };

const char* equiv_value_name(EquivValue value);
const char* equiv_method_name(EquivMethod method);

/// Assignment separating the two equations, keyed by each side's own
/// variable names (xN, or the canonical text of a call treated as an
/// uninterpreted atom).
struct EquivalenceWitness {
    std::vector<std::pair<std::string, std::uint64_t>> lhs_assignment;
    std::vector<std::pair<std::string, std::uint64_t>> rhs_assignment;
};

struct EquivalenceVerdict {
    EquivValue value = EquivValue::Unknown;
    EquivMethod method = EquivMethod::Exhaustive;
    std::optional<EquivalenceWitness> witness; // present for Inequivalent
    std::string note;                          // diagnostic when Unknown
};

struct SolverOptions {
    std::size_t node_limit = 2'000'000; // built-in backend budget (deterministic)
    int timeout_ms = 10'000;            // external solver wall-clock budget
    std::string solver_path;            // SMT-LIB v2 subprocess; empty = built-in
    std::vector<std::string> solver_args = {"-in"};
};

/// Decide whether two conditional equations agree (Equal), always disagree
/// (Negated), or differ on some assignment (Inequivalent with witness) over
/// width-bit unsigned vectors, under C truthiness. Variables align by
/// var_origin text first, then by bijection search (each side at most 3
/// variables, else TooManyVariables). Assignments making any divisor zero on
/// either side are skipped symmetrically; if that empties the domain the
/// verdict is Unknown. Solver mode uses the configured SMT-LIB subprocess
/// when given one, otherwise the built-in BDD backend; exhaustive mode
/// enumerates and is capped at 2^24 assignments.
EquivalenceVerdict check_equivalence(const NormalizedEquation& e1, const NormalizedEquation& e2,
                                     int width, EquivMode mode, const SolverOptions& opts = {});

/// Exhaustive-enumeration oracle: authoritative for width <= 10 bits and at
/// most 2 variables per equation (TooManyVariables otherwise).
EquivalenceVerdict bounded_equivalence_oracle(const NormalizedEquation& e1,
                                              const NormalizedEquation& e2, int width);

/// Truth value of a conditional equation under the assignment (keys are the
/// witness naming scheme: xN or call canonical text). nullopt when a divisor
/// is zero or a variable is missing.
std::optional<bool> evaluate_truth(const NormalizedEquation& eq,
                                   const std::map<std::string, std::uint64_t>& assignment,
                                   int width);

namespace detail {

/// Calls replaced by fresh variables (uninterpreted, consistent by canonical
/// text); variable slots renumbered 0-based with their display names.
struct FlatEquation {
    ExprPtr expr;
    std::vector<std::string> names;   // slot -> display name
    std::vector<std::string> origins; // slot -> collapsed origin text ("" for calls)
};

FlatEquation flatten_equation(const NormalizedEquation& eq);

/// Injective maps of e2 slots onto e1 slots / fresh slots, origin-aligned
/// candidate first, shared order for every mode.
std::vector<std::vector<int>> candidate_mappings(const FlatEquation& f1, const FlatEquation& f2);

} // namespace detail

} // namespace patchprobe
