#pragma once

#include "patchprobe/lexer.hpp"
#include "patchprobe/syntax.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace patchprobe {

enum class StatementKind { Conditional, Assignment, Return, FunctionCall };

const char* statement_kind_name(StatementKind kind);

/// One recognized statement with its token run, prior to normalization.
struct StatementUnit {
    StatementKind kind = StatementKind::Conditional;
    std::vector<Token> tokens; // condition / full statement tokens, comments stripped
    int source_line = 0;
};

enum class BinaryOp {
    Eq, Ne, Lt, Le, Gt, Ge,
    Add, Sub, Mul, Div, Mod,
    BitAnd, BitOr, BitXor, Shl, Shr,
    LogicalAnd, LogicalOr,
};

enum class UnaryOp { LogicalNot, BitNot, Negate };

const char* binary_op_symbol(BinaryOp op);
const char* unary_op_symbol(UnaryOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression tree over macro variables x1..xN, integer constants, the
/// operator grammar, and call atoms with normalized arguments.
struct Expr {
    enum class Kind { Variable, Constant, Unary, Binary, Call };

    Kind kind = Kind::Constant;
    int var_index = 0;          // Variable: 1-based
    std::uint64_t value = 0;    // Constant
    UnaryOp unary_op = UnaryOp::LogicalNot;
    BinaryOp binary_op = BinaryOp::Eq;
    std::string callee;         // Call
    std::vector<ExprPtr> operands;

    static ExprPtr variable(int index);
    static ExprPtr constant(std::uint64_t value);
    static ExprPtr unary(UnaryOp op, ExprPtr operand);
    static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
    static ExprPtr call(std::string callee, std::vector<ExprPtr> args);
};

/// Statement normalized into an equation over macro variables. Variable
/// indices are 1-based in order of first appearance; constants render in
/// canonical decimal so 0x303 and 771 take the same form.
struct NormalizedEquation {
    StatementKind kind = StatementKind::Conditional;
    ExprPtr lhs;  // Assignment target; null otherwise
    ExprPtr expr; // condition / rhs / returned value / call (null for bare return)
    std::map<int, std::string> var_origin; // xN -> original expression text
    std::string canonical;
};

/// Recognize conditional / assignment / return / call statements on the given
/// lines. Lines joined while parentheses stay open across consecutive line
/// numbers; unclassifiable lines are skipped.
std::vector<StatementUnit> extract_statements(const std::vector<SourceLine>& lines);

/// All statements of a parsed function body.
std::vector<StatementUnit> extract_statements(const ParsedFunction& func);

/// Normalize one statement: each maximal non-constant atom (identifier,
/// field chain, dereference chain, array access, unparseable sub-expression)
/// becomes xN; repeated atom text reuses its index; constants keep canonical
/// values. Total: statements that defeat the expression grammar collapse to
/// a single-atom equation.
NormalizedEquation normalize_statement(const StatementUnit& unit);

/// Lex + normalize a single conditional expression (the check-eq entry point;
/// also how canonical strings re-normalize to themselves).
NormalizedEquation parse_conditional(const std::string& text);

/// Lex + extract + normalize every recognizable statement on the lines.
std::vector<NormalizedEquation> normalize_lines(const std::vector<SourceLine>& lines);

std::string render_expr(const ExprPtr& expr);

std::set<int> expr_variables(const ExprPtr& expr);
int equation_variable_count(const NormalizedEquation& eq);
bool expr_contains_call(const ExprPtr& expr);

} // namespace patchprobe
