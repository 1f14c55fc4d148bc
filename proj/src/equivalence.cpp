#include "patchprobe/equivalence.hpp"

#include "patchprobe/bdd.hpp"
#include "patchprobe/errors.hpp"
#include "patchprobe/smtlib.hpp"
#include "patchprobe/source_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace patchprobe {

const char* equiv_value_name(EquivValue value) {
    switch (value) {
    case EquivValue::Equal: return "equal";
    case EquivValue::Negated: return "negated";
    case EquivValue::Inequivalent: return "inequivalent";
    case EquivValue::Unknown: return "unknown";
    }
    return "unknown";
}

const char* equiv_method_name(EquivMethod method) {
    return method == EquivMethod::Solver ? "solver" : "exhaustive";
}

namespace detail {

namespace {

ExprPtr flatten_expr(const ExprPtr& e, std::map<std::string, int>& call_slots) {
    switch (e->kind) {
    case Expr::Kind::Variable:
        return e; // re-indexed afterwards
    case Expr::Kind::Constant:
        return e;
    case Expr::Kind::Unary:
        return Expr::unary(e->unary_op, flatten_expr(e->operands[0], call_slots));
    case Expr::Kind::Binary:
        return Expr::binary(e->binary_op, flatten_expr(e->operands[0], call_slots),
                            flatten_expr(e->operands[1], call_slots));
    case Expr::Kind::Call: {
        const std::string key = render_expr(e);
        auto it = call_slots.find(key);
        int index;
        if (it != call_slots.end()) {
            index = it->second;
        } else {
            index = static_cast<int>(call_slots.size()) + 1;
            call_slots.emplace(key, index);
        }
        return Expr::variable(-index); // negative marks a call slot, fixed below
    }
    }
    return e;
}

ExprPtr renumber(const ExprPtr& e, const std::map<int, int>& var_to_slot) {
    switch (e->kind) {
    case Expr::Kind::Variable:
        return Expr::variable(var_to_slot.at(e->var_index));
    case Expr::Kind::Constant:
        return e;
    case Expr::Kind::Unary:
        return Expr::unary(e->unary_op, renumber(e->operands[0], var_to_slot));
    case Expr::Kind::Binary:
        return Expr::binary(e->binary_op, renumber(e->operands[0], var_to_slot),
                            renumber(e->operands[1], var_to_slot));
    case Expr::Kind::Call:
        break;
    }
    return e;
}

} // namespace

FlatEquation flatten_equation(const NormalizedEquation& eq) {
    FlatEquation flat;
    if (!eq.expr) {
        flat.expr = Expr::constant(0);
        return flat;
    }

    // real variables first, in index order
    std::set<int> vars = expr_variables(eq.expr);
    std::map<int, int> var_to_slot;
    for (int v : vars) {
        var_to_slot[v] = static_cast<int>(flat.names.size());
        flat.names.push_back("x" + std::to_string(v));
        auto it = eq.var_origin.find(v);
        flat.origins.push_back(it == eq.var_origin.end() ? "" : collapse_whitespace(it->second));
    }

    std::map<std::string, int> call_slots;
    ExprPtr with_calls = flatten_expr(eq.expr, call_slots);

    // call slots appended after the real variables, ordered by first use
    std::vector<std::pair<int, std::string>> ordered;
    for (const auto& [text, index] : call_slots) ordered.emplace_back(index, text);
    std::sort(ordered.begin(), ordered.end());
    std::map<int, int> call_to_slot;
    for (const auto& [index, text] : ordered) {
        call_to_slot[-index] = static_cast<int>(flat.names.size());
        flat.names.push_back(text);
        flat.origins.push_back("");
    }

    std::map<int, int> all_map = var_to_slot;
    for (const auto& [neg, slot] : call_to_slot) all_map[neg] = slot;
    flat.expr = renumber(with_calls, all_map);
    return flat;
}

namespace {

void enumerate_maps(std::size_t i, std::size_t n2, std::size_t n1, std::vector<int>& current,
                    std::vector<bool>& used, std::vector<std::vector<int>>& out) {
    if (i == n2) {
        out.push_back(current);
        return;
    }
    for (std::size_t t = 0; t < n1; ++t) {
        if (used[t]) continue;
        used[t] = true;
        current[i] = static_cast<int>(t);
        enumerate_maps(i + 1, n2, n1, current, used, out);
        used[t] = false;
    }
    // own fresh slot: slot id n1 + i
    current[i] = static_cast<int>(n1 + i);
    enumerate_maps(i + 1, n2, n1, current, used, out);
}

} // namespace

std::vector<std::vector<int>> candidate_mappings(const FlatEquation& f1, const FlatEquation& f2) {
    const std::size_t n1 = f1.names.size();
    const std::size_t n2 = f2.names.size();

    std::vector<std::vector<int>> out;

    // origin-text alignment first
    std::vector<int> aligned(n2);
    for (std::size_t j = 0; j < n2; ++j) {
        aligned[j] = static_cast<int>(n1 + j); // fresh by default
        if (f2.origins[j].empty()) {
            // call slot: align by identical call text
            for (std::size_t k = 0; k < n1; ++k) {
                if (f1.origins[k].empty() && f1.names[k] == f2.names[j]) {
                    aligned[j] = static_cast<int>(k);
                    break;
                }
            }
            continue;
        }
        int match = -1;
        bool unique = true;
        for (std::size_t k = 0; k < n1; ++k) {
            if (f1.origins[k] == f2.origins[j]) {
                if (match >= 0) unique = false;
                match = static_cast<int>(k);
            }
        }
        if (match >= 0 && unique) aligned[j] = match;
    }
    // injectivity repair: duplicate targets fall back to fresh
    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            if (aligned[j] == aligned[k] && aligned[j] < static_cast<int>(n1)) {
                aligned[j] = static_cast<int>(n1 + j);
            }
        }
    }
    out.push_back(aligned);

    std::vector<int> current(n2);
    std::vector<bool> used(n1, false);
    std::vector<std::vector<int>> all;
    enumerate_maps(0, n2, n1, current, used, all);
    for (auto& m : all) {
        if (m != aligned) out.push_back(std::move(m));
    }
    return out;
}

} // namespace detail

namespace {

using detail::FlatEquation;

struct CompareResult {
    EquivValue value = EquivValue::Unknown;
    std::optional<std::vector<std::uint64_t>> witness_slots;
    std::string note;
};

struct EvalOut {
    bool defined = true;
    std::uint64_t value = 0;
};

std::uint64_t width_mask(int width) {
    return width >= 64 ? ~0ull : ((1ull << width) - 1);
}

EvalOut eval_expr(const Expr* e, const std::vector<std::uint64_t>& slots, int width,
                  std::uint64_t mask) {
    switch (e->kind) {
    case Expr::Kind::Variable:
        return {true, slots[static_cast<std::size_t>(e->var_index)] & mask};
    case Expr::Kind::Constant:
        return {true, e->value & mask};
    case Expr::Kind::Unary: {
        EvalOut a = eval_expr(e->operands[0].get(), slots, width, mask);
        if (!a.defined) return a;
        switch (e->unary_op) {
        case UnaryOp::LogicalNot: return {true, a.value == 0 ? 1ull : 0ull};
        case UnaryOp::BitNot: return {true, ~a.value & mask};
        case UnaryOp::Negate: return {true, (0 - a.value) & mask};
        }
        return a;
    }
    case Expr::Kind::Binary: {
        EvalOut a = eval_expr(e->operands[0].get(), slots, width, mask);
        if (!a.defined) return a;
        EvalOut b = eval_expr(e->operands[1].get(), slots, width, mask);
        if (!b.defined) return b;
        switch (e->binary_op) {
        case BinaryOp::Eq: return {true, a.value == b.value ? 1ull : 0ull};
        case BinaryOp::Ne: return {true, a.value != b.value ? 1ull : 0ull};
        case BinaryOp::Lt: return {true, a.value < b.value ? 1ull : 0ull};
        case BinaryOp::Le: return {true, a.value <= b.value ? 1ull : 0ull};
        case BinaryOp::Gt: return {true, a.value > b.value ? 1ull : 0ull};
        case BinaryOp::Ge: return {true, a.value >= b.value ? 1ull : 0ull};
        case BinaryOp::Add: return {true, (a.value + b.value) & mask};
        case BinaryOp::Sub: return {true, (a.value - b.value) & mask};
        case BinaryOp::Mul: return {true, (a.value * b.value) & mask};
        case BinaryOp::Div:
            if (b.value == 0) return {false, 0};
            return {true, (a.value / b.value) & mask};
        case BinaryOp::Mod:
            if (b.value == 0) return {false, 0};
            return {true, (a.value % b.value) & mask};
        case BinaryOp::BitAnd: return {true, a.value & b.value};
        case BinaryOp::BitOr: return {true, a.value | b.value};
        case BinaryOp::BitXor: return {true, a.value ^ b.value};
        case BinaryOp::Shl:
            if (b.value >= static_cast<std::uint64_t>(width)) return {true, 0};
            return {true, (a.value << b.value) & mask};
        case BinaryOp::Shr:
            if (b.value >= static_cast<std::uint64_t>(width)) return {true, 0};
            return {true, a.value >> b.value};
        case BinaryOp::LogicalAnd:
            return {true, (a.value != 0 && b.value != 0) ? 1ull : 0ull};
        case BinaryOp::LogicalOr:
            return {true, (a.value != 0 || b.value != 0) ? 1ull : 0ull};
        }
        return {true, 0};
    }
    case Expr::Kind::Call:
        // calls are flattened to variables before evaluation
        return {false, 0};
    }
    return {true, 0};
}

// --- exhaustive enumeration ------------------------------------------------

constexpr std::uint64_t kMaxEnumerationBits = 24;

CompareResult compare_exhaustive(const ExprPtr& e1, const ExprPtr& e2, int num_slots, int width) {
    const std::uint64_t total_bits =
        static_cast<std::uint64_t>(num_slots) * static_cast<std::uint64_t>(width);
    if (total_bits > kMaxEnumerationBits) {
        return {EquivValue::Unknown, std::nullopt,
                "enumeration domain exceeds 2^" + std::to_string(kMaxEnumerationBits)};
    }
    const std::uint64_t mask = width_mask(width);
    const std::uint64_t total = 1ull << total_bits;

    bool admissible = false;
    bool agree = false;
    bool disagree = false;
    std::vector<std::uint64_t> first_disagreement;
    std::vector<std::uint64_t> slots(static_cast<std::size_t>(num_slots), 0);

    for (std::uint64_t a = 0; a < total; ++a) {
        for (int s = 0; s < num_slots; ++s) {
            slots[static_cast<std::size_t>(s)] = (a >> (s * width)) & mask;
        }
        EvalOut v1 = eval_expr(e1.get(), slots, width, mask);
        if (!v1.defined) continue;
        EvalOut v2 = eval_expr(e2.get(), slots, width, mask);
        if (!v2.defined) continue;
        admissible = true;
        const bool t1 = v1.value != 0;
        const bool t2 = v2.value != 0;
        if (t1 == t2) {
            agree = true;
        } else {
            if (!disagree) first_disagreement = slots;
            disagree = true;
        }
        if (agree && disagree) break;
    }

    if (!admissible) {
        return {EquivValue::Unknown, std::nullopt, "no admissible assignments (zero divisors)"};
    }
    if (!disagree) return {EquivValue::Equal, std::nullopt, ""};
    if (!agree) return {EquivValue::Negated, std::nullopt, ""};
    return {EquivValue::Inequivalent, first_disagreement, ""};
}

// --- BDD backend -------------------------------------------------------------

class BvBuilder {
public:
    BvBuilder(BddManager& mgr, int num_slots, int width)
        : mgr_(mgr), num_slots_(num_slots), width_(width), defined_(BddManager::kTrue) {}

    using Vec = std::vector<BddManager::Ref>;

    BddManager::Ref defined() const { return defined_; }

    BddManager::Ref truthy(const Vec& v) {
        BddManager::Ref any = BddManager::kFalse;
        for (auto bit : v) any = mgr_.bdd_or(any, bit);
        return any;
    }

    Vec eval(const Expr* e) {
        switch (e->kind) {
        case Expr::Kind::Variable: {
            Vec v(static_cast<std::size_t>(width_));
            for (int b = 0; b < width_; ++b) {
                v[static_cast<std::size_t>(b)] = mgr_.var(b * num_slots_ + e->var_index);
            }
            return v;
        }
        case Expr::Kind::Constant:
            return const_vec(e->value);
        case Expr::Kind::Unary: {
            Vec a = eval(e->operands[0].get());
            switch (e->unary_op) {
            case UnaryOp::LogicalNot: return bool_vec(mgr_.bdd_not(truthy(a)));
            case UnaryOp::BitNot: return not_vec(a);
            case UnaryOp::Negate: return sub(const_vec(0), a);
            }
            return a;
        }
        case Expr::Kind::Binary: {
            Vec a = eval(e->operands[0].get());
            Vec b = eval(e->operands[1].get());
            switch (e->binary_op) {
            case BinaryOp::Eq: return bool_vec(eq(a, b));
            case BinaryOp::Ne: return bool_vec(mgr_.bdd_not(eq(a, b)));
            case BinaryOp::Lt: return bool_vec(ult(a, b));
            case BinaryOp::Le: return bool_vec(mgr_.bdd_not(ult(b, a)));
            case BinaryOp::Gt: return bool_vec(ult(b, a));
            case BinaryOp::Ge: return bool_vec(mgr_.bdd_not(ult(a, b)));
            case BinaryOp::Add: return add(a, b, BddManager::kFalse);
            case BinaryOp::Sub: return sub(a, b);
            case BinaryOp::Mul: return mul(a, b);
            case BinaryOp::Div: return divmod(a, b).first;
            case BinaryOp::Mod: return divmod(a, b).second;
            case BinaryOp::BitAnd: return zip(a, b, [&](auto x, auto y) { return mgr_.bdd_and(x, y); });
            case BinaryOp::BitOr: return zip(a, b, [&](auto x, auto y) { return mgr_.bdd_or(x, y); });
            case BinaryOp::BitXor: return zip(a, b, [&](auto x, auto y) { return mgr_.bdd_xor(x, y); });
            case BinaryOp::Shl: return shift(a, b, true);
            case BinaryOp::Shr: return shift(a, b, false);
            case BinaryOp::LogicalAnd: return bool_vec(mgr_.bdd_and(truthy(a), truthy(b)));
            case BinaryOp::LogicalOr: return bool_vec(mgr_.bdd_or(truthy(a), truthy(b)));
            }
            return a;
        }
        case Expr::Kind::Call:
            break;
        }
        return const_vec(0);
    }

private:
    BddManager& mgr_;
    int num_slots_;
    int width_;
    BddManager::Ref defined_;

    Vec const_vec(std::uint64_t value) {
        Vec v(static_cast<std::size_t>(width_));
        for (int b = 0; b < width_; ++b) {
            v[static_cast<std::size_t>(b)] =
                ((value >> b) & 1) ? BddManager::kTrue : BddManager::kFalse;
        }
        return v;
    }

    Vec bool_vec(BddManager::Ref bit) {
        Vec v(static_cast<std::size_t>(width_), BddManager::kFalse);
        v[0] = bit;
        return v;
    }

    Vec not_vec(const Vec& a) {
        Vec v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) v[i] = mgr_.bdd_not(a[i]);
        return v;
    }

    template <typename F>
    Vec zip(const Vec& a, const Vec& b, F f) {
        Vec v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) v[i] = f(a[i], b[i]);
        return v;
    }

    Vec add(const Vec& a, const Vec& b, BddManager::Ref carry) {
        Vec v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            BddManager::Ref axb = mgr_.bdd_xor(a[i], b[i]);
            v[i] = mgr_.bdd_xor(axb, carry);
            carry = mgr_.bdd_or(mgr_.bdd_and(a[i], b[i]), mgr_.bdd_and(carry, axb));
        }
        return v;
    }

    Vec sub(const Vec& a, const Vec& b) { return add(a, not_vec(b), BddManager::kTrue); }

    Vec mul(const Vec& a, const Vec& b) {
        Vec acc = const_vec(0);
        for (int i = 0; i < width_; ++i) {
            // acc += (a << i) masked by b[i]
            Vec shifted(static_cast<std::size_t>(width_), BddManager::kFalse);
            for (int j = i; j < width_; ++j) {
                shifted[static_cast<std::size_t>(j)] =
                    mgr_.bdd_and(a[static_cast<std::size_t>(j - i)],
                                 b[static_cast<std::size_t>(i)]);
            }
            acc = add(acc, shifted, BddManager::kFalse);
        }
        return acc;
    }

    BddManager::Ref eq(const Vec& a, const Vec& b) {
        BddManager::Ref r = BddManager::kTrue;
        for (std::size_t i = 0; i < a.size(); ++i) {
            r = mgr_.bdd_and(r, mgr_.bdd_xnor(a[i], b[i]));
        }
        return r;
    }

    BddManager::Ref ult(const Vec& a, const Vec& b) {
        BddManager::Ref lt = BddManager::kFalse;
        for (std::size_t i = 0; i < a.size(); ++i) { // LSB to MSB
            BddManager::Ref bit_lt = mgr_.bdd_and(mgr_.bdd_not(a[i]), b[i]);
            BddManager::Ref bit_eq = mgr_.bdd_xnor(a[i], b[i]);
            lt = mgr_.bdd_or(bit_lt, mgr_.bdd_and(bit_eq, lt));
        }
        return lt;
    }

    std::pair<Vec, Vec> divmod(const Vec& a, const Vec& b) {
        defined_ = mgr_.bdd_and(defined_, truthy(b)); // divisor != 0
        Vec quotient(static_cast<std::size_t>(width_), BddManager::kFalse);
        Vec remainder = const_vec(0);
        for (int i = width_ - 1; i >= 0; --i) {
            // remainder = (remainder << 1) | a[i]
            for (int j = width_ - 1; j > 0; --j) {
                remainder[static_cast<std::size_t>(j)] = remainder[static_cast<std::size_t>(j - 1)];
            }
            remainder[0] = a[static_cast<std::size_t>(i)];
            BddManager::Ref ge = mgr_.bdd_not(ult(remainder, b));
            Vec reduced = sub(remainder, b);
            for (int j = 0; j < width_; ++j) {
                remainder[static_cast<std::size_t>(j)] =
                    mgr_.ite(ge, reduced[static_cast<std::size_t>(j)],
                             remainder[static_cast<std::size_t>(j)]);
            }
            quotient[static_cast<std::size_t>(i)] = ge;
        }
        return {quotient, remainder};
    }

    Vec shift(const Vec& a, const Vec& amount, bool left) {
        // barrel shift over the bits needed for width-1, zero when amount >= width
        int k = 0;
        while ((1 << k) < width_) ++k;
        Vec v = a;
        for (int j = 0; j < k; ++j) {
            const int step = 1 << j;
            BddManager::Ref sel = amount[static_cast<std::size_t>(j)];
            Vec shifted(static_cast<std::size_t>(width_), BddManager::kFalse);
            for (int i = 0; i < width_; ++i) {
                const int src = left ? i - step : i + step;
                if (src >= 0 && src < width_) {
                    shifted[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(src)];
                }
            }
            for (int i = 0; i < width_; ++i) {
                v[static_cast<std::size_t>(i)] = mgr_.ite(sel, shifted[static_cast<std::size_t>(i)],
                                                          v[static_cast<std::size_t>(i)]);
            }
        }
        BddManager::Ref too_far = mgr_.bdd_not(ult(amount, const_vec(static_cast<std::uint64_t>(width_))));
        for (int i = 0; i < width_; ++i) {
            v[static_cast<std::size_t>(i)] =
                mgr_.ite(too_far, BddManager::kFalse, v[static_cast<std::size_t>(i)]);
        }
        return v;
    }
};

CompareResult compare_bdd(const ExprPtr& e1, const ExprPtr& e2, int num_slots, int width,
                          const SolverOptions& opts) {
    try {
        BddManager mgr(opts.node_limit);
        BvBuilder builder(mgr, num_slots, width);
        BddManager::Ref t1 = builder.truthy(builder.eval(e1.get()));
        BddManager::Ref t2 = builder.truthy(builder.eval(e2.get()));
        BddManager::Ref defined = builder.defined();

        if (mgr.is_false(defined)) {
            return {EquivValue::Unknown, std::nullopt,
                    "no admissible assignments (zero divisors)"};
        }
        BddManager::Ref diff = mgr.bdd_and(mgr.bdd_xor(t1, t2), defined);
        if (mgr.is_false(diff)) return {EquivValue::Equal, std::nullopt, ""};
        BddManager::Ref same = mgr.bdd_and(mgr.bdd_xnor(t1, t2), defined);
        if (mgr.is_false(same)) return {EquivValue::Negated, std::nullopt, ""};

        const std::uint64_t mask = width_mask(width);
        std::vector<std::uint64_t> slots(static_cast<std::size_t>(num_slots), 0);
        for (const auto& [level, value] : mgr.sat_path(diff)) {
            if (!value) continue;
            const int slot = level % num_slots;
            const int bit = level / num_slots;
            slots[static_cast<std::size_t>(slot)] |= (1ull << bit) & mask;
        }
        return {EquivValue::Inequivalent, slots, ""};
    } catch (const BddLimitExceeded&) {
        return {EquivValue::Unknown, std::nullopt, "node limit exceeded"};
    }
}

// --- driver ------------------------------------------------------------------

ExprPtr map_slots(const ExprPtr& e, const std::vector<int>& mapping) {
    switch (e->kind) {
    case Expr::Kind::Variable:
        return Expr::variable(mapping[static_cast<std::size_t>(e->var_index)]);
    case Expr::Kind::Constant:
        return e;
    case Expr::Kind::Unary:
        return Expr::unary(e->unary_op, map_slots(e->operands[0], mapping));
    case Expr::Kind::Binary:
        return Expr::binary(e->binary_op, map_slots(e->operands[0], mapping),
                            map_slots(e->operands[1], mapping));
    case Expr::Kind::Call:
        break;
    }
    return e;
}

EquivalenceWitness make_witness(const FlatEquation& f1, const FlatEquation& f2,
                                const std::vector<int>& map2,
                                const std::vector<std::uint64_t>& slot_values) {
    EquivalenceWitness w;
    for (std::size_t i = 0; i < f1.names.size(); ++i) {
        w.lhs_assignment.emplace_back(f1.names[i], slot_values[i]);
    }
    for (std::size_t j = 0; j < f2.names.size(); ++j) {
        w.rhs_assignment.emplace_back(f2.names[j],
                                      slot_values[static_cast<std::size_t>(map2[j])]);
    }
    return w;
}

EquivalenceVerdict run_candidates(const NormalizedEquation& e1, const NormalizedEquation& e2,
                                  int width, EquivMode mode, const SolverOptions& opts,
                                  int per_side_var_limit) {
    if (e1.kind != StatementKind::Conditional || e2.kind != StatementKind::Conditional) {
        throw std::invalid_argument("check_equivalence requires conditional equations");
    }
    if (width < 1 || width > 32) {
        throw std::invalid_argument("width must be between 1 and 32 bits");
    }

    FlatEquation f1 = detail::flatten_equation(e1);
    FlatEquation f2 = detail::flatten_equation(e2);
    const int n1 = static_cast<int>(f1.names.size());
    const int n2 = static_cast<int>(f2.names.size());
    if (n1 > per_side_var_limit || n2 > per_side_var_limit) {
        throw Error(ErrorCode::TooManyVariables,
                    "equation has more than " + std::to_string(per_side_var_limit) +
                        " distinct variables");
    }

    const EquivMethod method = mode == EquivMode::Solver ? EquivMethod::Solver
                                                         : EquivMethod::Exhaustive;

    // e1 keeps its slots [0, n1) unchanged
    ExprPtr expr1 = f1.expr;

    std::optional<EquivalenceVerdict> fallback;
    std::optional<EquivalenceVerdict> unknown_fallback;

    for (const std::vector<int>& map2 : detail::candidate_mappings(f1, f2)) {
        int num_slots = n1;
        std::vector<int> compact(map2.size());
        std::map<int, int> fresh_compact;
        for (std::size_t j = 0; j < map2.size(); ++j) {
            if (map2[j] < n1) {
                compact[j] = map2[j];
            } else {
                auto it = fresh_compact.find(map2[j]);
                if (it == fresh_compact.end()) {
                    it = fresh_compact.emplace(map2[j], num_slots++).first;
                }
                compact[j] = it->second;
            }
        }
        ExprPtr expr2 = map_slots(f2.expr, compact);

        CompareResult core;
        if (mode == EquivMode::Exhaustive) {
            core = compare_exhaustive(expr1, expr2, num_slots, width);
        } else if (!opts.solver_path.empty()) {
            SmtOutcome smt = compare_smt(expr1, expr2, num_slots, width, opts);
            core = {smt.value, std::move(smt.witness_slots), std::move(smt.note)};
        } else {
            core = compare_bdd(expr1, expr2, num_slots, width, opts);
        }

        EquivalenceVerdict verdict;
        verdict.value = core.value;
        verdict.method = method;
        verdict.note = core.note;
        if (core.value == EquivValue::Inequivalent && core.witness_slots) {
            verdict.witness = make_witness(f1, f2, compact, *core.witness_slots);
        }

        if (core.value == EquivValue::Equal || core.value == EquivValue::Negated) {
            return verdict;
        }
        if (core.value == EquivValue::Inequivalent && !fallback) {
            fallback = verdict;
        }
        if (core.value == EquivValue::Unknown && !unknown_fallback) {
            unknown_fallback = verdict;
        }
    }

    if (fallback) return *fallback;
    if (unknown_fallback) return *unknown_fallback;
    EquivalenceVerdict none;
    none.method = method;
    none.note = "no candidate mappings";
    return none;
}

} // namespace

EquivalenceVerdict check_equivalence(const NormalizedEquation& e1, const NormalizedEquation& e2,
                                     int width, EquivMode mode, const SolverOptions& opts) {
    return run_candidates(e1, e2, width, mode, opts, 3);
}

EquivalenceVerdict bounded_equivalence_oracle(const NormalizedEquation& e1,
                                              const NormalizedEquation& e2, int width) {
    if (width < 1 || width > 10) {
        throw std::invalid_argument("oracle width must be between 1 and 10 bits");
    }
    return run_candidates(e1, e2, width, EquivMode::Exhaustive, SolverOptions{}, 2);
}

std::optional<bool> evaluate_truth(const NormalizedEquation& eq,
                                   const std::map<std::string, std::uint64_t>& assignment,
                                   int width) {
    FlatEquation flat = detail::flatten_equation(eq);
    std::vector<std::uint64_t> slots(flat.names.size(), 0);
    for (std::size_t i = 0; i < flat.names.size(); ++i) {
        auto it = assignment.find(flat.names[i]);
        if (it == assignment.end()) return std::nullopt;
        slots[i] = it->second;
    }
    const std::uint64_t mask = width_mask(width);
    // map variable slot ids straight through
    EvalOut out = eval_expr(flat.expr.get(), slots, width, mask);
    if (!out.defined) return std::nullopt;
    return out.value != 0;
}

} // namespace patchprobe
