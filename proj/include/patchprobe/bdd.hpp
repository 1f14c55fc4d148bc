#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace patchprobe {

/// Thrown internally when a query exceeds the node budget; callers map it to
/// an Unknown verdict.
struct BddLimitExceeded {};

/// Reduced ordered binary decision diagrams with a unique table and memoized
/// ite. One manager per equivalence query; levels are fixed by the caller.
class BddManager {
public:
    using Ref = std::int32_t;
    static constexpr Ref kFalse = 0;
    static constexpr Ref kTrue = 1;

    explicit BddManager(std::size_t node_limit = 2'000'000);

    Ref var(int level);
    Ref ite(Ref f, Ref g, Ref h);
    Ref bdd_not(Ref f) { return ite(f, kFalse, kTrue); }
    Ref bdd_and(Ref f, Ref g) { return ite(f, g, kFalse); }
    Ref bdd_or(Ref f, Ref g) { return ite(f, kTrue, g); }
    Ref bdd_xor(Ref f, Ref g) { return ite(f, bdd_not(g), g); }
    Ref bdd_xnor(Ref f, Ref g) { return ite(f, g, bdd_not(g)); }

    bool is_false(Ref f) const { return f == kFalse; }
    bool is_true(Ref f) const { return f == kTrue; }

    /// One satisfying assignment as (level, value) pairs; levels not listed
    /// are don't-care. Only valid for f != kFalse.
    std::vector<std::pair<int, bool>> sat_path(Ref f) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        int level;
        Ref lo;
        Ref hi;
    };

    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, Ref> unique_;
    std::unordered_map<std::uint64_t, Ref> ite_cache_;
    std::size_t node_limit_;

    Ref make(int level, Ref lo, Ref hi);
    int level_of(Ref f) const;
    Ref cofactor(Ref f, int level, bool high) const;
};

} // namespace patchprobe
