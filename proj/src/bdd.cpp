#include "patchprobe/bdd.hpp"

#include <algorithm>
#include <limits>

namespace patchprobe {

namespace {

constexpr int kTerminalLevel = std::numeric_limits<int>::max();

// Refs stay below 2^21 (the node limit is capped accordingly), so three of
// them pack into one collision-free 63-bit key.
constexpr std::uint64_t kRefBits = 21;
constexpr std::size_t kMaxNodes = (1u << kRefBits) - 1;

std::uint64_t pack3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return (a << (2 * kRefBits)) | (b << kRefBits) | c;
}

} // namespace

BddManager::BddManager(std::size_t node_limit)
    : node_limit_(std::min(node_limit, kMaxNodes)) {
    nodes_.push_back({kTerminalLevel, kFalse, kFalse}); // 0: false
    nodes_.push_back({kTerminalLevel, kTrue, kTrue});   // 1: true
}

int BddManager::level_of(Ref f) const {
    return nodes_[static_cast<std::size_t>(f)].level;
}

BddManager::Ref BddManager::make(int level, Ref lo, Ref hi) {
    if (lo == hi) return lo;
    // level < 2^21 always holds (levels = slots * width <= a few hundred)
    const std::uint64_t key = pack3(static_cast<std::uint64_t>(level),
                                    static_cast<std::uint64_t>(lo),
                                    static_cast<std::uint64_t>(hi));
    auto it = unique_.find(key);
    if (it != unique_.end()) return it->second;
    if (nodes_.size() >= node_limit_) throw BddLimitExceeded{};
    Ref ref = static_cast<Ref>(nodes_.size());
    nodes_.push_back({level, lo, hi});
    unique_.emplace(key, ref);
    return ref;
}

BddManager::Ref BddManager::var(int level) {
    return make(level, kFalse, kTrue);
}

BddManager::Ref BddManager::cofactor(Ref f, int level, bool high) const {
    const Node& n = nodes_[static_cast<std::size_t>(f)];
    if (n.level != level) return f;
    return high ? n.hi : n.lo;
}

BddManager::Ref BddManager::ite(Ref f, Ref g, Ref h) {
    if (f == kTrue) return g;
    if (f == kFalse) return h;
    if (g == h) return g;
    if (g == kTrue && h == kFalse) return f;

    const std::uint64_t key = pack3(static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(g),
                                    static_cast<std::uint64_t>(h));
    auto it = ite_cache_.find(key);
    if (it != ite_cache_.end()) return it->second;

    const int level = std::min({level_of(f), level_of(g), level_of(h)});
    Ref lo = ite(cofactor(f, level, false), cofactor(g, level, false), cofactor(h, level, false));
    Ref hi = ite(cofactor(f, level, true), cofactor(g, level, true), cofactor(h, level, true));
    Ref result = make(level, lo, hi);
    ite_cache_.emplace(key, result);
    return result;
}

std::vector<std::pair<int, bool>> BddManager::sat_path(Ref f) const {
    std::vector<std::pair<int, bool>> path;
    while (f != kTrue && f != kFalse) {
        const Node& n = nodes_[static_cast<std::size_t>(f)];
        if (n.hi != kFalse) {
            path.emplace_back(n.level, true);
            f = n.hi;
        } else {
            path.emplace_back(n.level, false);
            f = n.lo;
        }
    }
    return path;
}

} // namespace patchprobe
