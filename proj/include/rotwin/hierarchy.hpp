#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rotwin/endpoint.hpp"

namespace rotwin {

// Ordered blocks of endpoint indices (0-based). Blocks are strictly
// prioritized against each other; endpoints within a block share priority.
// A valid hierarchy partitions {0, ..., q-1}.
struct Hierarchy {
    std::vector<std::vector<int>> blocks;

    int endpoint_count() const {
        int n = 0;
        for (const auto& b : blocks) n += static_cast<int>(b.size());
        return n;
    }
};

inline constexpr std::int64_t kDefaultRotationCap = 720; // 6!

// All within-block permutations combined across blocks. Every order is a
// permutation of 0..q-1 whose restriction to block r enumerates that block,
// with block boundaries at the same positions in every order.
struct RotationSet {
    int endpoint_count = 0;
    std::vector<std::vector<int>> orders;          // p orders, each of length q
    std::vector<std::pair<int, int>> block_spans;  // [begin, end) positions per block

    int rotation_count() const { return static_cast<int>(orders.size()); }
};

// Exact rotation count prod_r |G_r|!, saturating at limit+1 to avoid overflow.
std::int64_t rotation_count(const Hierarchy& h, std::int64_t limit = kDefaultRotationCap);

// Enumerates the rotation set: lexicographic permutations within each block,
// Cartesian product with the last block varying fastest.
// Throws ConfigError on an invalid hierarchy, ResourceError when the count
// exceeds the cap.
RotationSet build_rotation_set(const Hierarchy& h, std::int64_t cap = kDefaultRotationCap);

struct ValidationFinding {
    enum class Code {
        EmptyBlock,
        DuplicateIndex,
        OutOfRange,
        MissingIndex,
        CapExceeded,
        DuplicateEndpointId,
        NegativeMargin,
    };
    Code code;
    std::string message;
};

// Collects every violation instead of stopping at the first; an empty report
// means the hierarchy/spec combination is valid.
std::vector<ValidationFinding> validate_hierarchy(const Hierarchy& h,
                                                  const std::vector<EndpointSpec>& specs,
                                                  std::int64_t cap = kDefaultRotationCap);

} // namespace rotwin
