#include "rotwin/hierarchy.hpp"

#include <algorithm>
#include <set>

#include "rotwin/errors.hpp"

namespace rotwin {

std::int64_t rotation_count(const Hierarchy& h, std::int64_t limit) {
    std::int64_t p = 1;
    for (const auto& block : h.blocks) {
        for (std::int64_t f = 2; f <= static_cast<std::int64_t>(block.size()); ++f) {
            p *= f;
            if (p > limit) return limit + 1;
        }
    }
    return p;
}

namespace {

// Throws on the first structural violation, naming the offending index.
void require_partition(const Hierarchy& h) {
    const int q = h.endpoint_count();
    std::vector<int> seen(static_cast<std::size_t>(std::max(q, 1)), 0);
    for (const auto& block : h.blocks) {
        if (block.empty()) throw ConfigError("hierarchy: empty block");
        for (int idx : block) {
            if (idx < 0 || idx >= q)
                throw ConfigError("hierarchy: endpoint index " + std::to_string(idx) +
                                  " out of range [0," + std::to_string(q - 1) + "]");
            if (seen[static_cast<std::size_t>(idx)]++)
                throw ConfigError("hierarchy: endpoint index " + std::to_string(idx) +
                                  " appears in more than one block");
        }
    }
    // q == sum of block sizes, so no duplicates implies no missing index.
}

} // namespace

RotationSet build_rotation_set(const Hierarchy& h, std::int64_t cap) {
    require_partition(h);

    const std::int64_t p = rotation_count(h, cap);
    if (p > cap)
        throw ResourceError("rotation set would exceed the cap of " + std::to_string(cap) +
                            " orders; split large equal-priority blocks into smaller ones");

    RotationSet set;
    set.endpoint_count = h.endpoint_count();

    // Lexicographically sorted permutations of each block.
    std::vector<std::vector<std::vector<int>>> block_perms;
    block_perms.reserve(h.blocks.size());
    int pos = 0;
    for (const auto& block : h.blocks) {
        std::vector<int> base = block;
        std::sort(base.begin(), base.end());
        std::vector<std::vector<int>> perms;
        do {
            perms.push_back(base);
        } while (std::next_permutation(base.begin(), base.end()));
        block_perms.push_back(std::move(perms));
        set.block_spans.emplace_back(pos, pos + static_cast<int>(block.size()));
        pos += static_cast<int>(block.size());
    }

    // Odometer over block permutations, last block varying fastest.
    const std::size_t nblocks = block_perms.size();
    std::vector<std::size_t> pick(nblocks, 0);
    set.orders.reserve(static_cast<std::size_t>(p));
    for (;;) {
        std::vector<int> order;
        order.reserve(static_cast<std::size_t>(set.endpoint_count));
        for (std::size_t b = 0; b < nblocks; ++b)
            order.insert(order.end(), block_perms[b][pick[b]].begin(), block_perms[b][pick[b]].end());
        set.orders.push_back(std::move(order));

        std::size_t b = nblocks;
        while (b > 0) {
            --b;
            if (++pick[b] < block_perms[b].size()) break;
            pick[b] = 0;
            if (b == 0) return set;
        }
        if (nblocks == 0) return set;
    }
}

std::vector<ValidationFinding> validate_hierarchy(const Hierarchy& h,
                                                  const std::vector<EndpointSpec>& specs,
                                                  std::int64_t cap) {
    using Code = ValidationFinding::Code;
    std::vector<ValidationFinding> findings;
    const int q = static_cast<int>(specs.size());

    std::set<std::string> ids;
    for (const auto& spec : specs) {
        if (!ids.insert(spec.id).second)
            findings.push_back({Code::DuplicateEndpointId,
                                "endpoint id '" + spec.id + "' is not unique"});
        if (spec.margin < 0.0)
            findings.push_back({Code::NegativeMargin,
                                "endpoint '" + spec.id + "' has negative margin"});
    }

    std::vector<int> hits(static_cast<std::size_t>(std::max(q, 1)), 0);
    for (std::size_t b = 0; b < h.blocks.size(); ++b) {
        const auto& block = h.blocks[b];
        if (block.empty())
            findings.push_back({Code::EmptyBlock, "block " + std::to_string(b) + " is empty"});
        for (int idx : block) {
            if (idx < 0 || idx >= q) {
                findings.push_back({Code::OutOfRange,
                                    "endpoint index " + std::to_string(idx) +
                                        " in block " + std::to_string(b) + " is out of range"});
            } else if (hits[static_cast<std::size_t>(idx)]++ == 1) {
                findings.push_back({Code::DuplicateIndex,
                                    "endpoint index " + std::to_string(idx) +
                                        " appears in more than one block"});
            }
        }
    }
    for (int idx = 0; idx < q; ++idx)
        if (hits[static_cast<std::size_t>(idx)] == 0)
            findings.push_back({Code::MissingIndex,
                                "endpoint index " + std::to_string(idx) +
                                    " ('" + specs[static_cast<std::size_t>(idx)].id +
                                    "') is missing from the hierarchy"});

    if (rotation_count(h, cap) > cap)
        findings.push_back({Code::CapExceeded,
                            "rotation count exceeds the cap of " + std::to_string(cap)});

    return findings;
}

} // namespace rotwin
