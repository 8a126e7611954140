// Hierarchical encoding: all incoming edges of a node merged into one record
// with nested [operation: [timeOffset: [nodeOffset]]] content, the inverse
// decoder, and the byte-model size analyzer with the d_avg >= 3 threshold.
#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dehydrator/field_codec.hpp"

namespace dehydrator {

// Run of consecutive nodeOffsets sharing one multiplicity.
// [1,2,3,5,7,8,9] compacts to [1-3, 5, 7-9]; a duplicated event raises count.
struct RangeEntry {
    std::uint32_t lo{0};
    std::uint32_t hi{0};
    std::uint32_t count{1};

    friend bool operator==(const RangeEntry&, const RangeEntry&) = default;
};

using RangeList = std::vector<RangeEntry>;

// Builds a maximally coalesced RangeList from an unsorted multiset of offsets.
RangeList compact_offsets(std::vector<std::uint32_t> offsets);

struct TimeGroup {
    std::uint64_t time_offset{0};  // edge.t_off - start_time
    RangeList offsets;

    friend bool operator==(const TimeGroup&, const TimeGroup&) = default;
};

struct OpGroup {
    Index op_idx{0};
    std::vector<TimeGroup> times;  // ascending time_offset

    friend bool operator==(const OpGroup&, const OpGroup&) = default;
};

// One destination node's merged incoming edges. start/end live in the global
// t_off domain; nested time offsets are relative to start_time.
struct HierRecord {
    Index v{0};
    std::uint64_t start_time{0};
    std::uint64_t end_time{0};
    std::vector<Index> parents;   // U_v, first-occurrence order
    std::vector<OpGroup> merged;  // ascending op_idx

    friend bool operator==(const HierRecord&, const HierRecord&) = default;
};

// v -> U_v for every node with at least one incoming edge.
using MergeMapping = std::map<Index, std::vector<Index>>;

std::string merge_mapping_to_json(const MergeMapping& mmt);
MergeMapping merge_mapping_from_json(const std::string& text);

// One HierRecord per distinct destination, ordered by v ascending; the union
// of expansions equals the input multiset. Requires a nonempty edge table.
std::pair<std::vector<HierRecord>, MergeMapping> hierarchical_encode(
    const std::vector<EncodedEdgeRecord>& et_en);

// Multiset inverse of hierarchical_encode. Throws CorruptRecord on offsets
// past the parents list or inconsistent times.
std::vector<EncodedEdgeRecord> hierarchical_decode(const std::vector<HierRecord>& records);

// Expansion of a single record, in (op, time, offset) order.
std::vector<EncodedEdgeRecord> expand_record(const HierRecord& record);

// Size model with 4-byte fields. bytes_et_en = 4 fields * 4 bytes * m.
// bytes_et_hi sums, per record, the deduplicated operation entries, the
// deduplicated (operation, timeOffset) entries, the parent list, the three
// header fields, and one nodeOffset entry per contained edge, 4 bytes each.
// The per-record sums iterate over the nested structure as written (no
// cross-record sharing); the "3n" header term counts encoded records, while
// d_avg is m over the full node count.
struct SizeAnalysis {
    std::uint64_t n_nodes{0};    // nodes in the graph
    std::uint64_t n_records{0};  // nodes with incoming edges (records written)
    std::uint64_t m_edges{0};
    double d_avg{0.0};  // m_edges / n_nodes
    std::uint64_t sum_ops{0};           // sum over records of distinct operations
    std::uint64_t sum_time_entries{0};  // sum of distinct (op, timeOffset) pairs
    std::uint64_t sum_parents{0};       // sum of |U_v|
    std::uint64_t bytes_et_en{0};
    std::uint64_t bytes_et_hi{0};
    bool applicable{false};  // bytes_et_hi < bytes_et_en

    friend bool operator==(const SizeAnalysis&, const SizeAnalysis&) = default;
};

SizeAnalysis analyze_sizes(const std::vector<EncodedEdgeRecord>& et_en,
                           const std::vector<HierRecord>& records, std::uint64_t n_nodes);

// d_avg >= 3 marks an effective encoding scenario.
bool predict_applicability(std::uint64_t n_nodes, std::uint64_t m_edges);

}  // namespace dehydrator
