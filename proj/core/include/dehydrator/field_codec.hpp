// Field mapping encoding: dictionary indexes for unique/repetitive values and
// offsets from the global minimum timestamp, producing NT_en, ET_en and the
// mapping table MT.
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dehydrator/types.hpp"

namespace dehydrator {

// Bidirectional value<->index dictionary. Indexes are dense 0..k-1 in
// first-occurrence order.
class Dictionary {
public:
    Index intern(const std::string& value);
    bool lookup(const std::string& value, Index& out) const;
    const std::string& value(Index idx) const;  // throws IndexOutOfRange
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<std::string>& values() const noexcept { return values_; }

    static Dictionary from_values(std::vector<std::string> values);

    friend bool operator==(const Dictionary& a, const Dictionary& b) {
        return a.values_ == b.values_;
    }

private:
    std::vector<std::string> values_;
    std::unordered_map<std::string, Index> index_;
};

struct MappingTable {
    Dictionary identi_id;  // shared namespace for node ids and edge endpoints
    Dictionary name;
    Dictionary node_type;
    Dictionary operation;
    std::uint64_t time_base{0};  // min over all edge timestamps

    friend bool operator==(const MappingTable&, const MappingTable&) = default;
};

struct EncodedNodeRecord {
    Index id_idx{0};
    Index name_idx{0};
    Index type_idx{0};

    friend bool operator==(const EncodedNodeRecord&, const EncodedNodeRecord&) = default;
};

struct EncodedEdgeRecord {
    Index src_idx{0};
    Index dst_idx{0};
    std::uint64_t t_off{0};  // timestamp - time_base
    Index op_idx{0};

    friend bool operator==(const EncodedEdgeRecord&, const EncodedEdgeRecord&) = default;
};

struct EncodedTables {
    std::vector<EncodedNodeRecord> nodes;
    std::vector<EncodedEdgeRecord> edges;

    friend bool operator==(const EncodedTables&, const EncodedTables&) = default;
};

// Dictionaries cover every distinct value per field; deterministic given
// input order. Throws EmptyEdgeTable when no edge defines time_base.
MappingTable build_mapping(const GraphTables& tables);

// Order-preserving; throws UnmappedValue if mt is stale w.r.t. the tables.
EncodedTables encode_fields(const GraphTables& tables, const MappingTable& mt);

// Exact inverse of encode_fields (values and order).
GraphTables decode_fields(const EncodedTables& encoded, const MappingTable& mt);

// MT persists as a JSON document; array position == index.
std::string mapping_to_json(const MappingTable& mt);
MappingTable mapping_from_json(const std::string& text);

}  // namespace dehydrator
