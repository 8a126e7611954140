#include "dehydrator/field_codec.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

namespace dehydrator {

using nlohmann::json;

Index Dictionary::intern(const std::string& value) {
    auto [it, inserted] = index_.try_emplace(value, static_cast<Index>(values_.size()));
    if (inserted) values_.push_back(value);
    return it->second;
}

bool Dictionary::lookup(const std::string& value, Index& out) const {
    auto it = index_.find(value);
    if (it == index_.end()) return false;
    out = it->second;
    return true;
}

const std::string& Dictionary::value(Index idx) const {
    if (idx >= values_.size()) {
        raise(ErrorCode::IndexOutOfRange,
              "dictionary index " + std::to_string(idx) + " >= " + std::to_string(values_.size()));
    }
    return values_[idx];
}

Dictionary Dictionary::from_values(std::vector<std::string> values) {
    Dictionary d;
    d.values_ = std::move(values);
    d.index_.reserve(d.values_.size());
    for (std::size_t i = 0; i < d.values_.size(); ++i) {
        d.index_.emplace(d.values_[i], static_cast<Index>(i));
    }
    return d;
}

MappingTable build_mapping(const GraphTables& tables) {
    if (tables.edges.empty()) {
        raise(ErrorCode::EmptyEdgeTable, "time_base is undefined without edges");
    }
    MappingTable mt;
    for (const auto& node : tables.nodes) {
        mt.identi_id.intern(node.identi_id);
        mt.name.intern(node.name);
        mt.node_type.intern(to_string(node.node_type));
    }
    std::uint64_t min_ts = std::numeric_limits<std::uint64_t>::max();
    for (const auto& edge : tables.edges) {
        // Endpoints share the node-id namespace; interning here only matters
        // for dangling-tolerant callers.
        mt.identi_id.intern(edge.src_id);
        mt.identi_id.intern(edge.dst_id);
        mt.operation.intern(to_string(edge.operation));
        min_ts = std::min(min_ts, edge.timestamp);
    }
    mt.time_base = min_ts;
    return mt;
}

namespace {

Index lookup_or_throw(const Dictionary& dict, const std::string& value, const char* field) {
    Index idx;
    if (!dict.lookup(value, idx)) {
        raise(ErrorCode::UnmappedValue, std::string(field) + ": '" + value + "'");
    }
    return idx;
}

}  // namespace

EncodedTables encode_fields(const GraphTables& tables, const MappingTable& mt) {
    EncodedTables out;
    out.nodes.reserve(tables.nodes.size());
    for (const auto& node : tables.nodes) {
        EncodedNodeRecord rec;
        rec.id_idx = lookup_or_throw(mt.identi_id, node.identi_id, "identi_id");
        rec.name_idx = lookup_or_throw(mt.name, node.name, "name");
        rec.type_idx = lookup_or_throw(mt.node_type, to_string(node.node_type), "type");
        out.nodes.push_back(rec);
    }
    out.edges.reserve(tables.edges.size());
    for (const auto& edge : tables.edges) {
        EncodedEdgeRecord rec;
        rec.src_idx = lookup_or_throw(mt.identi_id, edge.src_id, "src_id");
        rec.dst_idx = lookup_or_throw(mt.identi_id, edge.dst_id, "dst_id");
        if (edge.timestamp < mt.time_base) {
            raise(ErrorCode::UnmappedValue,
                  "timestamp " + std::to_string(edge.timestamp) + " below time_base");
        }
        rec.t_off = edge.timestamp - mt.time_base;
        rec.op_idx = lookup_or_throw(mt.operation, to_string(edge.operation), "operation");
        out.edges.push_back(rec);
    }
    return out;
}

GraphTables decode_fields(const EncodedTables& encoded, const MappingTable& mt) {
    GraphTables out;
    out.nodes.reserve(encoded.nodes.size());
    for (const auto& rec : encoded.nodes) {
        NodeRecord node;
        node.identi_id = mt.identi_id.value(rec.id_idx);
        node.name = mt.name.value(rec.name_idx);
        if (!parse_node_type(mt.node_type.value(rec.type_idx), node.node_type)) {
            raise(ErrorCode::CorruptRecord, "bad type dictionary entry");
        }
        out.nodes.push_back(std::move(node));
    }
    out.edges.reserve(encoded.edges.size());
    for (const auto& rec : encoded.edges) {
        EdgeRecord edge;
        edge.src_id = mt.identi_id.value(rec.src_idx);
        edge.dst_id = mt.identi_id.value(rec.dst_idx);
        edge.timestamp = mt.time_base + rec.t_off;
        if (!parse_operation(mt.operation.value(rec.op_idx), edge.operation)) {
            raise(ErrorCode::CorruptRecord, "bad operation dictionary entry");
        }
        out.edges.push_back(std::move(edge));
    }
    return out;
}

std::string mapping_to_json(const MappingTable& mt) {
    json doc;
    doc["identi_id"] = mt.identi_id.values();
    doc["name"] = mt.name.values();
    doc["type"] = mt.node_type.values();
    doc["operation"] = mt.operation.values();
    doc["time_base"] = mt.time_base;
    return doc.dump();
}

MappingTable mapping_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::CorruptArtifact, "mapping table is not a JSON object");
    }
    auto field = [&](const char* key) -> std::vector<std::string> {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_array()) {
            raise(ErrorCode::CorruptArtifact, std::string("mapping table missing '") + key + "'");
        }
        return it->get<std::vector<std::string>>();
    };
    MappingTable mt;
    mt.identi_id = Dictionary::from_values(field("identi_id"));
    mt.name = Dictionary::from_values(field("name"));
    mt.node_type = Dictionary::from_values(field("type"));
    mt.operation = Dictionary::from_values(field("operation"));
    auto tb = doc.find("time_base");
    if (tb == doc.end() || !tb->is_number_unsigned()) {
        raise(ErrorCode::CorruptArtifact, "mapping table missing 'time_base'");
    }
    mt.time_base = tb->get<std::uint64_t>();
    return mt;
}

}  // namespace dehydrator
