#include "dehydrator/ingest.hpp"

#include <istream>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace dehydrator {

namespace {

using nlohmann::json;

// Column resolution for CSV headers: required keys may appear in any order;
// extra columns are ignored.
struct HeaderMap {
    std::vector<int> positions;  // per required key, column index

    static HeaderMap resolve(const csv::Row& header, const std::vector<std::string>& keys) {
        HeaderMap map;
        map.positions.assign(keys.size(), -1);
        for (std::size_t k = 0; k < keys.size(); ++k) {
            for (std::size_t c = 0; c < header.fields.size(); ++c) {
                if (header.fields[c] == keys[k]) {
                    map.positions[k] = static_cast<int>(c);
                    break;
                }
            }
            if (map.positions[k] < 0) {
                raise(ErrorCode::MalformedRow,
                      "missing required column '" + keys[k] + "' in header");
            }
        }
        return map;
    }

    const std::string& field(const csv::Row& row, std::size_t key_idx) const {
        const int pos = positions[key_idx];
        if (pos >= static_cast<int>(row.fields.size())) {
            raise(ErrorCode::MalformedRow,
                  "row at line " + std::to_string(row.line_no) + " has too few fields");
        }
        return row.fields[static_cast<std::size_t>(pos)];
    }
};

std::uint64_t parse_timestamp(const std::string& text, std::size_t line_no) {
    if (text.empty()) {
        raise(ErrorCode::NonNumericTimestamp, "empty timestamp at line " + std::to_string(line_no));
    }
    std::uint64_t value = 0;
    for (char ch : text) {
        if (ch < '0' || ch > '9') {
            raise(ErrorCode::NonNumericTimestamp,
                  "'" + text + "' at line " + std::to_string(line_no));
        }
        const std::uint64_t digit = static_cast<std::uint64_t>(ch - '0');
        if (value > (UINT64_MAX - digit) / 10) {
            raise(ErrorCode::NonNumericTimestamp,
                  "timestamp overflow at line " + std::to_string(line_no));
        }
        value = value * 10 + digit;
    }
    if (value == 0) {
        raise(ErrorCode::NonNumericTimestamp,
              "timestamp must be positive at line " + std::to_string(line_no));
    }
    return value;
}

NodeType parse_type_or_throw(const std::string& text, std::size_t line_no) {
    NodeType t;
    if (!parse_node_type(text, t)) {
        raise(ErrorCode::UnknownNodeType, "'" + text + "' at line " + std::to_string(line_no));
    }
    return t;
}

Operation parse_op_or_throw(const std::string& text, std::size_t line_no) {
    Operation op;
    if (!parse_operation(text, op)) {
        raise(ErrorCode::UnknownOperation, "'" + text + "' at line " + std::to_string(line_no));
    }
    return op;
}

json parse_json_line(const std::string& line, std::size_t line_no) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        raise(ErrorCode::MalformedRow, "invalid JSON object at line " + std::to_string(line_no));
    }
    return obj;
}

std::string json_string_field(const json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        raise(ErrorCode::MalformedRow,
              std::string("missing string field '") + key + "' at line " + std::to_string(line_no));
    }
    return it->get<std::string>();
}

}  // namespace

std::vector<NodeRecord> parse_node_table(std::istream& in, TableFormat format) {
    std::vector<NodeRecord> nodes;
    std::unordered_set<std::string> seen;

    auto push = [&](NodeRecord rec, std::size_t line_no) {
        if (rec.identi_id.empty()) {
            raise(ErrorCode::MalformedRow, "empty identi_id at line " + std::to_string(line_no));
        }
        if (!seen.insert(rec.identi_id).second) {
            raise(ErrorCode::DuplicateNodeId, rec.identi_id);
        }
        nodes.push_back(std::move(rec));
    };

    if (format == TableFormat::Csv) {
        std::size_t line_counter = 1;
        csv::Row row;
        if (!csv::read_row(in, row, line_counter)) return nodes;  // empty stream
        const HeaderMap header = HeaderMap::resolve(row, {"identi_id", "name", "type"});
        while (csv::read_row(in, row, line_counter)) {
            NodeRecord rec;
            rec.identi_id = header.field(row, 0);
            rec.name = header.field(row, 1);
            rec.node_type = parse_type_or_throw(header.field(row, 2), row.line_no);
            push(std::move(rec), row.line_no);
        }
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const json obj = parse_json_line(line, line_no);
            NodeRecord rec;
            rec.identi_id = json_string_field(obj, "identi_id", line_no);
            rec.name = json_string_field(obj, "name", line_no);
            rec.node_type = parse_type_or_throw(json_string_field(obj, "type", line_no), line_no);
            push(std::move(rec), line_no);
        }
    }
    return nodes;
}

std::vector<EdgeRecord> parse_edge_table(std::istream& in, TableFormat format) {
    std::vector<EdgeRecord> edges;

    if (format == TableFormat::Csv) {
        std::size_t line_counter = 1;
        csv::Row row;
        if (!csv::read_row(in, row, line_counter)) return edges;
        const HeaderMap header =
            HeaderMap::resolve(row, {"src_id", "dst_id", "timestamp", "operation"});
        while (csv::read_row(in, row, line_counter)) {
            EdgeRecord rec;
            rec.src_id = header.field(row, 0);
            rec.dst_id = header.field(row, 1);
            rec.timestamp = parse_timestamp(header.field(row, 2), row.line_no);
            rec.operation = parse_op_or_throw(header.field(row, 3), row.line_no);
            if (rec.src_id.empty() || rec.dst_id.empty()) {
                raise(ErrorCode::MalformedRow,
                      "empty endpoint id at line " + std::to_string(row.line_no));
            }
            edges.push_back(std::move(rec));
        }
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const json obj = parse_json_line(line, line_no);
            EdgeRecord rec;
            rec.src_id = json_string_field(obj, "src_id", line_no);
            rec.dst_id = json_string_field(obj, "dst_id", line_no);
            auto ts = obj.find("timestamp");
            if (ts == obj.end()) {
                raise(ErrorCode::MalformedRow,
                      "missing field 'timestamp' at line " + std::to_string(line_no));
            }
            if (ts->is_number_unsigned()) {
                rec.timestamp = ts->get<std::uint64_t>();
                if (rec.timestamp == 0) {
                    raise(ErrorCode::NonNumericTimestamp,
                          "timestamp must be positive at line " + std::to_string(line_no));
                }
            } else if (ts->is_string()) {
                rec.timestamp = parse_timestamp(ts->get<std::string>(), line_no);
            } else {
                raise(ErrorCode::NonNumericTimestamp,
                      "timestamp at line " + std::to_string(line_no));
            }
            rec.operation = parse_op_or_throw(json_string_field(obj, "operation", line_no), line_no);
            if (rec.src_id.empty() || rec.dst_id.empty()) {
                raise(ErrorCode::MalformedRow,
                      "empty endpoint id at line " + std::to_string(line_no));
            }
            edges.push_back(std::move(rec));
        }
    }
    return edges;
}

std::vector<DanglingViolation> validate_graph(const GraphTables& tables) {
    std::unordered_set<std::string> ids;
    ids.reserve(tables.nodes.size() * 2);
    for (const auto& node : tables.nodes) ids.insert(node.identi_id);

    std::vector<DanglingViolation> report;
    for (std::size_t i = 0; i < tables.edges.size(); ++i) {
        const auto& e = tables.edges[i];
        if (!ids.contains(e.src_id)) report.push_back({i, true, e.src_id});
        if (!ids.contains(e.dst_id)) report.push_back({i, false, e.dst_id});
    }
    return report;
}

GraphTables load_tables(std::istream& nodes_in, std::istream& edges_in,
                        const IngestOptions& options) {
    GraphTables tables;
    tables.nodes = parse_node_table(nodes_in, options.format);
    tables.edges = parse_edge_table(edges_in, options.format);

    const auto report = validate_graph(tables);
    if (report.empty()) return tables;

    if (!options.allow_dangling) {
        raise(ErrorCode::DanglingEndpoint,
              "edge " + std::to_string(report.front().edge_index) + " references unknown node '" +
                  report.front().endpoint_id + "' (" + std::to_string(report.size()) +
                  " violations total)");
    }
    // Placeholder nodes keep truncated captures loadable.
    std::unordered_set<std::string> ids;
    for (const auto& node : tables.nodes) ids.insert(node.identi_id);
    for (const auto& violation : report) {
        if (ids.insert(violation.endpoint_id).second) {
            tables.nodes.push_back({violation.endpoint_id, "", NodeType::File});
        }
    }
    return tables;
}

}  // namespace dehydrator
