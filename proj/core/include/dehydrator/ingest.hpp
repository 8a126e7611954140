// Parsing of raw audit-log exports into the node table NT and edge table ET.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dehydrator/types.hpp"

namespace dehydrator {

enum class TableFormat { Csv, JsonLines };

// CSV requires a header row with the exact lowercase keys; JSONLines expects
// one object per line with the same keys. Unknown extra fields are ignored.
// Input order is preserved for both tables (edges are a multiset).
std::vector<NodeRecord> parse_node_table(std::istream& in, TableFormat format);
std::vector<EdgeRecord> parse_edge_table(std::istream& in, TableFormat format);

struct DanglingViolation {
    std::size_t edge_index{0};
    bool is_src{true};
    std::string endpoint_id;

    friend bool operator==(const DanglingViolation&, const DanglingViolation&) = default;
};

// Empty report iff every edge endpoint resolves to a node.
std::vector<DanglingViolation> validate_graph(const GraphTables& tables);

struct IngestOptions {
    TableFormat format{TableFormat::Csv};
    // Synthesize placeholder nodes (name "", type File) for dangling endpoints
    // instead of rejecting the input.
    bool allow_dangling{false};
};

// Parses both tables and enforces referential integrity per the options.
GraphTables load_tables(std::istream& nodes_in, std::istream& edges_in,
                        const IngestOptions& options = {});

}  // namespace dehydrator
