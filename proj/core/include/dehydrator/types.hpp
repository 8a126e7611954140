// Core domain types for the provenance graph store: node/edge records,
// the logical graph tables, and the error taxonomy shared by all modules.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dehydrator {

using Index = std::uint32_t;

enum class NodeType : std::uint8_t { File = 0, Process = 1, Socket = 2 };

enum class Operation : std::uint8_t {
    Read = 0,
    Write = 1,
    Execute = 2,
    Sendto = 3,
    Recvfr = 4,
    Fork = 5,
};

inline constexpr int kNodeTypeCount = 3;
inline constexpr int kOperationCount = 6;

const std::string& to_string(NodeType t);
const std::string& to_string(Operation op);

// Case-insensitive lookups; return false when the value names no variant.
bool parse_node_type(const std::string& value, NodeType& out);
bool parse_operation(const std::string& value, Operation& out);

struct NodeRecord {
    std::string identi_id;
    std::string name;
    NodeType node_type{NodeType::File};

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct EdgeRecord {
    std::string src_id;
    std::string dst_id;
    std::uint64_t timestamp{0};  // Unix seconds, > 0
    Operation operation{Operation::Read};

    friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

// Node table + edge table; their unification is the provenance graph G(V,E).
// Edges are a multiset: duplicate rows are distinct events.
struct GraphTables {
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;

    friend bool operator==(const GraphTables&, const GraphTables&) = default;
};

// ---------------------------------------------------------------------------
// Error taxonomy.
// ---------------------------------------------------------------------------

enum class ErrorCode {
    MalformedRow,
    DuplicateNodeId,
    UnknownNodeType,
    UnknownOperation,
    NonNumericTimestamp,
    DanglingEndpoint,
    EmptyEdgeTable,
    UnmappedValue,
    IndexOutOfRange,
    CorruptRecord,
    SyntaxError,
    UnknownSymbol,
    InvalidConfig,
    ContextOverflow,
    NonFiniteLoss,
    UnknownHead,
    UnknownNode,
    CorruptArtifact,
    DigestMismatch,
    VersionMismatch,
    ZeroDuration,
    InfeasibleSpec,
    InvalidArgument,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace dehydrator
