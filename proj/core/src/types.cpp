#include "dehydrator/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace dehydrator {

namespace {

const std::array<std::string, kNodeTypeCount> kNodeTypeNames = {"File", "Process", "Socket"};

const std::array<std::string, kOperationCount> kOperationNames = {
    "Read", "Write", "Execute", "Sendto", "Recvfr", "Fork"};

std::string lower(const std::string& s) {
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

const std::string& to_string(NodeType t) { return kNodeTypeNames[static_cast<std::size_t>(t)]; }

const std::string& to_string(Operation op) {
    return kOperationNames[static_cast<std::size_t>(op)];
}

bool parse_node_type(const std::string& value, NodeType& out) {
    const std::string v = lower(value);
    for (std::size_t i = 0; i < kNodeTypeNames.size(); ++i) {
        if (v == lower(kNodeTypeNames[i])) {
            out = static_cast<NodeType>(i);
            return true;
        }
    }
    return false;
}

bool parse_operation(const std::string& value, Operation& out) {
    // Audit exports spell operations inconsistently ("FORk"); match case-insensitively.
    const std::string v = lower(value);
    for (std::size_t i = 0; i < kOperationNames.size(); ++i) {
        if (v == lower(kOperationNames[i])) {
            out = static_cast<Operation>(i);
            return true;
        }
    }
    return false;
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::DuplicateNodeId: return "DuplicateNodeId";
        case ErrorCode::UnknownNodeType: return "UnknownNodeType";
        case ErrorCode::UnknownOperation: return "UnknownOperation";
        case ErrorCode::NonNumericTimestamp: return "NonNumericTimestamp";
        case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
        case ErrorCode::EmptyEdgeTable: return "EmptyEdgeTable";
        case ErrorCode::UnmappedValue: return "UnmappedValue";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::CorruptRecord: return "CorruptRecord";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownSymbol: return "UnknownSymbol";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ContextOverflow: return "ContextOverflow";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::UnknownHead: return "UnknownHead";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::CorruptArtifact: return "CorruptArtifact";
        case ErrorCode::DigestMismatch: return "DigestMismatch";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::ZeroDuration: return "ZeroDuration";
        case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

}  // namespace dehydrator
