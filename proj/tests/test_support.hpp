// Shared fixtures and independent oracles for the test suites.
#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dehydrator/field_codec.hpp"
#include "dehydrator/types.hpp"

namespace dehydrator::testing {

// The worked example from the incoming-edge walkthrough: two processes act on
// a third, one fork and one read.
inline GraphTables walkthrough_tables() {
    GraphTables tables;
    tables.nodes = {
        {"v1", "Systemd", NodeType::Process},
        {"v2", "Firefox", NodeType::Process},
        {"v3", "Updater", NodeType::Process},
    };
    tables.edges = {
        {"v1", "v2", 4213, Operation::Fork},
        {"v3", "v2", 4214, Operation::Read},
    };
    return tables;
}

using EdgeKey = std::tuple<std::string, std::string, std::uint64_t, int>;

inline EdgeKey edge_key(const EdgeRecord& e) {
    return {e.src_id, e.dst_id, e.timestamp, static_cast<int>(e.operation)};
}

inline std::vector<EdgeKey> edge_multiset(const std::vector<EdgeRecord>& edges) {
    std::vector<EdgeKey> keys;
    keys.reserve(edges.size());
    for (const auto& e : edges) keys.push_back(edge_key(e));
    std::sort(keys.begin(), keys.end());
    return keys;
}

using EncodedKey = std::tuple<Index, Index, std::uint64_t, Index>;

inline std::vector<EncodedKey> encoded_multiset(const std::vector<EncodedEdgeRecord>& edges) {
    std::vector<EncodedKey> keys;
    keys.reserve(edges.size());
    for (const auto& e : edges) keys.push_back({e.src_idx, e.dst_idx, e.t_off, e.op_idx});
    std::sort(keys.begin(), keys.end());
    return keys;
}

// Brute-force oracle: every original edge whose destination is `id`.
inline std::vector<EdgeRecord> scan_incoming(const GraphTables& tables, const std::string& id) {
    std::vector<EdgeRecord> out;
    for (const auto& e : tables.edges) {
        if (e.dst_id == id) out.push_back(e);
    }
    return out;
}

// Independent reverse-BFS oracle over a prebuilt adjacency list.
struct ReverseBfsOracle {
    std::map<std::string, std::vector<const EdgeRecord*>> incoming;

    explicit ReverseBfsOracle(const GraphTables& tables) {
        for (const auto& e : tables.edges) incoming[e.dst_id].push_back(&e);
    }

    std::vector<EdgeRecord> run(const std::string& root, int depth, bool windowed = false,
                                std::uint64_t t_lo = 0, std::uint64_t t_hi = 0) const {
        std::vector<EdgeRecord> result;
        std::vector<std::string> frontier{root};
        std::map<std::string, bool> visited{{root, true}};
        for (int level = 0; level < depth && !frontier.empty(); ++level) {
            std::vector<std::string> next;
            for (const auto& node : frontier) {
                auto it = incoming.find(node);
                if (it == incoming.end()) continue;
                for (const EdgeRecord* e : it->second) {
                    if (windowed && (e->timestamp < t_lo || e->timestamp > t_hi)) continue;
                    result.push_back(*e);
                    if (!visited[e->src_id]) {
                        visited[e->src_id] = true;
                        next.push_back(e->src_id);
                    }
                }
            }
            frontier = std::move(next);
        }
        return result;
    }
};

// Random encoded-edge corpora for codec round trips, duplicates included.
inline std::vector<EncodedEdgeRecord> random_encoded_edges(std::uint64_t seed, std::size_t count,
                                                           Index node_span, Index op_span,
                                                           std::uint64_t t_span) {
    std::mt19937_64 rng(seed);
    std::vector<EncodedEdgeRecord> edges;
    edges.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!edges.empty() && rng() % 16 == 0) {
            edges.push_back(edges.back());  // exact duplicate event
            continue;
        }
        EncodedEdgeRecord e;
        e.src_idx = static_cast<Index>(rng() % node_span);
        e.dst_idx = static_cast<Index>(rng() % node_span);
        e.t_off = rng() % t_span;
        e.op_idx = static_cast<Index>(rng() % op_span);
        edges.push_back(e);
    }
    return edges;
}

}  // namespace dehydrator::testing
