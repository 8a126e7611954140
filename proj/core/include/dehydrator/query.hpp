// Query surface over a loaded build: node lookup via the mapping table,
// incoming-edge lookup via model generation + error correction + hierarchical
// decode + inverse mapping, and depth-bounded reverse BFS with optional time
// windows.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dehydrator/store.hpp"

namespace dehydrator {

struct QueryStats {
    std::uint64_t generated_chars{0};  // model-emitted tokens, heads excluded
    double inference_seconds{0.0};
    double decode_seconds{0.0};

    QueryStats& operator+=(const QueryStats& other) {
        generated_chars += other.generated_chars;
        inference_seconds += other.inference_seconds;
        decode_seconds += other.decode_seconds;
        return *this;
    }
};

struct TimeWindow {
    std::uint64_t t_lo{0};
    std::uint64_t t_hi{0};  // inclusive bounds on the original timestamps
};

struct BfsResult {
    std::vector<EdgeRecord> edges;
    std::vector<std::vector<std::string>> frontiers;  // per depth, frontier 0 is the root
    QueryStats stats;
};

struct BatchEntry {
    bool ok{true};
    std::string error;
    std::vector<EdgeRecord> edges;
};

class QueryEngine {
public:
    // The build has already passed digest verification in load_build; the
    // constructor additionally cross-checks the model context against the
    // manifest stats.
    explicit QueryEngine(LoadedBuild build, int threads = 1);

    int max_depth() const noexcept { return max_depth_; }
    void set_max_depth(int depth) { max_depth_ = depth; }

    NodeRecord query_node(const std::string& identi_id) const;

    // Exactly the multiset of original edges with dst == identi_id; empty for
    // nodes without incoming edges.
    std::vector<EdgeRecord> query_incoming(const std::string& identi_id,
                                           QueryStats* stats = nullptr) const;

    BfsResult backtrack_bfs(const std::string& root, int depth,
                            std::optional<TimeWindow> window = std::nullopt) const;

    // Element-wise equal to sequential query_incoming; failures are reported
    // in place.
    std::vector<BatchEntry> batch_incoming(const std::vector<std::string>& ids) const;

private:
    std::vector<EdgeRecord> incoming_by_index(Index v, QueryStats* stats) const;

    LoadedBuild build_;
    std::unordered_map<Index, std::size_t> node_row_;  // id_idx -> NT_en row
    std::size_t max_generate_len_{0};
    int threads_{1};
    int max_depth_{4};
};

}  // namespace dehydrator
