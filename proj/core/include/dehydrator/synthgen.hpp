// Synthetic provenance graphs with controlled node/edge counts and average
// degree. Destination picks follow a Zipf-like law so hub nodes exist; edges
// arrive in per-destination sessions whose length scales with the hub's
// expected degree, giving the bursty timestamps and near-consecutive source
// runs the hierarchical codec exploits.
#pragma once

#include <cstdint>

#include "dehydrator/types.hpp"

namespace dehydrator {

struct SynthSpec {
    std::uint64_t n_nodes{0};
    std::uint64_t n_edges{0};
    double process_ratio{0.35};
    double file_ratio{0.45};
    double socket_ratio{0.20};
    std::uint64_t time_base{1522706824};
    std::uint32_t burst_size{32};    // timestamp advances once per burst inside a session
    double zipf_exponent{1.0};       // destination popularity skew
    double session_scale{1.0};       // session length ~ scale * sqrt(expected degree)
    double op_skew{0.85};            // probability of a destination's preferred operation
    double src_seq_prob{0.8};        // probability the source comes from the rolling cursor
    double dup_prob{0.01};           // probability of repeating the previous event
    std::uint32_t id_hex_len{16};    // >= 8
    std::uint64_t seed{0};

    double target_d_avg() const {
        return n_nodes == 0 ? 0.0
                            : static_cast<double>(n_edges) / static_cast<double>(n_nodes);
    }

    void validate() const;  // throws InfeasibleSpec
};

// Deterministic given the seed; referential integrity holds by construction.
GraphTables generate(const SynthSpec& spec);

// Five tables with identical edge counts and average degrees 1..5 (node count
// varied). scale is the edge count per table.
std::vector<GraphTables> p_series(std::uint64_t scale, std::uint64_t seed = 0);

}  // namespace dehydrator
