#include "dehydrator/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace dehydrator {

namespace {

// Finalizer bijection; distinct inputs give distinct ids.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string hex_id(std::uint64_t value, std::uint32_t len) {
    static const char* digits = "0123456789ABCDEF";
    std::string out(len, '0');
    for (std::uint32_t i = 0; i < len && i < 16; ++i) {
        out[len - 1 - i] = digits[value & 0xF];
        value >>= 4;
    }
    // Wider ids than 16 hex chars repeat the mixed word.
    for (std::uint32_t i = 16; i < len; ++i) {
        out[len - 1 - i] = digits[(mix64(value + i) & 0xF)];
    }
    return out;
}

double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

const std::array<const char*, 8> kProcessNames = {"bash",    "sshd",  "nginx",   "firefox",
                                                  "imapd",   "cron",  "python3", "postfix"};
const std::array<const char*, 8> kFileNames = {
    "/etc/passwd",        "/var/log/syslog",  "/tmp/data.bin",   "/usr/lib/libc.so",
    "/home/user/.profile", "/var/spool/mail", "/etc/hosts",      "/opt/app/config.yml"};
const std::array<const char*, 6> kSocketNames = {"127.0.0.1:22",  "10.0.0.5:443",
                                                 "192.168.1.7:80", "0.0.0.0:53",
                                                 "172.16.3.2:8080", "10.1.1.9:25"};

// Incoming-edge operations admitted per destination type; each pool has at
// most three entries.
const std::array<std::vector<Operation>, kNodeTypeCount> kIncomingOps = {{
    {Operation::Write, Operation::Execute},                  // File
    {Operation::Read, Operation::Sendto, Operation::Fork},   // Process
    {Operation::Sendto, Operation::Recvfr},                  // Socket
}};

}  // namespace

void SynthSpec::validate() const {
    if (n_nodes == 0 || n_edges == 0) {
        raise(ErrorCode::InfeasibleSpec, "node and edge counts must be positive");
    }
    const double ratio_sum = process_ratio + file_ratio + socket_ratio;
    if (process_ratio < 0 || file_ratio < 0 || socket_ratio < 0 || ratio_sum <= 0) {
        raise(ErrorCode::InfeasibleSpec, "type mix ratios must be non-negative and sum > 0");
    }
    if (id_hex_len < 8) {
        raise(ErrorCode::InfeasibleSpec, "identifier length must be at least 8 hex chars");
    }
    if (burst_size == 0 || zipf_exponent < 0 || session_scale <= 0) {
        raise(ErrorCode::InfeasibleSpec, "bad structure parameters");
    }
    if (op_skew < 0 || op_skew > 1 || src_seq_prob < 0 || src_seq_prob > 1 || dup_prob < 0 ||
        dup_prob > 1) {
        raise(ErrorCode::InfeasibleSpec, "probabilities must lie in [0,1]");
    }
    if (time_base == 0) {
        raise(ErrorCode::InfeasibleSpec, "time_base must be positive");
    }
}

GraphTables generate(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const std::size_t n = static_cast<std::size_t>(spec.n_nodes);

    GraphTables tables;
    tables.nodes.reserve(n);
    const double ratio_sum = spec.process_ratio + spec.file_ratio + spec.socket_ratio;
    const double p_file = spec.file_ratio / ratio_sum;
    const double p_process = spec.process_ratio / ratio_sum;
    for (std::size_t i = 0; i < n; ++i) {
        NodeRecord node;
        node.identi_id = hex_id(mix64(spec.seed * 0x51ul + i), spec.id_hex_len);
        const double roll = uniform01(rng);
        if (roll < p_file) {
            node.node_type = NodeType::File;
            node.name = kFileNames[rng() % kFileNames.size()];
        } else if (roll < p_file + p_process) {
            node.node_type = NodeType::Process;
            node.name = kProcessNames[rng() % kProcessNames.size()];
        } else {
            node.node_type = NodeType::Socket;
            node.name = kSocketNames[rng() % kSocketNames.size()];
        }
        tables.nodes.push_back(std::move(node));
    }

    // Zipf weights over a permuted popularity rank.
    std::vector<std::size_t> rank_to_node(n);
    for (std::size_t i = 0; i < n; ++i) rank_to_node[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::swap(rank_to_node[i - 1], rank_to_node[rng() % i]);
    }
    std::vector<double> cumulative(n);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        total += 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
        cumulative[r] = total;
    }
    auto pick_dst = [&]() -> std::size_t {
        const double u = uniform01(rng) * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t r =
            static_cast<std::size_t>(std::distance(cumulative.begin(), it));
        return rank_to_node[std::min(r, n - 1)];
    };

    // Expected degree of the destination drives its session length.
    const double m_d = static_cast<double>(spec.n_edges);
    auto session_len = [&](std::size_t rank_weight_idx) -> std::uint64_t {
        const double w = 1.0 / std::pow(static_cast<double>(rank_weight_idx + 1),
                                        spec.zipf_exponent);
        const double expected = m_d * w / total;
        const double len = spec.session_scale * std::sqrt(std::max(1.0, expected));
        return static_cast<std::uint64_t>(std::max(1.0, std::floor(len)));
    };
    std::vector<std::size_t> node_to_rank(n);
    for (std::size_t r = 0; r < n; ++r) node_to_rank[rank_to_node[r]] = r;

    tables.edges.reserve(static_cast<std::size_t>(spec.n_edges));
    std::uint64_t t = spec.time_base;
    std::size_t cursor = rng() % n;
    while (tables.edges.size() < spec.n_edges) {
        const std::size_t dst = pick_dst();
        const auto& pool = kIncomingOps[static_cast<std::size_t>(tables.nodes[dst].node_type)];
        const Operation preferred = pool[dst % pool.size()];
        std::uint64_t len = std::min<std::uint64_t>(session_len(node_to_rank[dst]),
                                                    spec.n_edges - tables.edges.size());
        std::uint32_t in_burst = 0;
        for (std::uint64_t i = 0; i < len; ++i) {
            if (!tables.edges.empty() && uniform01(rng) < spec.dup_prob) {
                tables.edges.push_back(tables.edges.back());
                continue;
            }
            EdgeRecord edge;
            edge.dst_id = tables.nodes[dst].identi_id;
            std::size_t src;
            if (uniform01(rng) < spec.src_seq_prob) {
                cursor = (cursor + 1) % n;
                src = cursor;
            } else {
                src = rng() % n;
            }
            edge.src_id = tables.nodes[src].identi_id;
            edge.operation = uniform01(rng) < spec.op_skew
                                 ? preferred
                                 : pool[rng() % pool.size()];
            edge.timestamp = t;
            tables.edges.push_back(std::move(edge));
            if (++in_burst >= spec.burst_size) {
                in_burst = 0;
                ++t;
            }
        }
        t += 1 + (rng() % 2);
    }
    return tables;
}

std::vector<GraphTables> p_series(std::uint64_t scale, std::uint64_t seed) {
    if (scale < 10000) {
        raise(ErrorCode::InvalidArgument, "p_series needs at least 10k edges per table");
    }
    std::vector<GraphTables> series;
    series.reserve(5);
    for (std::uint64_t degree = 1; degree <= 5; ++degree) {
        SynthSpec spec;
        spec.n_nodes = scale / degree;
        spec.n_edges = scale;
        spec.seed = seed + degree;
        series.push_back(generate(spec));
    }
    return series;
}

}  // namespace dehydrator
