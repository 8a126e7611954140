#include "dehydrator/query.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>

namespace dehydrator {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

QueryEngine::QueryEngine(LoadedBuild build, int threads)
    : build_(std::move(build)), threads_(std::max(1, threads)) {
    if (build_.model.config().context_len !=
        static_cast<int>(build_.manifest.stats.segment_length)) {
        raise(ErrorCode::CorruptArtifact,
              "model context does not match the manifest segment length");
    }
    node_row_.reserve(build_.nt_en.size());
    for (std::size_t row = 0; row < build_.nt_en.size(); ++row) {
        node_row_.emplace(build_.nt_en[row].id_idx, row);
    }
    max_generate_len_ = 2 * build_.manifest.stats.max_record_len + 2;
}

NodeRecord QueryEngine::query_node(const std::string& identi_id) const {
    Index idx;
    if (!build_.mt.identi_id.lookup(identi_id, idx)) {
        raise(ErrorCode::UnknownNode, identi_id);
    }
    auto it = node_row_.find(idx);
    if (it == node_row_.end()) {
        raise(ErrorCode::UnknownNode, identi_id + " has no node-table row");
    }
    const EncodedNodeRecord& rec = build_.nt_en[it->second];
    NodeRecord node;
    node.identi_id = build_.mt.identi_id.value(rec.id_idx);
    node.name = build_.mt.name.value(rec.name_idx);
    if (!parse_node_type(build_.mt.node_type.value(rec.type_idx), node.node_type)) {
        raise(ErrorCode::CorruptArtifact, "bad type index in node table");
    }
    return node;
}

std::vector<EdgeRecord> QueryEngine::incoming_by_index(Index v, QueryStats* stats) const {
    if (!build_.mmt.contains(v)) return {};

    std::string corrected;
    auto overflow = build_.ect.overflow.find(v);
    if (overflow != build_.ect.overflow.end()) {
        // The table replaces the generated string wholesale; skip the
        // generation whose output it would discard.
        corrected = overflow->second;
    } else {
        const auto t0 = Clock::now();
        const GenerateResult gen =
            build_.model.generate(head_tokens(v), max_generate_len_, vocab::kEos);
        if (stats) {
            stats->inference_seconds += seconds_since(t0);
            stats->generated_chars += gen.ids.size() - head_tokens(v).size();
        }
        corrected = apply_ect(build_.ect, v, detokenize(gen.ids));
    }

    const auto t1 = Clock::now();
    const HierRecord record = parse_record(corrected);
    if (record.v != v) {
        raise(ErrorCode::CorruptArtifact,
              "record head " + std::to_string(record.v) + " != queried index " +
                  std::to_string(v));
    }
    EncodedTables encoded;
    encoded.edges = expand_record(record);
    const GraphTables decoded = decode_fields(encoded, build_.mt);
    if (stats) stats->decode_seconds += seconds_since(t1);
    return decoded.edges;
}

std::vector<EdgeRecord> QueryEngine::query_incoming(const std::string& identi_id,
                                                    QueryStats* stats) const {
    Index idx;
    if (!build_.mt.identi_id.lookup(identi_id, idx)) {
        raise(ErrorCode::UnknownNode, identi_id);
    }
    return incoming_by_index(idx, stats);
}

BfsResult QueryEngine::backtrack_bfs(const std::string& root, int depth,
                                     std::optional<TimeWindow> window) const {
    if (depth < 1) raise(ErrorCode::InvalidArgument, "depth must be at least 1");
    if (depth > max_depth_) {
        raise(ErrorCode::InvalidArgument,
              "depth " + std::to_string(depth) + " exceeds the engine cap " +
                  std::to_string(max_depth_));
    }
    Index root_idx;
    if (!build_.mt.identi_id.lookup(root, root_idx)) {
        raise(ErrorCode::UnknownNode, root);
    }

    BfsResult result;
    result.frontiers.push_back({root});

    std::set<Index> visited{root_idx};
    std::vector<Index> frontier{root_idx};

    for (int level = 0; level < depth && !frontier.empty(); ++level) {
        // Expansions are independent; run them in parallel and merge in
        // frontier order so results stay deterministic.
        std::vector<std::vector<EdgeRecord>> expansions(frontier.size());
        std::vector<QueryStats> stats(frontier.size());
        auto expand_range = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                expansions[i] = incoming_by_index(frontier[i], &stats[i]);
            }
        };
        if (threads_ == 1 || frontier.size() < 2) {
            expand_range(0, frontier.size());
        } else {
            const std::size_t per =
                (frontier.size() + static_cast<std::size_t>(threads_) - 1) /
                static_cast<std::size_t>(threads_);
            std::vector<std::thread> pool;
            for (int t = 0; t < threads_; ++t) {
                const std::size_t lo =
                    std::min(static_cast<std::size_t>(t) * per, frontier.size());
                const std::size_t hi = std::min(lo + per, frontier.size());
                if (lo < hi) pool.emplace_back(expand_range, lo, hi);
            }
            for (auto& th : pool) th.join();
        }

        std::vector<Index> next;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            result.stats += stats[i];
            for (const EdgeRecord& edge : expansions[i]) {
                if (window && (edge.timestamp < window->t_lo || edge.timestamp > window->t_hi)) {
                    continue;
                }
                result.edges.push_back(edge);
                Index src_idx;
                if (!build_.mt.identi_id.lookup(edge.src_id, src_idx)) {
                    raise(ErrorCode::CorruptArtifact, "decoded unknown source " + edge.src_id);
                }
                if (visited.insert(src_idx).second) next.push_back(src_idx);
            }
        }
        std::sort(next.begin(), next.end());
        std::vector<std::string> frontier_ids;
        frontier_ids.reserve(next.size());
        for (Index idx : next) frontier_ids.push_back(build_.mt.identi_id.value(idx));
        result.frontiers.push_back(std::move(frontier_ids));
        frontier = std::move(next);
    }
    return result;
}

std::vector<BatchEntry> QueryEngine::batch_incoming(const std::vector<std::string>& ids) const {
    if (ids.empty()) raise(ErrorCode::InvalidArgument, "batch_incoming requires ids");
    std::vector<BatchEntry> results(ids.size());
    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                results[i].edges = query_incoming(ids[i]);
            } catch (const Error& err) {
                results[i].ok = false;
                results[i].error = err.what();
            }
        }
    };
    if (threads_ == 1 || ids.size() < 2) {
        run_range(0, ids.size());
    } else {
        const std::size_t per = (ids.size() + static_cast<std::size_t>(threads_) - 1) /
                                static_cast<std::size_t>(threads_);
        std::vector<std::thread> pool;
        for (int t = 0; t < threads_; ++t) {
            const std::size_t lo = std::min(static_cast<std::size_t>(t) * per, ids.size());
            const std::size_t hi = std::min(lo + per, ids.size());
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return results;
}

}  // namespace dehydrator
