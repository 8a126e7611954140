#include "dehydrator/hier_codec.hpp"

#include <algorithm>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace dehydrator {

using nlohmann::json;

RangeList compact_offsets(std::vector<std::uint32_t> offsets) {
    RangeList out;
    if (offsets.empty()) return out;
    std::sort(offsets.begin(), offsets.end());

    // Collapse duplicates into per-offset multiplicities first.
    std::uint32_t cur = offsets[0];
    std::uint32_t count = 1;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;  // (offset, multiplicity)
    for (std::size_t i = 1; i < offsets.size(); ++i) {
        if (offsets[i] == cur) {
            ++count;
        } else {
            runs.emplace_back(cur, count);
            cur = offsets[i];
            count = 1;
        }
    }
    runs.emplace_back(cur, count);

    for (const auto& [offset, multiplicity] : runs) {
        if (!out.empty() && out.back().hi + 1 == offset && out.back().count == multiplicity) {
            out.back().hi = offset;
        } else {
            out.push_back({offset, offset, multiplicity});
        }
    }
    return out;
}

std::pair<std::vector<HierRecord>, MergeMapping> hierarchical_encode(
    const std::vector<EncodedEdgeRecord>& et_en) {
    if (et_en.empty()) {
        raise(ErrorCode::InvalidArgument, "hierarchical_encode requires a nonempty edge table");
    }

    struct Group {
        std::vector<Index> parents;
        std::unordered_map<Index, std::uint32_t> parent_pos;
        std::uint64_t min_t{0};
        std::uint64_t max_t{0};
        // (op, t_off) -> nodeOffset multiset
        std::map<Index, std::map<std::uint64_t, std::vector<std::uint32_t>>> nested;
    };

    std::map<Index, Group> groups;
    for (const auto& e : et_en) {
        auto [it, fresh] = groups.try_emplace(e.dst_idx);
        Group& g = it->second;
        if (fresh) {
            g.min_t = e.t_off;
            g.max_t = e.t_off;
        } else {
            g.min_t = std::min(g.min_t, e.t_off);
            g.max_t = std::max(g.max_t, e.t_off);
        }
        auto [pit, new_parent] =
            g.parent_pos.try_emplace(e.src_idx, static_cast<std::uint32_t>(g.parents.size()));
        if (new_parent) g.parents.push_back(e.src_idx);
        g.nested[e.op_idx][e.t_off].push_back(pit->second);
    }

    std::vector<HierRecord> records;
    records.reserve(groups.size());
    MergeMapping mmt;
    for (auto& [v, g] : groups) {
        HierRecord rec;
        rec.v = v;
        rec.start_time = g.min_t;
        rec.end_time = g.max_t;
        rec.parents = g.parents;
        for (auto& [op, by_time] : g.nested) {
            OpGroup og;
            og.op_idx = op;
            for (auto& [t_off, offsets] : by_time) {
                TimeGroup tg;
                tg.time_offset = t_off - g.min_t;
                tg.offsets = compact_offsets(std::move(offsets));
                og.times.push_back(std::move(tg));
            }
            rec.merged.push_back(std::move(og));
        }
        mmt.emplace(v, rec.parents);
        records.push_back(std::move(rec));
    }
    return {std::move(records), std::move(mmt)};
}

std::vector<EncodedEdgeRecord> expand_record(const HierRecord& record) {
    if (record.start_time > record.end_time) {
        raise(ErrorCode::CorruptRecord,
              "v=" + std::to_string(record.v) + ": start_time exceeds end_time");
    }
    std::vector<EncodedEdgeRecord> edges;
    for (const auto& og : record.merged) {
        for (const auto& tg : og.times) {
            const std::uint64_t t_off = record.start_time + tg.time_offset;
            if (t_off > record.end_time) {
                raise(ErrorCode::CorruptRecord,
                      "v=" + std::to_string(record.v) + ": timeOffset past end_time");
            }
            for (const auto& range : tg.offsets) {
                if (range.hi < range.lo || range.count == 0) {
                    raise(ErrorCode::CorruptRecord,
                          "v=" + std::to_string(record.v) + ": malformed range");
                }
                if (range.hi >= record.parents.size()) {
                    raise(ErrorCode::CorruptRecord,
                          "v=" + std::to_string(record.v) + ": nodeOffset " +
                              std::to_string(range.hi) + " exceeds parents length " +
                              std::to_string(record.parents.size()));
                }
                for (std::uint32_t off = range.lo; off <= range.hi; ++off) {
                    for (std::uint32_t rep = 0; rep < range.count; ++rep) {
                        edges.push_back({record.parents[off], record.v, t_off, og.op_idx});
                    }
                }
            }
        }
    }
    if (edges.empty()) {
        raise(ErrorCode::CorruptRecord, "v=" + std::to_string(record.v) + ": empty expansion");
    }
    return edges;
}

std::vector<EncodedEdgeRecord> hierarchical_decode(const std::vector<HierRecord>& records) {
    std::vector<EncodedEdgeRecord> out;
    for (const auto& rec : records) {
        auto edges = expand_record(rec);
        out.insert(out.end(), edges.begin(), edges.end());
    }
    return out;
}

SizeAnalysis analyze_sizes(const std::vector<EncodedEdgeRecord>& et_en,
                           const std::vector<HierRecord>& records, std::uint64_t n_nodes) {
    SizeAnalysis a;
    a.n_nodes = n_nodes;
    a.n_records = records.size();
    a.m_edges = et_en.size();
    a.d_avg = n_nodes == 0 ? 0.0
                           : static_cast<double>(a.m_edges) / static_cast<double>(n_nodes);
    for (const auto& rec : records) {
        a.sum_ops += rec.merged.size();
        for (const auto& og : rec.merged) a.sum_time_entries += og.times.size();
        a.sum_parents += rec.parents.size();
    }
    a.bytes_et_en = 4ull * 4ull * a.m_edges;
    a.bytes_et_hi =
        4ull * (a.sum_ops + a.sum_time_entries + a.sum_parents + 3ull * a.n_records + a.m_edges);
    a.applicable = a.bytes_et_hi < a.bytes_et_en;
    return a;
}

bool predict_applicability(std::uint64_t n_nodes, std::uint64_t m_edges) {
    if (n_nodes == 0) {
        raise(ErrorCode::InvalidArgument, "node count must be positive");
    }
    return m_edges >= 3 * n_nodes;
}

std::string merge_mapping_to_json(const MergeMapping& mmt) {
    json doc = json::object();
    for (const auto& [v, parents] : mmt) {
        doc[std::to_string(v)] = parents;
    }
    return doc.dump();
}

MergeMapping merge_mapping_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::CorruptArtifact, "merge mapping is not a JSON object");
    }
    MergeMapping mmt;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        Index v = 0;
        try {
            v = static_cast<Index>(std::stoul(it.key()));
        } catch (const std::exception&) {
            raise(ErrorCode::CorruptArtifact, "merge mapping key '" + it.key() + "'");
        }
        if (!it.value().is_array()) {
            raise(ErrorCode::CorruptArtifact, "merge mapping entry for v=" + it.key());
        }
        mmt.emplace(v, it.value().get<std::vector<Index>>());
    }
    return mmt;
}

}  // namespace dehydrator
