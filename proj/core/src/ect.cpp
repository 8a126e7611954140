#include "dehydrator/ect.hpp"

#include <charconv>
#include <thread>

#include <nlohmann/json.hpp>

namespace dehydrator {

using nlohmann::json;

std::vector<TokenId> head_tokens(Index v) {
    return tokenize(std::to_string(v) + ",");
}

namespace {

Index head_of_record(const std::string& canonical) {
    const std::size_t comma = canonical.find(',');
    if (comma == std::string::npos || comma == 0) {
        raise(ErrorCode::CorruptRecord, "canonical record without head: " + canonical);
    }
    Index v = 0;
    const auto [ptr, ec] =
        std::from_chars(canonical.data(), canonical.data() + comma, v);
    if (ec != std::errc() || ptr != canonical.data() + comma) {
        raise(ErrorCode::CorruptRecord, "bad head in record: " + canonical);
    }
    return v;
}

struct HeadDiff {
    Index v{0};
    bool exact{true};
    bool length_mismatch{false};
    std::vector<CharFix> fixes;
    std::string produced;
};

HeadDiff diff_one(const Model& model, const std::string& canonical) {
    HeadDiff diff;
    diff.v = head_of_record(canonical);
    // Cap one past the canonical length: a longer generation can only land in
    // overflow, so there is no point continuing it.
    const GenerateResult gen =
        model.generate(head_tokens(diff.v), canonical.size() + 1, vocab::kEos);
    diff.produced = detokenize(gen.ids);
    if (diff.produced.size() != canonical.size()) {
        diff.exact = false;
        diff.length_mismatch = true;
        return diff;
    }
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        if (diff.produced[i] != canonical[i]) {
            diff.fixes.push_back({static_cast<std::uint32_t>(i), canonical[i]});
        }
    }
    diff.exact = diff.fixes.empty();
    return diff;
}

}  // namespace

CorrectionTable build_ect(const Model& model, const std::vector<std::string>& corpus,
                          int threads) {
    std::vector<HeadDiff> diffs(corpus.size());
    const int n_threads = std::max(1, threads);
    if (n_threads == 1 || corpus.size() < 2) {
        for (std::size_t i = 0; i < corpus.size(); ++i) diffs[i] = diff_one(model, corpus[i]);
    } else {
        std::vector<std::thread> pool;
        const std::size_t per =
            (corpus.size() + static_cast<std::size_t>(n_threads) - 1) /
            static_cast<std::size_t>(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            const std::size_t lo = std::min(static_cast<std::size_t>(t) * per, corpus.size());
            const std::size_t hi = std::min(lo + per, corpus.size());
            pool.emplace_back([&, lo, hi] {
                for (std::size_t i = lo; i < hi; ++i) diffs[i] = diff_one(model, corpus[i]);
            });
        }
        for (auto& th : pool) th.join();
    }

    CorrectionTable ect;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const HeadDiff& diff = diffs[i];
        if (diff.exact) continue;
        if (diff.length_mismatch) {
            ect.overflow[diff.v] = corpus[i];
        } else {
            ect.fixes[diff.v] = diff.fixes;
        }
    }

    // The exactness guarantee is the point of the table; verify it outright.
    // Generation is deterministic, so the strings captured above stand in for
    // a regeneration.
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (apply_ect(ect, diffs[i].v, diffs[i].produced) != corpus[i]) {
            raise(ErrorCode::CorruptArtifact,
                  "correction verify failed for head " + std::to_string(diffs[i].v));
        }
    }
    return ect;
}

std::string apply_ect(const CorrectionTable& ect, Index v, std::string generated) {
    auto of = ect.overflow.find(v);
    if (of != ect.overflow.end()) return of->second;
    auto fx = ect.fixes.find(v);
    if (fx == ect.fixes.end()) return generated;
    for (const CharFix& fix : fx->second) {
        if (fix.position >= generated.size()) {
            raise(ErrorCode::CorruptArtifact,
                  "fix position " + std::to_string(fix.position) + " past generated length for head " +
                      std::to_string(v));
        }
        generated[fix.position] = fix.correct;
    }
    return generated;
}

EctStats ect_stats(const CorrectionTable& ect, const std::vector<std::string>& corpus) {
    EctStats stats;
    stats.entries = ect.fixes.size() + ect.overflow.size();
    stats.overflow_count = ect.overflow.size();
    std::size_t mismatched_chars = 0;
    std::size_t total_chars = 0;
    for (const auto& [v, fixes] : ect.fixes) stats.fixes += fixes.size();
    for (const auto& record : corpus) {
        total_chars += record.size();
        const Index v = head_of_record(record);
        auto fx = ect.fixes.find(v);
        if (fx != ect.fixes.end()) mismatched_chars += fx->second.size();
        // A replaced record counts every character as mispredicted.
        if (ect.overflow.contains(v)) mismatched_chars += record.size();
    }
    stats.bytes = ect_to_json(ect).size();
    stats.char_error_rate =
        total_chars == 0 ? 0.0
                         : static_cast<double>(mismatched_chars) / static_cast<double>(total_chars);
    return stats;
}

std::string ect_to_json(const CorrectionTable& ect) {
    json fixes = json::object();
    for (const auto& [v, list] : ect.fixes) {
        json entries = json::array();
        for (const CharFix& fix : list) {
            entries.push_back({fix.position, std::string(1, fix.correct)});
        }
        fixes[std::to_string(v)] = std::move(entries);
    }
    json overflow = json::object();
    for (const auto& [v, record] : ect.overflow) {
        overflow[std::to_string(v)] = record;
    }
    json doc;
    doc["fixes"] = std::move(fixes);
    doc["overflow"] = std::move(overflow);
    return doc.dump();
}

CorrectionTable ect_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("fixes") ||
        !doc.contains("overflow")) {
        raise(ErrorCode::CorruptArtifact, "bad correction table document");
    }
    CorrectionTable ect;
    for (auto it = doc["fixes"].begin(); it != doc["fixes"].end(); ++it) {
        std::vector<CharFix> list;
        for (const auto& entry : it.value()) {
            if (!entry.is_array() || entry.size() != 2 || !entry[1].is_string() ||
                entry[1].get<std::string>().size() != 1) {
                raise(ErrorCode::CorruptArtifact, "bad fix entry for head " + it.key());
            }
            list.push_back({entry[0].get<std::uint32_t>(), entry[1].get<std::string>()[0]});
        }
        ect.fixes[static_cast<Index>(std::stoul(it.key()))] = std::move(list);
    }
    for (auto it = doc["overflow"].begin(); it != doc["overflow"].end(); ++it) {
        ect.overflow[static_cast<Index>(std::stoul(it.key()))] = it.value().get<std::string>();
    }
    return ect;
}

}  // namespace dehydrator
