#include <doctest.h>

#include "dehydrator/hier_codec.hpp"
#include "test_support.hpp"

using namespace dehydrator;

TEST_CASE("range compaction matches the documented example") {
    // [1,2,3,5,7,8,9] -> [1-3, 5, 7-9]
    const RangeList ranges = compact_offsets({1, 2, 3, 5, 7, 8, 9});
    REQUIRE(ranges.size() == 3);
    CHECK(ranges[0] == RangeEntry{1, 3, 1});
    CHECK(ranges[1] == RangeEntry{5, 5, 1});
    CHECK(ranges[2] == RangeEntry{7, 9, 1});
}

TEST_CASE("range compaction keeps multiplicities separate") {
    const RangeList ranges = compact_offsets({0, 0, 1});
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0] == RangeEntry{0, 0, 2});
    CHECK(ranges[1] == RangeEntry{1, 1, 1});

    // Equal multiplicities coalesce maximally.
    const RangeList merged = compact_offsets({4, 4, 5, 5});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0] == RangeEntry{4, 5, 2});
}

TEST_CASE("two-edge walkthrough groups into a single record") {
    // Encoded form of [v1 v2 4213 FORK], [v3 v2 4214 READ].
    const std::vector<EncodedEdgeRecord> edges = {
        {1, 2, 4213, 0},
        {3, 2, 4214, 1},
    };
    const auto [records, mmt] = hierarchical_encode(edges);
    REQUIRE(records.size() == 1);
    const HierRecord& rec = records[0];
    CHECK(rec.v == 2);
    CHECK(rec.start_time == 4213);
    CHECK(rec.end_time == 4214);
    CHECK(rec.parents == std::vector<Index>{1, 3});
    REQUIRE(rec.merged.size() == 2);
    CHECK(rec.merged[0].op_idx == 0);
    REQUIRE(rec.merged[0].times.size() == 1);
    CHECK(rec.merged[0].times[0].time_offset == 0);
    CHECK(rec.merged[0].times[0].offsets == RangeList{{0, 0, 1}});
    CHECK(rec.merged[1].op_idx == 1);
    CHECK(rec.merged[1].times[0].time_offset == 1);
    CHECK(rec.merged[1].times[0].offsets == RangeList{{1, 1, 1}});

    REQUIRE(mmt.size() == 1);
    CHECK(mmt.at(2) == std::vector<Index>{1, 3});

    // The decode side restores the original pair.
    CHECK(testing::encoded_multiset(hierarchical_decode(records)) ==
          testing::encoded_multiset(edges));
}

TEST_CASE("single edge groups trivially") {
    const std::vector<EncodedEdgeRecord> edges = {{7, 9, 55, 2}};
    const auto [records, mmt] = hierarchical_encode(edges);
    REQUIRE(records.size() == 1);
    CHECK(records[0].start_time == 55);
    CHECK(records[0].end_time == 55);
    CHECK(records[0].parents == std::vector<Index>{7});
    CHECK(records[0].merged[0].times[0].offsets == RangeList{{0, 0, 1}});
}

TEST_CASE("duplicate events expand with their multiplicity") {
    HierRecord rec;
    rec.v = 3;
    rec.start_time = 10;
    rec.end_time = 10;
    rec.parents = {5};
    rec.merged = {{0, {{0, {{0, 0, 2}}}}}};
    const auto edges = expand_record(rec);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0] == edges[1]);
    CHECK(edges[0] == EncodedEdgeRecord{5, 3, 10, 0});
}

TEST_CASE("node offset past the parents list is corrupt") {
    HierRecord rec;
    rec.v = 1;
    rec.start_time = 0;
    rec.end_time = 0;
    rec.parents = {2, 3, 4};
    rec.merged = {{0, {{0, {{5, 5, 1}}}}}};
    try {
        expand_record(rec);
        FAIL("expected CorruptRecord");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::CorruptRecord);
    }
}

TEST_CASE("records come out ordered by destination with consistent mapping") {
    const auto edges = testing::random_encoded_edges(11, 500, 40, 4, 200);
    const auto [records, mmt] = hierarchical_encode(edges);
    REQUIRE(!records.empty());
    for (std::size_t i = 1; i < records.size(); ++i) {
        CHECK(records[i - 1].v < records[i].v);
    }
    CHECK(mmt.size() == records.size());
    for (const auto& rec : records) {
        CHECK(mmt.at(rec.v) == rec.parents);
        // Every parent is referenced at least once.
        std::vector<bool> seen(rec.parents.size(), false);
        for (const auto& og : rec.merged) {
            for (const auto& tg : og.times) {
                for (const auto& r : tg.offsets) {
                    for (std::uint32_t off = r.lo; off <= r.hi; ++off) seen[off] = true;
                }
            }
        }
        for (bool s : seen) CHECK(s);
    }
}

TEST_CASE("round trip over random corpora is lossless") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto edges = testing::random_encoded_edges(seed, 800, 60, 4, 300);
        const auto [records, mmt] = hierarchical_encode(edges);
        CHECK(testing::encoded_multiset(hierarchical_decode(records)) ==
              testing::encoded_multiset(edges));
    }
}

TEST_CASE("size model: ten edges occupy 160 bytes before grouping") {
    const auto edges = testing::random_encoded_edges(3, 10, 6, 3, 50);
    const auto [records, mmt] = hierarchical_encode(edges);
    const SizeAnalysis analysis = analyze_sizes(edges, records, 6);
    CHECK(analysis.bytes_et_en == 160);
}

TEST_CASE("size model: star graph with three distinct incoming edges") {
    // One center with three parents, distinct operations and times.
    const std::vector<EncodedEdgeRecord> edges = {
        {1, 0, 10, 0},
        {2, 0, 11, 1},
        {3, 0, 12, 2},
    };
    const auto [records, mmt] = hierarchical_encode(edges);
    const SizeAnalysis analysis = analyze_sizes(edges, records, 4);
    CHECK(analysis.d_avg == doctest::Approx(0.75));
    // Hand expansion: ops 3, time entries 3, parents 3, header 3, offsets 3.
    CHECK(analysis.bytes_et_hi == 4 * (3 + 3 + 3 + 3 + 3));
    CHECK(analysis.bytes_et_en == 4 * 4 * 3);
    CHECK_FALSE(analysis.applicable);
}

TEST_CASE("applicability threshold sits at average degree three") {
    CHECK(predict_applicability(1000000, 13244643));
    CHECK_FALSE(predict_applicability(10, 29));
    CHECK(predict_applicability(10, 30));
}
