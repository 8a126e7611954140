#include <doctest.h>

#include <filesystem>
#include <random>

#include "dehydrator/serializer.hpp"
#include "test_support.hpp"

using namespace dehydrator;

namespace {

HierRecord example_record() {
    HierRecord rec;
    rec.v = 2;
    rec.start_time = 0;
    rec.end_time = 1;
    rec.parents = {1, 3};
    rec.merged = {
        {0, {{0, {{0, 0, 1}}}}},
        {1, {{1, {{1, 1, 1}}}}},
    };
    return rec;
}

HierRecord random_record(std::mt19937_64& rng) {
    HierRecord rec;
    rec.v = static_cast<Index>(rng() % 10000);
    rec.start_time = rng() % 5000;
    const std::size_t n_parents = 1 + rng() % 12;
    for (std::size_t i = 0; i < n_parents; ++i) {
        rec.parents.push_back(static_cast<Index>(rng() % 10000));
    }
    std::uint64_t max_toff = 0;
    const std::size_t n_ops = 1 + rng() % 3;
    Index op = 0;
    for (std::size_t oi = 0; oi < n_ops; ++oi) {
        OpGroup og;
        op += static_cast<Index>(rng() % 3);
        og.op_idx = op;
        op += 1;
        std::uint64_t toff = 0;
        const std::size_t n_times = 1 + rng() % 4;
        for (std::size_t ti = 0; ti < n_times; ++ti) {
            TimeGroup tg;
            // The first group of the first operation sits at the start time.
            if (oi != 0 || ti != 0) toff += rng() % 50;
            tg.time_offset = toff;
            toff += 1;
            std::vector<std::uint32_t> offsets;
            const std::size_t n_items = 1 + rng() % 6;
            for (std::size_t k = 0; k < n_items; ++k) {
                const auto value = static_cast<std::uint32_t>(rng() % n_parents);
                offsets.push_back(value);
                if (rng() % 4 == 0) offsets.push_back(value);  // duplicates
            }
            tg.offsets = compact_offsets(std::move(offsets));
            max_toff = std::max(max_toff, tg.time_offset);
            og.times.push_back(std::move(tg));
        }
        rec.merged.push_back(std::move(og));
    }
    rec.end_time = rec.start_time + max_toff;
    return rec;
}

}  // namespace

TEST_CASE("render produces the documented canonical form") {
    CHECK(render(example_record()) == "2,0,1,[1,3],[0:[0:[0]];1:[1:[1]]]$");
}

TEST_CASE("singleton record keeps start == end in the text") {
    HierRecord rec;
    rec.v = 9;
    rec.start_time = 17;
    rec.end_time = 17;
    rec.parents = {4};
    rec.merged = {{2, {{0, {{0, 0, 1}}}}}};
    CHECK(render(rec) == "9,17,17,[4],[2:[0:[0]]]$");
}

TEST_CASE("multiplicity two renders in explicit range form") {
    HierRecord rec;
    rec.v = 3;
    rec.start_time = 10;
    rec.end_time = 10;
    rec.parents = {5};
    rec.merged = {{0, {{0, {{0, 0, 2}}}}}};
    const std::string text = render(rec);
    CHECK(text.find("[0-0x2]") != std::string::npos);
    CHECK(parse_record(text) == rec);
}

TEST_CASE("parse inverts render on the examples") {
    CHECK(parse_record(render(example_record())) == example_record());
}

TEST_CASE("parse rejects empty parents") {
    try {
        parse_record("2,0,1,[],[0:[0:[0]]]$");
        FAIL("expected SyntaxError");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::SyntaxError);
    }
}

TEST_CASE("parse reports the failing position") {
    try {
        parse_record("2,0,Z");
        FAIL("expected SyntaxError");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::SyntaxError);
        CHECK(std::string(err.what()).find("position 4") != std::string::npos);
    }
}

TEST_CASE("grammar fuzz: parse after render is the identity") {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 300; ++i) {
        const HierRecord rec = random_record(rng);
        CHECK(parse_record(render(rec)) == rec);
    }
}

TEST_CASE("tokenize follows the fixed vocabulary order") {
    CHECK(tokenize("2,0") == std::vector<TokenId>{2, 10, 0});
    CHECK(detokenize(tokenize("2,0,1,[1,3],[0:[0:[0]];1:[1:[1]]]$")) ==
          "2,0,1,[1,3],[0:[0:[0]];1:[1:[1]]]$");
}

TEST_CASE("non-vocabulary characters are rejected") {
    try {
        tokenize("Z");
        FAIL("expected UnknownSymbol");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::UnknownSymbol);
    }
}

TEST_CASE("vocabulary is 21 dense token ids") {
    CHECK(vocab::symbols().size() == vocab::kSize);
    CHECK(vocab::kSize == 21);
    // The display characters are distinct.
    for (int i = 0; i < vocab::kSize; ++i) {
        for (int j = i + 1; j < vocab::kSize; ++j) {
            CHECK(vocab::symbols()[static_cast<std::size_t>(i)] !=
                  vocab::symbols()[static_cast<std::size_t>(j)]);
        }
    }
}

TEST_CASE("segment length is the corpus minimum") {
    const std::vector<std::string> corpus = {
        std::string(23, '1').substr(0, 22) + "$",
        std::string(39, '2') + "$",
        std::string(30, '3') + "$",
    };
    const SegmentedCorpus seg = segment(corpus);
    CHECK(seg.L == 23);
}

TEST_CASE("single record of its own length yields one unpadded window") {
    const SegmentedCorpus seg = segment({"1,2,3,4$"});
    CHECK(seg.L == 8);
    CHECK(seg.segment_count() == 1);
    const TokenId* window = seg.segment(0);
    CHECK(window[0] == vocab::kBos);
    for (std::size_t i = 0; i <= seg.L; ++i) CHECK(window[i] != vocab::kPad);
}

TEST_CASE("record of twice the segment length gets two unpadded windows") {
    const std::string shorter = "123456789012345$";  // 16 chars -> L
    const std::string longer = "1234567890123456789012345678901$";  // 32 chars
    const SegmentedCorpus seg = segment({shorter, longer});
    REQUIRE(seg.L == 16);
    REQUIRE(seg.spans[1].segment_count == 2);
    for (std::size_t w = 0; w < 2; ++w) {
        const TokenId* window = seg.segment(seg.spans[1].first_segment + w);
        for (std::size_t i = 0; i <= seg.L; ++i) CHECK(window[i] != vocab::kPad);
    }
    // Windows share the boundary token.
    const TokenId* w0 = seg.segment(seg.spans[1].first_segment);
    const TokenId* w1 = seg.segment(seg.spans[1].first_segment + 1);
    CHECK(w0[seg.L] == w1[0]);
}

TEST_CASE("reconstruction restores every record") {
    std::mt19937_64 rng(77);
    std::vector<std::string> corpus;
    for (int i = 0; i < 40; ++i) corpus.push_back(render(random_record(rng)));
    const SegmentedCorpus seg = segment(corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(seg.reconstruct(i) == corpus[i]);
    }
}

TEST_CASE("heads are prefix-free over a rendered corpus") {
    std::mt19937_64 rng(99);
    std::vector<std::string> corpus;
    std::vector<std::string> heads;
    for (int i = 0; i < 60; ++i) {
        HierRecord rec = random_record(rng);
        rec.v = static_cast<Index>(i * 7 + 1);  // distinct heads
        corpus.push_back(render(rec));
        heads.push_back(std::to_string(rec.v) + ",");
    }
    for (std::size_t i = 0; i < heads.size(); ++i) {
        for (std::size_t j = 0; j < heads.size(); ++j) {
            if (i == j) continue;
            CHECK(heads[j].rfind(heads[i], 0) != 0);
        }
    }
    (void)corpus;
}

TEST_CASE("corpus file round trip") {
    std::mt19937_64 rng(5);
    std::vector<std::string> corpus;
    for (int i = 0; i < 25; ++i) corpus.push_back(render(random_record(rng)));
    const std::string path =
        (std::filesystem::temp_directory_path() / "dehy_test_corpus.txt").string();
    write_corpus_file(path, corpus);
    CHECK(read_corpus_file(path) == corpus);
    std::filesystem::remove(path);
}
