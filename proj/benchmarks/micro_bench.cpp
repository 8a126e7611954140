// Microbenchmarks for the hot paths: field codec, hierarchical codec, record
// grammar, model forward, and greedy generation.
#include <benchmark/benchmark.h>

#include <sstream>

#include "dehydrator/bench.hpp"
#include "dehydrator/ect.hpp"
#include "dehydrator/synthgen.hpp"

namespace {

using namespace dehydrator;

GraphTables bench_tables() {
    SynthSpec spec;
    spec.n_nodes = 4000;
    spec.n_edges = 20000;
    spec.seed = 1;
    return generate(spec);
}

void BM_FieldEncode(benchmark::State& state) {
    const GraphTables tables = bench_tables();
    const MappingTable mt = build_mapping(tables);
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode_fields(tables, mt));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(tables.edges.size()));
}
BENCHMARK(BM_FieldEncode);

void BM_HierEncode(benchmark::State& state) {
    const GraphTables tables = bench_tables();
    const MappingTable mt = build_mapping(tables);
    const EncodedTables encoded = encode_fields(tables, mt);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hierarchical_encode(encoded.edges));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(encoded.edges.size()));
}
BENCHMARK(BM_HierEncode);

void BM_HierDecode(benchmark::State& state) {
    const GraphTables tables = bench_tables();
    const MappingTable mt = build_mapping(tables);
    const EncodedTables encoded = encode_fields(tables, mt);
    const auto [records, mmt] = hierarchical_encode(encoded.edges);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hierarchical_decode(records));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(encoded.edges.size()));
}
BENCHMARK(BM_HierDecode);

void BM_RenderParse(benchmark::State& state) {
    const GraphTables tables = bench_tables();
    const MappingTable mt = build_mapping(tables);
    const EncodedTables encoded = encode_fields(tables, mt);
    const auto [records, mmt] = hierarchical_encode(encoded.edges);
    for (auto _ : state) {
        for (const auto& record : records) {
            benchmark::DoNotOptimize(parse_record(render(record)));
        }
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_RenderParse);

void BM_ModelForward(benchmark::State& state) {
    const ModelConfig cfg =
        ModelConfig::for_capacity(static_cast<Capacity>(state.range(0)), 32, 7);
    const Model model(cfg);
    std::vector<TokenId> ids;
    for (int i = 0; i < 32; ++i) ids.push_back(static_cast<TokenId>(i % 17));
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(ids));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 32);
}
BENCHMARK(BM_ModelForward)->Arg(0)->Arg(1)->Arg(2);

void BM_Generate(benchmark::State& state) {
    const ModelConfig cfg = ModelConfig::for_capacity(Capacity::C1, 24, 7);
    const Model model(cfg);
    const auto head = head_tokens(1234);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.generate(head, 128, vocab::kEos));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 128);
}
BENCHMARK(BM_Generate);

}  // namespace

BENCHMARK_MAIN();
