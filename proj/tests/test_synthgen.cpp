#include <doctest.h>

#include <map>
#include <set>

#include "dehydrator/ingest.hpp"
#include "dehydrator/synthgen.hpp"

using namespace dehydrator;

TEST_CASE("generated tables hit the requested counts exactly") {
    SynthSpec spec;
    spec.n_nodes = 2000;
    spec.n_edges = 2000;
    spec.seed = 3;
    const GraphTables tables = generate(spec);
    CHECK(tables.nodes.size() == 2000);
    CHECK(tables.edges.size() == 2000);
    const double d_avg =
        static_cast<double>(tables.edges.size()) / static_cast<double>(tables.nodes.size());
    CHECK(d_avg == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("average degree five comes out within one percent") {
    SynthSpec spec;
    spec.n_nodes = 2000;
    spec.n_edges = 10000;
    spec.seed = 7;
    const GraphTables tables = generate(spec);
    const double d_avg =
        static_cast<double>(tables.edges.size()) / static_cast<double>(tables.nodes.size());
    CHECK(d_avg == doctest::Approx(5.0).epsilon(0.01));
}

TEST_CASE("same seed reproduces identical tables") {
    SynthSpec spec;
    spec.n_nodes = 500;
    spec.n_edges = 1500;
    spec.seed = 42;
    CHECK(generate(spec) == generate(spec));
}

TEST_CASE("different seeds differ") {
    SynthSpec spec;
    spec.n_nodes = 500;
    spec.n_edges = 1500;
    spec.seed = 1;
    SynthSpec other = spec;
    other.seed = 2;
    CHECK_FALSE(generate(spec) == generate(other));
}

TEST_CASE("referential integrity holds by construction") {
    SynthSpec spec;
    spec.n_nodes = 800;
    spec.n_edges = 4000;
    spec.seed = 11;
    const GraphTables tables = generate(spec);
    CHECK(validate_graph(tables).empty());
}

TEST_CASE("operations are consistent with the destination type") {
    SynthSpec spec;
    spec.n_nodes = 600;
    spec.n_edges = 3000;
    spec.seed = 13;
    const GraphTables tables = generate(spec);
    std::map<std::string, NodeType> types;
    for (const auto& node : tables.nodes) types[node.identi_id] = node.node_type;
    for (const auto& edge : tables.edges) {
        const NodeType dst_type = types.at(edge.dst_id);
        switch (dst_type) {
            case NodeType::File:
                CHECK((edge.operation == Operation::Write ||
                       edge.operation == Operation::Execute));
                break;
            case NodeType::Process:
                CHECK((edge.operation == Operation::Read ||
                       edge.operation == Operation::Sendto ||
                       edge.operation == Operation::Fork));
                break;
            case NodeType::Socket:
                CHECK((edge.operation == Operation::Sendto ||
                       edge.operation == Operation::Recvfr));
                break;
        }
    }
}

TEST_CASE("identifiers are unique and at least eight characters") {
    SynthSpec spec;
    spec.n_nodes = 3000;
    spec.n_edges = 3000;
    spec.seed = 17;
    const GraphTables tables = generate(spec);
    std::set<std::string> ids;
    for (const auto& node : tables.nodes) {
        CHECK(node.identi_id.size() >= 8);
        ids.insert(node.identi_id);
    }
    CHECK(ids.size() == tables.nodes.size());
}

TEST_CASE("infeasible specs are rejected") {
    SynthSpec spec;
    spec.n_nodes = 0;
    spec.n_edges = 10;
    CHECK_THROWS_AS(generate(spec), Error);

    SynthSpec bad_ratio;
    bad_ratio.n_nodes = 10;
    bad_ratio.n_edges = 10;
    bad_ratio.process_ratio = 0;
    bad_ratio.file_ratio = 0;
    bad_ratio.socket_ratio = 0;
    CHECK_THROWS_AS(generate(bad_ratio), Error);
}

TEST_CASE("p_series fixes the edge count and sweeps degrees one to five") {
    const auto series = p_series(10000, 5);
    REQUIRE(series.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(series[i].edges.size() == 10000);
        const double d_avg = static_cast<double>(series[i].edges.size()) /
                             static_cast<double>(series[i].nodes.size());
        CHECK(d_avg == doctest::Approx(static_cast<double>(i + 1)).epsilon(0.01));
    }
}

TEST_CASE("timestamps are bursty enough to repeat") {
    SynthSpec spec;
    spec.n_nodes = 200;
    spec.n_edges = 2000;
    spec.seed = 23;
    const GraphTables tables = generate(spec);
    std::set<std::uint64_t> distinct;
    for (const auto& edge : tables.edges) distinct.insert(edge.timestamp);
    CHECK(distinct.size() < tables.edges.size());
}
