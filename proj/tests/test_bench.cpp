#include <doctest.h>

#include <filesystem>

#include "dehydrator/bench.hpp"
#include "test_support.hpp"

using namespace dehydrator;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("dehy_bench_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

GraphTables small_corpus(std::uint64_t seed) {
    SynthSpec spec;
    spec.n_nodes = 100;
    spec.n_edges = 500;
    spec.seed = seed;
    return generate(spec);
}

}  // namespace

TEST_CASE("lsr follows the defining formula") {
    CHECK(lsr(100, 40, 30) == doctest::Approx(2.0));
    CHECK(lsr(100, 100, 10) == doctest::Approx(0.0));
    CHECK(lsr(100, 160, 30) == doctest::Approx(-2.0));  // expansion is signalled, not hidden
    CHECK_THROWS_AS(lsr(100, 40, 0), Error);
}

TEST_CASE("pipeline report is internally consistent") {
    TempDir dir("pipeline");
    PipelineOptions options;
    options.capacity = Capacity::C1;
    options.training.max_epochs = 1;
    options.training.batch_size = 64;
    options.out_dir = dir.path.string();
    const StageReport report = run_pipeline(small_corpus(2), options);

    CHECK(report.bytes_et_raw > 0);
    CHECK(report.bytes_et_en_text > 0);
    CHECK(report.bytes_et_hi_text > 0);
    CHECK(report.bytes_mmt > 0);
    CHECK(report.bytes_checkpoint > 0);
    CHECK(report.bytes_ect > 0);
    CHECK(report.bp_pre == report.bytes_et_raw);
    CHECK(report.bp_post == report.bytes_mmt + report.bytes_checkpoint + report.bytes_ect);
    CHECK(report.seconds_fme >= 0.0);
    CHECK(report.seconds_he >= 0.0);
    CHECK(report.seconds_train > 0.0);
    CHECK(report.seconds_correct > 0.0);
    CHECK(!stage_report_to_json(report).empty());
}

TEST_CASE("dense corpora shrink through both encodings") {
    SynthSpec spec;
    spec.n_nodes = 400;
    spec.n_edges = 2000;  // average degree five
    spec.seed = 8;
    TempDir dir("dense");
    PipelineOptions options;
    options.capacity = Capacity::C1;
    options.training.max_epochs = 1;
    options.training.batch_size = 64;
    options.out_dir = dir.path.string();
    const StageReport report = run_pipeline(generate(spec), options);
    CHECK(report.bytes_et_en_text < report.bytes_et_raw);
    CHECK(report.bytes_et_hi_text < report.bytes_et_en_text);
    CHECK(report.analysis.applicable);
}

TEST_CASE("capacity sweep emits one point per label and a finite eta") {
    TempDir dir("sweep");
    PipelineOptions base;
    base.training.max_epochs = 1;
    base.training.batch_size = 64;
    base.out_dir = dir.path.string();
    const GraphTables tables = small_corpus(4);
    const SweepResult sweep = capacity_sweep(tables, {Capacity::C1, Capacity::C2}, base);
    REQUIRE(sweep.points.size() == 2);
    for (const auto& point : sweep.points) {
        CHECK(point.t_s > 0.0);
        CHECK(std::isfinite(point.lsr));
    }
    const std::string csv = sweep_to_csv(sweep);
    CHECK(csv.find("capacity,bp_pre,bp_post,t_s,lsr\n") == 0);
    CHECK(csv.find("C1,") != std::string::npos);
    CHECK(csv.find("C2,") != std::string::npos);
}

TEST_CASE("duplicate sweep labels are rejected") {
    PipelineOptions base;
    base.out_dir = "unused";
    CHECK_THROWS_AS(
        capacity_sweep(small_corpus(6), {Capacity::C1, Capacity::C1}, base), Error);
    CHECK_THROWS_AS(capacity_sweep(small_corpus(6), {Capacity::C1}, base), Error);
}
