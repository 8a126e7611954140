// Storage/latency measurement: the staged pipeline runner (field mapping
// encoding, hierarchical encoding, training, correction), the
// latency-to-storage ratio, and capacity sweeps.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dehydrator/memorizer.hpp"
#include "dehydrator/query.hpp"
#include "dehydrator/synthgen.hpp"

namespace dehydrator {

struct PipelineOptions {
    Capacity capacity{Capacity::C2};
    TrainOptions training;
    std::uint64_t seed{0};
    int threads{1};
    std::string out_dir;  // build artifacts land here
};

struct StageReport {
    // Text sizes use the canonical writers: CSV with header for the edge
    // tables, concatenated record payload for ET_hi.
    std::uint64_t bytes_et_raw{0};
    std::uint64_t bytes_et_en_text{0};
    std::uint64_t bytes_et_hi_text{0};
    std::uint64_t bytes_mmt{0};
    std::uint64_t bytes_checkpoint{0};
    std::uint64_t bytes_ect{0};
    // Correct includes error-table construction plus artifact persistence and
    // manifest digesting.
    double seconds_fme{0.0};
    double seconds_he{0.0};
    double seconds_train{0.0};
    double seconds_correct{0.0};
    std::uint64_t bp_pre{0};   // bytes of the raw edge table text
    std::uint64_t bp_post{0};  // MMT + checkpoint + ECT bytes
    TrainReport train;
    SizeAnalysis analysis;

    double total_seconds() const {
        return seconds_fme + seconds_he + seconds_train + seconds_correct;
    }
};

StageReport run_pipeline(const GraphTables& tables, const PipelineOptions& options);

// (bp_pre - bp_post) / t_s in bytes per second; negative when the pipeline
// expanded the data. Throws ZeroDuration when t_s <= 0.
double lsr(double bp_pre, double bp_post, double t_s);

struct LsrPoint {
    Capacity capacity{Capacity::C1};
    std::uint64_t bp_pre{0};
    std::uint64_t bp_post{0};
    double t_s{0.0};
    double lsr{0.0};
};

struct SweepResult {
    std::vector<LsrPoint> points;
    Capacity eta{Capacity::C1};  // argmax LSR
};

// One full pipeline per label on identical input, run sequentially. Labels
// must be distinct and at least two.
SweepResult capacity_sweep(const GraphTables& tables, const std::vector<Capacity>& labels,
                           const PipelineOptions& base);

std::string sweep_to_csv(const SweepResult& sweep);

std::string stage_report_to_json(const StageReport& report);

}  // namespace dehydrator
