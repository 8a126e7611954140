#include "dehydrator/bench.hpp"

#include <chrono>
#include <filesystem>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dehydrator/store.hpp"

namespace dehydrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t size_of_file(const fs::path& path) {
    return static_cast<std::uint64_t>(fs::file_size(path));
}

}  // namespace

StageReport run_pipeline(const GraphTables& tables, const PipelineOptions& options) {
    if (options.out_dir.empty()) {
        raise(ErrorCode::InvalidArgument, "run_pipeline requires an output directory");
    }
    StageReport report;

    {
        std::ostringstream raw;
        write_edges_csv(raw, tables.edges);
        report.bytes_et_raw = raw.str().size();
        report.bp_pre = report.bytes_et_raw;
    }

    // Field mapping encoding.
    const auto t_fme = Clock::now();
    MappingTable mt = build_mapping(tables);
    EncodedTables encoded = encode_fields(tables, mt);
    report.seconds_fme = seconds_since(t_fme);
    {
        std::ostringstream text;
        write_encoded_edges_csv(text, encoded.edges);
        report.bytes_et_en_text = text.str().size();
    }

    // Hierarchical encoding.
    const auto t_he = Clock::now();
    auto [records, mmt] = hierarchical_encode(encoded.edges);
    std::vector<std::string> corpus;
    corpus.reserve(records.size());
    std::uint64_t max_record_len = 0;
    for (const auto& record : records) {
        corpus.push_back(render(record));
        max_record_len = std::max<std::uint64_t>(max_record_len, corpus.back().size());
        report.bytes_et_hi_text += corpus.back().size();
    }
    report.seconds_he = seconds_since(t_he);
    report.analysis = analyze_sizes(encoded.edges, records, tables.nodes.size());

    // Model training.
    const auto t_train = Clock::now();
    SegmentedCorpus segments = segment(corpus);
    Model model(ModelConfig::for_capacity(options.capacity,
                                          static_cast<int>(segments.L), options.seed));
    TrainOptions train_opts = options.training;
    train_opts.threads = options.threads;
    report.train = train(model, segments, train_opts);
    report.seconds_train = seconds_since(t_train);

    // Error correction, then persistence under the same clock.
    const auto t_correct = Clock::now();
    CorrectionTable ect = build_ect(model, corpus, options.threads);

    BuildArtifacts artifacts;
    artifacts.mt = std::move(mt);
    artifacts.nt_en = std::move(encoded.nodes);
    artifacts.mmt = std::move(mmt);
    artifacts.et_hi = std::move(corpus);
    artifacts.model = &model;
    artifacts.ect = std::move(ect);
    artifacts.stats.n_nodes = tables.nodes.size();
    artifacts.stats.m_edges = tables.edges.size();
    artifacts.stats.segment_length = segments.L;
    artifacts.stats.d_avg = report.analysis.d_avg;
    artifacts.stats.max_record_len = max_record_len;
    save_build(options.out_dir, artifacts);
    report.seconds_correct = seconds_since(t_correct);

    const fs::path base(options.out_dir);
    report.bytes_mmt = size_of_file(base / "mmt.json");
    report.bytes_checkpoint = size_of_file(base / "model.ckpt");
    report.bytes_ect = size_of_file(base / "ect.json");
    report.bp_post = report.bytes_mmt + report.bytes_checkpoint + report.bytes_ect;
    return report;
}

double lsr(double bp_pre, double bp_post, double t_s) {
    if (t_s <= 0.0) {
        raise(ErrorCode::ZeroDuration, "storage latency must be positive");
    }
    return (bp_pre - bp_post) / t_s;
}

SweepResult capacity_sweep(const GraphTables& tables, const std::vector<Capacity>& labels,
                           const PipelineOptions& base) {
    if (labels.size() < 2) {
        raise(ErrorCode::InvalidArgument, "capacity sweep needs at least two labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            if (labels[i] == labels[j]) {
                raise(ErrorCode::InvalidArgument,
                      std::string("duplicate capacity label ") +
                          capacity_row(labels[i]).label);
            }
        }
    }
    if (base.out_dir.empty()) {
        raise(ErrorCode::InvalidArgument, "capacity sweep requires an output directory");
    }

    SweepResult sweep;
    double best = -std::numeric_limits<double>::infinity();
    for (Capacity label : labels) {
        PipelineOptions options = base;
        options.capacity = label;
        options.out_dir =
            (fs::path(base.out_dir) / capacity_row(label).label).string();
        const StageReport report = run_pipeline(tables, options);
        LsrPoint point;
        point.capacity = label;
        point.bp_pre = report.bp_pre;
        point.bp_post = report.bp_post;
        point.t_s = report.total_seconds();
        point.lsr = lsr(static_cast<double>(point.bp_pre), static_cast<double>(point.bp_post),
                        point.t_s);
        if (point.lsr > best) {
            best = point.lsr;
            sweep.eta = label;
        }
        sweep.points.push_back(point);
    }
    return sweep;
}

std::string sweep_to_csv(const SweepResult& sweep) {
    std::ostringstream out;
    out << "capacity,bp_pre,bp_post,t_s,lsr\n";
    for (const LsrPoint& point : sweep.points) {
        out << capacity_row(point.capacity).label << ',' << point.bp_pre << ',' << point.bp_post
            << ',' << point.t_s << ',' << point.lsr << '\n';
    }
    return out.str();
}

std::string stage_report_to_json(const StageReport& report) {
    json doc;
    doc["bytes"] = {{"et_raw", report.bytes_et_raw},
                    {"et_en_text", report.bytes_et_en_text},
                    {"et_hi_text", report.bytes_et_hi_text},
                    {"mmt", report.bytes_mmt},
                    {"checkpoint", report.bytes_checkpoint},
                    {"ect", report.bytes_ect}};
    doc["seconds"] = {{"fme", report.seconds_fme},
                      {"he", report.seconds_he},
                      {"train", report.seconds_train},
                      {"correct", report.seconds_correct}};
    doc["bp_pre"] = report.bp_pre;
    doc["bp_post"] = report.bp_post;
    doc["train"] = {{"epochs_run", report.train.epochs_run},
                    {"epoch_losses", report.train.epoch_losses},
                    {"early_stopped", report.train.early_stopped},
                    {"wall_seconds", report.train.wall_seconds}};
    doc["analysis"] = {{"n_nodes", report.analysis.n_nodes},
                       {"n_records", report.analysis.n_records},
                       {"m_edges", report.analysis.m_edges},
                       {"d_avg", report.analysis.d_avg},
                       {"bytes_et_en", report.analysis.bytes_et_en},
                       {"bytes_et_hi", report.analysis.bytes_et_hi},
                       {"applicable", report.analysis.applicable}};
    return doc.dump(2);
}

}  // namespace dehydrator
