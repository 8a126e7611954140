// Versioned persistence for the build artifacts plus the manifest whose
// digests bind them together. Layout inside a build directory:
//   manifest.json mt.json nt_en.csv mmt.json et_hi.txt model.ckpt ect.json
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dehydrator/ect.hpp"
#include "dehydrator/field_codec.hpp"
#include "dehydrator/hier_codec.hpp"
#include "dehydrator/memorizer.hpp"

namespace dehydrator {

inline constexpr int kManifestVersion = 1;

struct CorpusStats {
    std::uint64_t n_nodes{0};
    std::uint64_t m_edges{0};
    std::uint32_t segment_length{0};   // L
    double d_avg{0.0};
    std::uint64_t max_record_len{0};   // longest canonical string, caps generation

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

struct BuildManifest {
    int format_version{kManifestVersion};
    std::string created;  // ISO-8601, informational only
    std::map<std::string, std::string> digests;  // artifact file -> sha256 hex
    CorpusStats stats;
};

struct BuildArtifacts {
    MappingTable mt;
    std::vector<EncodedNodeRecord> nt_en;
    MergeMapping mmt;
    std::vector<std::string> et_hi;  // canonical record strings
    const Model* model{nullptr};
    CorrectionTable ect;
    CorpusStats stats;
};

BuildManifest save_build(const std::string& dir, const BuildArtifacts& artifacts);

struct LoadedBuild {
    MappingTable mt;
    std::vector<EncodedNodeRecord> nt_en;
    MergeMapping mmt;
    Model model;
    CorrectionTable ect;
    BuildManifest manifest;
};

// Cross-checks every artifact against its manifest digest; throws
// DigestMismatch/VersionMismatch on any deviation.
LoadedBuild load_build(const std::string& dir);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Table writers (the ingest parsers are their inverses).
void write_nodes_csv(std::ostream& out, const std::vector<NodeRecord>& nodes);
void write_edges_csv(std::ostream& out, const std::vector<EdgeRecord>& edges);
void write_nodes_jsonl(std::ostream& out, const std::vector<NodeRecord>& nodes);
void write_edges_jsonl(std::ostream& out, const std::vector<EdgeRecord>& edges);

void write_encoded_nodes_csv(std::ostream& out, const std::vector<EncodedNodeRecord>& nodes);
std::vector<EncodedNodeRecord> read_encoded_nodes_csv(std::istream& in);
void write_encoded_edges_csv(std::ostream& out, const std::vector<EncodedEdgeRecord>& edges);

}  // namespace dehydrator
