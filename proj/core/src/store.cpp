#include "dehydrator/store.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "csv.hpp"

namespace dehydrator {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Digests
// ---------------------------------------------------------------------------

namespace {

std::string digest_to_hex(const unsigned char* digest, unsigned int len) {
    static const char* hex = "0123456789abcdef";
    std::string out(len * 2, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0xF];
    }
    return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
        raise(ErrorCode::IoError, "sha256 failed");
    }
    return digest_to_hex(digest, len);
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) raise(ErrorCode::IoError, "sha256 context");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buffer[1 << 16];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
        if (!in) break;
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    return digest_to_hex(digest, len);
}

// ---------------------------------------------------------------------------
// Table writers
// ---------------------------------------------------------------------------

void write_nodes_csv(std::ostream& out, const std::vector<NodeRecord>& nodes) {
    out << "identi_id,name,type\n";
    for (const auto& node : nodes) {
        csv::write_row(out, {node.identi_id, node.name, to_string(node.node_type)});
    }
}

void write_edges_csv(std::ostream& out, const std::vector<EdgeRecord>& edges) {
    out << "src_id,dst_id,timestamp,operation\n";
    for (const auto& edge : edges) {
        csv::write_row(out, {edge.src_id, edge.dst_id, std::to_string(edge.timestamp),
                             to_string(edge.operation)});
    }
}

void write_nodes_jsonl(std::ostream& out, const std::vector<NodeRecord>& nodes) {
    for (const auto& node : nodes) {
        json obj;
        obj["identi_id"] = node.identi_id;
        obj["name"] = node.name;
        obj["type"] = to_string(node.node_type);
        out << obj.dump() << '\n';
    }
}

void write_edges_jsonl(std::ostream& out, const std::vector<EdgeRecord>& edges) {
    for (const auto& edge : edges) {
        json obj;
        obj["src_id"] = edge.src_id;
        obj["dst_id"] = edge.dst_id;
        obj["timestamp"] = edge.timestamp;
        obj["operation"] = to_string(edge.operation);
        out << obj.dump() << '\n';
    }
}

void write_encoded_nodes_csv(std::ostream& out, const std::vector<EncodedNodeRecord>& nodes) {
    out << "id_idx,name_idx,type_idx\n";
    for (const auto& rec : nodes) {
        out << rec.id_idx << ',' << rec.name_idx << ',' << rec.type_idx << '\n';
    }
}

std::vector<EncodedNodeRecord> read_encoded_nodes_csv(std::istream& in) {
    std::vector<EncodedNodeRecord> nodes;
    std::string line;
    if (!std::getline(in, line) || line != "id_idx,name_idx,type_idx") {
        raise(ErrorCode::CorruptArtifact, "bad encoded node table header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        EncodedNodeRecord rec;
        if (std::sscanf(line.c_str(), "%u,%u,%u", &rec.id_idx, &rec.name_idx, &rec.type_idx) !=
            3) {
            raise(ErrorCode::CorruptArtifact,
                  "bad encoded node row at line " + std::to_string(line_no));
        }
        nodes.push_back(rec);
    }
    return nodes;
}

void write_encoded_edges_csv(std::ostream& out, const std::vector<EncodedEdgeRecord>& edges) {
    out << "src_idx,dst_idx,t_off,op_idx\n";
    for (const auto& rec : edges) {
        out << rec.src_idx << ',' << rec.dst_idx << ',' << rec.t_off << ',' << rec.op_idx << '\n';
    }
}

// ---------------------------------------------------------------------------
// Build directory
// ---------------------------------------------------------------------------

namespace {

const char* kArtifactFiles[] = {"mt.json", "nt_en.csv", "mmt.json",
                                "et_hi.txt", "model.ckpt", "ect.json"};

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) raise(ErrorCode::IoError, "write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&tt, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json manifest_to_json(const BuildManifest& manifest) {
    json doc;
    doc["format_version"] = manifest.format_version;
    doc["created"] = manifest.created;
    doc["digests"] = manifest.digests;
    doc["stats"] = {{"n_nodes", manifest.stats.n_nodes},
                    {"m_edges", manifest.stats.m_edges},
                    {"segment_length", manifest.stats.segment_length},
                    {"d_avg", manifest.stats.d_avg},
                    {"max_record_len", manifest.stats.max_record_len}};
    return doc;
}

BuildManifest manifest_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::CorruptArtifact, "manifest is not a JSON object");
    }
    BuildManifest manifest;
    manifest.format_version = doc.at("format_version").get<int>();
    if (manifest.format_version != kManifestVersion) {
        raise(ErrorCode::VersionMismatch,
              "manifest format_version " + std::to_string(manifest.format_version) +
                  ", expected " + std::to_string(kManifestVersion));
    }
    manifest.created = doc.value("created", "");
    manifest.digests = doc.at("digests").get<std::map<std::string, std::string>>();
    const auto& stats = doc.at("stats");
    manifest.stats.n_nodes = stats.at("n_nodes").get<std::uint64_t>();
    manifest.stats.m_edges = stats.at("m_edges").get<std::uint64_t>();
    manifest.stats.segment_length = stats.at("segment_length").get<std::uint32_t>();
    manifest.stats.d_avg = stats.at("d_avg").get<double>();
    manifest.stats.max_record_len = stats.at("max_record_len").get<std::uint64_t>();
    return manifest;
}

}  // namespace

BuildManifest save_build(const std::string& dir, const BuildArtifacts& artifacts) {
    if (artifacts.model == nullptr) {
        raise(ErrorCode::InvalidArgument, "save_build requires a model");
    }
    fs::create_directories(dir);
    const fs::path base(dir);

    write_text_file(base / "mt.json", mapping_to_json(artifacts.mt));
    {
        std::ostringstream out;
        write_encoded_nodes_csv(out, artifacts.nt_en);
        write_text_file(base / "nt_en.csv", out.str());
    }
    write_text_file(base / "mmt.json", merge_mapping_to_json(artifacts.mmt));
    write_corpus_file((base / "et_hi.txt").string(), artifacts.et_hi);
    save_checkpoint((base / "model.ckpt").string(), *artifacts.model);
    write_text_file(base / "ect.json", ect_to_json(artifacts.ect));

    BuildManifest manifest;
    manifest.created = iso_timestamp();
    manifest.stats = artifacts.stats;
    for (const char* name : kArtifactFiles) {
        manifest.digests[name] = sha256_file((base / name).string());
    }
    write_text_file(base / "manifest.json", manifest_to_json(manifest).dump(2));
    return manifest;
}

LoadedBuild load_build(const std::string& dir) {
    const fs::path base(dir);
    BuildManifest manifest = manifest_from_json(read_text_file(base / "manifest.json"));

    for (const char* name : kArtifactFiles) {
        auto it = manifest.digests.find(name);
        if (it == manifest.digests.end()) {
            raise(ErrorCode::CorruptArtifact, std::string("manifest lacks digest for ") + name);
        }
        const std::string actual = sha256_file((base / name).string());
        if (actual != it->second) {
            raise(ErrorCode::DigestMismatch, std::string(name) + ": expected " + it->second +
                                                 ", found " + actual);
        }
    }

    MappingTable mt = mapping_from_json(read_text_file(base / "mt.json"));
    std::istringstream nt_in(read_text_file(base / "nt_en.csv"));
    std::vector<EncodedNodeRecord> nt_en = read_encoded_nodes_csv(nt_in);
    MergeMapping mmt = merge_mapping_from_json(read_text_file(base / "mmt.json"));
    Model model = load_checkpoint((base / "model.ckpt").string());
    CorrectionTable ect = ect_from_json(read_text_file(base / "ect.json"));
    return LoadedBuild{std::move(mt),    std::move(nt_en), std::move(mmt),
                       std::move(model), std::move(ect),   std::move(manifest)};
}

}  // namespace dehydrator
