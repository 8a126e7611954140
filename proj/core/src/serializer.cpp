#include "dehydrator/serializer.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace dehydrator {

using nlohmann::json;

namespace vocab {

const std::string& symbols() {
    static const std::string table = "0123456789,:;[]-x^$_?";
    return table;
}

}  // namespace vocab

namespace {

std::array<int, 256> build_char_map() {
    std::array<int, 256> map;
    map.fill(-1);
    const std::string& table = vocab::symbols();
    for (std::size_t i = 0; i < table.size(); ++i) {
        map[static_cast<unsigned char>(table[i])] = static_cast<int>(i);
    }
    return map;
}

const std::array<int, 256>& char_map() {
    static const std::array<int, 256> map = build_char_map();
    return map;
}

}  // namespace

std::vector<TokenId> tokenize(const std::string& text) {
    std::vector<TokenId> ids;
    ids.reserve(text.size());
    for (char ch : text) {
        const int id = char_map()[static_cast<unsigned char>(ch)];
        if (id < 0) {
            raise(ErrorCode::UnknownSymbol, std::string("'") + ch + "'");
        }
        ids.push_back(static_cast<TokenId>(id));
    }
    return ids;
}

std::string detokenize(const std::vector<TokenId>& ids) {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (id >= vocab::kSize) {
            raise(ErrorCode::UnknownSymbol, "token id " + std::to_string(id));
        }
        out.push_back(vocab::symbols()[id]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

void append_uint(std::string& out, std::uint64_t value) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

void append_item(std::string& out, const RangeEntry& r) {
    append_uint(out, r.lo);
    if (r.hi != r.lo || r.count >= 2) {
        out.push_back('-');
        append_uint(out, r.hi);
    }
    if (r.count >= 2) {
        out.push_back('x');
        append_uint(out, r.count);
    }
}

}  // namespace

std::string render(const HierRecord& record) {
    std::string out;
    append_uint(out, record.v);
    out.push_back(',');
    append_uint(out, record.start_time);
    out.push_back(',');
    append_uint(out, record.end_time);
    out.push_back(',');
    out.push_back('[');
    for (std::size_t i = 0; i < record.parents.size(); ++i) {
        if (i) out.push_back(',');
        append_uint(out, record.parents[i]);
    }
    out.push_back(']');
    out.push_back(',');
    out.push_back('[');
    for (std::size_t oi = 0; oi < record.merged.size(); ++oi) {
        if (oi) out.push_back(';');
        const OpGroup& og = record.merged[oi];
        append_uint(out, og.op_idx);
        out.push_back(':');
        out.push_back('[');
        for (std::size_t ti = 0; ti < og.times.size(); ++ti) {
            if (ti) out.push_back(';');
            const TimeGroup& tg = og.times[ti];
            append_uint(out, tg.time_offset);
            out.push_back(':');
            out.push_back('[');
            for (std::size_t ri = 0; ri < tg.offsets.size(); ++ri) {
                if (ri) out.push_back(',');
                append_item(out, tg.offsets[ri]);
            }
            out.push_back(']');
        }
        out.push_back(']');
    }
    out.push_back(']');
    out.push_back(vocab::kTerminatorChar);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

class RecordParser {
public:
    explicit RecordParser(const std::string& text) : text_(text) {}

    HierRecord parse() {
        HierRecord rec;
        rec.v = parse_index("v");
        expect(',');
        rec.start_time = parse_u64("startTime");
        expect(',');
        rec.end_time = parse_u64("endTime");
        expect(',');
        rec.parents = parse_parents();
        expect(',');
        rec.merged = parse_merged();
        expect(vocab::kTerminatorChar);
        if (pos_ != text_.size()) {
            fail("end of record");
        }
        return rec;
    }

private:
    [[noreturn]] void fail(const std::string& expected) {
        raise(ErrorCode::SyntaxError,
              "position " + std::to_string(pos_) + ": expected " + expected);
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char ch) {
        if (peek() != ch) fail(std::string("'") + ch + "'");
        ++pos_;
    }

    std::uint64_t parse_u64(const char* what) {
        if (peek() < '0' || peek() > '9') fail(std::string(what) + " (digit)");
        std::uint64_t value = 0;
        std::size_t digits = 0;
        while (peek() >= '0' && peek() <= '9') {
            const std::uint64_t digit = static_cast<std::uint64_t>(text_[pos_] - '0');
            if (value > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) {
                fail(std::string(what) + " (overflow)");
            }
            value = value * 10 + digit;
            ++pos_;
            ++digits;
        }
        // Leading zeros would break render/parse round trips.
        if (digits > 1 && text_[pos_ - digits] == '0') {
            fail(std::string(what) + " (no leading zeros)");
        }
        return value;
    }

    Index parse_index(const char* what) {
        const std::uint64_t value = parse_u64(what);
        if (value > std::numeric_limits<Index>::max()) fail(std::string(what) + " (range)");
        return static_cast<Index>(value);
    }

    std::vector<Index> parse_parents() {
        expect('[');
        std::vector<Index> parents;
        parents.push_back(parse_index("parent"));
        while (peek() == ',') {
            ++pos_;
            parents.push_back(parse_index("parent"));
        }
        expect(']');
        return parents;
    }

    RangeEntry parse_item() {
        RangeEntry r;
        r.lo = static_cast<std::uint32_t>(parse_index("nodeOffset"));
        r.hi = r.lo;
        if (peek() == '-') {
            ++pos_;
            r.hi = static_cast<std::uint32_t>(parse_index("nodeOffset"));
            if (r.hi < r.lo) fail("non-decreasing range");
        }
        if (peek() == 'x') {
            ++pos_;
            r.count = static_cast<std::uint32_t>(parse_index("multiplicity"));
            if (r.count < 2) fail("multiplicity >= 2");
        }
        return r;
    }

    RangeList parse_items() {
        expect('[');
        RangeList items;
        items.push_back(parse_item());
        while (peek() == ',') {
            ++pos_;
            RangeEntry item = parse_item();
            if (item.lo <= items.back().hi) fail("strictly increasing ranges");
            items.push_back(item);
        }
        expect(']');
        return items;
    }

    TimeGroup parse_timegroup() {
        TimeGroup tg;
        tg.time_offset = parse_u64("timeOffset");
        expect(':');
        tg.offsets = parse_items();
        return tg;
    }

    OpGroup parse_opgroup() {
        OpGroup og;
        og.op_idx = parse_index("operation");
        expect(':');
        expect('[');
        og.times.push_back(parse_timegroup());
        while (peek() == ';') {
            ++pos_;
            TimeGroup tg = parse_timegroup();
            if (tg.time_offset <= og.times.back().time_offset) {
                fail("ascending timeOffsets");
            }
            og.times.push_back(std::move(tg));
        }
        expect(']');
        return og;
    }

    std::vector<OpGroup> parse_merged() {
        expect('[');
        std::vector<OpGroup> merged;
        merged.push_back(parse_opgroup());
        while (peek() == ';') {
            ++pos_;
            OpGroup og = parse_opgroup();
            if (og.op_idx <= merged.back().op_idx) fail("ascending operations");
            merged.push_back(std::move(og));
        }
        expect(']');
        return merged;
    }

    const std::string& text_;
    std::size_t pos_{0};
};

}  // namespace

HierRecord parse_record(const std::string& text) { return RecordParser(text).parse(); }

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

SegmentedCorpus segment(const std::vector<std::string>& corpus) {
    if (corpus.empty()) {
        raise(ErrorCode::InvalidArgument, "cannot segment an empty corpus");
    }
    SegmentedCorpus out;
    std::size_t min_len = std::numeric_limits<std::size_t>::max();
    for (const auto& record : corpus) min_len = std::min(min_len, record.size());
    if (min_len == 0) {
        raise(ErrorCode::InvalidArgument, "empty record in corpus");
    }
    out.L = static_cast<std::uint32_t>(min_len);
    out.record_count = corpus.size();

    const std::size_t window = static_cast<std::size_t>(out.L) + 1;
    for (const auto& record : corpus) {
        const std::vector<TokenId> chars = tokenize(record);
        RecordSpan span;
        span.first_segment = out.tokens.size() / window;
        span.char_length = chars.size();
        // Stream = BOS + record; windows advance by L and include one
        // lookahead token shared with the next window.
        std::vector<TokenId> stream;
        stream.reserve(chars.size() + 1);
        stream.push_back(vocab::kBos);
        stream.insert(stream.end(), chars.begin(), chars.end());

        const std::size_t n_windows = (chars.size() + out.L - 1) / out.L;
        for (std::size_t w = 0; w < n_windows; ++w) {
            const std::size_t begin = w * out.L;
            for (std::size_t j = 0; j < window; ++j) {
                const std::size_t idx = begin + j;
                out.tokens.push_back(idx < stream.size() ? stream[idx] : vocab::kPad);
            }
        }
        span.segment_count = n_windows;
        out.spans.push_back(span);
    }
    return out;
}

std::string SegmentedCorpus::reconstruct(std::size_t i) const {
    const RecordSpan& span = spans.at(i);
    std::vector<TokenId> chars;
    chars.reserve(span.char_length);
    const std::size_t window = static_cast<std::size_t>(L) + 1;
    for (std::size_t w = 0; w < span.segment_count; ++w) {
        const TokenId* seg = tokens.data() + (span.first_segment + w) * window;
        // Skip the boundary token shared with the previous window (BOS for
        // the first window).
        for (std::size_t j = 1; j < window && chars.size() < span.char_length; ++j) {
            chars.push_back(seg[j]);
        }
    }
    return detokenize(chars);
}

// ---------------------------------------------------------------------------
// Corpus file
// ---------------------------------------------------------------------------

void write_corpus_file(const std::string& path, const std::vector<std::string>& records) {
    std::size_t min_len = records.empty() ? 0 : std::numeric_limits<std::size_t>::max();
    for (const auto& r : records) min_len = std::min(min_len, r.size());
    json header;
    header["vocab"] = vocab::kVersion;
    header["L"] = min_len;
    header["records"] = records.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out << header.dump() << '\n';
    for (const auto& r : records) out.write(r.data(), static_cast<std::streamsize>(r.size()));
    if (!out) raise(ErrorCode::IoError, "write failed for " + path);
}

std::vector<std::string> read_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot read " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) {
        raise(ErrorCode::CorruptArtifact, "missing corpus header in " + path);
    }
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("vocab") ||
        !header.contains("records")) {
        raise(ErrorCode::CorruptArtifact, "bad corpus header in " + path);
    }
    if (header["vocab"].get<int>() != vocab::kVersion) {
        raise(ErrorCode::VersionMismatch,
              "corpus vocab version " + header["vocab"].dump() + " != " +
                  std::to_string(vocab::kVersion));
    }
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<std::string> records;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < payload.size(); ++i) {
        if (payload[i] == vocab::kTerminatorChar) {
            records.push_back(payload.substr(begin, i - begin + 1));
            begin = i + 1;
        }
    }
    if (begin != payload.size()) {
        raise(ErrorCode::CorruptArtifact, "trailing bytes without terminator in " + path);
    }
    if (records.size() != header["records"].get<std::size_t>()) {
        raise(ErrorCode::CorruptArtifact, "record count mismatch in " + path);
    }
    return records;
}

}  // namespace dehydrator
