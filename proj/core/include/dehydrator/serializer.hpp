// Canonical text rendering of HierRecords, the fixed character vocabulary the
// model is trained over, and corpus segmentation at length L.
//
// Record grammar (LL(1), single-symbol tokens):
//   record    := v ',' start ',' end ',' parents ',' merged TERM
//   parents   := '[' uint (',' uint)* ']'
//   merged    := '[' opgroup (';' opgroup)* ']'
//   opgroup   := op ':' '[' timegroup (';' timegroup)* ']'
//   timegroup := toff ':' '[' item (',' item)* ']'
//   item      := uint ['-' uint] ['x' uint]
// A multiplicity >= 2 always renders in explicit range form, e.g. "0-0x2".
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dehydrator/hier_codec.hpp"

namespace dehydrator {

using TokenId = std::uint8_t;

// Fixed, version-stamped symbol set. Token ids are dense 0..20.
namespace vocab {

inline constexpr int kVersion = 1;
inline constexpr int kSize = 21;

inline constexpr TokenId kComma = 10;
inline constexpr TokenId kColon = 11;
inline constexpr TokenId kSemicolon = 12;
inline constexpr TokenId kLBracket = 13;
inline constexpr TokenId kRBracket = 14;
inline constexpr TokenId kDash = 15;
inline constexpr TokenId kMult = 16;
inline constexpr TokenId kBos = 17;   // start-of-record, generation context only
inline constexpr TokenId kEos = 18;   // record terminator
inline constexpr TokenId kPad = 19;   // excluded from loss
inline constexpr TokenId kRsv = 20;   // reserved, never emitted

inline constexpr char kTerminatorChar = '$';

// Display characters in token-id order.
const std::string& symbols();

}  // namespace vocab

std::vector<TokenId> tokenize(const std::string& text);  // throws UnknownSymbol
std::string detokenize(const std::vector<TokenId>& ids);

// Deterministic rendering; parse_record(render(r)) == r. The rendered string
// ends with the terminator character.
std::string render(const HierRecord& record);

// Inverse of render. Throws SyntaxError(position, expected) on bad input.
HierRecord parse_record(const std::string& text);

// Non-overlapping training windows of L+1 tokens over each record's stream
// (start-of-record token followed by the record's characters); consecutive
// windows share one boundary token so every window yields L next-character
// pairs. The final window of a record is pad-filled.
struct RecordSpan {
    std::size_t first_segment{0};
    std::size_t segment_count{0};
    std::size_t char_length{0};
};

struct SegmentedCorpus {
    std::uint32_t L{0};  // min canonical-string length over the corpus
    std::size_t record_count{0};
    std::vector<TokenId> tokens;  // segment i at [i*(L+1), (i+1)*(L+1))
    std::vector<RecordSpan> spans;

    std::size_t segment_count() const { return spans.empty() ? 0 : tokens.size() / (L + 1); }
    const TokenId* segment(std::size_t i) const { return tokens.data() + i * (L + 1); }

    // Rebuilds record i's canonical string from its windows.
    std::string reconstruct(std::size_t i) const;
};

SegmentedCorpus segment(const std::vector<std::string>& corpus);

// The ET_hi corpus file: one JSON header line, then the records concatenated
// without separators (each ends with the terminator character).
void write_corpus_file(const std::string& path, const std::vector<std::string>& records);
std::vector<std::string> read_corpus_file(const std::string& path);

}  // namespace dehydrator
