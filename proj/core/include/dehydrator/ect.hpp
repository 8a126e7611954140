// Error Correction Table: per-head substitution fixes (and full-string
// overflow entries for length mismatches) that make model output exactly
// equal the canonical record strings.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dehydrator/memorizer.hpp"

namespace dehydrator {

struct CharFix {
    std::uint32_t position{0};  // 0-based index into the full canonical string
    char correct{'0'};

    friend bool operator==(const CharFix&, const CharFix&) = default;
};

struct CorrectionTable {
    // Substitution fixes keyed by head index; positions strictly increasing.
    std::map<Index, std::vector<CharFix>> fixes;
    // Full replacements for heads whose generated length mismatches.
    std::map<Index, std::string> overflow;

    bool has_entry(Index v) const { return fixes.contains(v) || overflow.contains(v); }

    friend bool operator==(const CorrectionTable&, const CorrectionTable&) = default;
};

// Generation prompt for head v: the decimal digits of v followed by ',' (the
// head-delimiter pair is prefix-free across records).
std::vector<TokenId> head_tokens(Index v);

// Compares greedy generation against every canonical record and records the
// deviations. Generation for a head is abandoned once it exceeds that
// record's length (the entry lands in overflow either way). Verifies
// apply_ect(generate(v)) == canonical(v) for every head before returning.
CorrectionTable build_ect(const Model& model, const std::vector<std::string>& corpus,
                          int threads = 1);

// Overflow entries replace the generated string wholesale; fix entries
// substitute characters in place; heads without entries pass through.
std::string apply_ect(const CorrectionTable& ect, Index v, std::string generated);

struct EctStats {
    std::size_t entries{0};        // heads with any correction
    std::size_t fixes{0};          // total substitution fixes
    std::size_t overflow_count{0};
    std::size_t bytes{0};          // serialized JSON size
    double char_error_rate{0.0};   // mismatched chars / total canonical chars
};

EctStats ect_stats(const CorrectionTable& ect, const std::vector<std::string>& corpus);

std::string ect_to_json(const CorrectionTable& ect);
CorrectionTable ect_from_json(const std::string& text);

}  // namespace dehydrator
