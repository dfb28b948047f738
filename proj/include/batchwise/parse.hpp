#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "batchwise/types.hpp"

namespace batchwise {

enum class Severity { Warning, Error };

std::string to_string(Severity severity);

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string code;    // missing_index | duplicate_index | unrecognized_line | index_out_of_range
    std::string detail;
};

/// Raw per-index answers recovered from one generated batch response.
struct ParsedBatch {
    std::map<int, std::string> answers;  // keys always within 1..expected
    std::vector<Diagnostic> diagnostics;
    int expected = 0;
};

inline const std::vector<std::string> kDefaultAnswerPrefixes = {"A", "Answer"};

/// Total parser for "prefix[i]: answer" lines. Never fails: malformed input
/// produces diagnostics, not errors. An indexed line owns every following
/// non-matching line as a continuation until the next indexed or blank line;
/// the first occurrence of an index wins.
ParsedBatch parse_indexed_lines(std::string_view text, int expected,
                                const std::vector<std::string>& prefixes = kDefaultAnswerPrefixes);

/// Normalizes a raw answer into a comparable final form:
///  - choice-letter: last "(x)" single letter, lowercased
///  - numeric: last number token, with '$', ',' and a trailing '.' stripped
///  - binary: last of yes/no/true/false, lowercased
///  - label-set: the label whose last occurrence reaches furthest right
///    (longer label wins a tie), lowercased
/// Returns nullopt when nothing matches.
std::optional<std::string> extract_final_answer(std::string_view raw, const AnswerKind& kind);

/// Maps parsed answers back onto sample ids by position: the id at position i
/// receives the answer at index i+1, or nullopt when that index is absent.
std::vector<std::pair<std::string, std::optional<std::string>>>
demux(const ParsedBatch& parsed, const std::vector<std::string>& sample_ids);

} // namespace batchwise
