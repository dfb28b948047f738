#include "batchwise/parse.hpp"

#include <cctype>
#include <cstdint>

#include "batchwise/errors.hpp"

namespace batchwise {

namespace {

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

struct LineMatch {
    int index = 0;  // -1 when the digits overflowed (always out of range)
    std::string content;
};

std::optional<LineMatch> match_indexed_line(std::string_view line,
                                            const std::vector<std::string>& prefixes) {
    std::size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;

    for (const auto& prefix : prefixes) {
        if (prefix.empty()) continue;
        if (line.compare(start, prefix.size(), prefix) != 0) continue;
        std::size_t pos = start + prefix.size();
        if (pos >= line.size() || line[pos] != '[') continue;
        ++pos;

        std::uint64_t value = 0;
        bool overflow = false;
        const std::size_t digits_start = pos;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
            value = value * 10 + static_cast<std::uint64_t>(line[pos] - '0');
            if (value > 1'000'000'000ULL) overflow = true;
            ++pos;
        }
        if (pos == digits_start) continue;
        if (pos >= line.size() || line[pos] != ']') continue;
        ++pos;
        if (pos >= line.size() || line[pos] != ':') continue;
        ++pos;

        // One space after the colon belongs to the separator, not the answer.
        if (pos < line.size() && line[pos] == ' ') ++pos;
        LineMatch match;
        match.index = overflow ? -1 : static_cast<int>(value);
        match.content.assign(line.substr(pos));
        return match;
    }
    return std::nullopt;
}

} // namespace

std::string to_string(Severity severity) {
    return severity == Severity::Error ? "error" : "warning";
}

ParsedBatch parse_indexed_lines(std::string_view text, int expected,
                                const std::vector<std::string>& prefixes) {
    ParsedBatch out;
    out.expected = expected < 0 ? 0 : expected;
    const std::vector<std::string>& active = prefixes.empty() ? kDefaultAnswerPrefixes : prefixes;

    std::string* current = nullptr;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, (nl == std::string_view::npos ? text.size() : nl) - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (auto match = match_indexed_line(line, active)) {
            if (match->index < 1 || match->index > out.expected) {
                out.diagnostics.push_back({Severity::Warning, "index_out_of_range",
                                           "index " + std::to_string(match->index)});
                current = nullptr;
            } else if (out.answers.count(match->index) != 0) {
                out.diagnostics.push_back({Severity::Warning, "duplicate_index",
                                           "index " + std::to_string(match->index)});
                current = nullptr;
            } else {
                auto [it, inserted] = out.answers.emplace(match->index, std::move(match->content));
                (void)inserted;
                current = &it->second;
            }
        } else if (is_blank(line)) {
            current = nullptr;  // block boundary; nothing attaches past it
        } else if (current != nullptr) {
            *current += '\n';
            current->append(line);
        } else {
            out.diagnostics.push_back(
                {Severity::Warning, "unrecognized_line", std::string(line.substr(0, 120))});
        }

        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    for (int index = 1; index <= out.expected; ++index) {
        if (out.answers.count(index) == 0) {
            out.diagnostics.push_back(
                {Severity::Error, "missing_index", "index " + std::to_string(index)});
        }
    }
    return out;
}

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<std::string> extract_choice_letter(std::string_view raw) {
    std::optional<std::string> found;
    for (std::size_t i = 0; i + 2 < raw.size(); ++i) {
        if (raw[i] == '(' && std::isalpha(static_cast<unsigned char>(raw[i + 1])) &&
            raw[i + 2] == ')') {
            found = std::string(
                1, static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i + 1]))));
        }
    }
    return found;
}

std::optional<std::string> extract_numeric(std::string_view raw) {
    std::optional<std::string> found;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (!std::isdigit(static_cast<unsigned char>(raw[i]))) {
            ++i;
            continue;
        }
        // Walk back over an attached '$' and sign.
        std::size_t begin = i;
        if (begin > 0 && raw[begin - 1] == '$') --begin;
        if (begin > 0 && (raw[begin - 1] == '-' || raw[begin - 1] == '+')) --begin;

        std::size_t end = i;
        while (end < raw.size() &&
               (std::isdigit(static_cast<unsigned char>(raw[end])) || raw[end] == ',')) {
            ++end;
        }
        if (end < raw.size() && raw[end] == '.' && end + 1 < raw.size() &&
            std::isdigit(static_cast<unsigned char>(raw[end + 1]))) {
            ++end;
            while (end < raw.size() && std::isdigit(static_cast<unsigned char>(raw[end]))) ++end;
        }

        std::string token;
        for (std::size_t j = begin; j < end; ++j) {
            char c = raw[j];
            if (c == '$' || c == ',' || c == '+') continue;
            token += c;
        }
        while (!token.empty() && token.back() == '.') token.pop_back();
        if (!token.empty() && token != "-") found = std::move(token);
        i = end;
    }
    return found;
}

std::optional<std::string> extract_binary(std::string_view raw) {
    static const std::vector<std::string> words = {"yes", "no", "true", "false"};
    const std::string lower = lowercase(raw);

    std::optional<std::string> best;
    std::size_t best_end = 0;
    for (const auto& word : words) {
        std::size_t from = 0;
        while (true) {
            const std::size_t at = lower.find(word, from);
            if (at == std::string::npos) break;
            const bool left_ok =
                at == 0 || !std::isalpha(static_cast<unsigned char>(lower[at - 1]));
            const std::size_t end = at + word.size();
            const bool right_ok =
                end == lower.size() || !std::isalpha(static_cast<unsigned char>(lower[end]));
            if (left_ok && right_ok && end > best_end) {
                best_end = end;
                best = word;
            }
            from = at + 1;
        }
    }
    return best;
}

std::optional<std::string> extract_label(std::string_view raw,
                                         const std::vector<std::string>& labels) {
    const std::string lower = lowercase(raw);

    std::optional<std::string> best;
    std::size_t best_end = 0;
    std::size_t best_len = 0;
    for (const auto& label : labels) {
        if (label.empty()) continue;
        const std::string needle = lowercase(label);
        const std::size_t at = lower.rfind(needle);
        if (at == std::string::npos) continue;
        const std::size_t end = at + needle.size();
        // Rightmost ending occurrence wins; the longer label breaks a tie,
        // so "very positive" beats its suffix "positive".
        if (end > best_end || (end == best_end && needle.size() > best_len)) {
            best_end = end;
            best_len = needle.size();
            best = needle;
        }
    }
    return best;
}

} // namespace

std::optional<std::string> extract_final_answer(std::string_view raw, const AnswerKind& kind) {
    if (raw.empty()) return std::nullopt;
    switch (kind.tag) {
        case AnswerKind::Tag::ChoiceLetter: return extract_choice_letter(raw);
        case AnswerKind::Tag::Numeric: return extract_numeric(raw);
        case AnswerKind::Tag::Binary: return extract_binary(raw);
        case AnswerKind::Tag::LabelSet: return extract_label(raw, kind.labels);
    }
    return std::nullopt;
}

std::vector<std::pair<std::string, std::optional<std::string>>>
demux(const ParsedBatch& parsed, const std::vector<std::string>& sample_ids) {
    if (static_cast<int>(sample_ids.size()) != parsed.expected) {
        throw LengthMismatchError("demux got " + std::to_string(sample_ids.size()) +
                                  " ids for " + std::to_string(parsed.expected) +
                                  " expected answers");
    }
    std::vector<std::pair<std::string, std::optional<std::string>>> out;
    out.reserve(sample_ids.size());
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        const auto it = parsed.answers.find(static_cast<int>(i) + 1);
        if (it == parsed.answers.end()) {
            out.emplace_back(sample_ids[i], std::nullopt);
        } else {
            out.emplace_back(sample_ids[i], it->second);
        }
    }
    return out;
}

} // namespace batchwise
