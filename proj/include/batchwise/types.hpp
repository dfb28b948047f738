#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace batchwise {

/// One labeled line of context, rendered as "label[i]: text".
struct ContextField {
    std::string label;
    std::string text;
};

/// Shape of a task's final answer; drives extraction and scoring.
struct AnswerKind {
    enum class Tag { ChoiceLetter, Numeric, Binary, LabelSet };

    Tag tag = Tag::Numeric;
    std::vector<std::string> labels;  // LabelSet only; matched case-insensitively

    static AnswerKind choice_letter() { return {Tag::ChoiceLetter, {}}; }
    static AnswerKind numeric() { return {Tag::Numeric, {}}; }
    static AnswerKind binary() { return {Tag::Binary, {}}; }
    static AnswerKind label_set(std::vector<std::string> labels) {
        return {Tag::LabelSet, std::move(labels)};
    }
};

std::string to_string(AnswerKind::Tag tag);
AnswerKind::Tag answer_kind_tag_from_string(std::string_view name);

/// A demonstration: ordered context fields plus one labeled output line.
struct Exemplar {
    std::vector<ContextField> context;
    std::string output_label;
    std::string output_text;
};

/// One test instance.
struct Sample {
    std::string id;
    std::vector<ContextField> context;
    std::string gold;
    AnswerKind kind;
};

// Invariant checks; throw InvalidFieldError. Labels must be non-empty and free
// of '[', ']' and ':'; texts must not contain a blank line or end in a newline
// (either would split the rendered line block).
void validate(const ContextField& field);
void validate(const Exemplar& exemplar);
void validate(const Sample& sample);

} // namespace batchwise
