#include "batchwise/types.hpp"

#include "batchwise/errors.hpp"

namespace batchwise {

namespace {

void check_label(const std::string& label, const char* what) {
    if (label.empty()) throw InvalidFieldError(std::string(what) + " label is empty");
    if (label.find_first_of("[]:") != std::string::npos) {
        throw InvalidFieldError(std::string(what) + " label '" + label +
                                "' contains '[', ']' or ':'");
    }
}

void check_text(const std::string& text, const char* what) {
    if (text.find("\n\n") != std::string::npos) {
        throw InvalidFieldError(std::string(what) + " contains a blank line");
    }
    if (!text.empty() && text.back() == '\n') {
        throw InvalidFieldError(std::string(what) + " ends with a newline");
    }
}

} // namespace

std::string to_string(AnswerKind::Tag tag) {
    switch (tag) {
        case AnswerKind::Tag::ChoiceLetter: return "choice-letter";
        case AnswerKind::Tag::Numeric: return "numeric";
        case AnswerKind::Tag::Binary: return "binary";
        case AnswerKind::Tag::LabelSet: return "label-set";
    }
    return "numeric";
}

AnswerKind::Tag answer_kind_tag_from_string(std::string_view name) {
    if (name == "choice-letter") return AnswerKind::Tag::ChoiceLetter;
    if (name == "numeric") return AnswerKind::Tag::Numeric;
    if (name == "binary") return AnswerKind::Tag::Binary;
    if (name == "label-set") return AnswerKind::Tag::LabelSet;
    throw InvalidFieldError("unknown answer kind '" + std::string(name) + "'");
}

void validate(const ContextField& field) {
    check_label(field.label, "context field");
    check_text(field.text, "context field text");
}

void validate(const Exemplar& exemplar) {
    if (exemplar.context.empty()) throw InvalidFieldError("exemplar has no context fields");
    for (const auto& field : exemplar.context) validate(field);
    check_label(exemplar.output_label, "exemplar output");
    if (exemplar.output_text.empty()) throw InvalidFieldError("exemplar output text is empty");
    check_text(exemplar.output_text, "exemplar output text");
}

void validate(const Sample& sample) {
    if (sample.id.empty()) throw InvalidFieldError("sample id is empty");
    if (sample.context.empty()) {
        throw InvalidFieldError("sample '" + sample.id + "' has no context fields");
    }
    for (const auto& field : sample.context) validate(field);
    if (sample.kind.tag == AnswerKind::Tag::LabelSet && sample.kind.labels.empty()) {
        throw InvalidFieldError("sample '" + sample.id + "' has a label-set kind with no labels");
    }
}

} // namespace batchwise
