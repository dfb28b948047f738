#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "batchwise/types.hpp"

namespace batchwise {

/// A group of exactly b exemplars, rendered contexts-first then outputs.
struct DemoBlock {
    std::vector<Exemplar> members;
};

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string text;
};

/// A fully rendered prompt bound to the ordered batch of sample ids it asks
/// about. Indices appearing in the body are exactly 1..sample_ids.size().
struct BatchPrompt {
    std::vector<std::string> sample_ids;
    std::string expected_output_label;
    std::variant<std::string, std::vector<ChatMessage>> body;

    bool is_chat() const { return body.index() == 1; }
    const std::string& completion_text() const { return std::get<0>(body); }
    const std::vector<ChatMessage>& messages() const { return std::get<1>(body); }
};

/// Default system message for chat-format prompts; "{idx}" is literal text.
inline constexpr std::string_view kDefaultChatSystemText =
    "The answers should respond to each question the user inputs. "
    "One line one answer starting with A[{idx}], no other line break.";

/// Splits exemplars into groups of b, preserving order. The exemplar count
/// must be a positive multiple of b; with allow_partial_final set, the final
/// block may instead be short.
std::vector<DemoBlock> make_demo_blocks(const std::vector<Exemplar>& exemplars, int b,
                                        bool allow_partial_final = false);

/// Renders one block: "label[i]: text" context lines for i in 1..b, then
/// "output_label[i]: output_text" lines in the same order. The returned text
/// ends with a blank line, so concatenating blocks separates them correctly.
std::string render_block(const DemoBlock& block);

/// Completion-format prompt: all rendered blocks followed by the batch's
/// contexts indexed 1..m. The text ends right after the last context line,
/// where generation is expected to begin.
BatchPrompt render_completion_prompt(const std::vector<DemoBlock>& blocks,
                                     const std::vector<Sample>& batch);

/// Chat-format prompt: a system message, one user/assistant pair per block
/// (contexts in the user turn, outputs in the assistant turn), and a final
/// user message carrying the batch's contexts.
BatchPrompt render_chat_prompt(const std::vector<DemoBlock>& blocks,
                               const std::vector<Sample>& batch,
                               std::string_view system_text = kDefaultChatSystemText);

/// Loads exemplars from JSONL, one object per line:
/// {"context": [{"label": str, "text": str}, ...],
///  "output_label": str, "output_text": str}
std::vector<Exemplar> load_exemplars(const std::string& path);

} // namespace batchwise
