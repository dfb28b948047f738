#include "batchwise/prompt.hpp"

#include <algorithm>

#include "batchwise/errors.hpp"
#include "batchwise/jsonl.hpp"

namespace batchwise {

namespace {

void append_context_lines(std::string& out, const std::vector<ContextField>& context, int index) {
    for (const auto& field : context) {
        out += field.label;
        out += '[';
        out += std::to_string(index);
        out += "]: ";
        out += field.text;
        out += '\n';
    }
}

void append_output_line(std::string& out, const Exemplar& exemplar, int index) {
    out += exemplar.output_label;
    out += '[';
    out += std::to_string(index);
    out += "]: ";
    out += exemplar.output_text;
    out += '\n';
}

// Message text carries no trailing newline.
std::string strip_last_newline(std::string text) {
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

void check_batch(const std::vector<DemoBlock>& blocks, const std::vector<Sample>& batch) {
    if (batch.empty()) throw EmptyBatchError("test batch is empty");
    if (!blocks.empty()) {
        const std::size_t b = blocks.front().members.size();
        if (batch.size() > b) {
            throw BatchSizeError("test batch of " + std::to_string(batch.size()) +
                                 " exceeds batch size " + std::to_string(b));
        }
    }
    for (const auto& sample : batch) validate(sample);
}

std::string output_label_for(const std::vector<DemoBlock>& blocks) {
    if (blocks.empty() || blocks.front().members.empty()) return "A";
    return blocks.front().members.front().output_label;
}

} // namespace

std::vector<DemoBlock> make_demo_blocks(const std::vector<Exemplar>& exemplars, int b,
                                        bool allow_partial_final) {
    if (exemplars.empty()) throw EmptyExemplarsError("no exemplars to group");
    if (b < 1) throw ParameterError("batch size must be >= 1, got " + std::to_string(b));
    const std::size_t k = exemplars.size();
    if (!allow_partial_final && k % static_cast<std::size_t>(b) != 0) {
        throw DivisibilityError("exemplar count " + std::to_string(k) +
                                " is not a multiple of batch size " + std::to_string(b));
    }
    for (const auto& exemplar : exemplars) validate(exemplar);

    std::vector<DemoBlock> blocks;
    blocks.reserve((k + b - 1) / b);
    for (std::size_t start = 0; start < k; start += static_cast<std::size_t>(b)) {
        const std::size_t end = std::min(k, start + static_cast<std::size_t>(b));
        DemoBlock block;
        block.members.assign(exemplars.begin() + static_cast<std::ptrdiff_t>(start),
                             exemplars.begin() + static_cast<std::ptrdiff_t>(end));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

std::string render_block(const DemoBlock& block) {
    if (block.members.empty()) throw EmptyExemplarsError("demo block has no members");
    for (const auto& member : block.members) validate(member);

    std::string out;
    int index = 1;
    for (const auto& member : block.members) {
        append_context_lines(out, member.context, index);
        ++index;
    }
    index = 1;
    for (const auto& member : block.members) {
        append_output_line(out, member, index);
        ++index;
    }
    out += '\n';
    return out;
}

BatchPrompt render_completion_prompt(const std::vector<DemoBlock>& blocks,
                                     const std::vector<Sample>& batch) {
    check_batch(blocks, batch);

    std::string body;
    for (const auto& block : blocks) body += render_block(block);

    BatchPrompt prompt;
    int index = 1;
    for (const auto& sample : batch) {
        append_context_lines(body, sample.context, index);
        prompt.sample_ids.push_back(sample.id);
        ++index;
    }
    prompt.expected_output_label = output_label_for(blocks);
    prompt.body = std::move(body);
    return prompt;
}

BatchPrompt render_chat_prompt(const std::vector<DemoBlock>& blocks,
                               const std::vector<Sample>& batch, std::string_view system_text) {
    check_batch(blocks, batch);

    std::vector<ChatMessage> messages;
    messages.push_back({"system", std::string(system_text)});

    for (const auto& block : blocks) {
        if (block.members.empty()) throw EmptyExemplarsError("demo block has no members");
        for (const auto& member : block.members) validate(member);

        std::string user_text;
        std::string assistant_text;
        int index = 1;
        for (const auto& member : block.members) {
            append_context_lines(user_text, member.context, index);
            append_output_line(assistant_text, member, index);
            ++index;
        }
        messages.push_back({"user", strip_last_newline(std::move(user_text))});
        messages.push_back({"assistant", strip_last_newline(std::move(assistant_text))});
    }

    BatchPrompt prompt;
    std::string final_user;
    int index = 1;
    for (const auto& sample : batch) {
        append_context_lines(final_user, sample.context, index);
        prompt.sample_ids.push_back(sample.id);
        ++index;
    }
    messages.push_back({"user", strip_last_newline(std::move(final_user))});

    prompt.expected_output_label = output_label_for(blocks);
    prompt.body = std::move(messages);
    return prompt;
}

std::vector<Exemplar> load_exemplars(const std::string& path) {
    std::vector<Exemplar> exemplars;
    for_each_jsonl_line(path, [&](int line, const nlohmann::json& record) {
        try {
            Exemplar exemplar;
            for (const auto& field : record.at("context")) {
                exemplar.context.push_back(
                    {field.at("label").get<std::string>(), field.at("text").get<std::string>()});
            }
            exemplar.output_label = record.at("output_label").get<std::string>();
            exemplar.output_text = record.at("output_text").get<std::string>();
            validate(exemplar);
            exemplars.push_back(std::move(exemplar));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
        } catch (const InvalidFieldError& e) {
            throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return exemplars;
}

} // namespace batchwise
