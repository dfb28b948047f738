#pragma once

#include <string>
#include <vector>

#include "batchwise/prompt.hpp"
#include "batchwise/rng.hpp"
#include "batchwise/types.hpp"

namespace batchwise::testing {

inline Sample make_sample(std::string id, std::string question, std::string gold,
                          AnswerKind kind = AnswerKind::numeric()) {
    return Sample{std::move(id), {{"Q", std::move(question)}}, std::move(gold), std::move(kind)};
}

inline Exemplar make_qa_exemplar(std::string question, std::string answer,
                                 std::string output_label = "A") {
    return Exemplar{{{"Q", std::move(question)}}, std::move(output_label), std::move(answer)};
}

// Twelve math-style demonstrations whose answers end in "The answer is <n>.".
inline std::vector<Exemplar> math_exemplars(int count = 12) {
    std::vector<Exemplar> exemplars;
    for (int i = 0; i < count; ++i) {
        const int lhs = 2 + i;
        const int rhs = 3 + i;
        exemplars.push_back(make_qa_exemplar(
            "If a box holds " + std::to_string(lhs) + " pens and another holds " +
                std::to_string(rhs) + " pens, how many pens are there?",
            "Adding " + std::to_string(lhs) + " + " + std::to_string(rhs) + " = " +
                std::to_string(lhs + rhs) + ". The answer is " + std::to_string(lhs + rhs) + "."));
    }
    return exemplars;
}

// N numeric samples with ids s1..sN and gold answers equal to 10+i.
inline std::vector<Sample> math_samples(int count) {
    std::vector<Sample> samples;
    for (int i = 1; i <= count; ++i) {
        samples.push_back(make_sample("s" + std::to_string(i),
                                      "What is " + std::to_string(i) + " plus 10?",
                                      std::to_string(10 + i)));
    }
    return samples;
}

inline std::string random_word(SplitMix64& rng) {
    static const char* const words[] = {"river", "stone", "cloud", "amber", "signal", "orbit",
                                        "maple", "quartz", "harbor", "copper", "meadow", "pixel"};
    return words[rng.below(sizeof(words) / sizeof(words[0]))];
}

inline std::string random_text(SplitMix64& rng, int min_words = 3, int max_words = 12) {
    const int n = min_words + static_cast<int>(rng.below(
                                  static_cast<std::uint64_t>(max_words - min_words + 1)));
    std::string text;
    for (int i = 0; i < n; ++i) {
        if (i != 0) text += ' ';
        text += random_word(rng);
        if (rng.below(10) == 0) text += std::to_string(rng.below(100));
    }
    return text;
}

} // namespace batchwise::testing
