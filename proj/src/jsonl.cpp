#include "batchwise/jsonl.hpp"

#include <fstream>

#include "batchwise/errors.hpp"

namespace batchwise {

void for_each_jsonl_line(const std::string& path,
                         const std::function<void(int, const nlohmann::json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_number) + ": " + e.what());
        }
        fn(line_number, record);
    }
}

} // namespace batchwise
