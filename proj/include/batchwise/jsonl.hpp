#pragma once

#include <functional>
#include <string>

#include "json.hpp"

namespace batchwise {

/// Streams a JSONL file, calling fn(1-based line number, parsed object) for
/// every non-blank line. JSON syntax errors surface as ParseError naming the
/// file and line; a missing file raises IoError.
void for_each_jsonl_line(const std::string& path,
                         const std::function<void(int, const nlohmann::json&)>& fn);

} // namespace batchwise
