#pragma once

// JSON-lines helpers shared by the loaders. Private to the core library.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabfuse::detail {

using json = nlohmann::json;

json parse_object(const std::string& line, std::size_t number);

/// Calls fn(object, line_number) for every non-blank line. Lines that are not
/// JSON objects raise ParseError with the 1-based line number.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        fn(parse_object(line, number), number);
    }
}

std::string require_string(const json& obj, const char* key, std::size_t line);
std::string optional_string(const json& obj, const char* key, std::size_t line);
std::vector<std::string> require_string_array(const json& obj, const char* key, std::size_t line);
std::vector<std::vector<std::string>> require_string_matrix(const json& obj, const char* key,
                                                            std::size_t line);

}  // namespace tabfuse::detail
