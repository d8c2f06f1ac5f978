#include "jsonl.hpp"

#include "tabfuse/errors.hpp"

namespace tabfuse::detail {

json parse_object(const std::string& line, std::size_t number) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(number, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(number, "expected a JSON object");
    return obj;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line, std::string("missing field \"") + key + "\"");
    if (!it->is_string()) throw ParseError(line, std::string("field \"") + key + "\" is not a string");
    return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw ParseError(line, std::string("field \"") + key + "\" is not a string");
    return it->get<std::string>();
}

std::vector<std::string> require_string_array(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line, std::string("missing field \"") + key + "\"");
    if (!it->is_array()) throw ParseError(line, std::string("field \"") + key + "\" is not an array");
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw ParseError(line, std::string("field \"") + key + "\" must hold strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<std::vector<std::string>> require_string_matrix(const json& obj, const char* key,
                                                            std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line, std::string("missing field \"") + key + "\"");
    if (!it->is_array()) throw ParseError(line, std::string("field \"") + key + "\" is not an array");
    std::vector<std::vector<std::string>> out;
    for (const auto& row : *it) {
        if (!row.is_array()) throw ParseError(line, std::string("field \"") + key + "\" must hold arrays");
        auto& cells = out.emplace_back();
        for (const auto& v : row) {
            if (!v.is_string()) throw ParseError(line, "table cells must be strings");
            cells.push_back(v.get<std::string>());
        }
    }
    return out;
}

}  // namespace tabfuse::detail
