#include "hayeval/json_extract.hpp"

namespace hayeval {

std::optional<nlohmann::json> extract_json(std::string_view text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        const char open = text[start];
        if (open != '[' && open != '{') continue;
        const char close = open == '[' ? ']' : '}';
        // scan for a balanced candidate, honouring strings
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '[' || c == '{') ++depth;
            else if (c == ']' || c == '}') {
                if (--depth == 0) {
                    if (c != close) break;
                    auto parsed = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace hayeval
