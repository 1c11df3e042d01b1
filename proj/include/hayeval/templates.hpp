#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hayeval {

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Named prompt templates with [[PLACEHOLDER]] slots. The built-in set is
/// compiled from templates/*.txt; a directory of same-named files overrides
/// individual entries.
class TemplateSet {
public:
    static TemplateSet builtin();
    /// Built-in set with any <name>.txt found in `dir` taking precedence.
    static TemplateSet with_overrides(const std::filesystem::path& dir);

    const std::string& get(std::string_view name) const;
    std::string render(std::string_view name, const TemplateVars& vars) const;
    void set(std::string name, std::string text);
    std::vector<std::string> names() const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_templates();
}

}  // namespace hayeval
