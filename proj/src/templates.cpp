#include "hayeval/templates.hpp"

#include "hayeval/errors.hpp"
#include "hayeval/haystack.hpp"
#include "hayeval/text.hpp"

namespace hayeval {

TemplateSet TemplateSet::builtin() {
    TemplateSet set;
    for (const auto& [name, text] : detail::embedded_templates()) set.templates_.emplace(name, text);
    return set;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& dir) {
    TemplateSet set = builtin();
    if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory " + dir.string() + " not found");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") continue;
        set.templates_[entry.path().stem().string()] = read_file(entry.path());
    }
    return set;
}

const std::string& TemplateSet::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("no prompt template named '" + std::string(name) + "'");
    return it->second;
}

std::string TemplateSet::render(std::string_view name, const TemplateVars& vars) const {
    return render_template(get(name), [&](std::string_view key) -> const std::string* {
        auto it = vars.find(key);
        return it == vars.end() ? nullptr : &it->second;
    });
}

void TemplateSet::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

std::vector<std::string> TemplateSet::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

}  // namespace hayeval
