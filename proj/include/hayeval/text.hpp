#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hayeval {

/// Whitespace-split words.
std::vector<std::string_view> split_words(std::string_view text);
std::size_t word_count(std::string_view text);

/// Pluggable token counter. The name is recorded in run metadata so that
/// token-budgeted results can be reproduced with the same counter.
class TokenCounter {
public:
    using CountFn = std::function<std::size_t(std::string_view)>;

    TokenCounter(std::string name, CountFn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

    /// ceil(words * 4 / 3): roughly 1,000 tokens per 750-word document.
    static TokenCounter words_four_thirds();

    std::size_t operator()(std::string_view text) const { return fn_(text); }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    CountFn fn_;
};

/// Lowercased alphabetic tokens with stopwords removed, as a set.
std::set<std::string> content_tokens(std::string_view text);
bool is_stopword(std::string_view lowered_word);
std::size_t stopword_count();

/// Lowercase and collapse runs of whitespace to a single space, trimmed.
std::string normalize_text(std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Replace every [[NAME]] placeholder with vars[NAME]. Unknown placeholders
/// are an error so a template cannot silently ship with an unfilled slot.
std::string render_template(std::string_view tmpl,
                            const std::function<const std::string*(std::string_view)>& lookup);

}  // namespace hayeval
