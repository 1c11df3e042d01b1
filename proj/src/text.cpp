#include "hayeval/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

#include <openssl/sha.h>

#include "hayeval/errors.hpp"

namespace hayeval {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Fixed English stopword list, pinned for reproducible keyword scores.
constexpr std::string_view kStopwords[] = {
    "a",       "about",   "above",   "after",   "again",   "against", "all",     "am",
    "an",      "and",     "any",     "are",     "aren",    "as",      "at",      "be",
    "because", "been",    "before",  "being",   "below",   "between", "both",    "but",
    "by",      "can",     "couldn",  "d",       "did",     "didn",    "do",      "does",
    "doesn",   "doing",   "don",     "down",    "during",  "each",    "few",     "for",
    "from",    "further", "had",     "hadn",    "has",     "hasn",    "have",    "haven",
    "having",  "he",      "her",     "here",    "hers",    "herself", "him",     "himself",
    "his",     "how",     "i",       "if",      "in",      "into",    "is",      "isn",
    "it",      "its",     "itself",  "just",    "ll",      "m",       "ma",      "me",
    "mightn",  "more",    "most",    "mustn",   "my",      "myself",  "needn",   "no",
    "nor",     "not",     "now",     "o",       "of",      "off",     "on",      "once",
    "only",    "or",      "other",   "our",     "ours",    "ourselves", "out",   "over",
    "own",     "re",      "s",       "same",    "shan",    "she",     "should",  "shouldn",
    "so",      "some",    "such",    "t",       "than",    "that",    "the",     "their",
    "theirs",  "them",    "themselves", "then", "there",   "these",   "they",    "this",
    "those",   "through", "to",      "too",     "under",   "until",   "up",      "ve",
    "very",    "was",     "wasn",    "we",      "were",    "weren",   "what",    "when",
    "where",   "which",   "while",   "who",     "whom",    "why",     "will",    "with",
    "won",     "wouldn",  "y",       "you",     "your",    "yours",   "yourself", "yourselves",
    "regarding",
};

}  // namespace

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    return words;
}

std::size_t word_count(std::string_view text) { return split_words(text).size(); }

TokenCounter TokenCounter::words_four_thirds() {
    return TokenCounter("words_x4/3", [](std::string_view text) {
        const std::size_t words = word_count(text);
        return (words * 4 + 2) / 3;
    });
}

bool is_stopword(std::string_view lowered_word) {
    return std::find(std::begin(kStopwords), std::end(kStopwords), lowered_word) != std::end(kStopwords);
}

std::size_t stopword_count() { return std::size(kStopwords); }

std::set<std::string> content_tokens(std::string_view text) {
    std::set<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !is_stopword(current)) out.insert(current);
        current.clear();
    };
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_text(std::string_view text) {
    std::string out;
    for (auto w : split_words(text)) {
        if (!out.empty()) out.push_back(' ');
        out += to_lower(w);
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            auto line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.emplace_back(line);
            start = i + 1;
        }
    }
    return lines;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    std::string hex;
    hex.reserve(digest.size() * 2);
    char buf[3];
    for (auto b : digest) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

std::string render_template(std::string_view tmpl,
                            const std::function<const std::string*(std::string_view)>& lookup) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const auto open = tmpl.find("[[", i);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        const auto close = tmpl.find("]]", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        out.append(tmpl.substr(i, open - i));
        const auto name = tmpl.substr(open + 2, close - open - 2);
        const std::string* value = lookup(name);
        if (value == nullptr) throw ConfigError("template placeholder [[" + std::string(name) + "]] has no value");
        out += *value;
        i = close + 2;
    }
    return out;
}

}  // namespace hayeval
