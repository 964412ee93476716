#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace notchlab {

// Flat "key = value" text with '#' comments; the format behind scenario
// files and trace sidecars. Keys are taken (consumed) by the loaders, and
// whatever remains untaken is rejected by name with its line number, so the
// files cannot carry silent typos.
class KeyFile {
public:
    static KeyFile parse(const std::string& text, const std::string& origin);

    const std::string& origin() const { return origin_; }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::optional<std::string> take(const std::string& key);

    // Typed takers; a present key with malformed text is a parse error
    // naming the key and line.
    std::optional<double> take_double(const std::string& key);
    std::optional<std::int64_t> take_int(const std::string& key);
    std::optional<std::uint64_t> take_uint(const std::string& key);

    // Untaken keys, in file order, as "key (line N)" strings.
    std::vector<std::string> leftovers() const;
    void reject_leftovers() const;  // parse error listing every untaken key

    [[noreturn]] void fail(const std::string& key, const std::string& why) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
        int order = 0;
        bool taken = false;
    };
    std::map<std::string, Entry> entries_;
    std::string origin_;
};

// Strict full-string numeric conversions shared by the file loaders; empty
// optional on any trailing garbage.
std::optional<double> parse_double(const std::string& text);
std::optional<std::int64_t> parse_int(const std::string& text);
std::optional<std::uint64_t> parse_uint(const std::string& text);

// Split on a separator, trimming whitespace from every piece.
std::vector<std::string> split_list(const std::string& text, char sep);

}  // namespace notchlab
