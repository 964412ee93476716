#include "notchlab/keyfile.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>

#include "notchlab/errors.hpp"

namespace notchlab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyFile KeyFile::parse(const std::string& text, const std::string& origin) {
    KeyFile kf;
    kf.origin_ = origin;
    int line_no = 0;
    int order = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line =
            (nl == std::string::npos) ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw_parse(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw_parse(origin + ":" + std::to_string(line_no) + ": empty key");
        auto [it, inserted] = kf.entries_.insert({key, Entry{value, line_no, order++, false}});
        if (!inserted)
            throw_parse(origin + ": duplicate key '" + key + "' (lines " +
                        std::to_string(it->second.line) + " and " + std::to_string(line_no) + ")");
    }
    return kf;
}

std::optional<std::string> KeyFile::take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.taken = true;
    return it->second.value;
}

std::optional<double> KeyFile::take_double(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    auto v = parse_double(*raw);
    if (!v) fail(key, "expected a number, got '" + *raw + "'");
    return v;
}

std::optional<std::int64_t> KeyFile::take_int(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    auto v = parse_int(*raw);
    if (!v) fail(key, "expected an integer, got '" + *raw + "'");
    return v;
}

std::optional<std::uint64_t> KeyFile::take_uint(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    auto v = parse_uint(*raw);
    if (!v) fail(key, "expected a non-negative integer, got '" + *raw + "'");
    return v;
}

std::vector<std::string> KeyFile::leftovers() const {
    std::vector<std::string> out;
    std::vector<std::pair<int, std::string>> keyed;
    for (const auto& [key, e] : entries_)
        if (!e.taken) keyed.push_back({e.order, key + " (line " + std::to_string(e.line) + ")"});
    std::sort(keyed.begin(), keyed.end());
    for (auto& [_, s] : keyed) out.push_back(std::move(s));
    return out;
}

void KeyFile::reject_leftovers() const {
    const auto rest = leftovers();
    if (rest.empty()) return;
    std::string msg = origin_ + ": unknown key" + (rest.size() > 1 ? "s" : "") + ": ";
    for (std::size_t i = 0; i < rest.size(); ++i) {
        if (i) msg += ", ";
        msg += rest[i];
    }
    throw_parse(msg);
}

void KeyFile::fail(const std::string& key, const std::string& why) const {
    auto it = entries_.find(key);
    const std::string at =
        (it == entries_.end()) ? origin_ : origin_ + ":" + std::to_string(it->second.line);
    throw_parse(at + ": key '" + key + "': " + why);
}

std::optional<double> parse_double(const std::string& text) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(const std::string& text) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || errno == ERANGE) return std::nullopt;
    return static_cast<std::int64_t>(v);
}

std::optional<std::uint64_t> parse_uint(const std::string& text) {
    if (text.empty() || text[0] == '-') return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || errno == ERANGE) return std::nullopt;
    return static_cast<std::uint64_t>(v);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(sep, pos);
        const std::string piece =
            (next == std::string::npos) ? text.substr(pos) : text.substr(pos, next - pos);
        out.push_back(trim(piece));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace notchlab
