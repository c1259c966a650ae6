#include "labclean/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "labclean/error.hpp"
#include "labclean/text.hpp"

namespace labclean {

void KvTable::set(std::string key, std::string value, int line) {
    entries_[std::move(key)] = Entry{std::move(value), line};
}

bool KvTable::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KvTable::get(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
}

std::string KvTable::get_string(std::string_view key, std::string fallback) const {
    return get(key).value_or(std::move(fallback));
}

double KvTable::get_double(std::string_view key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    double out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size())
        throw ConfigError(std::string(key) + ": expected a number, got '" + *v + "'");
    return out;
}

long long KvTable::get_int(std::string_view key, long long fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    long long out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size())
        throw ConfigError(std::string(key) + ": expected an integer, got '" + *v + "'");
    return out;
}

bool KvTable::get_bool(std::string_view key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + *v + "'");
}

std::vector<std::string> KvTable::get_list(std::string_view key,
                                           std::vector<std::string> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::string_view s = text::trim(*v);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ConfigError(std::string(key) + ": expected a [\"a\", \"b\"] list");
    s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == ',')) ++i;
        if (i >= s.size()) break;
        if (s[i] != '"') throw ConfigError(std::string(key) + ": list items must be quoted");
        auto end = s.find('"', i + 1);
        if (end == std::string_view::npos)
            throw ConfigError(std::string(key) + ": unterminated string in list");
        out.emplace_back(s.substr(i + 1, end - i - 1));
        i = end + 1;
    }
    return out;
}

std::vector<std::string> KvTable::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) out.push_back(k);
    return out;
}

KvDocument parse_kv(std::string_view content, std::string_view source) {
    KvDocument doc;
    KvTable* current = &doc.root;
    std::istringstream in{std::string(content)};
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        // strip comments outside quotes
        bool quoted = false;
        std::size_t cut = raw.size();
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '"') quoted = !quoted;
            if (raw[i] == '#' && !quoted) {
                cut = i;
                break;
            }
        }
        auto line = text::trim(std::string_view(raw).substr(0, cut));
        if (line.empty()) continue;
        if (line.starts_with("[[")) {
            if (!line.ends_with("]]")) fail("malformed table header");
            auto name = std::string(text::trim(line.substr(2, line.size() - 4)));
            auto& list = doc.arrays[name];
            list.emplace_back();
            current = &list.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected key = value");
        auto key = std::string(text::trim(line.substr(0, eq)));
        auto value = text::trim(line.substr(eq + 1));
        if (key.empty()) fail("empty key");
        std::string v;
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            v = std::string(value.substr(1, value.size() - 2));
        else if (!value.empty() && value.front() == '"')
            fail("unterminated string");
        else
            v = std::string(value);
        if (current->has(key)) fail("duplicate key '" + key + "'");
        current->set(std::move(key), std::move(v), line_no);
    }
    return doc;
}

KvDocument load_kv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_kv(ss.str(), path.string());
}

}  // namespace labclean
