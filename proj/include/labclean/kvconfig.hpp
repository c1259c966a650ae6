#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace labclean {

/// A flat `key = value` table. Values keep their unquoted text.
class KvTable {
public:
    void set(std::string key, std::string value, int line);

    bool has(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;

    /// Typed accessors; a present but malformed value throws ConfigError.
    std::string get_string(std::string_view key, std::string fallback) const;
    double get_double(std::string_view key, double fallback) const;
    long long get_int(std::string_view key, long long fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;
    std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback) const;

    /// Keys never read through a getter; used to reject typos.
    std::vector<std::string> keys() const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry, std::less<>> entries_;
};

/// A tiny TOML subset: `key = value` pairs, `# comments`, double-quoted strings,
/// `[a, b]` string lists and `[[name]]` array-of-tables headers.
struct KvDocument {
    KvTable root;
    std::map<std::string, std::vector<KvTable>> arrays;
};

KvDocument parse_kv(std::string_view text, std::string_view source = "config");
KvDocument load_kv(const std::filesystem::path& path);

}  // namespace labclean
