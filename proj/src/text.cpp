#include "labclean/text.hpp"


namespace labclean::text {

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string casefold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
            continue;
        }
        // U+00C0..U+00DE encode as C3 80..C3 9E; U+00D7 (multiplication sign) is C3 97.
        if (c == 0xC3 && i + 1 < s.size()) {
            auto n = static_cast<unsigned char>(s[i + 1]);
            if (n >= 0x80 && n <= 0x9E && n != 0x97) n = static_cast<unsigned char>(n + 0x20);
            out.push_back(static_cast<char>(c));
            out.push_back(static_cast<char>(n));
            ++i;
            continue;
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::optional<std::size_t> find_invalid_utf8(std::string_view bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = p[i];
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        unsigned char lo = 0x80, hi = 0xBF;
        if (c >= 0xC2 && c <= 0xDF) {
            len = 2;
        } else if (c >= 0xE0 && c <= 0xEF) {
            len = 3;
            if (c == 0xE0) lo = 0xA0;
            if (c == 0xED) hi = 0x9F;
        } else if (c >= 0xF0 && c <= 0xF4) {
            len = 4;
            if (c == 0xF0) lo = 0x90;
            if (c == 0xF4) hi = 0x8F;
        } else {
            return i;
        }
        if (i + len > n) return i;
        if (p[i + 1] < lo || p[i + 1] > hi) return i;
        for (std::size_t k = 2; k < len; ++k)
            if (p[i + k] < 0x80 || p[i + k] > 0xBF) return i;
        i += len;
    }
    return std::nullopt;
}

std::string latin1_to_utf8(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() + bytes.size() / 8);
    for (char ch : bytes) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x80) {
            out.push_back(ch);
        } else {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

std::optional<std::string> utf8_to_latin1(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for (std::size_t i = 0; i < utf8.size(); ++i) {
        auto c = static_cast<unsigned char>(utf8[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else if ((c == 0xC2 || c == 0xC3) && i + 1 < utf8.size()) {
            auto n = static_cast<unsigned char>(utf8[i + 1]);
            if (n < 0x80 || n > 0xBF) return std::nullopt;
            out.push_back(static_cast<char>(((c & 0x03) << 6) | (n & 0x3F)));
            ++i;
        } else {
            return std::nullopt;
        }
    }
    return out;
}

bool has_mojibake(std::string_view s) {
    // A UTF-8 sequence read as Latin-1 and re-encoded turns its lead byte into
    // "Ã" (C3 83) or "Â" (C3 82) and its continuation byte into C2 80..C2 BF.
    for (std::size_t i = 0; i + 3 < s.size(); ++i) {
        if (static_cast<unsigned char>(s[i]) != 0xC3) continue;
        auto second = static_cast<unsigned char>(s[i + 1]);
        if (second != 0x83 && second != 0x82) continue;
        auto cont = static_cast<unsigned char>(s[i + 3]);
        if (static_cast<unsigned char>(s[i + 2]) == 0xC2 && cont >= 0x80 && cont <= 0xBF)
            return true;
    }
    return false;
}

std::string fix_mojibake(std::string_view s) {
    if (!has_mojibake(s)) return std::string(s);
    auto bytes = utf8_to_latin1(s);
    if (!bytes || find_invalid_utf8(*bytes)) return std::string(s);
    return *bytes;
}

std::vector<std::string> split_record(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool field_start = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
            continue;
        }
        if (c == '"' && field_start) {
            quoted = true;
            field_start = false;
        } else if (c == delimiter) {
            fields.push_back(std::move(cur));
            cur.clear();
            field_start = true;
        } else {
            cur.push_back(c);
            field_start = false;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool has_open_quote(std::string_view line, char delimiter) {
    bool quoted = false;
    bool field_start = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"')
                    ++i;
                else
                    quoted = false;
            }
            continue;
        }
        if (c == '"' && field_start) {
            quoted = true;
            field_start = false;
        } else {
            field_start = c == delimiter;
        }
    }
    return quoted;
}

std::string quote_field(std::string_view field, char delimiter) {
    bool needs = field.find(delimiter) != std::string_view::npos ||
                 field.find('"') != std::string_view::npos ||
                 field.find('\n') != std::string_view::npos ||
                 field.find('\r') != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_record(const std::vector<std::string>& fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(delimiter);
        out += quote_field(fields[i], delimiter);
    }
    return out;
}

}  // namespace labclean::text
