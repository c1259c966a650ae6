#include "labclean/valueparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "labclean/text.hpp"

namespace labclean {

NullVocabulary::NullVocabulary() : NullVocabulary(std::vector<std::string>{"none", "n/a"}) {}

NullVocabulary::NullVocabulary(const std::vector<std::string>& tokens) {
    tokens_ = {"", "nan", "null"};
    for (const auto& t : tokens) tokens_.insert(text::casefold(text::trim(t)));
}

bool NullVocabulary::contains(std::string_view trimmed) const {
    if (trimmed.size() > 16) return false;
    return tokens_.find(text::casefold(trimmed)) != tokens_.end();
}

const ValueParseConfig& default_value_config() {
    static const ValueParseConfig cfg;
    return cfg;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Cursor {
public:
    explicit Cursor(std::string_view s) : s_(s) {}

    bool at_end() const { return pos_ >= s_.size(); }
    std::string_view rest() const { return s_.substr(pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    bool eat(std::string_view lit) {
        if (s_.substr(pos_).starts_with(lit)) {
            pos_ += lit.size();
            return true;
        }
        return false;
    }

    /// A keyword must be followed by whitespace, a digit, a sign or the end.
    bool eat_word(std::string_view word) {
        if (!s_.substr(pos_).starts_with(word)) return false;
        std::size_t after = pos_ + word.size();
        if (after < s_.size()) {
            char c = s_[after];
            if (!(c == ' ' || c == '\t' || is_digit(c) || c == '-' || c == '+')) return false;
        }
        pos_ = after;
        return true;
    }

    std::optional<double> number() {
        std::size_t start = pos_;
        std::size_t i = pos_;
        if (i < s_.size() && (s_[i] == '-' || s_[i] == '+')) ++i;
        std::size_t int_begin = i;
        while (i < s_.size() && is_digit(s_[i])) ++i;
        if (i == int_begin) return std::nullopt;
        std::string buf(s_.substr(start, i - start));
        if (i + 1 < s_.size() && (s_[i] == '.' || s_[i] == ',') && is_digit(s_[i + 1])) {
            char sep = s_[i];
            buf.push_back('.');
            ++i;
            std::size_t frac_begin = i;
            while (i < s_.size() && is_digit(s_[i])) ++i;
            buf.append(s_.substr(frac_begin, i - frac_begin));
            // "1,234,5" or "1,2.3": a comma decimal must be the only separator
            if (i < s_.size() && (s_[i] == '.' || s_[i] == ',') && i + 1 < s_.size() &&
                is_digit(s_[i + 1]))
                return std::nullopt;
            (void)sep;
        }
        if (buf.front() == '+') buf.erase(0, 1);
        double v = 0.0;
        auto [p, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
        if (ec != std::errc{} || p != buf.data() + buf.size() || !std::isfinite(v))
            return std::nullopt;
        pos_ = i;
        return v;
    }

    /// End of input, or a trailing unit such as "mg/dL" or "%".
    bool unit_tail_or_end() {
        skip_ws();
        if (at_end()) return true;
        auto c = static_cast<unsigned char>(s_[pos_]);
        bool starts_unit = (c >= 'a' && c <= 'z') || c == '%' || c == '/' || c >= 0x80;
        if (!starts_unit) return false;
        // a unit never carries a second comparison or range
        for (char ch : rest())
            if (ch == '<' || ch == '>') return false;
        return true;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

struct Prefix {
    std::string_view text;
    Bound side;
    bool word;
};

// Upper bound prefixes read as "value is below this"; lower as "above".
constexpr Prefix kReferencePrefixes[] = {
    {"<=", Bound::Below, false},         {"≤", Bound::Below, false},
    {"<", Bound::Below, false},          {">=", Bound::Above, false},
    {"≥", Bound::Above, false},          {">", Bound::Above, false},
    {"até", Bound::Below, true},         {"until", Bound::Below, true},
    {"inferior a", Bound::Below, true},  {"superior a", Bound::Above, true},
    {"acima de", Bound::Above, true},
};

constexpr Prefix kResultPrefixes[] = {
    {"<=", Bound::Below, false},        {"≤", Bound::Below, false},
    {"<", Bound::Below, false},         {">=", Bound::Above, false},
    {"≥", Bound::Above, false},         {">", Bound::Above, false},
    {"inferior a", Bound::Below, true}, {"superior a", Bound::Above, true},
};

constexpr std::string_view kIntervalWords[] = {"até", "to", "a"};

bool eat_prefix(Cursor& c, const Prefix& p) {
    return p.word ? c.eat_word(p.text) : c.eat(p.text);
}

}  // namespace

std::optional<double> parse_decimal(std::string_view raw) {
    Cursor c(text::trim(raw));
    auto v = c.number();
    if (!v || !c.at_end()) return std::nullopt;
    return v;
}

ParsedResult parse_result(std::string_view raw, const ValueParseConfig& cfg) {
    auto t = text::trim(raw);
    if (cfg.nulls.contains(t)) return Missing{};
    if (auto v = parse_decimal(t)) return Numeric{*v};

    std::string folded = text::casefold(t);
    for (const auto& p : kResultPrefixes) {
        Cursor c(folded);
        if (!eat_prefix(c, p)) continue;
        c.skip_ws();
        auto v = c.number();
        c.skip_ws();
        if (v && c.at_end()) return Censored{p.side, *v};
        break;
    }
    return Qualitative{std::move(folded)};
}

namespace {

std::optional<ReferenceRange> parse_numeric_reference(std::string_view folded, bool& swapped) {
    for (const auto& p : kReferencePrefixes) {
        Cursor c(folded);
        if (!eat_prefix(c, p)) continue;
        c.skip_ws();
        auto v = c.number();
        if (!v || !c.unit_tail_or_end()) return std::nullopt;
        if (p.side == Bound::Below) return UpperOnly{*v};
        return LowerOnly{*v};
    }

    Cursor c(folded);
    auto lo = c.number();
    if (!lo) return std::nullopt;
    c.skip_ws();
    bool separated = c.eat("-");
    for (auto w : kIntervalWords) {
        if (separated) break;
        separated = c.eat_word(w);
    }
    if (!separated) return std::nullopt;
    c.skip_ws();
    auto hi = c.number();
    if (!hi || !c.unit_tail_or_end()) return std::nullopt;
    if (*lo > *hi) {
        swapped = true;
        std::swap(*lo, *hi);
    }
    return Interval{*lo, *hi};
}

std::optional<ReferenceRange> parse_label_reference(std::string_view trimmed,
                                                    const ValueParseConfig& cfg) {
    std::string folded = text::casefold(trimmed);
    std::vector<std::string> parts{folded};
    bool split_any = false;
    for (const auto& sep : cfg.label_separators) {
        if (sep.empty()) continue;
        std::string needle = text::casefold(sep);
        std::vector<std::string> next;
        for (const auto& part : parts) {
            std::size_t from = 0;
            for (;;) {
                auto at = part.find(needle, from);
                if (at == std::string::npos) {
                    next.push_back(part.substr(from));
                    break;
                }
                split_any = true;
                next.push_back(part.substr(from, at - from));
                from = at + needle.size();
            }
        }
        parts = std::move(next);
    }
    if (!split_any) return std::nullopt;
    std::set<std::string> labels;
    for (const auto& part : parts) {
        auto label = text::trim(part);
        if (label.empty()) return std::nullopt;
        if (std::any_of(label.begin(), label.end(), is_digit)) return std::nullopt;
        labels.emplace(label);
    }
    return LabelSet{std::move(labels)};
}

}  // namespace

ReferenceParse parse_reference_detailed(const std::optional<std::string_view>& raw,
                                        const ValueParseConfig& cfg) {
    ReferenceParse out;
    if (!raw) return out;
    auto t = text::trim(*raw);
    if (cfg.nulls.contains(t)) return out;
    std::string folded = text::casefold(t);
    if (auto r = parse_numeric_reference(folded, out.swapped)) {
        out.range = *r;
        return out;
    }
    if (auto r = parse_label_reference(t, cfg)) {
        out.range = *r;
        return out;
    }
    out.miss = true;
    return out;
}

ReferenceRange merge_references(std::span<const ReferenceRange> ranges) {
    std::optional<double> lo;
    std::optional<double> hi;
    auto take_lo = [&](double v) { lo = lo ? std::min(*lo, v) : v; };
    auto take_hi = [&](double v) { hi = hi ? std::max(*hi, v) : v; };
    for (const auto& r : ranges) {
        if (const auto* i = std::get_if<Interval>(&r)) {
            take_lo(i->min);
            take_hi(i->max);
        } else if (const auto* l = std::get_if<LowerOnly>(&r)) {
            take_lo(l->min);
        } else if (const auto* u = std::get_if<UpperOnly>(&r)) {
            take_hi(u->max);
        }
    }
    if (lo && hi) return Interval{*lo, *hi};
    if (lo) return LowerOnly{*lo};
    if (hi) return UpperOnly{*hi};
    return NoRange{};
}

std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[400];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    return std::string(buf, p);
}

std::string render(const ParsedResult& v) {
    struct {
        std::string operator()(const Numeric& n) const { return format_number(n.value); }
        std::string operator()(const Qualitative& q) const { return q.label; }
        std::string operator()(const Censored& c) const {
            return (c.direction == Bound::Below ? "<" : ">") + format_number(c.bound);
        }
        std::string operator()(const Missing&) const { return ""; }
    } visitor;
    return std::visit(visitor, v);
}

std::string render(const ReferenceRange& r) {
    struct {
        std::string operator()(const Interval& i) const {
            return format_number(i.min) + " to " + format_number(i.max);
        }
        std::string operator()(const LowerOnly& l) const { return ">= " + format_number(l.min); }
        std::string operator()(const UpperOnly& u) const { return "<= " + format_number(u.max); }
        std::string operator()(const LabelSet& s) const {
            std::string out;
            for (const auto& l : s.labels) {
                if (!out.empty()) out += "/";
                out += l;
            }
            return out;
        }
        std::string operator()(const NoRange&) const { return ""; }
    } visitor;
    return std::visit(visitor, r);
}

}  // namespace labclean
