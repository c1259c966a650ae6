#pragma once

// Deliberately naive reference implementations used to cross-check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// |x - median| <= k * std by direct evaluation, with long double arithmetic
/// over the unsorted input. All values kept when n <= 1 or std == 0.
inline std::vector<double> std_clip(const std::vector<double>& v, double k) {
    const std::size_t n = v.size();
    if (n <= 1) return v;
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const long double med = n % 2 ? s[n / 2] : (static_cast<long double>(s[n / 2 - 1]) + s[n / 2]) / 2;
    long double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const long double sd = std::sqrt(ss / (n - 1));
    std::vector<double> kept;
    for (double x : v)
        if (sd == 0 || std::fabs(static_cast<long double>(x) - med) <= k * sd) kept.push_back(x);
    return kept;
}

/// 100 * (initial - final) / initial rounded half-up at two decimals, via long double.
inline double reduction_pct(std::int64_t initial, std::int64_t final_count) {
    if (initial == 0) return 0.0;
    const long double p = 100.0L * (initial - final_count) / initial;
    return static_cast<double>(std::floor(p * 100.0L + 0.5L) / 100.0L);
}

/// Median-of-halves quartiles computed from scratch.
struct Quartiles {
    double q1, median, q3;
};

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline Quartiles quartiles(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 1) return {v[0], v[0], v[0]};
    std::vector<double> lower(v.begin(), v.begin() + static_cast<long>(n / 2));
    std::vector<double> upper(v.begin() + static_cast<long>((n + 1) / 2), v.end());
    return {median_of(lower), median_of(v), median_of(upper)};
}

/// Full-scan frequency table.
struct Counts {
    std::map<std::string, std::int64_t> freq;
    std::int64_t total = 0;

    void add(const std::string& s) {
        ++freq[s];
        ++total;
    }
    /// Most frequent value, smallest on ties.
    std::pair<std::string, std::int64_t> mode() const {
        std::pair<std::string, std::int64_t> best{"", 0};
        for (const auto& [v, c] : freq)
            if (c > best.second) best = {v, c};
        return best;
    }
    /// Top k by count descending then value ascending.
    std::vector<std::pair<std::string, std::int64_t>> top(std::size_t k) const {
        std::vector<std::pair<std::string, std::int64_t>> all(freq.begin(), freq.end());
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        if (all.size() > k) all.resize(k);
        return all;
    }
};

/// ASCII-only lowercase, sufficient for the null tokens the oracles check.
inline std::string lower_ascii(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

}  // namespace oracle
