#include "cce/util.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace cce {

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string normalize_token(std::string_view s) {
    return to_lower(trim(s));
}

std::string normalize_label(std::string_view s) {
    std::string t = to_lower(trim(s));
    auto is_junk = [](unsigned char c) {
        return std::ispunct(c) || std::isspace(c);
    };
    size_t b = 0;
    size_t e = t.size();
    while (b < e && is_junk(static_cast<unsigned char>(t[b]))) ++b;
    while (e > b && is_junk(static_cast<unsigned char>(t[e - 1]))) --e;
    return t.substr(b, e - b);
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream is{std::string(s)};
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t seed_at(std::uint64_t root, std::uint64_t counter) {
    std::uint64_t state = root + counter * 0x9E3779B97F4A7C15ULL;
    return splitmix64(state);
}

double unit_double(std::uint64_t seed) {
    std::uint64_t state = seed;
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double pairwise_sum(std::span<const double> values) {
    if (values.empty()) return 0.0;
    if (values.size() == 1) return values[0];
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    size_t half = values.size() / 2;
    return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

} // namespace cce
