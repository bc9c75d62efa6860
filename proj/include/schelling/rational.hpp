#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace schelling {

// Exact rational with a small normalized representation: den > 0, gcd(|num|, den) == 1.
// All comparisons cross-multiply in 128-bit, so thresholds never pass through floating point.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;

    Rational(std::int64_t n, std::int64_t d) {
        if (d == 0) throw std::domain_error("rational: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        num = g ? n / g : 0;
        den = g ? d / g : 1;
    }

    static Rational integer(std::int64_t v) { return Rational(v, 1); }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num * b.num, a.den * b.den);
    }
    friend Rational operator-(const Rational& a) { return Rational(-a.num, a.den); }
};

// ceil(r * m) for m >= 0, exactly.
inline std::int64_t ceil_mul(const Rational& r, std::int64_t m) {
    if (m < 0) throw std::domain_error("ceil_mul: negative multiplier");
    const std::int64_t p = r.num * m;
    return p >= 0 ? (p + r.den - 1) / r.den : -((-p) / r.den);
}

// floor(r * m) for m >= 0, exactly.
inline std::int64_t floor_mul(const Rational& r, std::int64_t m) {
    if (m < 0) throw std::domain_error("floor_mul: negative multiplier");
    const std::int64_t p = r.num * m;
    return p >= 0 ? p / r.den : -(((-p) + r.den - 1) / r.den);
}

// Parses "p/q" (or a bare integer "p"); rejects anything else, decimals included.
inline Rational parse_rational(const std::string& text) {
    const auto bad = [&] { throw std::invalid_argument("expected a fraction p/q, got '" + text + "'"); };
    if (text.empty()) bad();
    std::size_t i = 0;
    auto read_int = [&]() -> std::int64_t {
        bool neg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
        if (i >= text.size() || text[i] < '0' || text[i] > '9') bad();
        std::int64_t v = 0;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            v = v * 10 + (text[i++] - '0');
            if (v > (std::int64_t{1} << 56)) bad();
        }
        return neg ? -v : v;
    };
    const std::int64_t p = read_int();
    std::int64_t q = 1;
    if (i < text.size()) {
        if (text[i] != '/') bad();
        ++i;
        q = read_int();
        if (q == 0) bad();
    }
    if (i != text.size()) bad();
    return Rational(p, q);
}

inline std::string to_string(const Rational& r) {
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

} // namespace schelling
