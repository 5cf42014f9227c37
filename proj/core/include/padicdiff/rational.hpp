#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "padicdiff/errors.hpp"

namespace padicdiff {

/// Exact rational arithmetic on 64-bit numerator/denominator.
///
/// Values are always reduced with a positive denominator. Intermediates are
/// widened to 128 bits; a result that does not fit back into 64 bits throws
/// numeric_error instead of wrapping. Measures, densities and path weights in
/// this library are all desk-scale, so 64 bits is ample.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long value) : num_(value), den_(1) {} // implicit: integers are rationals
    Rational(long long num, long long den) : num_(num), den_(den) {
        if (den_ == 0) throw validation_error("rational: zero denominator");
        normalize();
    }

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_positive() const { return num_ > 0; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational operator-() const { return Rational(-num_, den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_i128(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_i128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw numeric_error("rational: division by zero");
        return from_i128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    /// base^exp as an exact rational; exp may be negative.
    static Rational int_pow(long long base, long long exp) {
        if (base == 0) throw validation_error("rational: 0 has no integer powers here");
        bool invert = exp < 0;
        unsigned long long e = invert ? static_cast<unsigned long long>(-exp)
                                      : static_cast<unsigned long long>(exp);
        const i128 limit = i128(INT64_MAX);
        i128 acc = 1;
        for (unsigned long long i = 0; i < e; ++i) {
            if (acc > limit / (base < 0 ? -base : base) || acc < -(limit / (base < 0 ? -base : base))) {
                throw numeric_error("rational: power overflow");
            }
            acc *= base;
        }
        return invert ? from_i128(1, acc) : from_i128(acc, 1);
    }

    /// Parses "a", "-a", or "a/b".
    static Rational parse(const std::string& text);

    /// "a" when integral, "a/b" otherwise.
    std::string str() const;

private:
    using i128 = __int128;

    static i128 i128_max() { return (i128(1) << 126); }

    static long long narrow(i128 v) {
        if (v > i128(INT64_MAX) || v < i128(INT64_MIN)) {
            throw numeric_error("rational: 64-bit overflow");
        }
        return static_cast<long long>(v);
    }

    static Rational from_i128(i128 num, i128 den) {
        if (den == 0) throw validation_error("rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        i128 a = num < 0 ? -num : num;
        i128 g = gcd128(a, den);
        if (g > 1) { num /= g; den /= g; }
        Rational r;
        r.num_ = narrow(num);
        r.den_ = narrow(den);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }

    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    long long num_;
    long long den_;
};

inline Rational Rational::parse(const std::string& text) {
    auto parse_int = [](const std::string& s) -> long long {
        if (s.empty()) throw validation_error("rational: empty component in '" + s + "'");
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &pos);
        } catch (const std::exception&) {
            throw validation_error("rational: cannot parse '" + s + "'");
        }
        if (pos != s.size()) throw validation_error("rational: trailing junk in '" + s + "'");
        return v;
    };
    auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(parse_int(text));
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

inline std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

} // namespace padicdiff
