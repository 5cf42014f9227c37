#include "padicdiff/padic.hpp"

#include <algorithm>
#include <cmath>

namespace padicdiff {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
// Keeps p^(m n) at desk scale: dense matrices over the cells must stay
// laptop-sized.
constexpr std::uint64_t kMaxTuples = 1ull << 12;
} // namespace

bool is_prime(long long p) {
    if (p < 2) return false;
    for (long long d = 2; d * d <= p; ++d) {
        if (p % d == 0) return false;
    }
    return true;
}

PrimeContext::PrimeContext(long long p_, int n_, int m_) : p(p_), n(n_), m(m_) {
    if (!is_prime(p)) throw validation_error("context: p = " + std::to_string(p) + " is not prime");
    if (n < 1) throw validation_error("context: dimension n must be >= 1");
    if (m < 1) throw validation_error("context: depth m must be >= 1");
    tuple_pow(m); // enforce the size cap up front
}

std::uint32_t PrimeContext::tuples_per_level() const {
    std::uint64_t v = 1;
    for (int i = 0; i < n; ++i) {
        v *= static_cast<std::uint64_t>(p);
        if (v > kMaxTuples) throw validation_error("context: p^n too large for desk-scale use");
    }
    return static_cast<std::uint32_t>(v);
}

std::uint64_t PrimeContext::tuple_pow(int depth) const {
    std::uint64_t v = 1;
    const std::uint64_t base = tuples_per_level();
    for (int i = 0; i < depth; ++i) {
        v *= base;
        if (v > kMaxTuples) throw validation_error("context: p^(n*depth) too large for desk-scale use");
    }
    return v;
}

long long int_valuation(long long p, long long value) {
    if (value == 0) throw validation_error("valuation: zero has infinite valuation");
    long long v = value < 0 ? -value : value;
    long long k = 0;
    while (v % p == 0) { v /= p; ++k; }
    return k;
}

ValuationResult valuation_and_norm(const PrimeContext& ctx, const Rational& x) {
    if (x.is_zero()) return {true, 0, Rational(0)};
    long long val = int_valuation(ctx.p, x.num()) - int_valuation(ctx.p, x.den());
    return {false, val, Rational::int_pow(ctx.p, -val)};
}

UnitCharacterValue unit_root(long long p, long long s) {
    long long r = ((s % p) + p) % p;
    double angle = kTwoPi * static_cast<double>(r) / static_cast<double>(p);
    return {std::cos(angle), std::sin(angle)};
}

UnitCharacterValue character_chi(const PrimeContext& ctx, const Rational& x) {
    long long den = x.den();
    long long reduced = den;
    while (reduced % ctx.p == 0) reduced /= ctx.p;
    if (reduced != 1) {
        throw validation_error("character: denominator " + std::to_string(den) +
                               " is not a power of p = " + std::to_string(ctx.p));
    }
    long long frac_num = ((x.num() % den) + den) % den; // {x}_p = frac_num / den in [0, 1)
    double angle = kTwoPi * static_cast<double>(frac_num) / static_cast<double>(den);
    return {std::cos(angle), std::sin(angle)};
}

std::vector<long long> digit_lift(const PrimeContext& ctx, const std::vector<int>& j) {
    std::vector<long long> out;
    out.reserve(j.size());
    for (int digit : j) {
        if (digit < 0 || digit >= ctx.p) {
            throw validation_error("digit lift: component " + std::to_string(digit) +
                                   " out of range [0, p)");
        }
        out.push_back(digit);
    }
    return out;
}

BallAddress ball_join(const BallAddress& a, const BallAddress& b) {
    BallAddress joined;
    std::size_t limit = std::min(a.levels.size(), b.levels.size());
    for (std::size_t i = 0; i < limit && a.levels[i] == b.levels[i]; ++i) {
        joined.levels.push_back(a.levels[i]);
    }
    return joined;
}

bool is_prefix(const BallAddress& a, const BallAddress& b) {
    if (a.levels.size() > b.levels.size()) return false;
    return std::equal(a.levels.begin(), a.levels.end(), b.levels.begin());
}

Rational ball_measure(const PrimeContext& ctx, const BallAddress& a, const Rational& density) {
    if (!density.is_positive()) throw validation_error("measure: density must be positive");
    return density * Rational::int_pow(ctx.p, -static_cast<long long>(a.depth()) * ctx.n);
}

std::vector<int> level_digits(const PrimeContext& ctx, std::uint32_t value) {
    std::vector<int> digits(static_cast<std::size_t>(ctx.n), 0);
    for (int i = ctx.n - 1; i >= 0; --i) {
        digits[static_cast<std::size_t>(i)] = static_cast<int>(value % ctx.p);
        value = static_cast<std::uint32_t>(value / ctx.p);
    }
    return digits;
}

std::uint32_t level_value(const PrimeContext& ctx, const std::vector<int>& digits) {
    if (static_cast<int>(digits.size()) != ctx.n) {
        throw validation_error("level value: expected " + std::to_string(ctx.n) + " digits");
    }
    std::uint64_t v = 0;
    for (int digit : digits) {
        if (digit < 0 || digit >= ctx.p) throw validation_error("level value: digit out of range");
        v = v * static_cast<std::uint64_t>(ctx.p) + static_cast<std::uint64_t>(digit);
    }
    return static_cast<std::uint32_t>(v);
}

} // namespace padicdiff
