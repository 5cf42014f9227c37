#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "padicdiff/rational.hpp"

namespace padicdiff {

bool is_prime(long long p);

/// Working parameters shared by every structure in the library: the prime p,
/// the coordinate dimension n, and the truncation depth m at which function
/// values live (one value per depth-m ball).
struct PrimeContext {
    long long p;
    int n;
    int m;

    PrimeContext(long long p_, int n_, int m_);

    /// p^n, the number of child tuples refining a ball by one level.
    std::uint32_t tuples_per_level() const;

    /// p^(n*depth); throws if it does not fit the desk-scale cap.
    std::uint64_t tuple_pow(int depth) const;
};

/// Result of a p-adic valuation query. x = 0 is flagged instead of inventing
/// a finite valuation; its norm is 0 by convention.
struct ValuationResult {
    bool infinite;
    long long valuation;
    Rational norm;
};

/// Valuation and norm of a rational: norm = p^(-valuation). Vector norms are
/// taken by callers as the max over component norms.
ValuationResult valuation_and_norm(const PrimeContext& ctx, const Rational& x);

/// p-adic valuation of a nonzero integer.
long long int_valuation(long long p, long long value);

using UnitCharacterValue = std::complex<double>;

/// Standard additive character: exp(2*pi*i*{x}_p) with {x}_p the p-adic
/// fractional part. Requires the reduced denominator of x to be a power of p.
UnitCharacterValue character_chi(const PrimeContext& ctx, const Rational& x);

/// exp(2*pi*i*s/p).
UnitCharacterValue unit_root(long long p, long long s);

/// Canonical integer representatives of residue digits, component-wise.
std::vector<long long> digit_lift(const PrimeContext& ctx, const std::vector<int>& j);

/// Address of a ball below a root: one child-tuple value in [0, p^n) per
/// level. Depth 0 is the root ball itself. Nesting is prefix order.
struct BallAddress {
    std::vector<std::uint32_t> levels;

    int depth() const { return static_cast<int>(levels.size()); }
    bool operator==(const BallAddress& other) const { return levels == other.levels; }
    bool operator!=(const BallAddress& other) const { return levels != other.levels; }
};

/// Longest common prefix: the smallest ball of one tree containing both.
BallAddress ball_join(const BallAddress& a, const BallAddress& b);

/// True when a addresses a ball containing the ball addressed by b.
bool is_prefix(const BallAddress& a, const BallAddress& b);

/// density * p^(-depth*n), exact.
Rational ball_measure(const PrimeContext& ctx, const BallAddress& a, const Rational& density);

/// Splits a level value into its n base-p digits (most significant first).
std::vector<int> level_digits(const PrimeContext& ctx, std::uint32_t value);

/// Inverse of level_digits; validates digit ranges.
std::uint32_t level_value(const PrimeContext& ctx, const std::vector<int>& digits);

} // namespace padicdiff
