// Outward-rounded interval arithmetic on binary64 bounds.
//
// Rounding is realized without touching the FPU rounding mode: every
// elementary operation computes the round-to-nearest result together with
// its exact error (TwoSum / FMA residuals) and steps one ulp outward only
// when the error points outward. Exact results therefore stay exact, which
// keeps degenerate boxes degenerate through additions and multiplications
// by representable constants.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace morsescope {

class DivisionByZeroInterval : public std::domain_error {
public:
    DivisionByZeroInterval() : std::domain_error("interval division: denominator contains zero") {}
};

class IntervalDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace rounding {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMax = std::numeric_limits<double>::max();
// Below this magnitude FMA residuals may be inexact because of underflow.
inline constexpr double kTiny = 0x1p-960;

inline double next_up(double x)
{
    if (std::isnan(x) || x == kInf)
        return x;
    if (x == 0.0)
        return std::numeric_limits<double>::denorm_min();
    auto bits = std::bit_cast<std::uint64_t>(x);
    bits = x > 0 ? bits + 1 : bits - 1;
    return std::bit_cast<double>(bits);
}

inline double next_down(double x) { return -next_up(-x); }

// Results of an overflowing finite computation are clamped towards the
// representable range in the "safe" direction; infinite inputs propagate.
inline double fix_up(double r, bool finite_inputs)
{
    if (std::isnan(r))
        return kInf;
    if (r == -kInf && finite_inputs)
        return -kMax;
    return r;
}

inline double fix_down(double r, bool finite_inputs)
{
    if (std::isnan(r))
        return -kInf;
    if (r == kInf && finite_inputs)
        return kMax;
    return r;
}

// Sign of (exact a + b) - fl(a + b).
inline double two_sum_err(double a, double b, double s)
{
    const double bp = s - a;
    return (a - (s - bp)) + (b - bp);
}

inline double add_up(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s))
        return fix_up(s, std::isfinite(a) && std::isfinite(b));
    return two_sum_err(a, b, s) > 0 ? next_up(s) : s;
}

inline double add_down(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s))
        return fix_down(s, std::isfinite(a) && std::isfinite(b));
    return two_sum_err(a, b, s) < 0 ? next_down(s) : s;
}

inline double sub_up(double a, double b) { return add_up(a, -b); }
inline double sub_down(double a, double b) { return add_down(a, -b); }

inline double mul_up(double a, double b)
{
    if (a == 0.0 || b == 0.0)
        return 0.0;
    const double p = a * b;
    if (!std::isfinite(p))
        return fix_up(p, std::isfinite(a) && std::isfinite(b));
    if (std::fabs(p) < kTiny)
        return next_up(p);
    return std::fma(a, b, -p) > 0 ? next_up(p) : p;
}

inline double mul_down(double a, double b)
{
    if (a == 0.0 || b == 0.0)
        return 0.0;
    const double p = a * b;
    if (!std::isfinite(p))
        return fix_down(p, std::isfinite(a) && std::isfinite(b));
    if (std::fabs(p) < kTiny)
        return next_down(p);
    return std::fma(a, b, -p) < 0 ? next_down(p) : p;
}

// b must be nonzero.
inline double div_up(double a, double b)
{
    if (a == 0.0)
        return 0.0;
    const double q = a / b;
    if (!std::isfinite(q))
        return fix_up(q, std::isfinite(a) && std::isfinite(b));
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny || std::isinf(b))
        return next_up(q);
    const double r = std::fma(-q, b, a);
    const bool above = (r > 0) == (b > 0);
    return (r != 0 && above) ? next_up(q) : q;
}

inline double div_down(double a, double b)
{
    if (a == 0.0)
        return 0.0;
    const double q = a / b;
    if (!std::isfinite(q))
        return fix_down(q, std::isfinite(a) && std::isfinite(b));
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny || std::isinf(b))
        return next_down(q);
    const double r = std::fma(-q, b, a);
    const bool below = (r > 0) != (b > 0);
    return (r != 0 && below) ? next_down(q) : q;
}

// a >= 0.
inline double sqrt_up(double a)
{
    const double s = std::sqrt(a);
    if (a == 0.0 || std::isinf(a))
        return s;
    if (a < kTiny)
        return next_up(s);
    return std::fma(-s, s, a) > 0 ? next_up(s) : s;
}

inline double sqrt_down(double a)
{
    const double s = std::sqrt(a);
    if (a == 0.0 || std::isinf(a))
        return s;
    if (a < kTiny)
        return next_down(s);
    return std::fma(-s, s, a) < 0 ? next_down(s) : s;
}

} // namespace rounding

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double x) : lo(x), hi(x) {} // NOLINT: implicit point interval

    // Throws std::invalid_argument on NaN bounds or lo > hi.
    Interval(double lower, double upper);

    static constexpr Interval unchecked(double lower, double upper)
    {
        Interval r;
        r.lo = lower;
        r.hi = upper;
        return r;
    }

    static Interval entire() { return unchecked(-rounding::kInf, rounding::kInf); }

    bool is_point() const { return lo == hi; }
    bool is_bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
    bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
    // Strict containment in the interior of o.
    bool interior_of(const Interval& o) const { return o.lo < lo && hi < o.hi; }

    // Upper bound of hi - lo.
    double width() const { return rounding::sub_up(hi, lo); }
    double rad() const { return rounding::mul_up(width(), 0.5); }
    double mid() const;
    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
    double mig() const { return contains_zero() ? 0.0 : std::min(std::fabs(lo), std::fabs(hi)); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval operator+(const Interval& a, const Interval& b)
{
    return Interval::unchecked(rounding::add_down(a.lo, b.lo), rounding::add_up(a.hi, b.hi));
}

inline Interval operator-(const Interval& a, const Interval& b)
{
    return Interval::unchecked(rounding::sub_down(a.lo, b.hi), rounding::sub_up(a.hi, b.lo));
}

inline Interval operator-(const Interval& a) { return Interval::unchecked(-a.hi, -a.lo); }

Interval operator*(const Interval& a, const Interval& b);
// Throws DivisionByZeroInterval when 0 is in b.
Interval operator/(const Interval& a, const Interval& b);

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

Interval sqr(const Interval& a);
Interval pow(const Interval& a, unsigned n);
// Negative parts of a straddling input are clamped to zero; a fully negative
// input throws IntervalDomainError.
Interval sqrt(const Interval& a);
// Endpoint evaluations are padded by 2^-40 and clamped to [-1, 1].
Interval sin(const Interval& a);
Interval cos(const Interval& a);
Interval abs(const Interval& a);

inline Interval hull(const Interval& a, const Interval& b)
{
    return Interval::unchecked(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

inline std::optional<Interval> intersect(const Interval& a, const Interval& b)
{
    const double l = std::max(a.lo, b.lo);
    const double h = std::min(a.hi, b.hi);
    if (l > h)
        return std::nullopt;
    return Interval::unchecked(l, h);
}

std::ostream& operator<<(std::ostream& os, const Interval& a);

// d-dimensional product of intervals.
using IvBox = std::vector<Interval>;

IvBox hull(const IvBox& a, const IvBox& b);
std::optional<IvBox> intersect(const IvBox& a, const IvBox& b);
bool contains(const IvBox& b, const std::vector<double>& x);
bool subset_of(const IvBox& a, const IvBox& b);
bool is_bounded(const IvBox& b);
double max_width(const IvBox& b);
std::vector<double> midpoint(const IvBox& b);
IvBox point_box(const std::vector<double>& x);
// Encloses the Euclidean norms of all points of b; lower bound >= 0.
Interval norm2(const IvBox& b);

std::ostream& operator<<(std::ostream& os, const IvBox& b);

} // namespace morsescope
