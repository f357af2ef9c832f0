#include "morsescope/interval.hpp"

#include <algorithm>
#include <numbers>
#include <ostream>

namespace morsescope {

using namespace rounding;

Interval::Interval(double lower, double upper) : lo(lower), hi(upper)
{
    if (std::isnan(lower) || std::isnan(upper))
        throw std::invalid_argument("interval bound is NaN");
    if (lower > upper)
        throw std::invalid_argument("interval lower bound exceeds upper bound");
}

double Interval::mid() const
{
    if (lo == -kInf && hi == kInf)
        return 0.0;
    if (lo == -kInf)
        return -kMax;
    if (hi == kInf)
        return kMax;
    const double m = 0.5 * lo + 0.5 * hi;
    return std::clamp(m, lo, hi);
}

Interval operator*(const Interval& a, const Interval& b)
{
    // Sign-case split keeps the common cases at two products per bound.
    if (a.lo >= 0) {
        if (b.lo >= 0)
            return Interval::unchecked(mul_down(a.lo, b.lo), mul_up(a.hi, b.hi));
        if (b.hi <= 0)
            return Interval::unchecked(mul_down(a.hi, b.lo), mul_up(a.lo, b.hi));
        return Interval::unchecked(mul_down(a.hi, b.lo), mul_up(a.hi, b.hi));
    }
    if (a.hi <= 0) {
        if (b.lo >= 0)
            return Interval::unchecked(mul_down(a.lo, b.hi), mul_up(a.hi, b.lo));
        if (b.hi <= 0)
            return Interval::unchecked(mul_down(a.hi, b.hi), mul_up(a.lo, b.lo));
        return Interval::unchecked(mul_down(a.lo, b.hi), mul_up(a.lo, b.lo));
    }
    if (b.lo >= 0)
        return Interval::unchecked(mul_down(a.lo, b.hi), mul_up(a.hi, b.hi));
    if (b.hi <= 0)
        return Interval::unchecked(mul_down(a.hi, b.lo), mul_up(a.lo, b.lo));
    return Interval::unchecked(std::min(mul_down(a.lo, b.hi), mul_down(a.hi, b.lo)),
                               std::max(mul_up(a.lo, b.lo), mul_up(a.hi, b.hi)));
}

Interval operator/(const Interval& a, const Interval& b)
{
    if (b.contains_zero())
        throw DivisionByZeroInterval();
    if (b.lo > 0) {
        if (a.lo >= 0)
            return Interval::unchecked(div_down(a.lo, b.hi), div_up(a.hi, b.lo));
        if (a.hi <= 0)
            return Interval::unchecked(div_down(a.lo, b.lo), div_up(a.hi, b.hi));
        return Interval::unchecked(div_down(a.lo, b.lo), div_up(a.hi, b.lo));
    }
    if (a.lo >= 0)
        return Interval::unchecked(div_down(a.hi, b.hi), div_up(a.lo, b.lo));
    if (a.hi <= 0)
        return Interval::unchecked(div_down(a.hi, b.lo), div_up(a.lo, b.hi));
    return Interval::unchecked(div_down(a.hi, b.hi), div_up(a.lo, b.hi));
}

Interval sqr(const Interval& a)
{
    if (a.lo >= 0)
        return Interval::unchecked(mul_down(a.lo, a.lo), mul_up(a.hi, a.hi));
    if (a.hi <= 0)
        return Interval::unchecked(mul_down(a.hi, a.hi), mul_up(a.lo, a.lo));
    const double m = std::max(-a.lo, a.hi);
    return Interval::unchecked(0.0, mul_up(m, m));
}

namespace {

// x^n for x >= 0 with directed rounding.
double pow_up(double x, unsigned n)
{
    double r = 1.0;
    for (unsigned i = 0; i < n; ++i)
        r = mul_up(r, x);
    return r;
}

double pow_down(double x, unsigned n)
{
    double r = 1.0;
    for (unsigned i = 0; i < n; ++i)
        r = mul_down(r, x);
    return r;
}

} // namespace

Interval pow(const Interval& a, unsigned n)
{
    if (n == 0)
        return Interval(1.0);
    if (n == 1)
        return a;
    if (n % 2 == 0) {
        if (a.lo >= 0)
            return Interval::unchecked(pow_down(a.lo, n), pow_up(a.hi, n));
        if (a.hi <= 0)
            return Interval::unchecked(pow_down(-a.hi, n), pow_up(-a.lo, n));
        return Interval::unchecked(0.0, pow_up(std::max(-a.lo, a.hi), n));
    }
    // Odd powers are monotone increasing.
    const double lo = a.lo >= 0 ? pow_down(a.lo, n) : -pow_up(-a.lo, n);
    const double hi = a.hi >= 0 ? pow_up(a.hi, n) : -pow_down(-a.hi, n);
    return Interval::unchecked(lo, hi);
}

Interval sqrt(const Interval& a)
{
    if (a.hi < 0)
        throw IntervalDomainError("sqrt of a negative interval");
    const double lo = a.lo <= 0 ? 0.0 : sqrt_down(a.lo);
    return Interval::unchecked(lo, sqrt_up(a.hi));
}

namespace {

constexpr double kTrigPad = 0x1p-40;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// True if some point c + 2*pi*k may lie in [a, b]; errs towards true.
bool may_contain_phase(double a, double b, double c)
{
    const double eps = 1e-9;
    const double kmin = std::ceil((a - c) / kTwoPi - eps);
    const double kmax = std::floor((b - c) / kTwoPi + eps);
    return kmin <= kmax;
}

Interval trig_from_endpoints(double fa, double fb, bool has_max, bool has_min)
{
    double lo = std::min(fa, fb) - kTrigPad;
    double hi = std::max(fa, fb) + kTrigPad;
    if (has_max)
        hi = 1.0;
    if (has_min)
        lo = -1.0;
    return Interval::unchecked(std::max(lo, -1.0), std::min(hi, 1.0));
}

} // namespace

Interval sin(const Interval& a)
{
    if (!a.is_bounded() || a.width() >= kTwoPi)
        return Interval::unchecked(-1.0, 1.0);
    constexpr double half_pi = std::numbers::pi / 2;
    return trig_from_endpoints(std::sin(a.lo), std::sin(a.hi), may_contain_phase(a.lo, a.hi, half_pi),
                               may_contain_phase(a.lo, a.hi, -half_pi));
}

Interval cos(const Interval& a)
{
    if (!a.is_bounded() || a.width() >= kTwoPi)
        return Interval::unchecked(-1.0, 1.0);
    return trig_from_endpoints(std::cos(a.lo), std::cos(a.hi), may_contain_phase(a.lo, a.hi, 0.0),
                               may_contain_phase(a.lo, a.hi, std::numbers::pi));
}

Interval abs(const Interval& a)
{
    if (a.lo >= 0)
        return a;
    if (a.hi <= 0)
        return -a;
    return Interval::unchecked(0.0, std::max(-a.lo, a.hi));
}

std::ostream& operator<<(std::ostream& os, const Interval& a)
{
    return os << '[' << a.lo << ", " << a.hi << ']';
}

IvBox hull(const IvBox& a, const IvBox& b)
{
    IvBox r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = hull(a[i], b[i]);
    return r;
}

std::optional<IvBox> intersect(const IvBox& a, const IvBox& b)
{
    IvBox r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto c = intersect(a[i], b[i]);
        if (!c)
            return std::nullopt;
        r[i] = *c;
    }
    return r;
}

bool contains(const IvBox& b, const std::vector<double>& x)
{
    for (std::size_t i = 0; i < b.size(); ++i)
        if (!b[i].contains(x[i]))
            return false;
    return true;
}

bool subset_of(const IvBox& a, const IvBox& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].subset_of(b[i]))
            return false;
    return true;
}

bool is_bounded(const IvBox& b)
{
    return std::all_of(b.begin(), b.end(), [](const Interval& c) { return c.is_bounded(); });
}

double max_width(const IvBox& b)
{
    double w = 0.0;
    for (const auto& c : b)
        w = std::max(w, c.width());
    return w;
}

std::vector<double> midpoint(const IvBox& b)
{
    std::vector<double> m(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        m[i] = b[i].mid();
    return m;
}

IvBox point_box(const std::vector<double>& x) { return IvBox(x.begin(), x.end()); }

Interval norm2(const IvBox& b)
{
    Interval s(0.0);
    for (const auto& c : b)
        s += sqr(c);
    return sqrt(s);
}

std::ostream& operator<<(std::ostream& os, const IvBox& b)
{
    os << '(';
    for (std::size_t i = 0; i < b.size(); ++i)
        os << (i ? ", " : "") << b[i];
    return os << ')';
}

} // namespace morsescope
