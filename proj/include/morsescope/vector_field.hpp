#pragma once

#include "morsescope/expr.hpp"
#include "morsescope/interval.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace morsescope {

class UnknownSystem : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Point = std::vector<double>;

// Normalized Taylor coefficients of the flow, x(t) = sum_k c_k(x0) t^k,
// obtained by iterating the Lie derivative c_{k+1} = (v . grad c_k)/(k+1).
struct LieSeries {
    int order = 0;
    int dim = 0;
    // c_1..c_order and their Jacobians (row-major d x d per order).
    Tape coefficients_and_jacobians;
    // c_1..c_order only (cheaper, used at the box midpoint).
    Tape coefficients;
    // c_{order+1}, evaluated on the rough enclosure for the remainder.
    Tape remainder;
};

// Autonomous polynomial-style vector field x' = v(x). Immutable.
class VectorField {
public:
    // `sources` are parsed with parse_expr; parameters bound from `params`.
    VectorField(std::vector<std::string> sources, std::map<std::string, double> params = {},
                std::string name = "custom");
    VectorField(const VectorField& o);
    VectorField& operator=(const VectorField& o);

    int dim() const { return dim_; }
    const std::string& name() const { return name_; }
    const std::vector<std::string>& sources() const { return sources_; }
    const std::map<std::string, double>& params() const { return params_; }
    // Components with parameters substituted.
    const std::vector<Expr>& components() const { return components_; }

    Point eval(const Point& x) const;
    IvBox eval(const IvBox& b) const;
    void eval(const Interval* x, Interval* out, std::vector<Interval>& scratch) const;
    void eval(const double* x, double* out, std::vector<double>& scratch) const;

    // Built on first request per order; safe under concurrent first use.
    std::shared_ptr<const LieSeries> lie_series(int order) const;

    // Human-readable description: "name(k=v,...)" followed by the components.
    std::string describe() const;

private:
    int dim_;
    std::string name_;
    std::vector<std::string> sources_;
    std::map<std::string, double> params_;
    std::vector<Expr> components_;
    std::shared_ptr<const Tape> field_tape_;

    mutable std::mutex series_mutex_;
    mutable std::map<int, std::shared_ptr<const LieSeries>> series_;
};

Point eval_real(const VectorField& f, const Point& x);
IvBox eval_interval(const VectorField& f, const IvBox& b);

// Builtin systems:
//   two_cycles  (mu)      x1' = -x2 + x1 (r^2 - mu)(r^2 - 1), x2' = x1 + x2 (r^2 - mu)(r^2 - 1)
//   circle_demo           x1' = -x2 + x1 (1 - r^2),          x2' = x1 + x2 (1 - r^2)
//   linear (lambda1..d)   xi' = lambda_i xi
// `two_cycles` defaults mu = 2; `linear` reads lambda1, lambda2, ... in order.
VectorField builtin(const std::string& name, const std::map<std::string, double>& params = {});

} // namespace morsescope
