#include "morsescope/vector_field.hpp"

#include <algorithm>
#include <sstream>

namespace morsescope {

VectorField::VectorField(std::vector<std::string> sources, std::map<std::string, double> params, std::string name)
    : dim_(static_cast<int>(sources.size())), name_(std::move(name)), sources_(std::move(sources)),
      params_(std::move(params))
{
    if (dim_ < 1)
        throw std::invalid_argument("vector field needs at least one component");
    components_.reserve(sources_.size());
    for (const auto& src : sources_)
        components_.push_back(bind_params(parse_expr(src), params_, dim_));
    field_tape_ = std::make_shared<const Tape>(components_);
}

VectorField::VectorField(const VectorField& o)
    : dim_(o.dim_), name_(o.name_), sources_(o.sources_), params_(o.params_), components_(o.components_),
      field_tape_(o.field_tape_)
{
    std::lock_guard lock(o.series_mutex_);
    series_ = o.series_;
}

VectorField& VectorField::operator=(const VectorField& o)
{
    if (this == &o)
        return *this;
    std::map<int, std::shared_ptr<const LieSeries>> series;
    {
        std::lock_guard lock(o.series_mutex_);
        series = o.series_;
    }
    dim_ = o.dim_;
    name_ = o.name_;
    sources_ = o.sources_;
    params_ = o.params_;
    components_ = o.components_;
    field_tape_ = o.field_tape_;
    std::lock_guard lock(series_mutex_);
    series_ = std::move(series);
    return *this;
}

Point VectorField::eval(const Point& x) const
{
    Point out(dim_);
    std::vector<double> scratch;
    field_tape_->eval(x.data(), out.data(), scratch);
    return out;
}

IvBox VectorField::eval(const IvBox& b) const
{
    IvBox out(dim_);
    std::vector<Interval> scratch;
    field_tape_->eval(b.data(), out.data(), scratch);
    return out;
}

void VectorField::eval(const Interval* x, Interval* out, std::vector<Interval>& scratch) const
{
    field_tape_->eval(x, out, scratch);
}

void VectorField::eval(const double* x, double* out, std::vector<double>& scratch) const
{
    field_tape_->eval(x, out, scratch);
}

std::shared_ptr<const LieSeries> VectorField::lie_series(int order) const
{
    std::lock_guard<std::mutex> lock(series_mutex_);
    if (auto it = series_.find(order); it != series_.end())
        return it->second;

    // coeff[k][i] = c_k of component i.
    std::vector<std::vector<Expr>> coeff(order + 2, std::vector<Expr>(dim_));
    for (int i = 0; i < dim_; ++i)
        coeff[0][i] = ex::var(i);
    for (int k = 0; k <= order; ++k) {
        for (int i = 0; i < dim_; ++i) {
            Expr lie = ex::constant(0.0);
            for (int j = 0; j < dim_; ++j)
                lie = ex::add(lie, ex::mul(components_[j], diff(coeff[k][i], j)));
            coeff[k + 1][i] = ex::div(lie, ex::constant(static_cast<double>(k + 1)));
        }
    }

    std::vector<Expr> with_jac;
    std::vector<Expr> plain;
    for (int k = 1; k <= order; ++k)
        for (int i = 0; i < dim_; ++i) {
            plain.push_back(coeff[k][i]);
            with_jac.push_back(coeff[k][i]);
        }
    for (int k = 1; k <= order; ++k)
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                with_jac.push_back(diff(coeff[k][i], j));

    auto series = std::make_shared<LieSeries>(LieSeries{order, dim_, Tape(with_jac), Tape(plain),
                                                        Tape(std::vector<Expr>(coeff[order + 1].begin(),
                                                                               coeff[order + 1].end()))});
    series_.emplace(order, series);
    return series;
}

std::string VectorField::describe() const
{
    std::ostringstream os;
    os << name_;
    if (!params_.empty()) {
        os << '(';
        bool first = true;
        for (const auto& [k, v] : params_) {
            os << (first ? "" : ",") << k << '=' << v;
            first = false;
        }
        os << ')';
    }
    return os.str();
}

Point eval_real(const VectorField& f, const Point& x) { return f.eval(x); }

IvBox eval_interval(const VectorField& f, const IvBox& b) { return f.eval(b); }

VectorField builtin(const std::string& name, const std::map<std::string, double>& params)
{
    if (name == "two_cycles") {
        std::map<std::string, double> p = {{"mu", 2.0}};
        for (const auto& [k, v] : params) {
            if (k != "mu")
                throw UnknownIdentifier("two_cycles has no parameter '" + k + "'");
            p[k] = v;
        }
        return VectorField({"-x2 + x1*(x1^2 + x2^2 - mu)*(x1^2 + x2^2 - 1)",
                            "x1 + x2*(x1^2 + x2^2 - mu)*(x1^2 + x2^2 - 1)"},
                           p, "two_cycles");
    }
    if (name == "circle_demo") {
        if (!params.empty())
            throw UnknownIdentifier("circle_demo takes no parameters");
        return VectorField({"-x2 + x1*(1 - x1^2 - x2^2)", "x1 + x2*(1 - x1^2 - x2^2)"}, {}, "circle_demo");
    }
    if (name == "linear") {
        std::map<std::string, double> p = params;
        if (auto it = p.find("lambda"); it != p.end()) {
            p["lambda1"] = it->second;
            p.erase(it);
        }
        std::vector<std::string> sources;
        for (int i = 1;; ++i) {
            const std::string key = "lambda" + std::to_string(i);
            if (!p.count(key))
                break;
            sources.push_back(key + "*x" + std::to_string(i));
        }
        if (sources.empty())
            throw std::invalid_argument("linear system needs lambda1[, lambda2, ...]");
        if (sources.size() != p.size())
            throw UnknownIdentifier("linear: parameters must be lambda1..lambdaD without gaps");
        return VectorField(sources, p, "linear");
    }
    throw UnknownSystem("unknown builtin system '" + name + "'");
}

} // namespace morsescope
