#include "morsescope/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace morsescope {

using namespace rounding;

void IntegratorConfig::validate() const
{
    if (taylor_order < 1 || taylor_order > 5)
        throw std::invalid_argument("taylor_order must be in 1..5");
    if (max_substeps < 1)
        throw std::invalid_argument("max_substeps must be positive");
    if (!(inflation > 1.0))
        throw std::invalid_argument("inflation must exceed 1");
    if (max_picard_iters < 1)
        throw std::invalid_argument("max_picard_iters must be positive");
    if (!(remainder_rel_tol > 0.0) || !(remainder_abs_tol > 0.0))
        throw std::invalid_argument("remainder tolerances must be positive");
    if (!(blowup_norm > 0.0))
        throw std::invalid_argument("blowup_norm must be positive");
}

std::string to_string(FailureReason r)
{
    switch (r) {
    case FailureReason::none:
        return "ok";
    case FailureReason::blowup_suspected:
        return "blowup_suspected";
    case FailureReason::substep_budget_exhausted:
        return "substep_budget_exhausted";
    case FailureReason::unbounded_interval:
        return "unbounded_interval";
    }
    return "unknown";
}

struct Integrator::Workspace {
    std::vector<Interval> scratch;
    IvBox v;
    std::vector<Interval> coeff_jac;
    std::vector<Interval> coeff_mid;
    IvBox remainder;
};

Integrator::Integrator(const VectorField& field, IntegratorConfig cfg)
    : field_(&field), cfg_(cfg)
{
    cfg_.validate();
    series_ = field.lie_series(cfg_.taylor_order);
}

namespace {

// Scales each component about its midpoint by `factor`; never shrinks.
IvBox inflate(const IvBox& b, double factor)
{
    IvBox r(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double m = b[i].mid();
        const double radius = mul_up(b[i].rad(), factor);
        r[i] = hull(b[i], Interval::unchecked(sub_down(m, radius), add_up(m, radius)));
    }
    return r;
}

// x + [0, h] * v
void euler_hull(const IvBox& x, const Interval& span, const IvBox& v, IvBox& out)
{
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] + span * v[i];
}

} // namespace

std::optional<IvBox> Integrator::rough(const IvBox& x, double h, Workspace& ws) const
{
    const Interval span = Interval::unchecked(0.0, h);
    const auto d = x.size();
    ws.v.resize(d);
    IvBox y;
    try {
        field_->eval(x.data(), ws.v.data(), ws.scratch);
        euler_hull(x, span, ws.v, y);
        if (!is_bounded(y))
            return std::nullopt;
        IvBox b = inflate(y, cfg_.inflation);
        for (int it = 0; it < cfg_.max_picard_iters; ++it) {
            field_->eval(b.data(), ws.v.data(), ws.scratch);
            euler_hull(x, span, ws.v, y);
            if (!is_bounded(y))
                return std::nullopt;
            if (subset_of(y, b)) {
                // y is itself validated; a couple of Picard sweeps tighten it.
                for (int k = 0; k < 2; ++k) {
                    field_->eval(y.data(), ws.v.data(), ws.scratch);
                    IvBox z;
                    euler_hull(x, span, ws.v, z);
                    auto c = intersect(z, y);
                    if (!c)
                        break;
                    y = std::move(*c);
                }
                return y;
            }
            b = inflate(hull(b, y), cfg_.inflation);
        }
    } catch (const std::domain_error&) {
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<IvBox> Integrator::rough_enclosure(const IvBox& x, double h) const
{
    Workspace ws;
    return rough(x, h, ws);
}

Integrator::StepResult Integrator::taylor_step(const IvBox& x, double h, const IvBox& rough_box, Workspace& ws,
                                               double& remainder_width) const
{
    const int p = series_->order;
    const std::size_t d = x.size();

    ws.coeff_jac.resize(d * p + d * d * p);
    series_->coefficients_and_jacobians.eval(x.data(), ws.coeff_jac.data(), ws.scratch);
    const IvBox center = point_box(midpoint(x));
    ws.coeff_mid.resize(d * p);
    series_->coefficients.eval(center.data(), ws.coeff_mid.data(), ws.scratch);
    ws.remainder.resize(d);
    series_->remainder.eval(rough_box.data(), ws.remainder.data(), ws.scratch);

    const Interval* cx = ws.coeff_jac.data();
    const Interval* jac = ws.coeff_jac.data() + d * p;
    const Interval* cc = ws.coeff_mid.data();

    auto evaluate = [&](const Interval& t) {
        std::vector<Interval> tk(p + 2);
        for (int k = 1; k <= p + 1; ++k)
            tk[k] = pow(t, static_cast<unsigned>(k));
        IvBox out(d);
        for (std::size_t i = 0; i < d; ++i) {
            const Interval rem = ws.remainder[i] * tk[p + 1];
            Interval naive = x[i];
            Interval mv = center[i];
            for (int k = 1; k <= p; ++k) {
                naive += cx[(k - 1) * d + i] * tk[k];
                mv += cc[(k - 1) * d + i] * tk[k];
            }
            for (std::size_t j = 0; j < d; ++j) {
                Interval dij(i == j ? 1.0 : 0.0);
                for (int k = 1; k <= p; ++k)
                    dij += jac[((k - 1) * d + i) * d + j] * tk[k];
                mv += dij * (x[j] - center[j]);
            }
            naive += rem;
            mv += rem;
            auto both = intersect(naive, mv);
            out[i] = both ? *both : naive;
        }
        return out;
    };

    StepResult r;
    r.segment = evaluate(Interval::unchecked(0.0, h));
    if (auto c = intersect(r.segment, rough_box))
        r.segment = std::move(*c);
    r.endpoint = evaluate(Interval(h));
    if (auto c = intersect(r.endpoint, r.segment))
        r.endpoint = std::move(*c);

    remainder_width = 0.0;
    const Interval hp = pow(Interval(h), static_cast<unsigned>(p + 1));
    for (std::size_t i = 0; i < d; ++i)
        remainder_width = std::max(remainder_width, (ws.remainder[i] * hp).width());
    return r;
}

FailureReason Integrator::advance(IvBox& cur, double t, bool as_tube, FlowEnclosure& out, Workspace& ws) const
{
    if (t <= 0.0) {
        if (as_tube)
            out.tube.push_back(cur);
        return FailureReason::none;
    }
    const int p = series_->order;
    const double min_step = std::ldexp(t, -60);
    const long attempt_budget = 50L * cfg_.max_substeps;
    long attempts = 0;

    double remaining = t;
    double h_try = t;
    IvBox acc;
    while (remaining > 0.0) {
        if (out.substeps >= cfg_.max_substeps || ++attempts > attempt_budget)
            return FailureReason::substep_budget_exhausted;
        double h = std::min(h_try, remaining);

        std::optional<IvBox> b = rough(cur, h, ws);
        while (!b) {
            h *= 0.5;
            if (h < min_step)
                return FailureReason::blowup_suspected;
            b = rough(cur, h, ws);
        }

        // Split the remaining time so that h + rest == remaining exactly.
        double rest = 0.0;
        if (h < remaining) {
            rest = remaining - h;
            h = remaining - rest;
            // Below the resolution of the remaining time no step is possible.
            if (h <= 0.0)
                return FailureReason::blowup_suspected;
        } else {
            h = remaining;
        }

        double rem_width = 0.0;
        StepResult step;
        try {
            step = taylor_step(cur, h, *b, ws, rem_width);
        } catch (const std::domain_error&) {
            return FailureReason::unbounded_interval;
        }
        if (!is_bounded(step.endpoint) || !is_bounded(step.segment) || !std::isfinite(rem_width))
            return FailureReason::unbounded_interval;

        const double tol = std::max(cfg_.remainder_abs_tol, cfg_.remainder_rel_tol * max_width(cur));
        if (rem_width > tol) {
            // Steps this short make no progress: treat like a failed rough enclosure.
            if (h <= min_step)
                return FailureReason::blowup_suspected;
            const double factor = std::clamp(0.8 * std::pow(tol / rem_width, 1.0 / (p + 1)), 0.05, 0.5);
            h_try = h * factor;
            continue;
        }

        for (const auto& c : step.segment)
            if (c.mag() > cfg_.blowup_norm)
                return FailureReason::blowup_suspected;
        out.tube.push_back(step.segment);
        ++out.substeps;
        if (as_tube)
            acc = acc.empty() ? step.segment : hull(acc, step.segment);
        cur = std::move(step.endpoint);
        remaining = rest;
        h_try = 2.0 * h;
    }
    if (as_tube)
        cur = std::move(acc);
    return FailureReason::none;
}

FlowEnclosure Integrator::flow_endpoint(const IvBox& x, const Interval& t) const
{
    if (!(t.lo >= 0.0) || t.lo > t.hi)
        throw std::invalid_argument("flow_endpoint needs 0 <= t.lo <= t.hi");
    FlowEnclosure out;
    Workspace ws;
    IvBox cur = x;
    if (!is_bounded(cur)) {
        out.failure = FailureReason::unbounded_interval;
        return out;
    }
    out.failure = advance(cur, t.lo, false, out, ws);
    if (!out.ok())
        return out;
    const double dt = sub_up(t.hi, t.lo);
    if (dt > 0.0) {
        out.failure = advance(cur, dt, true, out, ws);
        if (!out.ok())
            return out;
    } else if (out.tube.empty()) {
        out.tube.push_back(cur);
    }
    out.endpoint = std::move(cur);
    return out;
}

FlowEnclosure Integrator::flow_tube(const IvBox& x, double t_hi) const
{
    if (!(t_hi >= 0.0))
        throw std::invalid_argument("flow_tube needs t_hi >= 0");
    FlowEnclosure out;
    Workspace ws;
    IvBox cur = x;
    if (!is_bounded(cur)) {
        out.failure = FailureReason::unbounded_interval;
        return out;
    }
    out.failure = advance(cur, t_hi, true, out, ws);
    if (out.ok())
        out.endpoint = std::move(cur);
    return out;
}

std::optional<IvBox> rough_enclosure(const VectorField& f, const IvBox& x, double t_hi, const IntegratorConfig& cfg)
{
    return Integrator(f, cfg).rough_enclosure(x, t_hi);
}

FlowEnclosure flow_endpoint(const VectorField& f, const IvBox& x, const Interval& t, const IntegratorConfig& cfg)
{
    return Integrator(f, cfg).flow_endpoint(x, t);
}

FlowEnclosure flow_tube(const VectorField& f, const IvBox& x, double t_hi, const IntegratorConfig& cfg)
{
    return Integrator(f, cfg).flow_tube(x, t_hi);
}

} // namespace morsescope
