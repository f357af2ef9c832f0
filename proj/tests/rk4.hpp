// Non-validated fourth-order Runge-Kutta reference integrator.
#pragma once

#include "morsescope/vector_field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace reference {

using morsescope::Point;

// Integrates to time t with steps of at most h; `visit` sees every state.
inline Point rk4(const morsescope::VectorField& f, Point x, double t, double h,
                 const std::function<void(const Point&)>& visit = {})
{
    const std::size_t d = x.size();
    std::vector<double> scratch;
    Point k1(d), k2(d), k3(d), k4(d), y(d);
    auto rhs = [&](const Point& p, Point& out) { f.eval(p.data(), out.data(), scratch); };
    const long n = std::max(1L, static_cast<long>(std::ceil(t / h)));
    const double dt = t / static_cast<double>(n);
    if (visit)
        visit(x);
    for (long s = 0; s < n; ++s) {
        rhs(x, k1);
        for (std::size_t i = 0; i < d; ++i)
            y[i] = x[i] + 0.5 * dt * k1[i];
        rhs(y, k2);
        for (std::size_t i = 0; i < d; ++i)
            y[i] = x[i] + 0.5 * dt * k2[i];
        rhs(y, k3);
        for (std::size_t i = 0; i < d; ++i)
            y[i] = x[i] + dt * k3[i];
        rhs(y, k4);
        for (std::size_t i = 0; i < d; ++i)
            x[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        if (visit)
            visit(x);
    }
    return x;
}

} // namespace reference
