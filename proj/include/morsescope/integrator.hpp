// Validated flow enclosures: interval Taylor series with a Picard-validated
// rough enclosure and Lagrange remainder. No coordinate rotation.
#pragma once

#include "morsescope/interval.hpp"
#include "morsescope/vector_field.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace morsescope {

struct IntegratorConfig {
    int taylor_order = 3;
    int max_substeps = 10000;
    // Growth factor applied to rough-enclosure candidates that fail to validate.
    double inflation = 1.5;
    int max_picard_iters = 30;
    // A step is shortened until the width of its remainder term is at most
    // max(remainder_abs_tol, remainder_rel_tol * width of the current box).
    double remainder_rel_tol = 1e-4;
    double remainder_abs_tol = 1e-10;
    // Enclosures whose magnitude exceeds this bound are reported as blow-up.
    double blowup_norm = 1e4;

    // Throws std::invalid_argument.
    void validate() const;

    friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

enum class FailureReason { none, blowup_suspected, substep_budget_exhausted, unbounded_interval };

std::string to_string(FailureReason r);

struct FlowEnclosure {
    // Encloses {phi(t', x) : t' in the requested time interval, x in the initial box}.
    IvBox endpoint;
    // Union encloses phi([0, sup t], initial box); one box per substep.
    std::vector<IvBox> tube;
    FailureReason failure = FailureReason::none;
    int substeps = 0;

    bool ok() const { return failure == FailureReason::none; }
};

// Integrator bound to one vector field and configuration. Immutable after
// construction, so a single instance may serve any number of threads.
class Integrator {
public:
    Integrator(const VectorField& field, IntegratorConfig cfg = {});

    const VectorField& field() const { return *field_; }
    const IntegratorConfig& config() const { return cfg_; }

    // Box B with x + [0, h] * v(B) contained in B, hence phi([0, h], x) in B.
    std::optional<IvBox> rough_enclosure(const IvBox& x, double h) const;

    FlowEnclosure flow_endpoint(const IvBox& x, const Interval& t) const;
    FlowEnclosure flow_tube(const IvBox& x, double t_hi) const;

private:
    struct Workspace;
    struct StepResult {
        IvBox endpoint; // at exactly t = h
        IvBox segment;  // over t in [0, h]
    };

    // Advances `cur` by exactly `t`; appends one tube box per substep.
    // `as_tube` makes the final state the hull of the segments (time range [0, t]).
    FailureReason advance(IvBox& cur, double t, bool as_tube, FlowEnclosure& out, Workspace& ws) const;
    std::optional<IvBox> rough(const IvBox& x, double h, Workspace& ws) const;
    StepResult taylor_step(const IvBox& x, double h, const IvBox& rough_box, Workspace& ws,
                           double& remainder_width) const;

    const VectorField* field_;
    IntegratorConfig cfg_;
    std::shared_ptr<const LieSeries> series_;
};

// Convenience forms that construct a temporary Integrator.
std::optional<IvBox> rough_enclosure(const VectorField& f, const IvBox& x, double t_hi,
                                     const IntegratorConfig& cfg = {});
FlowEnclosure flow_endpoint(const VectorField& f, const IvBox& x, const Interval& t,
                            const IntegratorConfig& cfg = {});
FlowEnclosure flow_tube(const VectorField& f, const IvBox& x, double t_hi, const IntegratorConfig& cfg = {});

} // namespace morsescope
