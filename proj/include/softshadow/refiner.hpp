#pragma once

// Projected gradient descent that refines an initial (possibly hard) mask by
// minimizing L_mask against an observed mask plus the penumbra formation
// constraint applied directly to the mask variable:
//
//     f(s) = L_mask(s, s_obs) + lambda1 * L_pen(s)
//
// Penumbra membership, centroid, and direction field are recomputed every
// `membership_refresh` steps and held frozen in between, which keeps each
// window's objective well-defined and the accepted sequence non-increasing.
// A step is accepted only if it does not increase the frozen-membership
// objective; otherwise the step size is halved for that step (at most 20
// halvings). There is no randomness anywhere in the descent.

#include <sstream>
#include <string>
#include <vector>

#include "softshadow/losses.hpp"
#include "softshadow/mask.hpp"

namespace softshadow {

struct RefineConfig {
    double lambda1 = 0.1;       // weight on the penumbra constraint
    int steps = 300;
    double step_size = 0.5;
    double t1 = 0.1, t2 = 0.9;  // membership thresholds
    int membership_refresh = 10;

    void validate() const {
        require(std::isfinite(lambda1) && lambda1 >= 0.0, "refine: lambda1 must be >= 0");
        require(steps >= 1, "refine: steps must be >= 1");
        require(std::isfinite(step_size) && step_size > 0.0, "refine: step_size must be > 0");
        require(t1 >= 0.0 && t2 <= 1.0 && t1 < t2, "refine: need 0 <= t1 < t2 <= 1");
        require(membership_refresh >= 1, "refine: membership_refresh must be >= 1");
    }
};

struct TraceRow {
    int step = 0;           // 0 is the initial state
    double objective = 0.0; // frozen-membership objective after this step
    double l_mask = 0.0;
    double l_pen = 0.0;
};

struct RefineTrace {
    std::vector<TraceRow> rows;
    int refreshes = 0;
    int rejected_steps = 0;  // steps where 20 halvings never found a non-increase
};

struct RefineResult {
    SoftMask mask;
    RefineTrace trace;
};

inline RefineResult refine_mask(const SoftMask& s_init, const SoftMask& s_obs,
                                const RefineConfig& cfg) {
    require(s_init.height() == s_obs.height() && s_init.width() == s_obs.width(),
            "refine_mask: dimension mismatch");
    cfg.validate();

    ScalarMap s = s_init.map();
    const ScalarMap& obs = s_obs.map();

    FrozenPenumbra frozen;
    auto objective = [&](const ScalarMap& m) {
        return detail::mse(m, obs) + cfg.lambda1 * penumbra_loss_frozen(m, frozen);
    };

    RefineTrace trace;
    trace.rows.reserve(cfg.steps + 1);

    double cur_obj = 0.0;
    for (int step = 1; step <= cfg.steps; ++step) {
        if ((step - 1) % cfg.membership_refresh == 0) {
            frozen = freeze_penumbra(SoftMask::clamped(s), cfg.t1, cfg.t2);
            ++trace.refreshes;
            cur_obj = objective(s);
            if (step == 1)
                trace.rows.push_back({0, cur_obj, detail::mse(s, obs),
                                      penumbra_loss_frozen(s, frozen)});
        }
        if (!std::isfinite(cur_obj))
            throw std::runtime_error("refine_mask: non-finite objective");

        MaskGradient g = mask_loss_grad(s, obs);
        const MaskGradient gp = penumbra_loss_grad_frozen(s, frozen);
        for (size_t k = 0; k < g.data().size(); ++k)
            g.data()[k] += cfg.lambda1 * gp.data()[k];

        double eta = cfg.step_size;
        ScalarMap candidate(s.height(), s.width());
        bool accepted = false;
        for (int halve = 0; halve <= 20; ++halve) {
            for (size_t k = 0; k < s.data().size(); ++k)
                candidate.data()[k] =
                    std::clamp(s.data()[k] - eta * g.data()[k], 0.0, 1.0);
            const double cand_obj = objective(candidate);
            if (cand_obj <= cur_obj) {
                s = candidate;
                cur_obj = cand_obj;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) ++trace.rejected_steps;

        trace.rows.push_back({step, cur_obj, detail::mse(s, obs),
                              penumbra_loss_frozen(s, frozen)});
    }

    return RefineResult{SoftMask::clamped(std::move(s)), std::move(trace)};
}

inline std::string trace_to_csv(const RefineTrace& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "step,objective,l_mask,l_pen\n";
    for (const TraceRow& r : trace.rows)
        os << r.step << ',' << r.objective << ',' << r.l_mask << ',' << r.l_pen << '\n';
    return os.str();
}

}  // namespace softshadow
