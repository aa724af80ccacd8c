#pragma once

// Training losses and the penumbra formation constraint, with analytic
// gradients with respect to mask pixels and a finite-difference verification
// harness.
//
// Normalization: all expectations are realized as means (per pixel for the
// mask / removal losses, per penumbra member for the constraint) so values
// are resolution-independent.
//
// Differentiation contract: penumbra membership, the centroid, and the
// direction field are non-differentiable functions of the mask; gradients
// treat them as constants of the evaluation point (a stop-gradient). The
// ReLU subgradient at 0 is taken as 0.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "softshadow/image.hpp"
#include "softshadow/mask.hpp"

namespace softshadow {

struct LossReport {
    double l_mask = 0.0;
    double l_pen = 0.0;
    double l_rem = 0.0;
    double lambda1 = 0.1;
    double lambda2 = 1.0;
    double total = 0.0;
    long penumbra_pixel_count = 0;
};

using MaskGradient = ScalarMap;  // per-pixel d(loss)/d(s)

namespace detail {

inline double mse(const ScalarMap& a, const ScalarMap& b) {
    double acc = 0.0;
    for (size_t k = 0; k < a.data().size(); ++k) {
        double d = a.data()[k] - b.data()[k];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data().size());
}

}  // namespace detail

/// Mean squared error between masks.
inline double mask_loss(const SoftMask& s_hat, const SoftMask& s_gt) {
    require(s_hat.height() == s_gt.height() && s_hat.width() == s_gt.width(),
            "mask_loss: dimension mismatch");
    return detail::mse(s_hat.map(), s_gt.map());
}

inline MaskGradient mask_loss_grad(const ScalarMap& s_hat, const ScalarMap& s_gt) {
    require(s_hat.same_size(s_gt), "mask_loss_grad: dimension mismatch");
    const double n = static_cast<double>(s_hat.height()) * s_hat.width();
    MaskGradient g(s_hat.height(), s_hat.width());
    for (size_t k = 0; k < g.data().size(); ++k)
        g.data()[k] = 2.0 * (s_hat.data()[k] - s_gt.data()[k]) / n;
    return g;
}

inline MaskGradient mask_loss_grad(const SoftMask& s_hat, const SoftMask& s_gt) {
    return mask_loss_grad(s_hat.map(), s_gt.map());
}

/// Mean squared error over all pixels and channels.
inline double removal_loss(const Image& x_hat, const Image& x) {
    require(x_hat.same_size(x), "removal_loss: dimension mismatch");
    double acc = 0.0;
    for (size_t k = 0; k < x_hat.data().size(); ++k) {
        double d = x_hat.data()[k] - x.data()[k];
        acc += d * d;
    }
    return acc / static_cast<double>(x_hat.data().size());
}

/// Unit vectors from the centroid to each member pixel, in (dx, dy) image
/// coordinates matching gradient(): dx along columns, dy along rows. Members
/// coinciding with the centroid are flagged invalid and contribute nothing.
struct DirectionField {
    std::vector<double> dx, dy;  // parallel to PenumbraSet::pixels
    std::vector<uint8_t> valid;
};

inline DirectionField direction_field(const PenumbraSet& ps) {
    require(!ps.empty(), "direction_field: penumbra set is empty");
    DirectionField d;
    d.dx.resize(ps.pixels.size());
    d.dy.resize(ps.pixels.size());
    d.valid.resize(ps.pixels.size());
    for (size_t k = 0; k < ps.pixels.size(); ++k) {
        const double ox = ps.pixels[k].second - ps.centroid_col;
        const double oy = ps.pixels[k].first - ps.centroid_row;
        const double n = std::hypot(ox, oy);
        if (n < 1e-9) {
            d.valid[k] = 0;
            d.dx[k] = d.dy[k] = 0.0;
        } else {
            d.valid[k] = 1;
            d.dx[k] = ox / n;
            d.dy[k] = oy / n;
        }
    }
    return d;
}

/// Frozen snapshot of everything the constraint treats as constant.
struct FrozenPenumbra {
    PenumbraSet set;
    DirectionField dir;
};

inline FrozenPenumbra freeze_penumbra(const SoftMask& s, double t1, double t2) {
    FrozenPenumbra f;
    f.set = penumbra_set(s, t1, t2);
    if (!f.set.empty()) f.dir = direction_field(f.set);
    return f;
}

/// Constraint value with membership, centroid, and directions frozen:
/// mean over members of ReLU(d(w) . grad s(w)). Gradients aligned with the
/// outward direction field are penalized; anti-aligned ones are filtered out.
inline double penumbra_loss_frozen(const ScalarMap& s, const FrozenPenumbra& f) {
    if (f.set.empty()) return 0.0;
    const VectorField g = gradient(s);
    double acc = 0.0;
    for (size_t k = 0; k < f.set.pixels.size(); ++k) {
        if (!f.dir.valid[k]) continue;
        auto [i, j] = f.set.pixels[k];
        double dot = f.dir.dx[k] * g.dx[g.idx(i, j)] + f.dir.dy[k] * g.dy[g.idx(i, j)];
        if (dot > 0.0) acc += dot;
    }
    return acc / static_cast<double>(f.set.pixels.size());
}

inline double penumbra_loss_frozen(const SoftMask& s, const FrozenPenumbra& f) {
    return penumbra_loss_frozen(s.map(), f);
}

struct PenumbraLossResult {
    double value = 0.0;
    PenumbraSet set;
};

inline PenumbraLossResult penumbra_loss(const SoftMask& s, double t1, double t2) {
    FrozenPenumbra f = freeze_penumbra(s, t1, t2);
    double v = penumbra_loss_frozen(s, f);
    return PenumbraLossResult{v, std::move(f.set)};
}

namespace detail {

// Stencil of gradient() at pixel (i, j): entries such that
// grad s(i,j) = (sum cx_k * s[p_k], sum cy_k * s[p_k]). Must stay in lockstep
// with the stencils in gradient().
struct StencilEntry {
    int i, j;
    double cx, cy;
};

inline int stencil(int i, int j, int h, int w, StencilEntry out[4]) {
    int n = 0;
    if (j == 0) {
        out[n++] = {i, 1, 1.0, 0.0};
        out[n++] = {i, 0, -1.0, 0.0};
    } else if (j == w - 1) {
        out[n++] = {i, w - 1, 1.0, 0.0};
        out[n++] = {i, w - 2, -1.0, 0.0};
    } else {
        out[n++] = {i, j + 1, 0.5, 0.0};
        out[n++] = {i, j - 1, -0.5, 0.0};
    }
    if (i == 0) {
        out[n++] = {1, j, 0.0, 1.0};
        out[n++] = {0, j, 0.0, -1.0};
    } else if (i == h - 1) {
        out[n++] = {h - 1, j, 0.0, 1.0};
        out[n++] = {h - 2, j, 0.0, -1.0};
    } else {
        out[n++] = {i + 1, j, 0.0, 0.5};
        out[n++] = {i - 1, j, 0.0, -0.5};
    }
    return n;
}

}  // namespace detail

/// Analytic gradient of the frozen-membership constraint. Each active member
/// (positive dot product) scatters its direction components through the same
/// central / one-sided stencils gradient() uses.
inline MaskGradient penumbra_loss_grad_frozen(const ScalarMap& s, const FrozenPenumbra& f) {
    MaskGradient out(s.height(), s.width(), 0.0);
    if (f.set.empty()) return out;
    const VectorField g = gradient(s);
    const double inv_n = 1.0 / static_cast<double>(f.set.pixels.size());
    detail::StencilEntry st[4];
    for (size_t k = 0; k < f.set.pixels.size(); ++k) {
        if (!f.dir.valid[k]) continue;
        auto [i, j] = f.set.pixels[k];
        double dot = f.dir.dx[k] * g.dx[g.idx(i, j)] + f.dir.dy[k] * g.dy[g.idx(i, j)];
        if (dot <= 0.0) continue;  // inactive, and subgradient 0 at the kink
        int n = detail::stencil(i, j, s.height(), s.width(), st);
        for (int e = 0; e < n; ++e)
            out.at(st[e].i, st[e].j) +=
                (f.dir.dx[k] * st[e].cx + f.dir.dy[k] * st[e].cy) * inv_n;
    }
    return out;
}

inline MaskGradient penumbra_loss_grad(const SoftMask& s, double t1, double t2) {
    return penumbra_loss_grad_frozen(s.map(), freeze_penumbra(s, t1, t2));
}

inline double combine_losses(double l_mask, double l_pen, double l_rem, double lambda1,
                             double lambda2) {
    return l_mask + lambda1 * l_pen + lambda2 * l_rem;
}

/// Total training objective: L = L_mask + lambda1*L_pen + lambda2*L_rem,
/// with the constraint evaluated on the predicted mask.
inline LossReport total_loss(const SoftMask& s_hat, const SoftMask& s_gt, const Image& x_hat,
                             const Image& x, double t1, double t2, double lambda1 = 0.1,
                             double lambda2 = 1.0) {
    LossReport r;
    r.l_mask = mask_loss(s_hat, s_gt);
    PenumbraLossResult p = penumbra_loss(s_hat, t1, t2);
    r.l_pen = p.value;
    r.penumbra_pixel_count = static_cast<long>(p.set.pixels.size());
    r.l_rem = removal_loss(x_hat, x);
    r.lambda1 = lambda1;
    r.lambda2 = lambda2;
    r.total = combine_losses(r.l_mask, r.l_pen, r.l_rem, lambda1, lambda2);
    return r;
}

// ---------------------------------------------------------------------------
// Finite-difference verification harness.

enum class LossKind { Mask, Removal, Penumbra };

struct FdCheckResult {
    double max_rel_err = 0.0;
    int probes_used = 0;
    int probes_excluded = 0;
};

namespace detail {

// Members of the frozen set whose stencil involves pixel (i, j); candidates
// are the pixel itself (one-sided stencils include it) and its 4-neighbors.
template <typename Fn>
inline void for_touching_members(const FrozenPenumbra& f, int i, int j, int h, int w, Fn&& fn) {
    const int cand[5][2] = {{i, j}, {i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    StencilEntry st[4];
    for (auto& c : cand) {
        if (c[0] < 0 || c[0] >= h || c[1] < 0 || c[1] >= w) continue;
        // Linear scan is fine at verification sizes.
        for (size_t k = 0; k < f.set.pixels.size(); ++k) {
            if (f.set.pixels[k].first != c[0] || f.set.pixels[k].second != c[1]) continue;
            int n = stencil(c[0], c[1], h, w, st);
            for (int e = 0; e < n; ++e)
                if (st[e].i == i && st[e].j == j) {
                    fn(k);
                    break;
                }
            break;
        }
    }
}

}  // namespace detail

/// Compares analytic gradients against central finite differences at `trials`
/// randomly sampled pixels. For the penumbra loss, membership / centroid /
/// direction are frozen at the base point, and probes whose touching ReLU
/// arguments lie within 10*h of the kink are excluded. Relative error uses
/// denominator max(|analytic|, |numeric|, 1e-12).
inline FdCheckResult finite_diff_check(LossKind kind, const SoftMask& s, double h, int trials,
                                       unsigned seed, double t1 = 0.1, double t2 = 0.9) {
    require(std::isfinite(h) && h > 0.0, "finite_diff_check: h must be > 0");
    require(trials >= 1, "finite_diff_check: trials must be >= 1");

    const int H = s.height(), W = s.width();
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> pick_i(0, H - 1), pick_j(0, W - 1);

    // Reference target for the MSE-structured losses; the removal loss shares
    // the mask loss's quadratic form and is checked through the same path.
    ScalarMap tgt(H, W);
    if (kind != LossKind::Penumbra) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& v : tgt.data()) v = u(rng);
    }

    FrozenPenumbra frozen;
    MaskGradient analytic;
    VectorField base_grad;
    if (kind == LossKind::Penumbra) {
        frozen = freeze_penumbra(s, t1, t2);
        analytic = penumbra_loss_grad_frozen(s.map(), frozen);
        base_grad = gradient(s.map());
    } else {
        analytic = mask_loss_grad(s.map(), tgt);
    }

    auto eval = [&](const ScalarMap& m) {
        if (kind == LossKind::Penumbra) return penumbra_loss_frozen(m, frozen);
        return detail::mse(m, tgt);
    };

    FdCheckResult res;
    ScalarMap work = s.map();
    for (int t = 0; t < trials; ++t) {
        const int i = pick_i(rng), j = pick_j(rng);

        if (kind == LossKind::Penumbra) {
            bool near_kink = false;
            detail::for_touching_members(frozen, i, j, H, W, [&](size_t k) {
                if (!frozen.dir.valid[k]) return;
                auto [wi, wj] = frozen.set.pixels[k];
                double dot = frozen.dir.dx[k] * base_grad.dx[base_grad.idx(wi, wj)] +
                             frozen.dir.dy[k] * base_grad.dy[base_grad.idx(wi, wj)];
                if (std::abs(dot) < 10.0 * h) near_kink = true;
            });
            if (near_kink) {
                ++res.probes_excluded;
                continue;
            }
        }

        const double orig = work.at(i, j);
        work.at(i, j) = orig + h;
        const double fp = eval(work);
        work.at(i, j) = orig - h;
        const double fm = eval(work);
        work.at(i, j) = orig;

        const double numeric = (fp - fm) / (2.0 * h);
        const double exact = analytic.at(i, j);
        const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-12});
        res.max_rel_err = std::max(res.max_rel_err, std::abs(numeric - exact) / denom);
        ++res.probes_used;
    }
    return res;
}

}  // namespace softshadow
