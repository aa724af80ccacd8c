#pragma once

// Soft shadow mask construction and manipulation: ratio-based extraction from
// paired shadow / shadow-free images, penumbra-set identification, region
// partitioning, binarization, deterministic perturbations for sensitivity
// studies, and centroid computation.
//
// Mask convention throughout: s = 0 lit, s = 1 umbra, interior values are
// penumbra.

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "softshadow/image.hpp"

namespace softshadow {

/// Grayscale shadow mask with every value in [0,1].
class SoftMask {
public:
    SoftMask() = default;

    /// Validating constructor: throws unless all values are finite and in [0,1].
    explicit SoftMask(ScalarMap m) : m_(std::move(m)) {
        for (double v : m_.data())
            require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                    "SoftMask: values must be finite and in [0,1]");
    }

    /// Clamping factory for values produced by unconstrained arithmetic.
    static SoftMask clamped(ScalarMap m) {
        for (double& v : m.data()) {
            require(std::isfinite(v), "SoftMask: values must be finite");
            v = std::clamp(v, 0.0, 1.0);
        }
        SoftMask s;
        s.m_ = std::move(m);
        return s;
    }

    int height() const { return m_.height(); }
    int width() const { return m_.width(); }
    double at(int i, int j) const { return m_.at(i, j); }
    const ScalarMap& map() const { return m_; }

private:
    ScalarMap m_;
};

/// Floored luma quotient x_Y / y_Y; values never fall below the floor t.
struct RatioMask {
    ScalarMap rho;
    double floor_t = 0.0;
};

/// Pixels with t1 <= s <= t2, plus their coordinate centroid (row, col).
/// The centroid is undefined for an empty set.
struct PenumbraSet {
    std::vector<std::pair<int, int>> pixels;  // (row, col)
    double t1 = 0.0, t2 = 1.0;
    double centroid_row = 0.0, centroid_col = 0.0;

    bool empty() const { return pixels.empty(); }
};

/// Disjoint, exhaustive lit / penumbra / umbra classification.
struct RegionPartition {
    BinaryMap lit, penumbra, umbra;
    double t1 = 0.0, t2 = 1.0;

    /// Shadow region for Table-1-style metrics: penumbra plus umbra.
    BinaryMap shadow() const {
        BinaryMap s(penumbra.height, penumbra.width);
        for (size_t k = 0; k < s.v.size(); ++k) s.v[k] = penumbra.v[k] | umbra.v[k];
        return s;
    }
};

constexpr double kRatioEps = 1e-4;

/// Floored, low-pass-filtered luma quotient: rho = max(t, blur(x_Y / max(y_Y, eps))).
/// Values near 1 mean no attenuation; shadowed pixels exceed 1; the floor t
/// eliminates outliers where the shadow image is brighter than the reference.
inline RatioMask ratio_map(const ScalarMap& x_luma, const ScalarMap& y_luma, double t = 0.76,
                           double sigma = 1.5) {
    require(x_luma.same_size(y_luma), "ratio_map: dimension mismatch");
    require(std::isfinite(t) && t > 0.0, "ratio_map: t must be > 0");
    ScalarMap q(x_luma.height(), x_luma.width());
    for (int i = 0; i < q.height(); ++i)
        for (int j = 0; j < q.width(); ++j)
            q.at(i, j) = x_luma.at(i, j) / std::max(y_luma.at(i, j), kRatioEps);
    ScalarMap f = gaussian_blur(q, sigma);
    for (double& v : f.data()) v = std::max(t, v);
    return RatioMask{std::move(f), t};
}

struct ExtractParams {
    double sigma = 1.5;       // low-pass filter scale
    double t_lit = 0.98;      // smoothed-ratio cutoff separating lit pixels
    double delta = 0.05;      // headroom above 1 tolerated before clamping
    double percentile = 0.01; // rank used for the illumination estimate
};

struct ExtractResult {
    SoftMask mask;
    double a_hat = 1.0;       // estimated illumination weight
    bool shadow_found = false;
};

/// Recovers a normalized soft mask from a shadow-free / shadow image pair.
///
/// The smoothed luma ratio r = blur(y_Y / x_Y) equals 1 - s*(1 - a) under the
/// degradation model, so with the umbra-level estimate a_hat (a low percentile
/// of r over non-lit pixels) the inversion s = (1 - r) / (1 - a_hat) is exact
/// when a is spatially constant. Pixels with r >= t_lit are forced to s = 0.
/// A pair with no pixel below t_lit yields an all-zero mask flagged
/// shadow_found = false.
inline ExtractResult extract_soft_mask(const Image& x, const Image& y,
                                       const ExtractParams& params = {}) {
    require(x.same_size(y), "extract_soft_mask: dimension mismatch");
    const ScalarMap x_luma = to_luma(x);
    const ScalarMap y_luma = to_luma(y);

    ScalarMap q(x.height(), x.width());
    for (int i = 0; i < q.height(); ++i)
        for (int j = 0; j < q.width(); ++j) {
            double r = y_luma.at(i, j) / std::max(x_luma.at(i, j), kRatioEps);
            q.at(i, j) = std::clamp(r, kRatioEps, 1.0 + params.delta);
        }
    const ScalarMap r = gaussian_blur(q, params.sigma);

    std::vector<double> non_lit;
    non_lit.reserve(r.size());
    for (double v : r.data())
        if (v < params.t_lit) non_lit.push_back(v);

    if (non_lit.empty()) {
        return ExtractResult{SoftMask(ScalarMap(x.height(), x.width(), 0.0)), 1.0, false};
    }

    // a_hat = value at rank floor(p * (n - 1)) of the sorted non-lit ratios; a
    // low percentile is a robust minimum, and in the umbra r equals a exactly.
    const size_t rank =
        static_cast<size_t>(std::floor(params.percentile * (non_lit.size() - 1)));
    std::nth_element(non_lit.begin(), non_lit.begin() + rank, non_lit.end());
    const double a_hat = non_lit[rank];

    ScalarMap s(x.height(), x.width());
    const double denom = std::max(1.0 - a_hat, kRatioEps);
    for (int i = 0; i < s.height(); ++i)
        for (int j = 0; j < s.width(); ++j)
            s.at(i, j) = r.at(i, j) >= params.t_lit
                             ? 0.0
                             : std::clamp((1.0 - r.at(i, j)) / denom, 0.0, 1.0);
    return ExtractResult{SoftMask(std::move(s)), a_hat, true};
}

/// Hard mask: 1 where s >= threshold (inclusive), else 0.
inline SoftMask binarize(const SoftMask& s, double threshold) {
    require(threshold > 0.0 && threshold < 1.0, "binarize: threshold must be in (0,1)");
    ScalarMap out(s.height(), s.width());
    for (int i = 0; i < s.height(); ++i)
        for (int j = 0; j < s.width(); ++j)
            out.at(i, j) = s.at(i, j) >= threshold ? 1.0 : 0.0;
    return SoftMask(std::move(out));
}

inline PenumbraSet penumbra_set(const SoftMask& s, double t1, double t2) {
    require(t1 >= 0.0 && t2 <= 1.0 && t1 < t2, "penumbra_set: need 0 <= t1 < t2 <= 1");
    PenumbraSet ps;
    ps.t1 = t1;
    ps.t2 = t2;
    double sum_r = 0.0, sum_c = 0.0;
    for (int i = 0; i < s.height(); ++i)
        for (int j = 0; j < s.width(); ++j)
            if (s.at(i, j) >= t1 && s.at(i, j) <= t2) {
                ps.pixels.emplace_back(i, j);
                sum_r += i;
                sum_c += j;
            }
    if (!ps.pixels.empty()) {
        ps.centroid_row = sum_r / ps.pixels.size();
        ps.centroid_col = sum_c / ps.pixels.size();
    }
    return ps;
}

inline RegionPartition region_partition(const SoftMask& s, double t1, double t2) {
    require(t1 >= 0.0 && t2 <= 1.0 && t1 < t2, "region_partition: need 0 <= t1 < t2 <= 1");
    RegionPartition p;
    p.t1 = t1;
    p.t2 = t2;
    p.lit = BinaryMap(s.height(), s.width());
    p.penumbra = BinaryMap(s.height(), s.width());
    p.umbra = BinaryMap(s.height(), s.width());
    for (int i = 0; i < s.height(); ++i)
        for (int j = 0; j < s.width(); ++j) {
            double v = s.at(i, j);
            if (v < t1)
                p.lit.set(i, j, 1);
            else if (v <= t2)
                p.penumbra.set(i, j, 1);
            else
                p.umbra.set(i, j, 1);
        }
    return p;
}

namespace detail {

// Chebyshev-ball max/min filter (square window of the given radius).
inline ScalarMap min_max_filter(const ScalarMap& m, int radius, bool take_max) {
    if (radius <= 0) return m;
    ScalarMap out(m.height(), m.width());
    for (int i = 0; i < m.height(); ++i)
        for (int j = 0; j < m.width(); ++j) {
            double best = m.at(i, j);
            for (int di = -radius; di <= radius; ++di)
                for (int dj = -radius; dj <= radius; ++dj) {
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= m.height() || jj < 0 || jj >= m.width()) continue;
                    best = take_max ? std::max(best, m.at(ii, jj))
                                    : std::min(best, m.at(ii, jj));
                }
            out.at(i, j) = best;
        }
    return out;
}

}  // namespace detail

inline BinaryMap dilate(const BinaryMap& b, int radius) {
    if (radius <= 0) return b;
    BinaryMap out(b.height, b.width);
    for (int i = 0; i < b.height; ++i)
        for (int j = 0; j < b.width; ++j) {
            uint8_t v = 0;
            for (int di = -radius; di <= radius && !v; ++di)
                for (int dj = -radius; dj <= radius; ++dj) {
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= b.height || jj < 0 || jj >= b.width) continue;
                    if (b.at(ii, jj)) {
                        v = 1;
                        break;
                    }
                }
            out.set(i, j, v);
        }
    return out;
}

enum class PerturbMode { Dilate, Erode, Blur, Binarize, HardSwap };

inline PerturbMode parse_perturb_mode(const std::string& name) {
    if (name == "dilate") return PerturbMode::Dilate;
    if (name == "erode") return PerturbMode::Erode;
    if (name == "blur") return PerturbMode::Blur;
    if (name == "binarize") return PerturbMode::Binarize;
    if (name == "hard-swap" || name == "hardswap") return PerturbMode::HardSwap;
    throw std::invalid_argument("perturb_mask: unknown mode '" + name + "'");
}

/// Deterministic mask perturbations for sensitivity studies.
///   dilate / erode : max / min filter of radius round(magnitude)
///   blur           : Gaussian with sigma = magnitude (0 = identity)
///   binarize       : hard threshold at magnitude
///   hard-swap      : binarize at the fixed detector-style threshold 0.5,
///                    magnitude unused
inline SoftMask perturb_mask(const SoftMask& s, PerturbMode mode, double magnitude) {
    require(std::isfinite(magnitude) && magnitude >= 0.0,
            "perturb_mask: magnitude must be >= 0");
    switch (mode) {
        case PerturbMode::Dilate:
            return SoftMask::clamped(
                detail::min_max_filter(s.map(), static_cast<int>(std::lround(magnitude)), true));
        case PerturbMode::Erode:
            return SoftMask::clamped(
                detail::min_max_filter(s.map(), static_cast<int>(std::lround(magnitude)), false));
        case PerturbMode::Blur:
            if (magnitude == 0.0) return s;
            return SoftMask::clamped(gaussian_blur(s.map(), magnitude));
        case PerturbMode::Binarize:
            return binarize(s, magnitude);
        case PerturbMode::HardSwap:
            return binarize(s, 0.5);
    }
    throw std::invalid_argument("perturb_mask: unknown mode");
}

enum class CentroidMode { Global, PerComponent };

struct CentroidResult {
    double row = 0.0, col = 0.0;
    std::vector<std::pair<int, int>> members;
};

/// Centroid(s) of a penumbra set. Global mode returns the single mean
/// coordinate; per-component mode splits members by 8-connectivity and
/// returns one centroid per connected component.
inline std::vector<CentroidResult> centroid(const PenumbraSet& ps,
                                            CentroidMode mode = CentroidMode::Global) {
    require(!ps.empty(), "centroid: penumbra set is empty");
    if (mode == CentroidMode::Global) {
        CentroidResult r;
        r.row = ps.centroid_row;
        r.col = ps.centroid_col;
        r.members = ps.pixels;
        return {r};
    }

    // 8-connected component labeling over the member pixels.
    int max_r = 0, max_c = 0;
    for (auto& [i, j] : ps.pixels) {
        max_r = std::max(max_r, i);
        max_c = std::max(max_c, j);
    }
    const int h = max_r + 1, w = max_c + 1;
    std::vector<int> label(static_cast<size_t>(h) * w, -1);
    for (auto& [i, j] : ps.pixels) label[static_cast<size_t>(i) * w + j] = 0;

    std::vector<CentroidResult> out;
    std::vector<std::pair<int, int>> stack;
    int comp = 0;
    for (auto& [si, sj] : ps.pixels) {
        if (label[static_cast<size_t>(si) * w + sj] != 0) continue;
        ++comp;
        stack.push_back({si, sj});
        label[static_cast<size_t>(si) * w + sj] = comp;
        CentroidResult r;
        double sum_r = 0.0, sum_c = 0.0;
        while (!stack.empty()) {
            auto [i, j] = stack.back();
            stack.pop_back();
            r.members.emplace_back(i, j);
            sum_r += i;
            sum_c += j;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                    size_t k = static_cast<size_t>(ii) * w + jj;
                    if (label[k] == 0) {
                        label[k] = comp;
                        stack.push_back({ii, jj});
                    }
                }
        }
        r.row = sum_r / r.members.size();
        r.col = sum_c / r.members.size();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace softshadow
