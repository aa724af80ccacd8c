#pragma once

// Full-reference quality metrics with region-restricted variants.
//
//   psnr     10*log10(1/MSE) on [0,1] data; +inf sentinel when MSE = 0.
//   ssim     single-scale SSIM, 11x11 Gaussian window sigma = 1.5,
//            K1 = 0.01, K2 = 0.03, dynamic range 1.0, per channel then
//            averaged. Windows fully inside the image only (no padding);
//            region restriction averages the SSIM map over region pixels.
//   mae_lab  mean absolute CIELAB difference (D65, sRGB gamma), averaged
//            over channels then region pixels. This is the default MAE;
//            mae_rgb (mean |a-b| * 255) is the clearly-labeled alternative.
//
// Region maps are evaluated at full image resolution; a null region means
// all pixels.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "softshadow/image.hpp"
#include "softshadow/mask.hpp"

namespace softshadow {

inline double psnr(const Image& a, const Image& b, const BinaryMap* region = nullptr) {
    require(a.same_size(b), "psnr: dimension mismatch");
    if (region)
        require(region->height == a.height() && region->width == a.width(),
                "psnr: region dimension mismatch");
    double acc = 0.0;
    long n = 0;
    for (int i = 0; i < a.height(); ++i)
        for (int j = 0; j < a.width(); ++j) {
            if (region && !region->at(i, j)) continue;
            for (int c = 0; c < 3; ++c) {
                double d = a.at(i, j, c) - b.at(i, j, c);
                acc += d * d;
            }
            n += 3;
        }
    require(n > 0, "psnr: empty region");
    const double mse = acc / n;
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

// Separable valid-window Gaussian filtering: rows first (width shrinks by
// 2*radius), then columns. Equivalent to the full 2-D windowed sum because
// the window is an outer product.
inline ScalarMap valid_filter(const ScalarMap& m, const std::vector<double>& k) {
    const int radius = (static_cast<int>(k.size()) - 1) / 2;
    const int h = m.height(), w = m.width();
    ScalarMap rows(h, w - 2 * radius);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w - 2 * radius; ++j) {
            double acc = 0.0;
            for (int t = 0; t < static_cast<int>(k.size()); ++t) acc += k[t] * m.at(i, j + t);
            rows.at(i, j) = acc;
        }
    ScalarMap out(h - 2 * radius, w - 2 * radius);
    for (int i = 0; i < h - 2 * radius; ++i)
        for (int j = 0; j < w - 2 * radius; ++j) {
            double acc = 0.0;
            for (int t = 0; t < static_cast<int>(k.size()); ++t) acc += k[t] * rows.at(i + t, j);
            out.at(i, j) = acc;
        }
    return out;
}

inline std::vector<double> ssim_window() {
    // 11-tap Gaussian, sigma 1.5, normalized.
    std::vector<double> k(11);
    double sum = 0.0;
    for (int t = -5; t <= 5; ++t) {
        k[t + 5] = std::exp(-0.5 * t * t / (1.5 * 1.5));
        sum += k[t + 5];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace detail

inline double ssim(const Image& a, const Image& b, const BinaryMap* region = nullptr) {
    require(a.same_size(b), "ssim: dimension mismatch");
    require(a.height() >= 11 && a.width() >= 11, "ssim: image smaller than the 11x11 window");
    if (region)
        require(region->height == a.height() && region->width == a.width(),
                "ssim: region dimension mismatch");

    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const std::vector<double> k = detail::ssim_window();
    const int radius = 5;
    const int vh = a.height() - 2 * radius, vw = a.width() - 2 * radius;

    ScalarMap ssim_sum(vh, vw, 0.0);
    ScalarMap ca(a.height(), a.width()), cb(a.height(), a.width());
    for (int c = 0; c < 3; ++c) {
        ScalarMap a2(a.height(), a.width()), b2(a.height(), a.width()), ab(a.height(), a.width());
        for (int i = 0; i < a.height(); ++i)
            for (int j = 0; j < a.width(); ++j) {
                double va = a.at(i, j, c), vb = b.at(i, j, c);
                ca.at(i, j) = va;
                cb.at(i, j) = vb;
                a2.at(i, j) = va * va;
                b2.at(i, j) = vb * vb;
                ab.at(i, j) = va * vb;
            }
        ScalarMap mu_a = detail::valid_filter(ca, k);
        ScalarMap mu_b = detail::valid_filter(cb, k);
        ScalarMap e_a2 = detail::valid_filter(a2, k);
        ScalarMap e_b2 = detail::valid_filter(b2, k);
        ScalarMap e_ab = detail::valid_filter(ab, k);
        for (int i = 0; i < vh; ++i)
            for (int j = 0; j < vw; ++j) {
                double ma = mu_a.at(i, j), mb = mu_b.at(i, j);
                double va = e_a2.at(i, j) - ma * ma;
                double vb = e_b2.at(i, j) - mb * mb;
                double cov = e_ab.at(i, j) - ma * mb;
                double v = ((2 * ma * mb + C1) * (2 * cov + C2)) /
                           ((ma * ma + mb * mb + C1) * (va + vb + C2));
                ssim_sum.at(i, j) += v / 3.0;
            }
    }

    double acc = 0.0;
    long n = 0;
    for (int i = 0; i < vh; ++i)
        for (int j = 0; j < vw; ++j) {
            if (region && !region->at(i + radius, j + radius)) continue;
            acc += ssim_sum.at(i, j);
            ++n;
        }
    require(n > 0, "ssim: empty region (no valid window centers)");
    return acc / n;
}

// ---------------------------------------------------------------------------
// CIELAB conversion (D65 white, sRGB gamma).

namespace detail {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline std::array<double, 3> rgb_to_lab(double r, double g, double b) {
    const double rl = srgb_to_linear(std::clamp(r, 0.0, 1.0));
    const double gl = srgb_to_linear(std::clamp(g, 0.0, 1.0));
    const double bl = srgb_to_linear(std::clamp(b, 0.0, 1.0));

    // sRGB D65 primaries
    const double X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

    constexpr double Xn = 0.95047, Yn = 1.0, Zn = 1.08883;
    auto f = [](double t) {
        constexpr double d = 6.0 / 29.0;
        return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
    };
    const double fx = f(X / Xn), fy = f(Y / Yn), fz = f(Z / Zn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace detail

/// Mean absolute CIELAB difference: per pixel the mean of |dL|, |da|, |db|,
/// averaged over region pixels.
inline double mae_lab(const Image& a, const Image& b, const BinaryMap* region = nullptr) {
    require(a.same_size(b), "mae_lab: dimension mismatch");
    if (region)
        require(region->height == a.height() && region->width == a.width(),
                "mae_lab: region dimension mismatch");
    double acc = 0.0;
    long n = 0;
    for (int i = 0; i < a.height(); ++i)
        for (int j = 0; j < a.width(); ++j) {
            if (region && !region->at(i, j)) continue;
            auto la = detail::rgb_to_lab(a.at(i, j, 0), a.at(i, j, 1), a.at(i, j, 2));
            auto lb = detail::rgb_to_lab(b.at(i, j, 0), b.at(i, j, 1), b.at(i, j, 2));
            acc += (std::abs(la[0] - lb[0]) + std::abs(la[1] - lb[1]) +
                    std::abs(la[2] - lb[2])) /
                   3.0;
            ++n;
        }
    require(n > 0, "mae_lab: empty region");
    return acc / n;
}

/// RGB-space MAE on the 0..255 scale; not the paper-style LAB convention.
inline double mae_rgb(const Image& a, const Image& b, const BinaryMap* region = nullptr) {
    require(a.same_size(b), "mae_rgb: dimension mismatch");
    if (region)
        require(region->height == a.height() && region->width == a.width(),
                "mae_rgb: region dimension mismatch");
    double acc = 0.0;
    long n = 0;
    for (int i = 0; i < a.height(); ++i)
        for (int j = 0; j < a.width(); ++j) {
            if (region && !region->at(i, j)) continue;
            for (int c = 0; c < 3; ++c) acc += std::abs(a.at(i, j, c) - b.at(i, j, c));
            n += 3;
        }
    require(n > 0, "mae_rgb: empty region");
    return 255.0 * acc / n;
}

// ---------------------------------------------------------------------------
// Report structures.

struct RegionMetrics {
    bool present = false;
    double psnr = 0.0;
    double ssim = 0.0;
    bool has_ssim = false;  // false when no valid SSIM window lies in the region
    double mae = 0.0;       // LAB
    long pixel_count = 0;
};

/// Shadow / non-shadow / all / penumbra rows of the Table-1-style report.
struct MetricsReport {
    RegionMetrics shadow, non_shadow, all, penumbra;
};

namespace detail {

inline RegionMetrics region_metrics(const Image& x_hat, const Image& x, const BinaryMap* region,
                                    long pixel_count) {
    RegionMetrics m;
    if (pixel_count == 0) return m;  // absent
    m.present = true;
    m.pixel_count = pixel_count;
    m.psnr = psnr(x_hat, x, region);
    try {
        m.ssim = ssim(x_hat, x, region);
        m.has_ssim = true;
    } catch (const std::invalid_argument&) {
        m.has_ssim = false;
    }
    m.mae = mae_lab(x_hat, x, region);
    return m;
}

}  // namespace detail

/// All three metrics over shadow (penumbra + umbra), non-shadow (lit), all
/// pixels, and the raw penumbra band of the partition. Empty regions are
/// flagged absent instead of failing the report.
inline MetricsReport evaluate_pair(const Image& x_hat, const Image& x,
                                   const RegionPartition& partition) {
    require(x_hat.same_size(x), "evaluate_pair: dimension mismatch");
    require(partition.lit.height == x.height() && partition.lit.width == x.width(),
            "evaluate_pair: partition dimension mismatch");
    MetricsReport r;
    const BinaryMap shadow = partition.shadow();
    r.shadow = detail::region_metrics(x_hat, x, &shadow, shadow.count());
    r.non_shadow = detail::region_metrics(x_hat, x, &partition.lit, partition.lit.count());
    r.all = detail::region_metrics(x_hat, x, nullptr,
                                   static_cast<long>(x.height()) * x.width());
    r.penumbra =
        detail::region_metrics(x_hat, x, &partition.penumbra, partition.penumbra.count());
    return r;
}

struct PenumbraBandMetrics {
    bool present = false;
    double psnr = 0.0;
    double mae = 0.0;  // LAB
    long pixel_count = 0;
};

constexpr int kPenumbraBandDilation = 5;

/// Table-3-style penumbra protocol: the band {t1 <= s <= t2} widened by a
/// 5-pixel dilation, scored with PSNR and MAE.
inline PenumbraBandMetrics penumbra_metrics(const Image& x_hat, const Image& x,
                                            const SoftMask& s, double t1, double t2) {
    require(x_hat.same_size(x), "penumbra_metrics: dimension mismatch");
    require(t1 < t2, "penumbra_metrics: need t1 < t2");
    BinaryMap band(s.height(), s.width());
    for (int i = 0; i < s.height(); ++i)
        for (int j = 0; j < s.width(); ++j)
            band.set(i, j, s.at(i, j) >= t1 && s.at(i, j) <= t2 ? 1 : 0);
    band = dilate(band, kPenumbraBandDilation);

    PenumbraBandMetrics m;
    m.pixel_count = band.count();
    if (m.pixel_count == 0) return m;  // absent
    m.present = true;
    m.psnr = psnr(x_hat, x, &band);
    m.mae = mae_lab(x_hat, x, &band);
    return m;
}

// ---------------------------------------------------------------------------
// Mask-sensitivity sweep (Table-4 analogue).

struct SensitivityPair {
    Image x, y;      // shadow-free / shadow
    SoftMask mask;
};

struct MaskVariant {
    std::string name;                     // e.g. "binarize@0.5"
    bool identity = false;
    PerturbMode mode = PerturbMode::Blur;
    double magnitude = 0.0;
};

/// Parses "identity" or "<mode>@<magnitude>" (magnitude optional for
/// hard-swap).
inline MaskVariant parse_mask_variant(const std::string& token) {
    MaskVariant v;
    v.name = token;
    if (token == "identity") {
        v.identity = true;
        return v;
    }
    auto pos = token.find('@');
    std::string mode = pos == std::string::npos ? token : token.substr(0, pos);
    v.mode = parse_perturb_mode(mode);
    if (pos != std::string::npos)
        v.magnitude = std::stod(token.substr(pos + 1));
    else
        require(v.mode == PerturbMode::HardSwap,
                "mask variant '" + token + "' needs @magnitude");
    return v;
}

struct SensitivityRow {
    std::string variant;
    double psnr_mean = 0.0;
    long images_used = 0;
    long inf_excluded = 0;  // infinite per-image PSNRs excluded from the mean
    long failures = 0;      // removal failures, skipped and counted
};

struct SensitivityReport {
    std::vector<SensitivityRow> rows;
    double mean = 0.0;     // across variant rows
    double std_dev = 0.0;  // population convention
};

using RemovalProcedure = std::function<Image(const Image& y, const SoftMask& mask)>;

inline SensitivityReport sensitivity_sweep(const RemovalProcedure& removal,
                                           const std::vector<SensitivityPair>& pairs,
                                           const std::vector<MaskVariant>& variants) {
    require(!pairs.empty(), "sensitivity_sweep: empty dataset");
    require(!variants.empty(), "sensitivity_sweep: no variants");
    SensitivityReport report;
    for (const MaskVariant& v : variants) {
        SensitivityRow row;
        row.variant = v.name;
        double acc = 0.0;
        for (const SensitivityPair& p : pairs) {
            SoftMask m = v.identity ? p.mask : perturb_mask(p.mask, v.mode, v.magnitude);
            Image x_hat;
            try {
                x_hat = removal(p.y, m);
            } catch (const std::exception&) {
                ++row.failures;
                continue;
            }
            double val = psnr(x_hat, p.x);
            if (std::isinf(val)) {
                ++row.inf_excluded;
                continue;
            }
            acc += val;
            ++row.images_used;
        }
        row.psnr_mean = row.images_used > 0 ? acc / row.images_used : 0.0;
        report.rows.push_back(std::move(row));
    }

    double sum = 0.0;
    for (const SensitivityRow& r : report.rows) sum += r.psnr_mean;
    report.mean = sum / report.rows.size();
    double var = 0.0;
    for (const SensitivityRow& r : report.rows) {
        double d = r.psnr_mean - report.mean;
        var += d * d;
    }
    report.std_dev = std::sqrt(var / report.rows.size());
    return report;
}

}  // namespace softshadow
