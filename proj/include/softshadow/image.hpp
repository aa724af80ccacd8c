#pragma once

// Core raster types shared by the whole toolkit: RGB images, single-channel
// maps, and discrete vector fields, plus the basic filtering / differential
// operators built on them. All arithmetic is double precision; pixel data is
// row-major with (i, j) = (row, col) and x increasing along columns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace softshadow {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

/// Single-channel map of doubles, nominal range [0,1] but not enforced.
class ScalarMap {
public:
    ScalarMap() = default;
    ScalarMap(int height, int width, double fill = 0.0)
        : h_(height), w_(width), v_(static_cast<size_t>(height) * width, fill) {
        require(height >= 1 && width >= 1, "ScalarMap: dimensions must be >= 1");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    size_t size() const { return v_.size(); }

    double& at(int i, int j) { return v_[static_cast<size_t>(i) * w_ + j]; }
    double at(int i, int j) const { return v_[static_cast<size_t>(i) * w_ + j]; }

    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

    bool same_size(const ScalarMap& o) const { return h_ == o.h_ && w_ == o.w_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    int h_ = 0, w_ = 0;
    std::vector<double> v_;
};

/// Three-channel RGB image of doubles. Values may transiently leave [0,1]
/// inside computations; persistence clamps.
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0)
        : h_(height), w_(width), v_(static_cast<size_t>(height) * width * 3, fill) {
        require(height >= 1 && width >= 1, "Image: dimensions must be >= 1");
    }

    int height() const { return h_; }
    int width() const { return w_; }

    double& at(int i, int j, int c) { return v_[(static_cast<size_t>(i) * w_ + j) * 3 + c]; }
    double at(int i, int j, int c) const { return v_[(static_cast<size_t>(i) * w_ + j) * 3 + c]; }

    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

    bool same_size(const Image& o) const { return h_ == o.h_ && w_ == o.w_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    int h_ = 0, w_ = 0;
    std::vector<double> v_;
};

/// Per-pixel (dx, dy) pair; dx is the column-direction derivative, dy the
/// row-direction derivative.
struct VectorField {
    int height = 0, width = 0;
    std::vector<double> dx, dy;

    VectorField() = default;
    VectorField(int h, int w)
        : height(h), width(w),
          dx(static_cast<size_t>(h) * w, 0.0),
          dy(static_cast<size_t>(h) * w, 0.0) {}

    size_t idx(int i, int j) const { return static_cast<size_t>(i) * width + j; }
};

/// Binary per-pixel map used for regions and morphology.
struct BinaryMap {
    int height = 0, width = 0;
    std::vector<uint8_t> v;

    BinaryMap() = default;
    BinaryMap(int h, int w, uint8_t fill = 0)
        : height(h), width(w), v(static_cast<size_t>(h) * w, fill) {}

    uint8_t at(int i, int j) const { return v[static_cast<size_t>(i) * width + j]; }
    void set(int i, int j, uint8_t b) { v[static_cast<size_t>(i) * width + j] = b; }

    long count() const {
        long n = 0;
        for (uint8_t b : v) n += (b != 0);
        return n;
    }
};

/// BT.601 full-range luma of an RGB image.
inline ScalarMap to_luma(const Image& img) {
    ScalarMap out(img.height(), img.width());
    for (int i = 0; i < img.height(); ++i)
        for (int j = 0; j < img.width(); ++j)
            out.at(i, j) = 0.299 * img.at(i, j, 0) + 0.587 * img.at(i, j, 1) +
                           0.114 * img.at(i, j, 2);
    return out;
}

/// Normalized 1-D Gaussian kernel with radius ceil(3*sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    require(std::isfinite(sigma) && sigma > 0.0, "gaussian kernel: sigma must be finite and > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        double g = std::exp(-0.5 * (t * t) / (sigma * sigma));
        k[t + radius] = g;
        sum += g;
    }
    for (double& x : k) x /= sum;
    return k;
}

/// Separable Gaussian blur with edge replication at the borders.
inline ScalarMap gaussian_blur(const ScalarMap& m, double sigma) {
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = (static_cast<int>(k.size()) - 1) / 2;
    const int h = m.height(), w = m.width();

    ScalarMap tmp(h, w), out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                int jj = std::clamp(j + t, 0, w - 1);
                acc += k[t + radius] * m.at(i, jj);
            }
            tmp.at(i, j) = acc;
        }
    }
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                int ii = std::clamp(i + t, 0, h - 1);
                acc += k[t + radius] * tmp.at(ii, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

// Discrete gradient stencils. Central differences on the interior, one-sided
// at the borders. penumbra_loss_grad in losses.hpp differentiates through
// exactly these stencils; change them together or not at all.
inline VectorField gradient(const ScalarMap& m) {
    require(m.height() >= 2 && m.width() >= 2, "gradient: map must be at least 2x2");
    const int h = m.height(), w = m.width();
    VectorField g(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double dx, dy;
            if (j == 0)
                dx = m.at(i, 1) - m.at(i, 0);
            else if (j == w - 1)
                dx = m.at(i, w - 1) - m.at(i, w - 2);
            else
                dx = 0.5 * (m.at(i, j + 1) - m.at(i, j - 1));
            if (i == 0)
                dy = m.at(1, j) - m.at(0, j);
            else if (i == h - 1)
                dy = m.at(h - 1, j) - m.at(h - 2, j);
            else
                dy = 0.5 * (m.at(i + 1, j) - m.at(i - 1, j));
            g.dx[g.idx(i, j)] = dx;
            g.dy[g.idx(i, j)] = dy;
        }
    }
    return g;
}

/// Bilinear resample to a new size (used by eval --resize).
inline ScalarMap bilinear_resize(const ScalarMap& m, int new_h, int new_w) {
    require(new_h >= 1 && new_w >= 1, "resize: target dimensions must be >= 1");
    ScalarMap out(new_h, new_w);
    const double sy = new_h > 1 ? double(m.height() - 1) / (new_h - 1) : 0.0;
    const double sx = new_w > 1 ? double(m.width() - 1) / (new_w - 1) : 0.0;
    for (int i = 0; i < new_h; ++i) {
        double fy = i * sy;
        int y0 = std::min(static_cast<int>(fy), m.height() - 1);
        int y1 = std::min(y0 + 1, m.height() - 1);
        double wy = fy - y0;
        for (int j = 0; j < new_w; ++j) {
            double fx = j * sx;
            int x0 = std::min(static_cast<int>(fx), m.width() - 1);
            int x1 = std::min(x0 + 1, m.width() - 1);
            double wx = fx - x0;
            out.at(i, j) = (1 - wy) * ((1 - wx) * m.at(y0, x0) + wx * m.at(y0, x1)) +
                           wy * ((1 - wx) * m.at(y1, x0) + wx * m.at(y1, x1));
        }
    }
    return out;
}

inline Image bilinear_resize(const Image& img, int new_h, int new_w) {
    require(new_h >= 1 && new_w >= 1, "resize: target dimensions must be >= 1");
    Image out(new_h, new_w);
    const double sy = new_h > 1 ? double(img.height() - 1) / (new_h - 1) : 0.0;
    const double sx = new_w > 1 ? double(img.width() - 1) / (new_w - 1) : 0.0;
    for (int i = 0; i < new_h; ++i) {
        double fy = i * sy;
        int y0 = std::min(static_cast<int>(fy), img.height() - 1);
        int y1 = std::min(y0 + 1, img.height() - 1);
        double wy = fy - y0;
        for (int j = 0; j < new_w; ++j) {
            double fx = j * sx;
            int x0 = std::min(static_cast<int>(fx), img.width() - 1);
            int x1 = std::min(x0 + 1, img.width() - 1);
            double wx = fx - x0;
            for (int c = 0; c < 3; ++c)
                out.at(i, j, c) =
                    (1 - wy) * ((1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c)) +
                    wy * ((1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c));
        }
    }
    return out;
}

}  // namespace softshadow
