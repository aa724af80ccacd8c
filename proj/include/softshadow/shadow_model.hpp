#pragma once

// The physical shadow formation model: forward synthesis y = x*(1 - s*(1-a)),
// its analytic inverse, least-squares illumination estimation, and an area
// light / occluder geometry that renders exact soft-shadow ground truth.
//
// Geometry: a disc light of radius R sits at normalized height 1, the
// occluder at height h in (0,1), the textured receiver at height 0. Occluder
// coordinates are given directly in projected receiver-plane pixels (the
// projection through the light center), so a receiver pixel p sees the light
// disc occluded exactly as a disc of radius R_eff = R*h/(1-h) centered at p
// is covered by the projected occluder.

#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softshadow/image.hpp"
#include "softshadow/mask.hpp"
#include "softshadow/png_io.hpp"

namespace softshadow {

/// Residual brightness inside fully shadowed regions; a = 1 means the shadow
/// has no effect, a = 0 is pitch black. Scalar by default, optionally one
/// value per color channel.
struct IlluminationWeight {
    std::array<double, 3> rgb{1.0, 1.0, 1.0};
    bool per_channel = false;

    static IlluminationWeight scalar(double a) {
        require(std::isfinite(a) && a >= 0.0 && a <= 1.0,
                "IlluminationWeight: a must be in [0,1]");
        return IlluminationWeight{{a, a, a}, false};
    }
    static IlluminationWeight channels(double r, double g, double b) {
        for (double v : {r, g, b})
            require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                    "IlluminationWeight: a must be in [0,1]");
        return IlluminationWeight{{r, g, b}, true};
    }

    double value(int c) const { return rgb[c]; }
    double value() const { return rgb[0]; }
};

inline Image synthesize_shadow(const Image& x, const SoftMask& s, const IlluminationWeight& a) {
    require(x.height() == s.height() && x.width() == s.width(),
            "synthesize_shadow: dimension mismatch");
    Image y(x.height(), x.width());
    for (int i = 0; i < x.height(); ++i)
        for (int j = 0; j < x.width(); ++j)
            for (int c = 0; c < 3; ++c)
                y.at(i, j, c) = x.at(i, j, c) * (1.0 - s.at(i, j) * (1.0 - a.value(c)));
    return y;
}

struct RemovalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kRemovalDenomEps = 1e-3;

/// Inverts the degradation model: x_hat = y / (1 - s*(1-a)). Throws
/// RemovalError (naming the offending pixel count) when the denominator falls
/// below 1e-3 anywhere; the caller may raise a and retry.
inline Image remove_shadow(const Image& y, const SoftMask& s, const IlluminationWeight& a) {
    require(y.height() == s.height() && y.width() == s.width(),
            "remove_shadow: dimension mismatch");
    long bad = 0;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < y.height(); ++i)
            for (int j = 0; j < y.width(); ++j)
                if (1.0 - s.at(i, j) * (1.0 - a.value(c)) < kRemovalDenomEps) ++bad;
    if (bad > 0)
        throw RemovalError("remove_shadow: denominator below " +
                           std::to_string(kRemovalDenomEps) + " at " + std::to_string(bad) +
                           " pixel-channels");
    Image x(y.height(), y.width());
    for (int i = 0; i < y.height(); ++i)
        for (int j = 0; j < y.width(); ++j)
            for (int c = 0; c < 3; ++c)
                x.at(i, j, c) = y.at(i, j, c) / (1.0 - s.at(i, j) * (1.0 - a.value(c)));
    return x;
}

/// Least-squares illumination fit over the umbra {s > 0.95}:
/// a = 1 - sum(s*x*(x-y)) / sum(s^2*x^2), pooled over channels in scalar mode
/// or fitted per channel otherwise.
inline IlluminationWeight estimate_illumination(const Image& x, const Image& y,
                                                const SoftMask& s, bool per_channel = false) {
    require(x.same_size(y) && x.height() == s.height() && x.width() == s.width(),
            "estimate_illumination: dimension mismatch");
    constexpr double umbra_cut = 0.95;
    std::array<double, 3> num{0, 0, 0}, den{0, 0, 0};
    long umbra_count = 0;
    for (int i = 0; i < x.height(); ++i)
        for (int j = 0; j < x.width(); ++j) {
            double sv = s.at(i, j);
            if (sv <= umbra_cut) continue;
            ++umbra_count;
            for (int c = 0; c < 3; ++c) {
                double xv = x.at(i, j, c);
                num[c] += sv * xv * (xv - y.at(i, j, c));
                den[c] += sv * sv * xv * xv;
            }
        }
    if (umbra_count == 0)
        throw std::invalid_argument("estimate_illumination: empty umbra (no s > 0.95)");

    auto fit = [](double n, double d) {
        require(d > 0.0, "estimate_illumination: x is zero throughout the umbra");
        return std::clamp(1.0 - n / d, 0.0, 1.0);
    };
    if (per_channel)
        return IlluminationWeight::channels(fit(num[0], den[0]), fit(num[1], den[1]),
                                            fit(num[2], den[2]));
    return IlluminationWeight::scalar(
        fit(num[0] + num[1] + num[2], den[0] + den[1] + den[2]));
}

/// Fraction of a disc of radius R occluded by a half-plane whose edge lies at
/// signed distance d from the disc center (d > 0 toward the occluded side).
/// Closed form of the circular-segment area ratio; verified against numeric
/// integration in the test suite.
inline double coverage_fraction(double d, double R) {
    require(std::isfinite(R) && R > 0.0, "coverage_fraction: R must be > 0");
    if (d <= -R) return 0.0;
    if (d >= R) return 1.0;
    if (d == 0.0) return 0.5;
    const double u = d / R;
    constexpr double pi = 3.14159265358979323846;
    return (std::acos(-u) + u * std::sqrt(1.0 - u * u)) / pi;
}

// ---------------------------------------------------------------------------
// Disc / convex-polygon intersection, used for polygon occluders.

namespace detail {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::sqrt(a.x * a.x + a.y * a.y); }

// Signed area of disc(origin, R) intersected with triangle(origin, p, q).
// Summing over the directed edges of a polygon yields the signed area of the
// disc/polygon intersection (Green's theorem with circular arcs).
inline double tri_disc_area(Vec2 p, Vec2 q, double R) {
    const double c = cross(p, q);
    if (c == 0.0) return 0.0;

    auto sector = [R](const Vec2& a, const Vec2& b) {
        double ang = std::atan2(cross(a, b), dot(a, b));
        return 0.5 * R * R * ang;
    };

    const bool p_in = dot(p, p) <= R * R;
    const bool q_in = dot(q, q) <= R * R;
    if (p_in && q_in) return 0.5 * c;

    // Segment p + t*(q - p), t in [0,1]; intersect with the circle.
    const Vec2 d{q.x - p.x, q.y - p.y};
    const double A = dot(d, d);
    const double B = 2.0 * dot(p, d);
    const double C = dot(p, p) - R * R;
    const double disc = B * B - 4.0 * A * C;

    if (!p_in && !q_in) {
        if (disc <= 0.0) return sector(p, q);
        const double sq = std::sqrt(disc);
        double t1 = (-B - sq) / (2.0 * A);
        double t2 = (-B + sq) / (2.0 * A);
        if (t2 <= 0.0 || t1 >= 1.0) return sector(p, q);
        t1 = std::max(t1, 0.0);
        t2 = std::min(t2, 1.0);
        const Vec2 m1{p.x + t1 * d.x, p.y + t1 * d.y};
        const Vec2 m2{p.x + t2 * d.x, p.y + t2 * d.y};
        return sector(p, m1) + 0.5 * cross(m1, m2) + sector(m2, q);
    }
    if (p_in) {  // exits the circle once
        const double sq = std::sqrt(std::max(disc, 0.0));
        const double t = (-B + sq) / (2.0 * A);
        const Vec2 m{p.x + t * d.x, p.y + t * d.y};
        return 0.5 * cross(p, m) + sector(m, q);
    }
    // q inside: enters the circle once
    const double sq = std::sqrt(std::max(disc, 0.0));
    const double t = (-B - sq) / (2.0 * A);
    const Vec2 m{p.x + t * d.x, p.y + t * d.y};
    return sector(p, m) + 0.5 * cross(m, q);
}

}  // namespace detail

/// Area of the intersection of disc((cx,cy), R) with a simple polygon.
inline double disc_polygon_area(double cx, double cy, double R,
                                const std::vector<std::array<double, 2>>& poly) {
    require(poly.size() >= 3, "disc_polygon_area: polygon needs >= 3 vertices");
    double area = 0.0;
    for (size_t k = 0; k < poly.size(); ++k) {
        const auto& a = poly[k];
        const auto& b = poly[(k + 1) % poly.size()];
        area += detail::tri_disc_area({a[0] - cx, a[1] - cy}, {b[0] - cx, b[1] - cy}, R);
    }
    return std::abs(area);
}

// ---------------------------------------------------------------------------
// Scene description and rendering.

/// Half-plane occluder as projected onto the receiver plane: a point on the
/// edge line and the unit normal pointing into the shadow.
struct OccluderEdge {
    double px = 0.0, py = 0.0;
    double nx = 1.0, ny = 0.0;
};

struct SceneSpec {
    int width = 256, height = 256;
    double light_radius = 8.0;    // R, receiver-plane pixels
    double occluder_height = 0.5; // h in (0,1); 1 = at the light, 0 = on the receiver
    std::optional<OccluderEdge> edge;
    std::vector<std::array<double, 2>> polygon;  // projected vertices (x, y), simple polygon
    IlluminationWeight a = IlluminationWeight::scalar(0.5);
    std::string texture = "flat";  // flat[:v] | gradient | checker[:cell] | PNG path

    double effective_radius() const {
        return light_radius * occluder_height / (1.0 - occluder_height);
    }

    void validate() const {
        require(width >= 1 && height >= 1, "SceneSpec: dimensions must be >= 1");
        require(std::isfinite(light_radius) && light_radius > 0.0,
                "SceneSpec: light_radius must be > 0");
        require(occluder_height > 0.0 && occluder_height < 1.0,
                "SceneSpec: occluder_height must be in (0,1)");
        require(edge.has_value() != !polygon.empty(),
                "SceneSpec: exactly one of occluder_edge / occluder_polygon required");
        if (!polygon.empty())
            require(polygon.size() >= 3, "SceneSpec: polygon needs >= 3 vertices");
        if (edge) {
            double n = std::hypot(edge->nx, edge->ny);
            require(n > 0.0, "SceneSpec: occluder edge normal must be nonzero");
        }
    }
};

/// Built-in receiver textures. "flat" and "flat:v" are constant, "gradient"
/// is a horizontal luminance ramp, "checker" / "checker:cell" a two-tone
/// checkerboard; anything else is treated as a PNG path.
inline Image make_texture(const std::string& spec, int height, int width) {
    auto parse_arg = [](const std::string& s, double dflt) {
        auto pos = s.find(':');
        return pos == std::string::npos ? dflt : std::stod(s.substr(pos + 1));
    };
    if (spec.rfind("flat", 0) == 0) {
        double v = parse_arg(spec, 0.8);
        require(v >= 0.0 && v <= 1.0, "texture flat: value must be in [0,1]");
        Image img(height, width, v);
        return img;
    }
    if (spec == "gradient") {
        Image img(height, width);
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) {
                double t = width > 1 ? double(j) / (width - 1) : 0.0;
                double v = 0.25 + 0.70 * t;
                for (int c = 0; c < 3; ++c) img.at(i, j, c) = v;
            }
        return img;
    }
    if (spec.rfind("checker", 0) == 0) {
        int cell = static_cast<int>(parse_arg(spec, 16));
        require(cell >= 1, "texture checker: cell size must be >= 1");
        Image img(height, width);
        const std::array<double, 3> bright{0.85, 0.80, 0.75}, dark{0.40, 0.35, 0.30};
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) {
                bool b = ((i / cell) + (j / cell)) % 2 == 0;
                for (int c = 0; c < 3; ++c) img.at(i, j, c) = b ? bright[c] : dark[c];
            }
        return img;
    }
    return load_image_png(spec);
}

struct RenderedScene {
    Image x, y;
    SoftMask s_true;
    IlluminationWeight a;
};

/// Exact coverage mask for the scene plus the synthesized shadow image.
/// Pixel (i, j) is the point (x = j, y = i) on the receiver plane.
inline RenderedScene render_geometric_pair(const SceneSpec& spec) {
    spec.validate();
    const double r_eff = spec.effective_radius();
    ScalarMap s(spec.height, spec.width);

    if (spec.edge) {
        const double n = std::hypot(spec.edge->nx, spec.edge->ny);
        const double nx = spec.edge->nx / n, ny = spec.edge->ny / n;
        for (int i = 0; i < spec.height; ++i)
            for (int j = 0; j < spec.width; ++j) {
                double d = nx * (j - spec.edge->px) + ny * (i - spec.edge->py);
                s.at(i, j) = coverage_fraction(d, r_eff);
            }
    } else {
        constexpr double degenerate_r = 1e-9;
        const double area = 3.14159265358979323846 * r_eff * r_eff;
        for (int i = 0; i < spec.height; ++i)
            for (int j = 0; j < spec.width; ++j) {
                if (r_eff < degenerate_r) {
                    // Point light: winding-free inside test via tiny disc.
                    s.at(i, j) = disc_polygon_area(j, i, degenerate_r, spec.polygon) >
                                         0.5 * 3.14159265358979323846 * degenerate_r * degenerate_r
                                     ? 1.0
                                     : 0.0;
                } else {
                    s.at(i, j) = std::clamp(disc_polygon_area(j, i, r_eff, spec.polygon) / area,
                                            0.0, 1.0);
                }
            }
    }

    RenderedScene out{make_texture(spec.texture, spec.height, spec.width), Image(), SoftMask(std::move(s)),
                      spec.a};
    require(out.x.height() == spec.height && out.x.width() == spec.width,
            "render_geometric_pair: texture size mismatch");
    out.y = synthesize_shadow(out.x, out.s_true, out.a);
    return out;
}

}  // namespace softshadow
