#pragma once

// JSON / CSV serialization for scene specs and reports. JSON is the primary
// machine-readable format; CSV tables are derived from the same data, never
// the reverse. Every document carries schema_version. Infinite PSNR values
// serialize as the string "inf".

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "softshadow/losses.hpp"
#include "softshadow/mask.hpp"
#include "softshadow/metrics.hpp"
#include "softshadow/shadow_model.hpp"

namespace softshadow {

constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

inline json psnr_to_json(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

// ---------------------------------------------------------------------------
// SceneSpec

inline json scene_to_json(const SceneSpec& spec) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["light_radius"] = spec.light_radius;
    j["occluder_height"] = spec.occluder_height;
    if (spec.edge) {
        j["occluder_edge"] = {{"point", {spec.edge->px, spec.edge->py}},
                              {"normal", {spec.edge->nx, spec.edge->ny}}};
    } else {
        json poly = json::array();
        for (auto& v : spec.polygon) poly.push_back({v[0], v[1]});
        j["occluder_polygon"] = poly;
    }
    if (spec.a.per_channel)
        j["illumination_a"] = {spec.a.rgb[0], spec.a.rgb[1], spec.a.rgb[2]};
    else
        j["illumination_a"] = spec.a.value();
    j["texture"] = spec.texture;
    return j;
}

inline SceneSpec scene_from_json(const json& j) {
    SceneSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.light_radius = j.at("light_radius").get<double>();
    spec.occluder_height = j.at("occluder_height").get<double>();
    if (j.contains("occluder_edge")) {
        const json& e = j.at("occluder_edge");
        OccluderEdge edge;
        edge.px = e.at("point").at(0).get<double>();
        edge.py = e.at("point").at(1).get<double>();
        edge.nx = e.at("normal").at(0).get<double>();
        edge.ny = e.at("normal").at(1).get<double>();
        spec.edge = edge;
    }
    if (j.contains("occluder_polygon")) {
        for (const json& v : j.at("occluder_polygon"))
            spec.polygon.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    }
    const json& a = j.at("illumination_a");
    if (a.is_array())
        spec.a = IlluminationWeight::channels(a.at(0).get<double>(), a.at(1).get<double>(),
                                              a.at(2).get<double>());
    else
        spec.a = IlluminationWeight::scalar(a.get<double>());
    if (j.contains("texture")) spec.texture = j.at("texture").get<std::string>();
    spec.validate();
    return spec;
}

inline SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open scene file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("malformed JSON in " + path.string() + ": " + e.what());
    }
    try {
        return scene_from_json(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument("bad scene spec " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Reports

inline json loss_report_to_json(const LossReport& r) {
    return json{{"schema_version", kSchemaVersion},
                {"l_mask", r.l_mask},
                {"l_pen", r.l_pen},
                {"l_rem", r.l_rem},
                {"lambda1", r.lambda1},
                {"lambda2", r.lambda2},
                {"total", r.total},
                {"penumbra_pixel_count", r.penumbra_pixel_count}};
}

inline json penumbra_set_to_json(const PenumbraSet& ps, bool include_coordinates = false) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["t1"] = ps.t1;
    j["t2"] = ps.t2;
    j["member_count"] = ps.pixels.size();
    j["empty"] = ps.empty();
    if (!ps.empty()) j["centroid"] = {{"row", ps.centroid_row}, {"col", ps.centroid_col}};
    if (include_coordinates) {
        json coords = json::array();
        for (auto& [i, jj] : ps.pixels) coords.push_back({i, jj});
        j["coordinates"] = coords;
    }
    return j;
}

inline json region_metrics_to_json(const RegionMetrics& m) {
    if (!m.present) return json("absent");
    json j;
    j["psnr"] = psnr_to_json(m.psnr);
    j["ssim"] = m.has_ssim ? json(m.ssim) : json("absent");
    j["mae_lab"] = m.mae;
    j["pixel_count"] = m.pixel_count;
    return j;
}

inline json metrics_report_to_json(const MetricsReport& r) {
    return json{{"shadow", region_metrics_to_json(r.shadow)},
                {"non_shadow", region_metrics_to_json(r.non_shadow)},
                {"all", region_metrics_to_json(r.all)},
                {"penumbra", region_metrics_to_json(r.penumbra)}};
}

inline json penumbra_band_to_json(const PenumbraBandMetrics& m) {
    if (!m.present) return json("absent");
    return json{{"psnr", psnr_to_json(m.psnr)},
                {"mae_lab", m.mae},
                {"pixel_count", m.pixel_count}};
}

inline json sensitivity_report_to_json(const SensitivityReport& r) {
    json rows = json::array();
    for (const SensitivityRow& row : r.rows)
        rows.push_back({{"variant", row.variant},
                        {"psnr_mean", row.psnr_mean},
                        {"images_used", row.images_used},
                        {"inf_excluded", row.inf_excluded},
                        {"failures", row.failures}});
    return json{{"schema_version", kSchemaVersion},
                {"rows", rows},
                {"mean", r.mean},
                {"std_dev", r.std_dev}};
}

namespace detail {

inline std::string fmt_metric(double v, bool inf_ok = true) {
    if (std::isinf(v) && inf_ok) return "inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace detail

/// Aligned-column CSV mirroring the regions-by-metrics table layout.
inline std::string metrics_report_to_csv(const MetricsReport& r) {
    std::ostringstream os;
    os << "region,psnr,ssim,mae_lab,pixel_count\n";
    auto row = [&os](const char* name, const RegionMetrics& m) {
        os << name << ',';
        if (!m.present) {
            os << "absent,absent,absent,0\n";
            return;
        }
        os << detail::fmt_metric(m.psnr) << ','
           << (m.has_ssim ? detail::fmt_metric(m.ssim) : "absent") << ','
           << detail::fmt_metric(m.mae) << ',' << m.pixel_count << '\n';
    };
    row("shadow", r.shadow);
    row("non_shadow", r.non_shadow);
    row("all", r.all);
    row("penumbra", r.penumbra);
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write " + path.string());
    out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("malformed JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace softshadow
