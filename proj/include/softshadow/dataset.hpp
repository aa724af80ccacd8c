#pragma once

// Paired-directory dataset layout: root/shadow and root/shadow_free hold the
// image pairs (same file stem), root/mask optionally holds soft masks.
// Unpaired or dimension-mismatched files are reported and skipped, never
// fatal. Scan results are sorted by stem so downstream processing is
// deterministic regardless of directory order or job count.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "softshadow/image.hpp"

namespace softshadow {

struct DatasetEntry {
    std::string stem;
    std::filesystem::path shadow;       // y
    std::filesystem::path shadow_free;  // x
    std::optional<std::filesystem::path> mask;
};

struct SkipRecord {
    std::string stem;
    std::string reason;
};

struct DatasetScan {
    std::vector<DatasetEntry> entries;
    std::vector<SkipRecord> skipped;
};

inline DatasetScan scan_dataset(const std::filesystem::path& root, bool require_mask = false) {
    namespace fs = std::filesystem;
    require(fs::is_directory(root), "dataset root not found: " + root.string());
    const fs::path shadow_dir = root / "shadow";
    const fs::path free_dir = root / "shadow_free";
    require(fs::is_directory(shadow_dir), "missing directory: " + shadow_dir.string());
    require(fs::is_directory(free_dir), "missing directory: " + free_dir.string());
    const fs::path mask_dir = root / "mask";
    const bool have_masks = fs::is_directory(mask_dir);
    require(!require_mask || have_masks, "missing directory: " + mask_dir.string());

    auto list_pngs = [](const fs::path& dir) {
        std::map<std::string, fs::path> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".png")
                files[e.path().stem().string()] = e.path();
        return files;
    };

    const auto shadows = list_pngs(shadow_dir);
    const auto frees = list_pngs(free_dir);
    const auto masks = have_masks ? list_pngs(mask_dir) : std::map<std::string, fs::path>{};

    DatasetScan scan;
    for (const auto& [stem, path] : shadows) {
        auto it = frees.find(stem);
        if (it == frees.end()) {
            scan.skipped.push_back({stem, "unpaired (no shadow_free counterpart)"});
            continue;
        }
        DatasetEntry e{stem, path, it->second, std::nullopt};
        if (have_masks) {
            auto mit = masks.find(stem);
            if (mit != masks.end())
                e.mask = mit->second;
            else if (require_mask) {
                scan.skipped.push_back({stem, "unpaired (no mask)"});
                continue;
            }
        }
        scan.entries.push_back(std::move(e));
    }
    for (const auto& [stem, path] : frees)
        if (!shadows.count(stem))
            scan.skipped.push_back({stem, "unpaired (no shadow counterpart)"});

    std::sort(scan.entries.begin(), scan.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.stem < b.stem; });
    std::sort(scan.skipped.begin(), scan.skipped.end(),
              [](const SkipRecord& a, const SkipRecord& b) { return a.stem < b.stem; });
    return scan;
}

}  // namespace softshadow
