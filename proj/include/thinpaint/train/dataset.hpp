#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "thinpaint/mask/png_io.hpp"

namespace thinpaint {

struct Dataset {
    std::vector<BinaryMask> masks;
    std::vector<std::string> names;

    std::size_t size() const { return masks.size(); }
};

/// Load every PNG in a directory, sorted lexicographically by filename.
inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("load_dataset: '" + dir + "' is not a directory");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    Dataset ds;
    for (const auto& f : files) {
        ds.masks.push_back(load_mask(f));
        ds.names.push_back(fs::path(f).filename().string());
    }
    return ds;
}

} // namespace thinpaint
