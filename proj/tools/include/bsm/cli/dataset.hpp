#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bsm::cli {

struct DatasetEntry {
  std::string id;  ///< image basename without extension
  std::filesystem::path image;
  std::filesystem::path mask;  ///< empty when the dataset has no mask for the image
};

/// root/images/*.{png,jpg,jpeg}, root/masks/<id>.png, optional root/pairs.txt.
struct DatasetLayout {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;  ///< sorted by id
  std::vector<std::vector<std::string>> pairs;
};

/// Throws DataError for a missing or empty images/ directory, for a missing
/// mask when `require_masks` is set, and for pairs naming unknown images.
DatasetLayout scan_dataset(const std::filesystem::path& root, bool require_masks);

/// Lines of whitespace-separated image basenames; '#' starts a comment.
/// Extensions are stripped.
std::vector<std::vector<std::string>> read_pairs(const std::filesystem::path& path);

}  // namespace bsm::cli
