#include "bsm/cli/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "bsm/image.hpp"

namespace bsm::cli {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

std::vector<std::vector<std::string>> read_pairs(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(f, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream ss(line);
    std::vector<std::string> group;
    for (std::string name; ss >> name;) group.push_back(fs::path(name).stem().string());
    if (!group.empty()) out.push_back(std::move(group));
  }
  return out;
}

DatasetLayout scan_dataset(const fs::path& root, bool require_masks) {
  DatasetLayout layout;
  layout.root = root;
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw DataError("no images/ directory in " + root.string());
  std::set<std::string> seen;
  for (const auto& e : fs::directory_iterator(images)) {
    if (!e.is_regular_file() || !is_image_file(e.path())) continue;
    DatasetEntry entry;
    entry.id = e.path().stem().string();
    if (!seen.insert(entry.id).second) throw DataError("duplicate image basename " + entry.id + " in " + images.string());
    entry.image = e.path();
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
      const fs::path m = root / "masks" / (entry.id + ext);
      if (fs::is_regular_file(m)) {
        entry.mask = m;
        break;
      }
    }
    if (require_masks && entry.mask.empty()) throw DataError("no mask for image " + entry.image.string());
    layout.entries.push_back(std::move(entry));
  }
  if (layout.entries.empty()) throw DataError("no images found in " + images.string());
  std::sort(layout.entries.begin(), layout.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });
  if (fs::is_regular_file(root / "pairs.txt")) {
    layout.pairs = read_pairs(root / "pairs.txt");
    for (const auto& g : layout.pairs) {
      for (const std::string& id : g) {
        if (!seen.count(id)) throw DataError("pairs.txt names unknown image " + id);
      }
    }
  }
  return layout;
}

}  // namespace bsm::cli
