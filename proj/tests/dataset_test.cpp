#include <gtest/gtest.h>

#include <fstream>

#include "bsm/cli/dataset.hpp"
#include "bsm/image.hpp"
#include "fixtures.hpp"

namespace bsm::cli {
namespace {

namespace fs = std::filesystem;

void touch_image(const fs::path& p) {
  fs::create_directories(p.parent_path());
  save_image(p, RgbImage(4, 4));
}

TEST(ScanDataset, SortedEntriesWithMasks) {
  testing::TempDir dir;
  for (const char* id : {"c", "a", "b"}) {
    touch_image(dir / "ds/images" / (std::string(id) + ".png"));
    if (std::string(id) != "b") touch_image(dir / "ds/masks" / (std::string(id) + ".png"));
  }
  const DatasetLayout l = scan_dataset(dir / "ds", false);
  ASSERT_EQ(l.entries.size(), 3u);
  EXPECT_EQ(l.entries[0].id, "a");
  EXPECT_EQ(l.entries[2].id, "c");
  EXPECT_TRUE(l.entries[1].mask.empty());
  EXPECT_THROW(scan_dataset(dir / "ds", true), DataError);
}

TEST(ScanDataset, MissingOrEmptyImagesDirectory) {
  testing::TempDir dir;
  EXPECT_THROW(scan_dataset(dir / "nothing", false), DataError);
  fs::create_directories(dir / "empty/images");
  EXPECT_THROW(scan_dataset(dir / "empty", false), DataError);
}

TEST(ScanDataset, DuplicateBasenames) {
  testing::TempDir dir;
  touch_image(dir / "ds/images/a.png");
  std::ofstream(dir / "ds/images/a.jpg") << "x";
  EXPECT_THROW(scan_dataset(dir / "ds", false), DataError);
}

TEST(ReadPairs, CommentsAndExtensions) {
  testing::TempDir dir;
  std::ofstream(dir / "pairs.txt") << "# header\n a.png  a_mirror.png \n\nb c # trailing\n";
  const auto pairs = read_pairs(dir / "pairs.txt");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0], (std::vector<std::string>{"a", "a_mirror"}));
  EXPECT_EQ(pairs[1], (std::vector<std::string>{"b", "c"}));
}

TEST(ScanDataset, PairsMustNameKnownImages) {
  testing::TempDir dir;
  touch_image(dir / "ds/images/a.png");
  std::ofstream(dir / "ds/pairs.txt") << "a ghost\n";
  EXPECT_THROW(scan_dataset(dir / "ds", false), DataError);
}

}  // namespace
}  // namespace bsm::cli
