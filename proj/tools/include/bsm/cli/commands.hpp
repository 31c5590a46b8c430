#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bsm/config.hpp"
#include "bsm/eval.hpp"

namespace bsm::cli {

inline constexpr int kFileFormatVersion = 1;

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2 };

struct RunOptions {
  Config config;
  int jobs = 1;
  bool debug = false;
};

/// Image selection shared by train, detect and segment: a dataset directory
/// (optionally one fold of it) or explicit image files.
struct ImageSelection {
  std::filesystem::path dataset;
  std::vector<std::filesystem::path> images;
  std::filesystem::path folds;  ///< folds file written by `folds`
  int fold = -1;                ///< fold to hold out (train) or select (detect, segment)
};

void cmd_init_config(const std::filesystem::path& out, std::ostream& os);
void cmd_train(const RunOptions& opt, const ImageSelection& sel, const std::filesystem::path& model_out,
               std::ostream& os);
void cmd_detect(const RunOptions& opt, const std::filesystem::path& model, const ImageSelection& sel,
                const std::filesystem::path& out, std::ostream& os, std::ostream& err);
void cmd_segment(const RunOptions& opt, const std::filesystem::path& model, const ImageSelection& sel,
                 const std::filesystem::path& out_dir, std::ostream& os, std::ostream& err);
/// Each prediction directory (a `segment` output) is scored against the
/// masks of the dataset at the same position.
void cmd_eval(const RunOptions& opt, const std::vector<std::filesystem::path>& pred_dirs,
              const std::vector<std::filesystem::path>& gt_dirs, const std::filesystem::path& out,
              std::ostream& os);
void cmd_folds(const RunOptions& opt, const std::filesystem::path& dataset, int n_folds, std::uint64_t seed,
               const std::filesystem::path& out, std::ostream& os);
void cmd_synth(const RunOptions& opt, const std::filesystem::path& out_dir, int n_images, std::uint64_t seed,
               std::ostream& os);

FoldSpec load_folds(const std::filesystem::path& path);
void save_folds(const std::filesystem::path& path, const FoldSpec& spec, std::uint64_t seed);

/// Parses arguments and runs one verb. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bsm::cli
