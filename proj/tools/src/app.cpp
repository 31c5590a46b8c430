#include <CLI11.hpp>
#include <ostream>

#include "bsm/cli/commands.hpp"

namespace bsm::cli {

namespace fs = std::filesystem;

namespace {

void add_selection(CLI::App* cmd, ImageSelection& sel) {
  cmd->add_option("--dataset", sel.dataset, "dataset root (images/, masks/, pairs.txt)");
  cmd->add_option("--folds", sel.folds, "folds file written by the folds verb");
  cmd->add_option("--fold", sel.fold, "fold index")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object detection and segmentation with binary shape masks"};
  app.name("bsm");
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  int jobs = 0;
  std::uint64_t seed = 0;
  bool debug = false;
  app.add_option("--config", config_path, "configuration file (JSON)");
  app.add_option("--jobs", jobs, "worker threads for per-image work")->check(CLI::PositiveNumber);
  CLI::Option* seed_opt = app.add_option("--seed", seed, "seed for folds and synthetic data");
  app.add_flag("--debug", debug, "write diagnostic images");

  fs::path init_out;
  CLI::App* init = app.add_subcommand("init-config", "print or write the default configuration");
  init->add_option("-o,--out", init_out, "output file (default: stdout)");

  ImageSelection train_sel;
  fs::path train_model;
  CLI::App* train = app.add_subcommand("train", "learn a model from images with masks");
  add_selection(train, train_sel);
  train->add_option("--model", train_model, "output model file");

  ImageSelection detect_sel;
  fs::path detect_model, detect_out;
  std::vector<std::string> detect_images;
  CLI::App* det = app.add_subcommand("detect", "write object hypotheses per image");
  add_selection(det, detect_sel);
  det->add_option("--model", detect_model, "model file");
  det->add_option("-o,--out", detect_out, "detections file");
  det->add_option("images", detect_images, "image files (instead of --dataset)");

  ImageSelection seg_sel;
  fs::path seg_model, seg_out;
  std::vector<std::string> seg_images;
  CLI::App* seg = app.add_subcommand("segment", "write object masks per image");
  add_selection(seg, seg_sel);
  seg->add_option("--model", seg_model, "model file");
  seg->add_option("-o,--out", seg_out, "output directory");
  seg->add_option("images", seg_images, "image files (instead of --dataset)");

  std::vector<std::string> eval_pred, eval_gt;
  fs::path eval_out;
  CLI::App* ev = app.add_subcommand("eval", "score segment output against ground-truth masks");
  ev->add_option("--pred", eval_pred, "segment output directory, one per class")->required();
  ev->add_option("--gt", eval_gt, "ground-truth dataset, one per --pred")->required();
  ev->add_option("-o,--out", eval_out, "metrics file");

  fs::path folds_dataset, folds_out;
  int n_folds = 0;
  CLI::App* folds = app.add_subcommand("folds", "split a dataset into folds, keeping pairs together");
  folds->add_option("--dataset", folds_dataset, "dataset root");
  folds->add_option("--n-folds", n_folds, "number of folds (default from config)");
  folds->add_option("-o,--out", folds_out, "folds file");

  fs::path synth_out;
  int synth_n = 0;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("-o,--out", synth_out, "output directory");
  synth->add_option("-n,--n", synth_n, "number of images (default from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  try {
    RunOptions opt;
    if (!config_path.empty()) opt.config = load_config(config_path);
    if (jobs > 0) opt.config.jobs = jobs;
    if (seed_opt->count()) {
      opt.config.fold_seed = seed;
      opt.config.synth_seed = seed;
    }
    opt.jobs = opt.config.jobs;
    opt.debug = debug;

    if (init->parsed()) {
      cmd_init_config(init_out, out);
    } else if (train->parsed()) {
      cmd_train(opt, train_sel, train_model, out);
    } else if (det->parsed()) {
      detect_sel.images.assign(detect_images.begin(), detect_images.end());
      cmd_detect(opt, detect_model, detect_sel, detect_out, out, err);
    } else if (seg->parsed()) {
      seg_sel.images.assign(seg_images.begin(), seg_images.end());
      cmd_segment(opt, seg_model, seg_sel, seg_out, out, err);
    } else if (ev->parsed()) {
      cmd_eval(opt, {eval_pred.begin(), eval_pred.end()}, {eval_gt.begin(), eval_gt.end()}, eval_out, out);
    } else if (folds->parsed()) {
      cmd_folds(opt, folds_dataset, n_folds > 0 ? n_folds : opt.config.n_folds, opt.config.fold_seed, folds_out, out);
    } else if (synth->parsed()) {
      cmd_synth(opt, synth_out, synth_n > 0 ? synth_n : opt.config.synth_images, opt.config.synth_seed, out);
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace bsm::cli
