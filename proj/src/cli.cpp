#include "latentfill/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "latentfill/checkpoint.hpp"
#include "latentfill/dataset.hpp"
#include "latentfill/image_io.hpp"
#include "latentfill/inpaint.hpp"
#include "latentfill/manifest.hpp"
#include "latentfill/metrics.hpp"
#include "latentfill/train.hpp"

namespace fs = std::filesystem;

namespace latentfill::cli {

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
};

// --------------------------------------------------------------------------
// gen-data
// --------------------------------------------------------------------------

struct GenDataArgs {
  std::string family = "toy_faces";
  int count = 100;
  int size = 32;
  int channels = 1;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  Timer timer;
  DatasetSpec spec{family_from_string(a.family), a.count, a.size, a.channels, a.seed};
  const auto images = generate_dataset(spec);
  const std::string manifest_path = write_dataset(a.out, spec, images);

  RunManifest rm;
  rm.command = "gen-data";
  rm.config = {{"family", a.family}, {"count", a.count},   {"size", a.size},
               {"channels", a.channels}, {"seed", a.seed}, {"out", a.out}};
  rm.seed = a.seed;
  rm.add_output(manifest_path);
  rm.wall_time_ms = timer.ms();
  rm.save((fs::path(a.out) / "run_manifest.json").string());
  std::cout << "wrote " << images.size() << " images to " << a.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string resume;
  int epochs = 30;
  int batch_size = 32;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int latent_dim = 64;
  int base_fm = 16;
  bool no_flip = false;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a) {
  Timer timer;
  const LoadedDataset ds = load_dataset(a.data);
  fs::create_directories(a.out);
  const std::string ckpt_path = (fs::path(a.out) / "checkpoint.bin").string();
  const std::string metrics_path = (fs::path(a.out) / "metrics.jsonl").string();

  gan::Trainer trainer = [&] {
    if (!a.resume.empty()) {
      gan::Trainer t = gan::load_checkpoint(a.resume);
      t.cfg.epochs = a.epochs;
      return t;
    }
    gan::GanConfig cfg;
    cfg.latent_dim = a.latent_dim;
    cfg.image_size = ds.spec.image_size;
    cfg.channels = ds.spec.channels;
    cfg.base_feature_maps = a.base_fm;
    cfg.lr = a.lr;
    cfg.beta1 = a.beta1;
    cfg.beta2 = a.beta2;
    cfg.batch_size = a.batch_size;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.flip_augmentation = !a.no_flip;
    return gan::Trainer::create(cfg);
  }();

  std::ofstream metrics(metrics_path, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw std::runtime_error(metrics_path + ": cannot open for writing");

  gan::train(trainer, ds.images, [&](const gan::EpochRecord& rec, gan::Trainer& t) {
    nlohmann::json j{{"epoch", rec.epoch},
                     {"d_loss", rec.d_loss},
                     {"g_loss", rec.g_loss},
                     {"d_accuracy", rec.d_accuracy},
                     {"wall_time_ms", rec.wall_time_ms}};
    metrics << j.dump() << '\n';
    metrics.flush();
    gan::save_checkpoint(ckpt_path, t);
    std::cout << "epoch " << rec.epoch << "/" << t.cfg.epochs << "  d_loss " << std::fixed
              << std::setprecision(4) << rec.d_loss << "  g_loss " << rec.g_loss << "  d_acc "
              << rec.d_accuracy << "\n";
  });
  if (trainer.epoch == 0) gan::save_checkpoint(ckpt_path, trainer);  // epochs=0 run
  metrics.close();

  RunManifest rm;
  rm.command = "train";
  rm.config = {{"data", a.data},       {"out", a.out},
               {"resume", a.resume},   {"epochs", a.epochs},
               {"batch_size", a.batch_size}, {"lr", a.lr},
               {"beta1", a.beta1},     {"beta2", a.beta2},
               {"latent_dim", a.latent_dim}, {"base_feature_maps", a.base_fm},
               {"flip_augmentation", !a.no_flip}, {"seed", a.seed}};
  rm.seed = a.seed;
  rm.add_input((fs::path(a.data) / "manifest.json").string());
  rm.add_output(ckpt_path);
  rm.add_output(metrics_path);
  rm.wall_time_ms = timer.ms();
  rm.save((fs::path(a.out) / "run_manifest.json").string());
  return kExitOk;
}

// --------------------------------------------------------------------------
// inpaint
// --------------------------------------------------------------------------

struct InpaintArgs {
  std::string checkpoint;
  std::vector<std::string> images;
  std::string mask_family = "center";
  double mask_fraction = -1.0;  // family-specific default when negative
  std::string out;
  std::string mode = "blend";
  bool no_prior = false;
  int iterations = 1500;
  int restarts = 3;
  double lambda = 0.003;
  double lr = 0.1;
  int window = 7;
  int threads = 1;
  std::uint64_t seed = 1;
};

int cmd_inpaint(const InpaintArgs& a) {
  Timer timer;
  gan::Trainer model = gan::load_checkpoint(a.checkpoint);
  fs::create_directories(a.out);
  const blend::Mode mode = blend::mode_from_string(a.mode);

  RunManifest rm;
  rm.command = "inpaint";
  rm.config = {{"checkpoint", a.checkpoint}, {"mask_family", a.mask_family},
               {"mask_fraction", a.mask_fraction}, {"mode", a.mode},
               {"no_prior", a.no_prior},     {"iterations", a.iterations},
               {"restarts", a.restarts},     {"lambda", a.no_prior ? 0.0 : a.lambda},
               {"lr", a.lr},                 {"window_size", a.window},
               {"threads", a.threads},       {"seed", a.seed},
               {"images", a.images},         {"out", a.out}};
  rm.seed = a.seed;
  rm.add_input(a.checkpoint);

  metrics::MaskFamilySpec fam;
  fam.family = a.mask_family;
  if (a.mask_fraction > 0.0) {
    fam.center_fraction = a.mask_fraction;
    fam.random_missing = a.mask_fraction;
    fam.pattern_target = a.mask_fraction;
  }

  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const std::string& path = a.images[i];
    rm.add_input(path);
    const Image real = load_image(path);
    const std::string stem = fs::path(path).stem().string();

    const std::uint64_t mask_seed =
        Rng::substream(a.seed, "mask-" + std::to_string(i)).seed();
    const Mask mask = metrics::make_mask(fam, real.height, real.width, mask_seed);
    const Image y = metrics::corrupt(real, mask);

    inpaint::InpaintConfig cfg;
    cfg.lambda = a.no_prior ? 0.0 : a.lambda;
    cfg.iterations = a.iterations;
    cfg.restarts = a.restarts;
    cfg.lr = a.lr;
    cfg.window_size = a.window;
    cfg.threads = a.threads;
    cfg.seed = Rng::substream(a.seed, "inpaint-" + std::to_string(i)).seed();
    const inpaint::InpaintResult res = inpaint::invert(y, mask, model.G, model.D, cfg);
    const Image finished = blend::finish(y, mask, res.raw, mode);

    auto emit = [&](const std::string& suffix, const Image& img) {
      const std::string p = (fs::path(a.out) / (stem + suffix)).string();
      save_image(p, img);
      rm.add_output(p);
    };
    emit("_input.png", y);
    {
      const std::string p = (fs::path(a.out) / (stem + "_mask.png")).string();
      save_mask(p, mask);
      rm.add_output(p);
    }
    emit("_raw.png", res.raw);
    emit("_result.png", finished);
    {
      const std::string p = (fs::path(a.out) / (stem + "_trajectory.jsonl")).string();
      inpaint::write_trajectory(p, res.trajectory);
      rm.add_output(p);
    }
    std::cout << stem << ": restart " << res.chosen_restart << ", final loss "
              << res.trajectory.back().total << "\n";
  }

  rm.wall_time_ms = timer.ms();
  rm.save((fs::path(a.out) / "run_manifest.json").string());
  return kExitOk;
}

// --------------------------------------------------------------------------
// evaluate
// --------------------------------------------------------------------------

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string train_data;
  std::string families = "center,pattern,random,half";
  std::string methods = "ours_blend,ours_overlay,mean_fill,nn_fill";
  std::string out = "report.json";
  int iterations = 1500;
  int restarts = 3;
  double lambda = 0.003;
  int threads = 1;
  std::uint64_t seed = 1;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
  Timer timer;
  gan::Trainer model = gan::load_checkpoint(a.checkpoint);
  const LoadedDataset test = load_dataset(a.data);

  metrics::EvalOptions opts;
  opts.seed = a.seed;
  opts.inversion.iterations = a.iterations;
  opts.inversion.restarts = a.restarts;
  opts.inversion.lambda = a.lambda;
  opts.inversion.threads = a.threads;
  if (!a.train_data.empty()) opts.train_set = load_dataset(a.train_data).images;

  std::vector<metrics::Method> methods;
  for (const auto& m : split_csv(a.methods)) methods.push_back(metrics::method_from_string(m));
  std::vector<metrics::MaskFamilySpec> families;
  for (const auto& f : split_csv(a.families)) {
    metrics::MaskFamilySpec spec;
    spec.family = f;
    if (f != "center" && f != "pattern" && f != "random" && f != "half") {
      throw std::invalid_argument("unknown mask family '" + f +
                                  "' (valid: center, pattern, random, half)");
    }
    families.push_back(spec);
  }

  const metrics::EvalReport report =
      metrics::evaluate(methods, test.images, families, model.G, model.D, opts);
  report.save(a.out);

  for (const auto& [key, cell] : report.cells) {
    if (cell.failed) {
      std::cout << key << ": FAILED (" << cell.error << ")\n";
    } else {
      std::cout << key << ": psnr " << std::fixed << std::setprecision(2) << cell.mean_psnr()
                << "  masked_psnr " << cell.mean_masked_psnr() << "  ssim "
                << std::setprecision(4) << cell.mean_ssim() << "\n";
    }
  }

  RunManifest rm;
  rm.command = "evaluate";
  rm.config = {{"checkpoint", a.checkpoint}, {"data", a.data},   {"train_data", a.train_data},
               {"families", a.families},     {"methods", a.methods}, {"iterations", a.iterations},
               {"restarts", a.restarts},     {"lambda", a.lambda},   {"threads", a.threads},
               {"seed", a.seed},             {"out", a.out}};
  rm.seed = a.seed;
  rm.add_input(a.checkpoint);
  rm.add_input((fs::path(a.data) / "manifest.json").string());
  rm.add_output(a.out);
  rm.wall_time_ms = timer.ms();
  const fs::path mpath = fs::path(a.out).parent_path() / "evaluate_manifest.json";
  rm.save(mpath.string());
  return kExitOk;
}

// --------------------------------------------------------------------------
// grad-check
// --------------------------------------------------------------------------

struct GradCheckArgs {
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;
};

int cmd_grad_check(const GradCheckArgs& a) {
  const auto results = ad::check_all_ops(a.seed, a.eps, a.tolerance);

  // composed objective on the default model configuration
  gan::GanConfig cfg;
  cfg.seed = a.seed;
  Rng ig = Rng::substream(a.seed, "gc-init-g");
  Rng id = Rng::substream(a.seed, "gc-init-d");
  gan::Generator G(cfg, ig);
  gan::Discriminator D(cfg, id);
  const auto data = generate_dataset({Family::toy_faces, 1, cfg.image_size, cfg.channels, a.seed});
  const Mask mask = center_mask(cfg.image_size, cfg.image_size, 0.5);
  inpaint::InpaintConfig icfg;
  icfg.seed = a.seed;
  const double total_err =
      inpaint::grad_check_total_loss(G, D, metrics::corrupt(data[0], mask), mask, icfg, a.eps);

  return report_grad_check(std::cout, results, total_err, a.tolerance);
}

}  // namespace

int report_grad_check(std::ostream& os, const std::vector<ad::OpCheckResult>& results,
                      double total_loss_err, double tolerance) {
  bool all_ok = true;
  os << std::left << std::setw(22) << "op" << std::setw(14) << "max_rel_err"
     << "status\n";
  auto row = [&](const std::string& name, double err, bool ok) {
    os << std::left << std::setw(22) << name << std::setw(14) << std::scientific
       << std::setprecision(3) << err << (ok ? "PASS" : "FAIL") << "\n";
    if (!ok) all_ok = false;
  };
  for (const auto& r : results) row(r.op, r.max_rel_err, r.passed);
  row("total_loss", total_loss_err, total_loss_err < tolerance);
  os << (all_ok ? "all ops within tolerance " : "gradient check FAILED at tolerance ")
     << std::scientific << std::setprecision(1) << tolerance << "\n";
  return all_ok ? kExitOk : kExitVerificationFailure;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"semantic image inpainting via latent-space search over a trained "
               "generative model"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "read options from a key = value file (use a [subcommand] section)");
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
  gen->add_option("--family", gd.family, "toy_faces | digits_grid | blobs");
  gen->add_option("--count", gd.count, "number of images")->check(CLI::PositiveNumber);
  gen->add_option("--size", gd.size, "image side length");
  gen->add_option("--channels", gd.channels, "1 or 3");
  gen->add_option("--seed", gd.seed, "master seed");
  gen->add_option("--out", gd.out, "output directory")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train the adversarial model on a dataset");
  train->add_option("--data", tr.data, "dataset directory")->required();
  train->add_option("--out", tr.out, "output directory")->required();
  train->add_option("--resume", tr.resume, "checkpoint to continue from");
  train->add_option("--epochs", tr.epochs, "total epochs to reach");
  train->add_option("--batch-size", tr.batch_size);
  train->add_option("--lr", tr.lr);
  train->add_option("--beta1", tr.beta1);
  train->add_option("--beta2", tr.beta2);
  train->add_option("--latent-dim", tr.latent_dim);
  train->add_option("--base-fm", tr.base_fm, "feature maps in the first block");
  train->add_flag("--no-flip", tr.no_flip, "disable horizontal flip augmentation");
  train->add_option("--seed", tr.seed, "master seed");

  InpaintArgs ip;
  auto* inp = app.add_subcommand("inpaint", "reconstruct masked images with a trained model");
  inp->add_option("--checkpoint", ip.checkpoint)->required();
  inp->add_option("--image", ip.images, "input image(s)")->required()->expected(-1);
  inp->add_option("--mask-family", ip.mask_family, "center | pattern | random | half");
  inp->add_option("--mask-fraction", ip.mask_fraction, "family-specific fraction override");
  inp->add_option("--out", ip.out, "output directory")->required();
  inp->add_option("--mode", ip.mode, "overlay | blend");
  inp->add_flag("--no-prior", ip.no_prior, "drop the realism term (lambda = 0)");
  inp->add_option("--iterations", ip.iterations);
  inp->add_option("--restarts", ip.restarts);
  inp->add_option("--lambda", ip.lambda);
  inp->add_option("--lr", ip.lr);
  inp->add_option("--window", ip.window, "importance-weight window (odd)");
  inp->add_option("--threads", ip.threads);
  inp->add_option("--seed", ip.seed, "master seed");

  EvaluateArgs ev;
  auto* eval = app.add_subcommand("evaluate", "metric grid over methods and mask families");
  eval->add_option("--checkpoint", ev.checkpoint)->required();
  eval->add_option("--data", ev.data, "test dataset directory")->required();
  eval->add_option("--train-data", ev.train_data, "training dataset (for nn_fill)");
  eval->add_option("--families", ev.families, "comma-separated mask families");
  eval->add_option("--methods", ev.methods, "comma-separated methods");
  eval->add_option("--out", ev.out, "report path");
  eval->add_option("--iterations", ev.iterations);
  eval->add_option("--restarts", ev.restarts);
  eval->add_option("--lambda", ev.lambda);
  eval->add_option("--threads", ev.threads);
  eval->add_option("--seed", ev.seed, "master seed");

  GradCheckArgs gc;
  auto* gck = app.add_subcommand("grad-check", "finite-difference audit of every graph op");
  gck->add_option("--eps", gc.eps, "central difference step");
  gck->add_option("--tolerance", gc.tolerance, "max relative error");
  gck->add_option("--seed", gc.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsageError;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gd);
    if (train->parsed()) return cmd_train(tr);
    if (inp->parsed()) return cmd_inpaint(ip);
    if (eval->parsed()) return cmd_evaluate(ev);
    if (gck->parsed()) return cmd_grad_check(gc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsageError;
  }
  return kExitUsageError;
}

}  // namespace latentfill::cli
