#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latentfill/checkpoint.hpp"
#include "latentfill/dataset.hpp"
#include "latentfill/gradcheck.hpp"
#include "latentfill/image_io.hpp"
#include "latentfill/inpaint.hpp"
#include "latentfill/metrics.hpp"
#include "latentfill/train.hpp"

namespace py = pybind11;
using namespace latentfill;

namespace {

// Image <-> numpy (channels, height, width) float64
py::array_t<double> image_to_array(const Image& img) {
  py::array_t<double> arr({img.channels, img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), arr.mutable_data());
  return arr;
}

Image array_to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3) throw std::invalid_argument("image array must have shape (c, h, w)");
  Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
            static_cast<int>(arr.shape(2)));
  std::copy(arr.data(), arr.data() + arr.size(), img.pixels.begin());
  return img;
}

py::array_t<std::uint8_t> mask_to_array(const Mask& m) {
  py::array_t<std::uint8_t> arr({m.height, m.width});
  std::copy(m.known.begin(), m.known.end(), arr.mutable_data());
  return arr;
}

Mask array_to_mask(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("mask array must have shape (h, w)");
  Mask m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.known.begin());
  return m;
}

std::vector<Image> list_to_images(const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& arrays) {
  std::vector<Image> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(array_to_image(a));
  return out;
}

gan::GanConfig config_from_kwargs(int image_size, int channels, int latent_dim, int base_feature_maps,
                                  double lr, double beta1, double beta2, int batch_size, int epochs,
                                  std::uint64_t seed, bool flip_augmentation) {
  gan::GanConfig cfg;
  cfg.image_size = image_size;
  cfg.channels = channels;
  cfg.latent_dim = latent_dim;
  cfg.base_feature_maps = base_feature_maps;
  cfg.lr = lr;
  cfg.beta1 = beta1;
  cfg.beta2 = beta2;
  cfg.batch_size = batch_size;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.flip_augmentation = flip_augmentation;
  return cfg;
}

struct PyModel {
  gan::Trainer trainer;

  py::dict config() const {
    const auto& c = trainer.cfg;
    py::dict d;
    d["latent_dim"] = c.latent_dim;
    d["image_size"] = c.image_size;
    d["channels"] = c.channels;
    d["base_feature_maps"] = c.base_feature_maps;
    d["lr"] = c.lr;
    d["beta1"] = c.beta1;
    d["beta2"] = c.beta2;
    d["batch_size"] = c.batch_size;
    d["epochs"] = c.epochs;
    d["seed"] = c.seed;
    d["flip_augmentation"] = c.flip_augmentation;
    d["epoch"] = trainer.epoch;
    return d;
  }

  py::array_t<double> generate(
      const py::array_t<double, py::array::c_style | py::array::forcecast>& z) {
    if (z.ndim() != 2) throw std::invalid_argument("latent array must have shape (n, latent_dim)");
    ad::Tensor zt({static_cast<int>(z.shape(0)), static_cast<int>(z.shape(1))});
    std::copy(z.data(), z.data() + z.size(), zt.data.begin());
    const ad::Tensor img = gan::generate(trainer.G, zt, false);
    py::array_t<double> arr({img.shape[0], img.shape[1], img.shape[2], img.shape[3]});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
  }

  py::array_t<double> discriminate(
      const py::array_t<double, py::array::c_style | py::array::forcecast>& images) {
    if (images.ndim() != 4) throw std::invalid_argument("image batch must have shape (n, c, h, w)");
    ad::Tensor xt({static_cast<int>(images.shape(0)), static_cast<int>(images.shape(1)),
                   static_cast<int>(images.shape(2)), static_cast<int>(images.shape(3))});
    std::copy(images.data(), images.data() + images.size(), xt.data.begin());
    ad::Graph g;
    const ad::Tensor& p = g.val(trainer.D.forward(g, g.constant(xt)));
    py::array_t<double> arr(p.shape[0]);
    std::copy(p.data.begin(), p.data.end(), arr.mutable_data());
    return arr;
  }

  void save(const std::string& path) const { gan::save_checkpoint(path, trainer); }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "semantic image inpainting by latent-space search over a trained generative model";

  m.def(
      "generate_dataset",
      [](const std::string& family, int count, int size, int channels, std::uint64_t seed) {
        const auto images =
            generate_dataset({family_from_string(family), count, size, channels, seed});
        std::vector<py::array_t<double>> out;
        out.reserve(images.size());
        for (const auto& img : images) out.push_back(image_to_array(img));
        return out;
      },
      py::arg("family"), py::arg("count"), py::arg("size") = 32, py::arg("channels") = 1,
      py::arg("seed") = 0, "Deterministic procedural images, values in [-1, 1], shape (c, h, w).");

  m.def("load_png", [](const std::string& path) { return image_to_array(load_image(path)); });
  m.def("save_png",
        [](const std::string& path, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
          save_image(path, array_to_image(a));
        });

  m.def(
      "center_mask",
      [](int h, int w, double fraction) { return mask_to_array(center_mask(h, w, fraction)); },
      py::arg("h"), py::arg("w"), py::arg("hole_fraction") = 0.5);
  m.def(
      "random_mask",
      [](int h, int w, double fraction, std::uint64_t seed) {
        return mask_to_array(random_mask(h, w, fraction, seed));
      },
      py::arg("h"), py::arg("w"), py::arg("missing_fraction") = 0.8, py::arg("seed") = 0);
  m.def(
      "pattern_mask",
      [](int h, int w, double target, std::uint64_t seed) {
        return mask_to_array(pattern_mask(h, w, target, seed));
      },
      py::arg("h"), py::arg("w"), py::arg("target_missing") = 0.25, py::arg("seed") = 0);
  m.def(
      "half_mask", [](int h, int w, std::uint64_t seed) { return mask_to_array(half_mask(h, w, seed)); },
      py::arg("h"), py::arg("w"), py::arg("seed") = 0);

  m.def(
      "importance_weights",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
         int window) {
        const auto w = inpaint::importance_weights(array_to_mask(mask), window);
        py::array_t<double> arr({w.height, w.width});
        std::copy(w.values.begin(), w.values.end(), arr.mutable_data());
        return arr;
      },
      py::arg("mask"), py::arg("window_size") = 7,
      "Fraction of missing pixels in each known pixel's window (center excluded).");

  m.def("psnr", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                   const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
    return metrics::psnr(array_to_image(a), array_to_image(b));
  });
  m.def("psnr_masked",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask) {
          return metrics::psnr_masked(array_to_image(a), array_to_image(b), array_to_mask(mask));
        });
  m.def("ssim", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                   const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
    return metrics::ssim(array_to_image(a), array_to_image(b));
  });

  m.def("mean_fill", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
                        const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask) {
    return image_to_array(metrics::mean_fill(array_to_image(y), array_to_mask(mask)));
  });
  m.def("nn_fill",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
           const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& train) {
          return image_to_array(
              metrics::nn_fill(array_to_image(y), array_to_mask(mask), list_to_images(train)));
        });
  m.def(
      "error_image",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& result,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& real, double gain) {
        return image_to_array(metrics::error_image(array_to_image(result), array_to_image(real), gain));
      },
      py::arg("result"), py::arg("real"), py::arg("gain") = 2.0);

  m.def("overlay", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
                      const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
                      const py::array_t<double, py::array::c_style | py::array::forcecast>& g) {
    return image_to_array(blend::overlay(array_to_image(y), array_to_mask(mask), array_to_image(g)));
  });
  m.def("poisson_blend",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& g) {
          return image_to_array(
              blend::poisson_blend(array_to_image(y), array_to_mask(mask), array_to_image(g)));
        });
  m.def("seam_energy",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask) {
          return blend::seam_energy(array_to_image(x), array_to_mask(mask));
        });

  m.def(
      "sample_latent",
      [](int n, int latent_dim, std::uint64_t seed) {
        Rng rng(seed);
        const ad::Tensor z = gan::sample_latent(rng, n, latent_dim);
        py::array_t<double> arr({n, latent_dim});
        std::copy(z.data.begin(), z.data.end(), arr.mutable_data());
        return arr;
      },
      py::arg("n"), py::arg("latent_dim"), py::arg("seed") = 0);

  py::class_<PyModel>(m, "GanModel")
      .def_static("load",
                  [](const std::string& path) { return PyModel{gan::load_checkpoint(path)}; })
      .def_property_readonly("config", &PyModel::config)
      .def("generate", &PyModel::generate, py::arg("z"),
           "Images for a latent batch (n, latent_dim) -> (n, c, h, w), inference mode.")
      .def("discriminate", &PyModel::discriminate, py::arg("images"),
           "Realism probabilities for an image batch, each strictly inside (0, 1).")
      .def("save", &PyModel::save, py::arg("path"));

  m.def(
      "train_gan",
      [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& images,
         int image_size, int channels, int latent_dim, int base_feature_maps, double lr,
         double beta1, double beta2, int batch_size, int epochs, std::uint64_t seed,
         bool flip_augmentation) {
        const gan::GanConfig cfg =
            config_from_kwargs(image_size, channels, latent_dim, base_feature_maps, lr, beta1,
                               beta2, batch_size, epochs, seed, flip_augmentation);
        PyModel model{gan::Trainer::create(cfg)};
        gan::train(model.trainer, list_to_images(images));
        return model;
      },
      py::arg("images"), py::arg("image_size") = 32, py::arg("channels") = 1,
      py::arg("latent_dim") = 64, py::arg("base_feature_maps") = 16, py::arg("lr") = 2e-4,
      py::arg("beta1") = 0.5, py::arg("beta2") = 0.999, py::arg("batch_size") = 32,
      py::arg("epochs") = 30, py::arg("seed") = 1, py::arg("flip_augmentation") = true);

  m.def(
      "invert",
      [](PyModel& model, const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
         const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
         double lambda_, int iterations, int window_size, double lr, int restarts,
         std::uint64_t seed, bool clip_latent, int threads) {
        inpaint::InpaintConfig cfg;
        cfg.lambda = lambda_;
        cfg.iterations = iterations;
        cfg.window_size = window_size;
        cfg.lr = lr;
        cfg.restarts = restarts;
        cfg.seed = seed;
        cfg.clip_latent = clip_latent;
        cfg.threads = threads;
        const inpaint::InpaintResult res =
            inpaint::invert(array_to_image(y), array_to_mask(mask), model.trainer.G,
                            model.trainer.D, cfg);
        py::dict out;
        py::array_t<double> z(res.z_hat.shape[1]);
        std::copy(res.z_hat.data.begin(), res.z_hat.data.end(), z.mutable_data());
        out["z"] = z;
        out["raw"] = image_to_array(res.raw);
        py::array_t<double> traj({static_cast<int>(res.trajectory.size()), 3});
        auto tview = traj.mutable_unchecked<2>();
        for (std::size_t i = 0; i < res.trajectory.size(); ++i) {
          tview(static_cast<long>(i), 0) = res.trajectory[i].context;
          tview(static_cast<long>(i), 1) = res.trajectory[i].prior;
          tview(static_cast<long>(i), 2) = res.trajectory[i].total;
        }
        out["trajectory"] = traj;
        out["chosen_restart"] = res.chosen_restart;
        return out;
      },
      py::arg("model"), py::arg("y"), py::arg("mask"), py::arg("lambda_") = 0.003,
      py::arg("iterations") = 1500, py::arg("window_size") = 7, py::arg("lr") = 0.1,
      py::arg("restarts") = 3, py::arg("seed") = 0, py::arg("clip_latent") = true,
      py::arg("threads") = 1,
      "Latent-space search minimizing weighted-l1 context loss plus the realism prior.");

  m.def(
      "finish",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
         const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& raw,
         const std::string& mode) {
        return image_to_array(blend::finish(array_to_image(y), array_to_mask(mask),
                                            array_to_image(raw), blend::mode_from_string(mode)));
      },
      py::arg("y"), py::arg("mask"), py::arg("raw"), py::arg("mode") = "blend");

  m.def(
      "grad_check_ops",
      [](std::uint64_t seed, double eps, double tolerance) {
        std::vector<py::tuple> out;
        for (const auto& r : ad::check_all_ops(seed, eps, tolerance)) {
          out.push_back(py::make_tuple(r.op, r.max_rel_err, r.passed));
        }
        return out;
      },
      py::arg("seed") = 7, py::arg("eps") = 1e-5, py::arg("tolerance") = 1e-4,
      "Finite-difference audit of every graph op: (name, max_rel_err, passed).");

  m.attr("__version__") = "0.1.0";
}
