"""Semantic image inpainting by latent-space search over a trained generative model.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports its surface. Images are float64 arrays shaped ``(c, h, w)`` with
values in ``[-1, 1]``; masks are uint8 arrays shaped ``(h, w)`` where 1 marks
a known pixel and 0 a missing one.
"""

from ._core import (  # noqa: F401
    GanModel,
    __version__,
    center_mask,
    error_image,
    finish,
    generate_dataset,
    grad_check_ops,
    half_mask,
    importance_weights,
    invert,
    load_png,
    mean_fill,
    nn_fill,
    overlay,
    pattern_mask,
    poisson_blend,
    psnr,
    psnr_masked,
    random_mask,
    sample_latent,
    save_png,
    seam_energy,
    ssim,
    train_gan,
)

__all__ = [
    "GanModel",
    "center_mask",
    "error_image",
    "finish",
    "generate_dataset",
    "grad_check_ops",
    "half_mask",
    "importance_weights",
    "invert",
    "load_png",
    "mean_fill",
    "nn_fill",
    "overlay",
    "pattern_mask",
    "poisson_blend",
    "psnr",
    "psnr_masked",
    "random_mask",
    "sample_latent",
    "save_png",
    "seam_energy",
    "ssim",
    "train_gan",
]
