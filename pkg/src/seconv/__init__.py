"""Salt-and-pepper image denoising with selective convolution blocks."""

from .baselines import adaptive_median_filter, median_filter
from .imaging import as_image, complement, conv2d_same, hadamard, noisy_map, to_uint8
from .metrics import MetricReport, SsimParams, evaluate, mse, psnr, ssim, training_loss
from .netpbm import read_image, write_image
from .noise import NoiseSpec, add_sap_noise, preprocess
from .selective import (
    CascadeSpec,
    Finalize,
    RestorationState,
    SeConvBlockSpec,
    apply_block,
    cascade_denoise,
    reliability,
    run_cascade,
    selective_conv,
)

__version__ = "0.1.0"
