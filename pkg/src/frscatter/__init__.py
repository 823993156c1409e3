"""frscatter: fractional wavelet scattering embeddings and generative decoding.

The library implements the full pipeline: Morlet filter banks, the
(fractional) scattering cascade, feature-map-fusion and PCA reduction,
from-scratch decoder training under an L1 objective, image fusion, and
PSNR/SSIM evaluation, plus experiment orchestration.
"""

__version__ = "0.1.0"

from .filters import FilterBank, FilterParams, build_bank, build_lowpass, build_morlet
from .metrics import FusionConfig, SsimParams, evaluate_split, fuse, psnr, ssim
from .nn import AdamState, DecoderModel, adam_step, g1_build, g2_build, l1_loss
from .reduction import FmfConfig, PcaModel, fmf, pca_fit, pca_project
from .scattering import (
    Embedding,
    FracOrderPair,
    PathTable,
    ScatterPath,
    chirp,
    enumerate_paths,
    frconv2,
    scatter,
    scatter_batch,
    wavelet_modulus,
)
from .tensorio import SeededRng, tensor_read, tensor_write
from .training import TrainConfig, generate, train

__all__ = [
    "AdamState", "DecoderModel", "Embedding", "FilterBank", "FilterParams",
    "FmfConfig", "FracOrderPair", "FusionConfig", "PathTable", "PcaModel",
    "ScatterPath", "SeededRng", "SsimParams", "TrainConfig", "adam_step",
    "build_bank", "build_lowpass", "build_morlet", "chirp", "enumerate_paths",
    "evaluate_split", "fmf", "frconv2", "fuse", "g1_build", "g2_build",
    "generate", "l1_loss", "pca_fit", "pca_project", "psnr", "scatter",
    "scatter_batch", "ssim", "tensor_read", "tensor_write", "train",
    "wavelet_modulus",
]
