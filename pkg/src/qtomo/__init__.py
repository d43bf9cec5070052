"""Tomographic reconstruction: classical Fourier-slice and FBP, plus an exact
statevector simulation of the quantum MRI and CT reconstruction algorithms."""

from .grids import ImageGrid, disk_phantom, read_image, shepp_logan, write_image
from .interp import InterpolationScheme, build_interp_matrix
from .radon import Sinogram, backproject, forward_radon
from .recon import fbp_reconstruct, fourier_slice_reconstruct

__all__ = [
    "ImageGrid",
    "InterpolationScheme",
    "Sinogram",
    "backproject",
    "build_interp_matrix",
    "disk_phantom",
    "fbp_reconstruct",
    "forward_radon",
    "fourier_slice_reconstruct",
    "read_image",
    "shepp_logan",
    "write_image",
]
__version__ = "0.1.0"
