"""Single-pixel X-ray transform toolkit."""
from .grid import Grid, ImageGrid, ScalarField
from .phantom import generate_disk, generate_gaussian, generate_shepp_logan
from .projector import RayGeometry, Sinogram, normal_operator, xray_adjoint, xray_forward
from .singlepixel import frechet_derivative, linearized_reconstruction, single_pixel_forward
from .solver import SolverConfig, gauss_newton_reconstruct
from .spectral import SpectralConfig, half_laplacian, invert_xray_normal

__version__ = "0.1.0"

__all__ = [
    "Grid", "ImageGrid", "ScalarField", "generate_disk", "generate_gaussian",
    "generate_shepp_logan", "RayGeometry", "Sinogram", "normal_operator", "xray_adjoint",
    "xray_forward", "frechet_derivative", "linearized_reconstruction", "single_pixel_forward",
    "SolverConfig", "gauss_newton_reconstruct", "SpectralConfig", "half_laplacian",
    "invert_xray_normal",
]
