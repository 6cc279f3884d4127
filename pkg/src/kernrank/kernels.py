"""The seven benchmark kernels plus a registry for user-supplied ones.

All kernels here are radial: they depend on x and y only through the
Euclidean distance r = |x - y|.  Only the oscillatory k4 is complex-valued;
assembly picks real or complex storage from the ``complex_valued`` flag.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, SingularEvaluationError


@dataclass(frozen=True)
class Kernel:
    name: str
    func: callable  # vectorized map r -> value
    complex_valued: bool = False
    singular_at_zero: bool = False
    smoothness: str = ""


def _k1(r):
    return 1.0 / r


def _k2(r):
    return np.log(r)


def _k3(r):
    return np.sin(r)


def _k4(r):
    return np.exp(1j * r) / r


def _k5(r):
    return 1.0 / np.sqrt(1.0 + r)


def _k6(r):
    return np.exp(-r)


def _k7(r):
    return r


_REGISTRY = {
    "k1": Kernel("k1", _k1, singular_at_zero=True, smoothness="3D Laplace Green's function"),
    "k2": Kernel("k2", _k2, singular_at_zero=True, smoothness="2D Laplace Green's function"),
    "k3": Kernel("k3", _k3, smoothness="entire"),
    "k4": Kernel("k4", _k4, complex_valued=True, singular_at_zero=True,
                 smoothness="3D Helmholtz kernel, wave number 1"),
    "k5": Kernel("k5", _k5, smoothness="analytic for r > -1"),
    "k6": Kernel("k6", _k6, smoothness="Matern covariance kernel"),
    "k7": Kernel("k7", _k7, smoothness="polyharmonic radial basis function"),
}

STANDARD_KERNELS = tuple(sorted(k for k in _REGISTRY if len(k) == 2))


def register_kernel(name, func, complex_valued=False, singular_at_zero=False,
                    smoothness=""):
    """Register a custom radial kernel under ``name`` (callable of r)."""
    kernel = Kernel(str(name).lower(), func, complex_valued, singular_at_zero,
                    smoothness)
    _REGISTRY[kernel.name] = kernel
    return kernel


def get_kernel(name):
    key = str(name).lower()
    if key not in _REGISTRY:
        raise KeyError(f"unknown kernel {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[key]


def evaluate_radial(kernel, r):
    """Apply the kernel to an array of distances, checking for singularities."""
    kernel = get_kernel(kernel) if not isinstance(kernel, Kernel) else kernel
    r = np.asarray(r, dtype=float)
    if kernel.singular_at_zero and np.any(r == 0.0):
        raise SingularEvaluationError(f"kernel {kernel.name} evaluated at r = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = kernel.func(r)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(np.atleast_1d(vals)))
        raise NumericalError(
            f"kernel {kernel.name} produced non-finite values at indices {bad[:5].tolist()}"
        )
    return vals


def evaluate(kernel, x, y):
    """Kernel value for a single pair of points, always returned as complex."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = float(np.linalg.norm(x - y))
    return complex(evaluate_radial(kernel, r))
