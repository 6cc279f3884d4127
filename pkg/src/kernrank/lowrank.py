"""Kernel matrix assembly, numerical rank, and interpolation-based compression.

The epsilon-rank is measured from a full SVD (singular values only); the
low-rank route interpolates the kernel over the source box on a tensorized
grid of Chebyshev points of the second kind, giving the U V^T split where
U holds kernel evaluations at the grid and V the Lagrange basis at the
source particles.
"""

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import kernels as _kernels
from .errors import (
    DegenerateNormError,
    NoSubdivisionNeeded,
    NumericalError,
    SingularEvaluationError,
)


@dataclass
class KernelMatrix:
    entries: np.ndarray
    kernel: _kernels.Kernel
    targets: object = None  # ParticleSet
    sources: object = None

    @property
    def shape(self):
        return self.entries.shape


@dataclass
class LowRankFactor:
    """K ~ U V^T with U = kernel at interpolation nodes, V = Lagrange basis."""

    U: np.ndarray  # (m, r)
    V: np.ndarray  # (n, r)
    nodes: np.ndarray  # (r, d) tensor grid in the source box
    order: int  # points per axis

    @property
    def r(self):
        return self.U.shape[1]

    def matrix(self):
        if self.r == 0:
            return np.zeros((self.U.shape[0], self.V.shape[0]))
        return self.U @ self.V.T


@dataclass
class RankReport:
    eps_rank: int
    singular_values: np.ndarray
    eps: float
    realized_R: int = None


def assemble(kernel, targets, sources):
    """Dense kernel matrix K[i, j] = kernel(x_i, y_j)."""
    kernel = _kernels.get_kernel(kernel) if not isinstance(kernel, _kernels.Kernel) else kernel
    r = cdist(targets.points, sources.points)
    if kernel.singular_at_zero and np.any(r == 0.0):
        i, j = np.argwhere(r == 0.0)[0]
        raise SingularEvaluationError(
            f"target {i} coincides with source {j} for singular kernel {kernel.name}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        entries = kernel.func(r)
    if not np.all(np.isfinite(entries)):
        i, j = np.argwhere(~np.isfinite(entries))[0]
        raise NumericalError(
            f"non-finite entry at ({i}, {j}), distance {r[i, j]:g}, "
            f"kernel {kernel.name}"
        )
    if not kernel.complex_valued:
        entries = np.asarray(entries, dtype=float)
    return KernelMatrix(entries=entries, kernel=kernel, targets=targets,
                        sources=sources)


def eps_rank(K, eps):
    """Largest k with sigma_k / sigma_1 >= eps (zero matrix has rank 0)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    entries = K.entries if isinstance(K, KernelMatrix) else np.asarray(K)
    sigma = np.linalg.svd(entries, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return RankReport(eps_rank=0, singular_values=np.zeros_like(sigma), eps=eps)
    rank = int(np.count_nonzero(sigma / sigma[0] >= eps))
    return RankReport(eps_rank=rank, singular_values=sigma, eps=eps)


def cheb_nodes(order, lo=-1.0, hi=1.0):
    """Chebyshev points of the second kind (extrema grid), ascending in [lo, hi]."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if order == 1:
        ref = np.array([0.0])
    else:
        ref = np.cos(np.arange(order - 1, -1, -1) * np.pi / (order - 1))
    return lo + (hi - lo) * (ref + 1.0) / 2.0


def cheb_weights(order):
    """Barycentric weights for the second-kind grid: (-1)^j, halved at the ends."""
    if order == 1:
        return np.ones(1)
    w = (-1.0) ** np.arange(order)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def lagrange_basis(nodes, weights, y):
    """L[j, k] = k-th Lagrange basis polynomial at point y_j (barycentric form)."""
    y = np.asarray(y, dtype=float)
    diff = y[:, None] - nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights[None, :] / diff
        L = terms / terms.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if np.any(hit):
        L[hit] = exact[hit].astype(float)
    return L


def tensor_grid(box, order):
    """Tensorized node grid (order^d, d) plus per-axis node index array."""
    axes = [cheb_nodes(order, box.lo[ax], box.hi[ax]) for ax in range(box.d)]
    idx = np.array(list(itertools.product(range(order), repeat=box.d)), dtype=int)
    nodes = np.column_stack([axes[ax][idx[:, ax]] for ax in range(box.d)])
    return nodes, idx, axes


def cheb_factorize(kernel, targets, source_box, sources, order):
    """Interpolate the kernel along the source coordinate over source_box.

    U[i, k] = kernel(x_i, y^k) at the tensor Chebyshev grid y^k;
    V[j, k] = L_k(y_j) via barycentric evaluation.  r = order^d.
    """
    kernel = _kernels.get_kernel(kernel) if not isinstance(kernel, _kernels.Kernel) else kernel
    nodes, idx, axes = tensor_grid(source_box, order)
    r = cdist(targets.points, nodes)
    if kernel.singular_at_zero and np.any(r == 0.0):
        raise SingularEvaluationError(
            f"interpolation node coincides with a target point ({kernel.name})"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        U = kernel.func(r)
    if not np.all(np.isfinite(U)):
        raise NumericalError("non-finite kernel value at an interpolation node")
    if not kernel.complex_valued:
        U = np.asarray(U, dtype=float)
    w = cheb_weights(order)
    per_axis = [
        lagrange_basis(axes[ax], w, sources.points[:, ax])
        for ax in range(source_box.d)
    ]
    V = np.ones((sources.points.shape[0], nodes.shape[0]))
    for ax in range(source_box.d):
        V *= per_axis[ax][:, idx[:, ax]]
    return LowRankFactor(U=U, V=V, nodes=nodes, order=order)


def _rel_maxnorm(K, Ktilde):
    denom = np.max(np.abs(K))
    if denom == 0.0:
        raise DegenerateNormError("max-norm of the reference matrix is zero")
    return float(np.max(np.abs(K - Ktilde)) / denom)


def rel_maxnorm_error(K, F):
    """Relative entrywise max-norm error of the factorization against K."""
    entries = K.entries if isinstance(K, KernelMatrix) else np.asarray(K)
    approx = F.matrix() if isinstance(F, LowRankFactor) else np.asarray(F)
    if entries.shape != approx.shape:
        raise ValueError("shape mismatch between matrix and factorization")
    return _rel_maxnorm(entries, approx)


def tolerance_bridge(m, n, eps, direction="TwoToMax"):
    """Translate a 2-norm tolerance to a max-norm one (or back): sqrt(mn) * eps."""
    if m < 1 or n < 1 or eps <= 0:
        raise ValueError("need m, n >= 1 and eps > 0")
    if direction not in ("TwoToMax", "MaxToTwo"):
        raise ValueError(f"unknown direction {direction!r}")
    return float(np.sqrt(m * n) * eps)


def realized_R(counts, p):
    """Rank upper bound sum(min(N_{k,l}, p)) + M_kappa for one particle draw.

    ``counts`` is the (per-level counts, M_kappa) pair from realized_counts.
    """
    level_counts, m_kappa = counts
    if p < 0:
        raise ValueError("truncation level p must be >= 0")
    return int(sum(min(c, p) for row in level_counts for c in row) + m_kappa)


@dataclass
class HierarchicalApprox:
    ktilde: np.ndarray
    total_rank: int
    achieved_error: float
    block_orders: list = field(default_factory=list)
    max_order: int = 0

    def __iter__(self):  # tuple-style unpacking (ktilde, total_rank, error)
        return iter((self.ktilde, self.total_rank, self.achieved_error))


def _block_order_search(kernel, targets, box, block_sources, dense_block,
                        abs_tol, order_cap):
    """Smallest even order whose interpolation error beats abs_tol on the block.

    Probes on a strided <= 20 x 20 subgrid at abs_tol / 10, then verifies on
    the full block.  Returns (factor_or_None, order); None means the dense
    block must be kept (either tiny blocks where order^d >= c, or cap hit).
    """
    m = dense_block.shape[0]
    c = block_sources.points.shape[0]
    d = box.d
    probe_i = np.linspace(0, m - 1, min(20, m)).astype(int)
    probe_j = np.linspace(0, c - 1, min(20, c)).astype(int)
    for order in range(2, order_cap + 1, 2):
        if order ** d >= c:
            return None, order  # dense block is the cheaper exact choice
        F = cheb_factorize(kernel, targets, box, block_sources, order)
        approx = F.matrix()
        probe_err = np.max(
            np.abs(dense_block[np.ix_(probe_i, probe_j)]
                   - approx[np.ix_(probe_i, probe_j)])
        )
        if probe_err < abs_tol / 10.0:
            if np.max(np.abs(dense_block - approx)) < abs_tol:
                return F, order
    return None, order_cap


def hierarchical_approximate(kernel, targets, sources, tree, delta,
                             order_cap=20):
    """Blockwise compression of K over the subdivision tree.

    Each peeled block is replaced by the smallest-order interpolation
    factorization meeting the (global max-norm relative) tolerance delta;
    the terminal block stays dense.  For far-field pairs pass ``tree=None``
    to compress the whole matrix as a single block.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    kernel = _kernels.get_kernel(kernel) if not isinstance(kernel, _kernels.Kernel) else kernel
    K = assemble(kernel, targets, sources)
    kmax = np.max(np.abs(K.entries))
    abs_tol = delta * kmax

    if tree is None:
        F, order = _block_order_search(kernel, targets, sources.domain,
                                       sources, K.entries, abs_tol, order_cap)
        if F is None:
            ktilde = K.entries.copy()
            rank = min(sources.n, targets.n)
        else:
            ktilde = F.matrix()
            rank = min(F.r, sources.n)
        return HierarchicalApprox(
            ktilde=ktilde, total_rank=rank,
            achieved_error=_rel_maxnorm(K.entries, ktilde),
            block_orders=[order], max_order=order,
        )

    if sources.domain != tree.source:
        raise NoSubdivisionNeeded("tree does not match the source domain")
    ktilde = np.zeros_like(K.entries)
    total_rank = 0
    orders = []
    for _, _, box in tree.all_boxes():
        mask = box.contains(sources.points, domain=sources.domain)
        c = int(np.count_nonzero(mask))
        if c == 0:
            continue
        idx = np.nonzero(mask)[0]
        block_sources = _subset(sources, idx)
        dense_block = K.entries[:, idx]
        F, order = _block_order_search(kernel, targets, box, block_sources,
                                       dense_block, abs_tol, order_cap)
        if F is None:
            ktilde[:, idx] = dense_block
            total_rank += c
        else:
            ktilde[:, idx] = F.matrix()
            total_rank += min(F.r, c)
            orders.append(order)
    term_mask = tree.terminal.contains(sources.points, domain=sources.domain)
    term_idx = np.nonzero(term_mask)[0]
    ktilde[:, term_idx] = K.entries[:, term_idx]
    total_rank += len(term_idx)
    return HierarchicalApprox(
        ktilde=ktilde, total_rank=total_rank,
        achieved_error=_rel_maxnorm(K.entries, ktilde),
        block_orders=orders, max_order=max(orders, default=0),
    )


def _subset(ps, idx):
    from .sampling import ParticleSet

    pts = ps.points[idx]
    return ParticleSet(points=pts, domain=ps.domain, seed=ps.seed,
                       distribution=ps.distribution)


def save_matrix(K, path):
    """Row-major little-endian dump with a JSON sidecar header."""
    entries = K.entries
    scalar = "complex128" if np.iscomplexobj(entries) else "float64"
    dtype = "<c16" if scalar == "complex128" else "<f8"
    entries.astype(dtype).tofile(path)
    header = {
        "m": int(entries.shape[0]),
        "n": int(entries.shape[1]),
        "scalar": scalar,
        "kernel": K.kernel.name if K.kernel else None,
        "seeds": {
            "targets": getattr(K.targets, "seed", None),
            "sources": getattr(K.sources, "seed", None),
        },
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(header, fh, indent=2)


def load_matrix(path):
    with open(str(path) + ".json") as fh:
        header = json.load(fh)
    dtype = "<c16" if header["scalar"] == "complex128" else "<f8"
    entries = np.fromfile(path, dtype=dtype).reshape(header["m"], header["n"])
    kernel = _kernels.get_kernel(header["kernel"]) if header["kernel"] else None
    return KernelMatrix(entries=entries, kernel=kernel), header
