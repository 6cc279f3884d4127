"""Hypercube domains, interaction classification and hierarchical subdivision.

The source box is peeled level by level with a 2^d-tree: at each level the
cells that still touch the target along the shared hypersurface are kept and
subdivided again, the rest are emitted as that level's boxes.  The peeled
cells at level k all have volume fraction 2^(-d k) and the retained terminal
sliver has volume fraction 2^(-(d-d') kappa).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousSeparationError,
    DimensionError,
    GeometryError,
    NoSubdivisionNeeded,
)

_REL_TOL = 1e-12


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^d given by per-axis lower/upper bounds."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise DimensionError("lo and hi must be equal-length 1-D vectors")
        object.__setattr__(self, "lo", tuple(lo.tolist()))
        object.__setattr__(self, "hi", tuple(hi.tolist()))
        if np.any(hi - lo <= 0):
            raise GeometryError("box must have nonempty interior (lo < hi)")

    @property
    def d(self):
        return len(self.lo)

    @property
    def side(self):
        return self.hi[0] - self.lo[0]

    @property
    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def lo_arr(self):
        return np.asarray(self.lo)

    def hi_arr(self):
        return np.asarray(self.hi)

    def translate(self, shift):
        shift = np.asarray(shift, dtype=float)
        return type(self)(tuple(self.lo_arr() + shift), tuple(self.hi_arr() + shift))

    def contains(self, points, domain=None):
        """Half-open membership [lo, hi) per axis.

        Cells whose upper face lies on the boundary of ``domain`` are closed
        there, so a partition of ``domain`` assigns each point to exactly one
        cell.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.lo_arr(), self.hi_arr()
        inside = pts >= lo
        if domain is None:
            closed = np.zeros(self.d, dtype=bool)
        else:
            scale = max(hi - lo)
            closed = np.isclose(hi, domain.hi_arr(), rtol=0, atol=_REL_TOL * scale)
        upper = np.where(closed, pts <= hi, pts < hi)
        return np.all(inside & upper, axis=1)


@dataclass(frozen=True)
class HyperCube(Box):
    """A Box with equal side lengths (the paper's domains are all cubes)."""

    def __post_init__(self):
        super().__post_init__()
        sides = self.hi_arr() - self.lo_arr()
        if np.ptp(sides) > _REL_TOL * sides.max():
            raise GeometryError("box must be a cube (equal side lengths)")


@dataclass(frozen=True)
class InteractionKind:
    """Far-field or shared d'-dimensional hypersurface; d' = -1 encodes far-field."""

    dprime: int

    @classmethod
    def far_field(cls):
        return cls(-1)

    @classmethod
    def shared_surface(cls, dprime):
        if dprime < 0:
            raise DimensionError("shared-surface dimension must be >= 0")
        return cls(int(dprime))

    @property
    def is_far_field(self):
        return self.dprime == -1

    def __str__(self):
        return "far-field" if self.is_far_field else f"shared-surface(d'={self.dprime})"


@dataclass
class SubdivisionTree:
    """Peeled boxes per level plus the terminal still-adjacent sliver."""

    source: HyperCube
    d: int
    dprime: int
    kappa: int
    levels: list = field(default_factory=list)  # levels[k-1] = [Y_{k,1}, ...]
    terminal: Box = None

    def level_boxes(self, k):
        if not 1 <= k <= self.kappa:
            raise IndexError(f"level {k} outside 1..{self.kappa}")
        return self.levels[k - 1]

    def all_boxes(self):
        """(k, l, box) triples over every peeled box, in level order."""
        for k, boxes in enumerate(self.levels, start=1):
            for l, box in enumerate(boxes, start=1):
                yield k, l, box


def integer_log(n, base):
    """floor(log_base(n)) by repeated multiplication (no float logs)."""
    if n < 1 or base < 2:
        raise ValueError("need n >= 1 and base >= 2")
    k, power = 0, base
    while power <= n:
        k += 1
        power *= base
    return k


def level_box_count(d, dprime, k):
    """Number of boxes peeled at level k: 2^(d'k) (2^(d-d') - 1)."""
    return 2 ** (dprime * k) * (2 ** (d - dprime) - 1)


def make_domain_pair(d, kind, side=1.0):
    """Source [0, side]^d and the matching target cube for this interaction."""
    if d < 1:
        raise DimensionError("dimension must be >= 1")
    if side <= 0:
        raise GeometryError("side must be positive")
    source = HyperCube((0.0,) * d, (side,) * d)
    if kind.is_far_field:
        target = source.translate([-2.0 * side] + [0.0] * (d - 1))
    else:
        dp = kind.dprime
        if not 0 <= dp < d:
            raise DimensionError(f"need 0 <= d' < d, got d'={dp}, d={d}")
        lo = (0.0,) * dp + (-side,) * (d - dp)
        hi = (side,) * dp + (0.0,) * (d - dp)
        target = HyperCube(lo, hi)
    return target, source


def _axis_relations(target, source):
    """Per-axis signed gap and overlap length between two boxes."""
    tlo, thi = target.lo_arr(), target.hi_arr()
    slo, shi = source.lo_arr(), source.hi_arr()
    gaps = np.maximum(np.maximum(slo - thi, tlo - shi), 0.0)
    overlaps = np.minimum(thi, shi) - np.maximum(tlo, slo)
    return gaps, overlaps


def classify(target, source):
    """Far-field / shared-surface classification of two cubes.

    The shared-surface dimension is the number of axes along which the closed
    boxes overlap in an interval of positive length.  Far-field means the
    boxes are at least one cube (eta = 1) apart.
    """
    if target.d != source.d:
        raise DimensionError("boxes must live in the same dimension")
    gaps, overlaps = _axis_relations(target, source)
    scale = min(target.side, source.side)
    tol = _REL_TOL * max(target.side, source.side)
    if np.all(overlaps > tol):
        raise GeometryError("boxes have overlapping interiors")
    dist = float(np.linalg.norm(gaps))
    if dist > tol:
        if dist >= scale * (1.0 - _REL_TOL):
            return InteractionKind.far_field()
        raise AmbiguousSeparationError(
            f"separation {dist:g} is positive but below one cube width {scale:g}"
        )
    # Touching boxes: positive-length overlaps must span a full side of both,
    # otherwise the shared surface is not a face/edge/vertex of both cubes.
    shared = overlaps > tol
    for ax in np.nonzero(shared)[0]:
        if abs(overlaps[ax] - target.side) > tol or abs(overlaps[ax] - source.side) > tol:
            raise GeometryError(
                f"partial overlap along axis {ax}: shared surface is not a "
                "full face/edge/vertex of both boxes"
            )
    return InteractionKind.shared_surface(int(np.count_nonzero(shared)))


def subdivide(source, target, n):
    """Hierarchical peeling of the source box away from the target.

    Depth is kappa = floor(log_{2^d} n).  At level k the 2^d-tree children of
    the still-adjacent region that no longer share the d'-surface with the
    target are emitted; the terminal sliver after level kappa is kept whole.
    """
    kind = classify(target, source)
    if kind.is_far_field:
        raise NoSubdivisionNeeded("far-field pair has no subdivision tree")
    if n < 1:
        raise ValueError("need n >= 1")
    d, dp = source.d, kind.dprime
    kappa = integer_log(n, 2 ** d) if n >= 2 ** d else 0

    gaps, overlaps = _axis_relations(target, source)
    tol = _REL_TOL * source.side
    shared_axes = overlaps > tol
    # Near face per non-shared axis: the side of the source facing the target.
    near_lo = np.asarray(target.hi) <= np.asarray(source.lo) + tol

    slo, side = source.lo_arr(), source.side
    tree = SubdivisionTree(source=source, d=d, dprime=dp, kappa=kappa)

    for k in range(1, kappa + 1):
        cell = side / 2 ** k
        per_axis = []
        for ax in range(d):
            if shared_axes[ax]:
                per_axis.append(range(2 ** k))
            elif near_lo[ax]:
                per_axis.append((0, 1))  # the two cells inside the previous sliver
            else:
                per_axis.append((2 ** k - 2, 2 ** k - 1))
        near_idx = tuple(
            None if shared_axes[ax] else (0 if near_lo[ax] else 2 ** k - 1)
            for ax in range(d)
        )
        boxes = []
        for idx in itertools.product(*per_axis):
            if all(
                near_idx[ax] is None or idx[ax] == near_idx[ax] for ax in range(d)
            ):
                continue  # still adjacent, recurses to the next level
            lo = slo + np.asarray(idx) * cell
            boxes.append(HyperCube(tuple(lo), tuple(lo + cell)))
        boxes.sort(key=lambda b: b.lo)
        assert len(boxes) == level_box_count(d, dp, k)
        tree.levels.append(boxes)

    sliver = side / 2 ** kappa
    lo = np.empty(d)
    hi = np.empty(d)
    for ax in range(d):
        if shared_axes[ax]:
            lo[ax], hi[ax] = slo[ax], slo[ax] + side
        elif near_lo[ax]:
            lo[ax], hi[ax] = slo[ax], slo[ax] + sliver
        else:
            lo[ax], hi[ax] = slo[ax] + side - sliver, slo[ax] + side
    tree.terminal = Box(tuple(lo.tolist()), tuple(hi.tolist()))
    return tree


def box_probability(tree, which):
    """Cell probability q_k = 2^(-dk), or q_kappa for ``which='terminal'``."""
    if which == "terminal":
        return 2.0 ** (-(tree.d - tree.dprime) * tree.kappa)
    k = int(which)
    if not 1 <= k <= tree.kappa:
        raise IndexError(f"level {k} outside 1..{tree.kappa}")
    return 2.0 ** (-tree.d * k)
