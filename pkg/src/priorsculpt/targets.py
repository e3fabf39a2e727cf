"""Sub-pixel target geometry and the matched-filter / residual reduction.

A target of fractional abundance a replaces part of a background pixel z:

    x = (1 - a) z + a t

For an elliptical background every detector in this package depends on x
only through two numbers computed in whitened coordinates y = chol^{-1}(x - mu):
the matched-filter projection m along the whitened signature and the residual
norm r orthogonal to it.  Working in the (m, r) plane makes the Monte-Carlo
cost independent of the pixel dimension d.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import as_float_array, check_index, check_rng
from .background import TBackground

if TYPE_CHECKING:
    from .detectors import KnotGrid

__all__ = [
    "TargetSignature",
    "MfrPoints",
    "MatchedPairSet",
    "implant",
    "mfr_project",
    "implant_mfr",
    "make_matched_pairs",
    "save_matched_pairs",
    "load_matched_pairs",
]

# Rows sampled per block inside make_matched_pairs.  Fixed so that a given
# (seed, n, d) always consumes the generator stream identically.
_SAMPLE_BLOCK = 1 << 18


class TargetSignature:
    """A target spectrum together with its whitened geometry.

    Attributes:
        t: raw length-d signature.
        s: whitened signature chol^{-1} t.
        sigma_t: matched-filter strength sqrt(t' R^{-1} t) = ||s||.
    """

    def __init__(self, background: TBackground, t):
        if not isinstance(background, TBackground):
            raise ValueError("background must be a TBackground")
        t = as_float_array(t, "t", shape=(background.dim,))
        s = solve_triangular(background.chol, t, lower=True)
        sigma_t = float(np.sqrt(s @ s))
        if sigma_t <= 0.0:
            raise ValueError("signature must be nonzero")
        self.t = t
        self.s = s
        self.sigma_t = sigma_t

    @classmethod
    def from_sigma(cls, background: TBackground, sigma_t):
        """Signature of prescribed strength along the first whitened axis.

        The background is spherically symmetric after whitening, so for the
        (m, r) statistics only sigma_t matters, not the direction; this picks
        t = sigma_t * (first column of chol), whose whitened image is
        sigma_t * e_1.
        """
        if not isinstance(background, TBackground):
            raise ValueError("background must be a TBackground")
        sigma_t = float(sigma_t)
        if not sigma_t > 0.0:
            raise ValueError(f"sigma_t must be > 0, got {sigma_t}")
        return cls(background, background.chol[:, 0] * sigma_t)

    def __repr__(self):
        return f"TargetSignature(dim={self.t.shape[0]}, sigma_t={self.sigma_t:.6g})"


@dataclass(frozen=True)
class MfrPoints:
    """Arrays of matched-filter / residual coordinates.

    m: (n,) matched-filter projections.
    r: (n,) residual norms, always >= 0.
    """

    m: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        m = as_float_array(self.m, "m", ndim=1)
        r = as_float_array(self.r, "r", ndim=1)
        if m.shape != r.shape:
            raise ValueError(f"m and r must have equal length, got {m.shape} vs {r.shape}")
        if m.shape[0] == 0:
            raise ValueError("MfrPoints must be non-empty")
        if np.any(r < 0.0):
            raise ValueError("r must be nonnegative")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "r", r)

    def __len__(self):
        return self.m.shape[0]


def implant(z, a, t):
    """Replace a fraction a of pixel(s) z with the signature t.

    Args:
        z: (n, d) or (d,) background pixels.
        a: abundance, 0 <= a < 1.
        t: length-d signature.

    Returns:
        (1 - a) z + a t, same shape as z.
    """
    a = float(a)
    if not 0.0 <= a < 1.0:
        raise ValueError(f"abundance must satisfy 0 <= a < 1, got {a}")
    z = np.asarray(z, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    return (1.0 - a) * z + a * t


def mfr_project(background: TBackground, signature: TargetSignature, x) -> MfrPoints:
    """Project pixels onto the (m, r) plane.

    m is the matched-filter output (s . y) / sigma_t and r the norm of the
    component of y orthogonal to s; the square root argument is clamped at
    zero against round-off.
    """
    y = background.whiten(x)
    y = np.atleast_2d(y)
    m = (y @ signature.s) / signature.sigma_t
    r = np.sqrt(np.maximum(np.einsum("ij,ij->i", y, y) - m * m, 0.0))
    return MfrPoints(m=m, r=r)


def implant_mfr(points: MfrPoints, a, sigma_t) -> MfrPoints:
    """Image of the abundance-a implant in (m, r) coordinates.

    For a centered background (mu = 0) this is exactly the projection of
    implant(z, a, t): m -> (1-a) m + a sigma_t, r -> (1-a) r.  For nonzero mu
    it blends the centered whitened point; the experiments run with mu = 0.
    """
    a = float(a)
    if not 0.0 <= a < 1.0:
        raise ValueError(f"abundance must satisfy 0 <= a < 1, got {a}")
    sigma_t = getattr(sigma_t, "sigma_t", sigma_t)
    return MfrPoints(m=(1.0 - a) * points.m + a * float(sigma_t),
                     r=(1.0 - a) * points.r)


@dataclass(frozen=True)
class MatchedPairSet:
    """A target-free sample and its implanted copies, one per knot.

    Every tgt[k] is the same underlying draw as bkg with the knot's abundance
    implanted, so detector comparisons across abundances share their random
    numbers.

    Attributes:
        bkg: MfrPoints of the n target-free draws.
        tgt: tuple of K MfrPoints, tgt[k] implanted at knots.abundances[k].
        knots: the abundance grid.
        seed: provenance label for the generator that produced bkg (optional).
    """

    bkg: MfrPoints
    tgt: tuple
    knots: "KnotGrid"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tgt", tuple(self.tgt))
        if len(self.tgt) != self.knots.K:
            raise ValueError(f"expected {self.knots.K} implanted populations, got {len(self.tgt)}")
        n = len(self.bkg)
        for k, pts in enumerate(self.tgt):
            if len(pts) != n:
                raise ValueError(f"tgt[{k}] has {len(pts)} points, expected {n}")

    @property
    def n(self):
        return len(self.bkg)


def make_matched_pairs(background: TBackground, signature: TargetSignature,
                       knots, n, rng, *, seed=None) -> MatchedPairSet:
    """Draw n background pixels and implant them at every knot abundance.

    Sampling runs in fixed-size blocks that are projected to (m, r) as they
    are drawn, so peak memory is O(n) scalars regardless of d.  The block
    size is a constant: results for a given (rng state, n) do not depend on
    anything else.

    Args:
        background: clutter model.
        signature: target signature.
        knots: KnotGrid of abundances.
        n: sample size per population.
        rng: numpy Generator (or int seed) used for the draws.
        seed: optional provenance label stored on the result.

    Returns:
        MatchedPairSet with one target-free and K implanted populations.
    """
    n = check_index(n, "n", minimum=1)
    rng = check_rng(rng)
    m = np.empty(n)
    r = np.empty(n)
    lo = 0
    while lo < n:
        hi = min(lo + _SAMPLE_BLOCK, n)
        block = background.sample(hi - lo, rng)
        pts = mfr_project(background, signature, block)
        m[lo:hi] = pts.m
        r[lo:hi] = pts.r
        lo = hi
    bkg = MfrPoints(m=m, r=r)
    tgt = tuple(implant_mfr(bkg, a, signature.sigma_t) for a in knots.abundances)
    return MatchedPairSet(bkg=bkg, tgt=tgt, knots=knots, seed=seed)


def save_matched_pairs(path, pairs: MatchedPairSet, sigma_t):
    """Flat binary save of a pair set for reuse across sculpting runs.

    Only the target-free (m, r) columns are stored; the implanted
    populations are exact affine images, so they are rebuilt on load from
    the abundances and sigma_t.
    """
    sigma_t = getattr(sigma_t, "sigma_t", sigma_t)
    np.savez(path, m=pairs.bkg.m, r=pairs.bkg.r,
             abundances=pairs.knots.abundances,
             sigma_t=np.float64(sigma_t),
             seed=np.int64(-1 if pairs.seed is None else pairs.seed))
    return path


def load_matched_pairs(path):
    """Inverse of save_matched_pairs; returns (MatchedPairSet, sigma_t)."""
    from .detectors import KnotGrid

    with np.load(path) as data:
        bkg = MfrPoints(m=data["m"], r=data["r"])
        abundances = data["abundances"]
        sigma_t = float(data["sigma_t"])
        seed = int(data["seed"])
    knots = KnotGrid(abundances.shape[0])
    if not np.array_equal(knots.abundances, abundances):
        raise ValueError("stored abundances are not a midpoint knot grid")
    tgt = tuple(implant_mfr(bkg, a, sigma_t) for a in abundances)
    return MatchedPairSet(bkg=bkg, tgt=tgt, knots=knots,
                          seed=None if seed < 0 else seed), sigma_t
