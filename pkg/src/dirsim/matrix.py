"""Matrix-variate samplers on Stiefel manifolds and SO(3).

* uniform vectors and frames,
* matrix angular central Gaussian (MACG),
* balanced matrix Bingham ``etr(-X'AX)`` with an MACG envelope,
* matrix Fisher on SO(3) through the unit-quaternion Bingham isomorphism.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ar import Envelope, SampleBatch, ar_sample
from .bingham import BinghamParams, EnvelopeBound, sample_bingham, solve_b0, standardize
from .errors import DegenerateDraw
from .numkern import SignedSvd3, chol_lower, signed_svd3, sym_inv_sqrt, symmetrize
from .rng import RngStream

_MAX_REDRAW = 100


def sample_uniform_sphere(q: int, stream: RngStream, n: int) -> np.ndarray:
    """Uniform unit vectors in R^q as the rows of an ``(n, q)`` array."""
    if q < 2:
        raise ValueError("q must be >= 2")
    u = stream.normal((n, q))
    nrm = np.linalg.norm(u, axis=1)
    while np.any(nrm == 0):
        bad = nrm == 0
        u[bad] = stream.normal((int(bad.sum()), q))
        nrm = np.linalg.norm(u, axis=1)
    return u / nrm[:, None]


def _orthonormalize(y: np.ndarray, stream: RngStream, redraw) -> np.ndarray:
    """``Y (Y'Y)^{-1/2}`` for a stack of q x r matrices, redrawing singular ones."""
    for _ in range(_MAX_REDRAW):
        gram = np.swapaxes(y, -1, -2) @ y
        w = np.linalg.eigvalsh(gram)
        bad = w[:, 0] <= 1e-12 * w[:, -1]
        if not np.any(bad):
            x = y @ sym_inv_sqrt(gram)
            # one polishing pass keeps X'X = I to ~1e-15 for ill-conditioned Y
            return x @ sym_inv_sqrt(np.swapaxes(x, -1, -2) @ x)
        y[bad] = redraw(stream, int(bad.sum()))
    raise DegenerateDraw("Gaussian matrix stayed numerically singular after redraws")


def sample_uniform_stiefel(q: int, r: int, stream: RngStream, n: int) -> np.ndarray:
    """Uniform q x r orthonormal frames, shape ``(n, q, r)``."""
    if not 1 <= r <= q:
        raise ValueError("need 1 <= r <= q")

    def gauss(s, m):
        return s.normal((m, q, r))

    return _orthonormalize(gauss(stream, n), stream, gauss)


def _macg_proposal(scale: np.ndarray, r: int):
    # scale: square root of the column covariance (y = scale @ z)
    q = scale.shape[0]

    def gauss(s, m):
        return scale @ s.normal((m, q, r))

    def draw(stream: RngStream, m: int) -> np.ndarray:
        return _orthonormalize(gauss(stream, m), stream, gauss)

    return draw


def sample_macg(omega, r: int, stream: RngStream, n: int) -> np.ndarray:
    """Matrix ACG frames: columns ``N(0, omega^{-1})``, then ``Y (Y'Y)^{-1/2}``."""
    om = symmetrize(omega)
    q = om.shape[0]
    if not 1 <= r <= q - 1:
        raise ValueError("need 1 <= r <= q - 1")
    chol_lower(om)
    low = chol_lower(np.linalg.inv(om))
    return _macg_proposal(low, r)(stream, n)


def macg_log_density_unnorm(omega, x) -> np.ndarray:
    """``-(q/2) log|X' Omega X|`` for a frame or stack of frames."""
    x = np.asarray(x, dtype=float)
    q = x.shape[-2]
    return -0.5 * q * np.linalg.slogdet(np.swapaxes(x, -1, -2) @ omega @ x)[1]


@dataclass(frozen=True, eq=False)
class MatrixBinghamParams:
    """Balanced matrix Bingham ``etr(-X'AX)`` on q x r frames."""

    bingham: BinghamParams
    r: int

    def __post_init__(self):
        q = self.bingham.q
        if not 1 <= self.r <= q:
            raise ValueError("need 1 <= r <= q")
        if self.r == q:
            raise ValueError(
                "r == q gives the uniform distribution on O(q); use sample_uniform_stiefel"
            )
        if self.r > q / 2:
            warnings.warn(
                f"r={self.r} > q/2; sampling the complementary {q - self.r}-frame with -A "
                "is usually more efficient",
                stacklevel=3,
            )

    @classmethod
    def from_matrix(cls, a, r: int) -> MatrixBinghamParams:
        return cls(standardize(a), int(r))

    @property
    def a(self) -> np.ndarray:
        return self.bingham.a - self.bingham.shift * np.eye(self.q)

    @property
    def q(self) -> int:
        return self.bingham.q

    @cached_property
    def bound(self) -> EnvelopeBound:
        """Same ``b0`` as the vector case; ``log_mstar`` is per column."""
        return solve_b0(self.bingham.lambdas)


def matrix_bingham_envelope(lambdas, r: int, bound: EnvelopeBound) -> Envelope:
    lam = np.asarray(lambdas, dtype=float)
    w = 1.0 + 2.0 * lam / bound.b0
    half_q = lam.size / 2

    def log_target(z):
        return -np.einsum("nir,i->n", z * z, lam)

    def log_envelope(z):
        gram = np.swapaxes(z, -1, -2) @ (w[:, None] * z)
        return -half_q * np.linalg.slogdet(gram)[1]

    return Envelope(
        log_target=log_target,
        log_envelope=log_envelope,
        log_mstar=r * bound.log_mstar,
        proposal=_macg_proposal(np.diag(1.0 / np.sqrt(w)), r),
    )


def sample_matrix_bingham_balanced(mp: MatrixBinghamParams, stream: RngStream, n: int) -> SampleBatch:
    """Exact balanced matrix Bingham frames by rejection from MACG(Omega(b0)).

    Output has shape ``(n, q, r)``.
    """
    env = matrix_bingham_envelope(mp.bingham.lambdas, mp.r, mp.bound)
    batch = ar_sample(env, stream, n)
    return SampleBatch(mp.bingham.basis @ batch.samples, batch.stats)


def quat_to_rotation(x) -> np.ndarray:
    """Rotation matrix of a unit quaternion ``(x1, x2, x3, x4)``, x1 the scalar part.

    Quadratic in ``x`` so ``x`` and ``-x`` give the same matrix.  Accepts a
    single quaternion or an ``(n, 4)`` array.
    """
    x = np.asarray(x, dtype=float)
    x1, x2, x3, x4 = np.moveaxis(x, -1, 0)
    m = np.empty(x.shape[:-1] + (3, 3))
    m[..., 0, 0] = x1 * x1 + x2 * x2 - x3 * x3 - x4 * x4
    m[..., 0, 1] = -2 * (x1 * x4 - x2 * x3)
    m[..., 0, 2] = 2 * (x1 * x3 + x2 * x4)
    m[..., 1, 0] = 2 * (x1 * x4 + x2 * x3)
    m[..., 1, 1] = x1 * x1 + x3 * x3 - x2 * x2 - x4 * x4
    m[..., 1, 2] = -2 * (x1 * x2 - x3 * x4)
    m[..., 2, 0] = -2 * (x1 * x3 - x2 * x4)
    m[..., 2, 1] = 2 * (x1 * x2 + x3 * x4)
    m[..., 2, 2] = x1 * x1 + x4 * x4 - x2 * x2 - x3 * x3
    return m


@dataclass(frozen=True, eq=False)
class MatrixFisherParams3:
    f: np.ndarray
    svd: SignedSvd3
    lambda4: np.ndarray

    @cached_property
    def bingham(self) -> BinghamParams:
        return BinghamParams.from_eigen(self.lambda4)


def mf_so3_params(f) -> MatrixFisherParams3:
    """Quaternion Bingham eigenvalues for the matrix Fisher ``etr(F'X)`` on SO(3)."""
    f = np.asarray(f, dtype=float)
    svd = signed_svd3(f)
    d1, d2, d3 = svd.delta
    lam = np.array([0.0, 2 * (d2 + d3), 2 * (d1 + d3), 2 * (d1 + d2)])
    # delta1 >= delta2 >= |delta3| makes this nondecreasing and >= 0 up to rounding
    lam = np.maximum.accumulate(np.maximum(lam, 0.0))
    return MatrixFisherParams3(f, svd, lam)


def sample_matrix_fisher_so3(mf: MatrixFisherParams3, stream: RngStream, n: int) -> SampleBatch:
    """Matrix Fisher rotations ``U M(x) V'`` with ``x`` quaternion Bingham. Shape ``(n, 3, 3)``."""
    batch = sample_bingham(mf.bingham, stream, n)
    rot = mf.svd.u @ quat_to_rotation(batch.samples) @ mf.svd.v.T
    return SampleBatch(rot, batch.stats)
