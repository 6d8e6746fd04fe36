"""Bingham sampling on the sphere with an angular central Gaussian envelope.

The Bingham density on the unit sphere in R^q is proportional to
``exp(-x' A x)``.  Shifting ``A`` by a multiple of the identity leaves the
distribution unchanged, so parameters are stored with the smallest
eigenvalue moved to exactly zero.  Proposals come from ACG(Omega) with
``Omega = I + 2A/b``; for the optimal ``b`` the acceptance rate never
drops much below the multivariate normal / Cauchy limit of the same
dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .ar import Envelope, SampleBatch, ar_sample
from .errors import ConvergenceFailure
from .numkern import chol_lower, sym_eigen, symmetrize
from .rng import RngStream

B0_EPS = 1e-12
B0_MAXITER = 200
B0_RESID_TOL = 1e-10


class EnvelopeBound(NamedTuple):
    q: int
    b0: float
    log_mstar: float

    @property
    def u0(self) -> float:
        """Tangency point of the exponential bound."""
        return (self.q - self.b0) / 2

    @property
    def mstar(self) -> float:
        return math.exp(self.log_mstar)


@dataclass(frozen=True, eq=False)
class BinghamParams:
    """Standardised Bingham parameters.

    ``lambdas`` are the eigenvalues of ``a`` shifted so the smallest is 0,
    ``basis`` the matching orthonormal eigenvectors (columns) and
    ``shift`` the amount subtracted, so ``a == basis @ diag(lambdas + shift) @ basis.T``.
    """

    a: np.ndarray
    lambdas: np.ndarray
    basis: np.ndarray
    shift: float = 0.0
    _check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self._check:
            lam = np.asarray(self.lambdas, dtype=float)
            if lam.ndim != 1 or lam.size < 2:
                raise ValueError("need at least two eigenvalues")
            if lam[0] != 0.0 or np.any(np.diff(lam) < 0):
                raise ValueError("lambdas must be ascending with lambdas[0] == 0")

    @classmethod
    def from_eigen(cls, lambdas, basis=None) -> BinghamParams:
        """Build parameters directly from standardised eigenvalues and a basis."""
        lam = np.asarray(lambdas, dtype=float)
        q = lam.size
        v = np.eye(q) if basis is None else np.asarray(basis, dtype=float)
        if v.shape != (q, q) or np.max(np.abs(v.T @ v - np.eye(q))) > 1e-10:
            raise ValueError("basis must be a q x q orthogonal matrix")
        return cls(a=(v * lam) @ v.T, lambdas=lam, basis=v)

    @property
    def q(self) -> int:
        return self.lambdas.size

    @cached_property
    def bound(self) -> EnvelopeBound:
        return solve_b0(self.lambdas)

    @property
    def is_uniform(self) -> bool:
        return not np.any(self.lambdas)


def standardize(a_raw) -> BinghamParams:
    """Diagonalise ``a_raw`` and shift its eigenvalues so the smallest is 0."""
    a = symmetrize(a_raw)
    if a.ndim != 2 or a.shape[0] < 2:
        raise ValueError("A must be q x q with q >= 2")
    w, v = sym_eigen(a)
    lam = w - w[0]
    lam[0] = 0.0
    return BinghamParams(a=a, lambdas=lam, basis=v, shift=float(w[0]))


def log_mstar(q: int, b: float) -> float:
    """Log of the starred bound constant ``exp(-(q-b)/2) (q/b)^(q/2)``."""
    return -(q - b) / 2 + (q / 2) * math.log(q / b)


def log_det_omega(lambdas, b: float) -> float:
    return float(np.sum(np.log1p(2.0 * np.asarray(lambdas, dtype=float) / b)))


def log_bound_profile(lambdas, b: float) -> float:
    """``log M(b) - log c_Bing``: the part of the log bound that depends on ``b``."""
    lam = np.asarray(lambdas, dtype=float)
    return log_mstar(lam.size, b) - 0.5 * log_det_omega(lam, b)


def solve_b0(lambdas) -> EnvelopeBound:
    """Optimal ACG tuning constant for standardised eigenvalues.

    Solves ``sum(1 / (b + 2*lambda_i)) == 1`` on ``(1e-12, q]`` by Newton's
    method safeguarded with bisection.  The left side decreases in ``b``,
    blows up as ``b -> 0`` because ``lambda_1 == 0`` and is at most 1 at
    ``b == q``.
    """
    lam = np.asarray(lambdas, dtype=float)
    q = lam.size
    if q < 2 or lam[0] != 0.0 or np.any(lam < 0):
        raise ValueError("lambdas must be standardised (smallest exactly 0)")
    two_lam = 2.0 * lam

    def resid(b):
        return float(np.sum(1.0 / (b + two_lam))) - 1.0

    lo, hi = B0_EPS, float(q)
    b = hi
    r = resid(b)
    for _ in range(B0_MAXITER):
        if abs(r) <= 1e-14:
            break
        if r > 0:
            lo = b
        else:
            hi = b
        deriv = -float(np.sum(1.0 / (b + two_lam) ** 2))
        step = b - r / deriv
        b_new = step if lo < step < hi else 0.5 * (lo + hi)
        if b_new == b or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        b = b_new
        r = resid(b)
    if abs(r) > B0_RESID_TOL:
        raise ConvergenceFailure(f"b0 solver stalled with residual {r:.3e}")
    return EnvelopeBound(q=q, b0=b, log_mstar=log_mstar(q, b))


@dataclass(frozen=True, eq=False)
class AcgParams:
    """ACG(omega) parameters with the Cholesky factor of ``omega^{-1}``."""

    omega: np.ndarray
    chol_of_inverse: np.ndarray

    @classmethod
    def from_omega(cls, omega) -> AcgParams:
        om = symmetrize(omega)
        chol_lower(om)  # positive definiteness
        return cls(om, chol_lower(np.linalg.inv(om)))

    @property
    def q(self) -> int:
        return self.omega.shape[0]

    @property
    def log_c(self) -> float:
        """Log normalising constant ``0.5 log|omega|`` w.r.t. the uniform measure."""
        return 0.5 * float(np.linalg.slogdet(self.omega)[1])


def acg_from_bingham(bp: BinghamParams, b: float) -> AcgParams:
    """ACG envelope ``Omega = I + 2A/b`` for standardised ``A``."""
    if not b > 0:
        raise ValueError("b must be positive")
    w = 1.0 + 2.0 * bp.lambdas / b
    v = bp.basis
    omega = (v * w) @ v.T
    # factor from the eigenbasis: Omega^{-1} = (V W^{-1/2})(V W^{-1/2})'
    _, r = np.linalg.qr((v / np.sqrt(w)).T)
    r = r * np.where(np.diagonal(r) < 0, -1.0, 1.0)[:, None]
    return AcgParams(0.5 * (omega + omega.T), r.T)


def acg_proposal(scale_t: np.ndarray):
    """Proposal ``(stream, m) -> m`` ACG points with ``y = z @ scale_t``.

    ``scale_t`` is the transpose of a square root of the Gaussian covariance.
    """
    q = scale_t.shape[0]

    def draw(stream: RngStream, m: int) -> np.ndarray:
        y = stream.normal((m, q)) @ scale_t
        nrm = np.linalg.norm(y, axis=1)
        while np.any(nrm == 0):  # probability zero; redraw just those rows
            bad = nrm == 0
            y[bad] = stream.normal((int(bad.sum()), q)) @ scale_t
            nrm = np.linalg.norm(y, axis=1)
        return y / nrm[:, None]

    return draw


def sample_acg(ap: AcgParams, stream: RngStream, n: int) -> np.ndarray:
    """``n`` draws from ACG(omega): normalised ``N(0, omega^{-1})`` vectors."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return acg_proposal(ap.chol_of_inverse.T)(stream, n)


def bingham_envelope(lambdas, bound: EnvelopeBound) -> Envelope:
    """Envelope in the eigenbasis, where ``A`` and ``Omega`` are diagonal."""
    lam = np.asarray(lambdas, dtype=float)
    w = 1.0 + 2.0 * lam / bound.b0
    half_q = lam.size / 2

    return Envelope(
        log_target=lambda z: -((z * z) @ lam),
        log_envelope=lambda z: -half_q * np.log((z * z) @ w),
        log_mstar=bound.log_mstar,
        proposal=acg_proposal(np.diag(1.0 / np.sqrt(w))),
    )


def sample_bingham(bp: BinghamParams, stream: RngStream, n: int) -> SampleBatch:
    """Exact Bingham(A) draws by acceptance-rejection from ACG(Omega(b0)).

    Returns the samples as rows of an ``(n, q)`` array together with the
    trial/accept counts.
    """
    batch = ar_sample(bingham_envelope(bp.lambdas, bp.bound), stream, n)
    return SampleBatch(batch.samples @ bp.basis.T, batch.stats)


def normal_cauchy_bound(p: int) -> float:
    """Optimal bound M for a N_p target under a multivariate Cauchy envelope."""
    if p < 1:
        raise ValueError("p must be >= 1")
    q = p + 1
    log_m = 0.5 * math.log(2 * math.pi * math.e) + (q / 2) * math.log(q / (2 * math.e)) - gammaln(q / 2)
    return math.exp(log_m)


def predicted_efficiency(bp: BinghamParams, cbing: float) -> float:
    """Theoretical acceptance rate ``1/M(b0)`` given the Bingham normaliser.

    ``cbing`` is the normalising constant relative to the uniform measure
    on the sphere (so ``cbing * exp(-x'Ax)`` averages to 1 over uniform x).
    """
    if not cbing > 0:
        raise ValueError("cbing must be positive")
    bound = bp.bound
    log_m = math.log(cbing) + bound.log_mstar - 0.5 * log_det_omega(bp.lambdas, bound.b0)
    return math.exp(-log_m)
