"""von Mises-Fisher and Fisher-Bingham sampling through a Bingham envelope.

``(1 - x'mu)^2 >= 0`` gives ``exp(kappa x'mu) <= exp(kappa - (kappa/2) x'(I - mu mu')x)``
on the sphere, so a Fisher-Bingham density with matrix ``A`` is dominated
by a Bingham density with matrix ``A1 = A + (kappa/2)(I - mu mu')``.  That
Bingham density is in turn dominated by the ACG envelope, and the two
bounds are applied as one acceptance test with a single uniform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ar import Envelope, SampleBatch, ar_sample
from .bingham import BinghamParams, acg_proposal, standardize
from .rng import RngStream

ALIGN_TOL = 1e-8
UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FisherBinghamParams:
    """Fisher-Bingham parameters ``exp(kappa x'mu0 - x'Ax)``.

    Use :func:`fisher_bingham_params` to build one; it standardises ``a``
    and derives the envelope matrix ``a1``.
    """

    kappa: float
    mu0: np.ndarray
    a: np.ndarray
    a1: np.ndarray
    aligned: bool

    @property
    def q(self) -> int:
        return self.mu0.size

    @cached_property
    def envelope(self) -> tuple[BinghamParams, float]:
        return fb_envelope(self)


def _is_aligned(kappa: float, mu0: np.ndarray, a: np.ndarray) -> bool:
    lam_mu = float(mu0 @ a @ mu0)
    scale = 1.0 + np.max(np.abs(a))
    if np.linalg.norm(a @ mu0 - lam_mu * mu0) > ALIGN_TOL * scale:
        return False
    # With mu0 an eigenvector, the density along any great circle through
    # mu0 is kappa*t - (lam_mu - lam_min)*t^2 + const, maximised at t = 1
    # iff kappa >= 2 (lam_mu - lam_min).
    lam_min = float(np.linalg.eigvalsh(a)[0])
    return bool(kappa >= 2.0 * (lam_mu - lam_min) - ALIGN_TOL * scale)


def fisher_bingham_params(kappa: float, mu0, a=None) -> FisherBinghamParams:
    """Validate and standardise Fisher-Bingham parameters.

    ``a`` defaults to zero (von Mises-Fisher).  It is shifted so its
    smallest eigenvalue is zero, which only changes the normaliser.
    """
    kappa = float(kappa)
    if not (kappa >= 0 and math.isfinite(kappa)):
        raise ValueError("kappa must be finite and >= 0")
    mu = np.asarray(mu0, dtype=float).ravel()
    if mu.size < 2:
        raise ValueError("mu0 must have at least two coordinates")
    if abs(np.linalg.norm(mu) - 1.0) > UNIT_TOL:
        raise ValueError("mu0 must be a unit vector")
    q = mu.size
    if a is None:
        a = np.zeros((q, q))
    bp = standardize(a)
    if bp.q != q:
        raise ValueError("A and mu0 dimensions differ")
    a_std = bp.a - bp.shift * np.eye(q)
    a1 = a_std + 0.5 * kappa * (np.eye(q) - np.outer(mu, mu))
    return FisherBinghamParams(kappa, mu, a_std, a1, _is_aligned(kappa, mu, a_std))


def fb_envelope(fp: FisherBinghamParams) -> tuple[BinghamParams, float]:
    """Bingham envelope of a Fisher-Bingham density.

    Returns the standardised Bingham parameters of ``A1`` and the log shift
    ``c`` with ``kappa x'mu0 - x'Ax <= c - x'A1'x`` on the sphere, where
    ``A1'`` is ``A1`` minus its smallest eigenvalue, so ``c = kappa - lambda_min(A1)``.
    """
    bp = standardize(fp.a1)
    return bp, fp.kappa - bp.shift


def log_fb_unnorm(fp: FisherBinghamParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return fp.kappa * (x @ fp.mu0) - np.einsum("...i,ij,...j->...", x, fp.a, x)


def fb_acceptance_log_ratio(fp: FisherBinghamParams, x) -> np.ndarray:
    """Log acceptance probability of the collapsed test at points ``x``."""
    return fb_collapsed_envelope(fp).log_ratio(np.asarray(x, dtype=float) @ fp.envelope[0].basis)


def fb_collapsed_envelope(fp: FisherBinghamParams) -> Envelope:
    """ACG proposal in the eigenbasis of ``A1`` with the chained bound as one test."""
    bp, shift = fp.envelope
    bound = bp.bound
    lam = bp.lambdas
    w = 1.0 + 2.0 * lam / bound.b0
    half_q = bp.q / 2
    # work in the eigenbasis of A1: rotate the target's parameters once
    mu_z = bp.basis.T @ fp.mu0
    a_z = bp.basis.T @ fp.a @ bp.basis
    a_z = 0.5 * (a_z + a_z.T)
    kappa = fp.kappa

    def log_target(z):
        return kappa * (z @ mu_z) - np.einsum("ni,ij,nj->n", z, a_z, z)

    def log_stage(z):
        # ACG -> Bingham(A1') part of the ratio
        return -((z * z) @ lam) + half_q * np.log((z * z) @ w) - bound.log_mstar

    return Envelope(
        log_target=log_target,
        log_envelope=lambda z: -half_q * np.log((z * z) @ w),
        log_mstar=shift + bound.log_mstar,
        proposal=acg_proposal(np.diag(1.0 / np.sqrt(w))),
        log_stage=log_stage,
    )


def sample_fisher_bingham(fp: FisherBinghamParams, stream: RngStream, n: int) -> SampleBatch:
    """Exact Fisher-Bingham draws, one uniform per trial.

    ``stats.stage_efficiency`` reports the ACG-to-Bingham stage rate and the
    Bingham-to-Fisher-Bingham rate separately.
    """
    batch = ar_sample(fb_collapsed_envelope(fp), stream, n)
    return SampleBatch(batch.samples @ fp.envelope[0].basis.T, batch.stats)


def sample_vmf(kappa: float, mu0, stream: RngStream, n: int) -> SampleBatch:
    """von Mises-Fisher draws on the sphere of ``len(mu0)`` coordinates."""
    return sample_fisher_bingham(fisher_bingham_params(kappa, mu0), stream, n)
