"""Brute-force reference computations for checking the samplers.

Densities here are deliberately re-implemented rather than imported from
the sampler modules, so a transcription error on either side shows up as a
disagreement.  All normalising constants are relative to the uniform
measure on the circle or sphere: ``c * f*`` averages to 1 over uniform
points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps
from scipy.special import logsumexp

from .errors import InsufficientSamples, NotConverged, UnsupportedDistribution

KINDS = ("uniform", "bingham", "acg", "vmf", "fisher_bingham", "von_mises", "wrapped_cauchy")


@dataclass(frozen=True, eq=False)
class Dist:
    """Distribution descriptor: a kind name plus its parameters.

    ``von_mises`` and ``wrapped_cauchy`` live on the circle with mean
    direction angle ``mu`` (default 0); the others on any sphere.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedDistribution(self.kind)


def uniform() -> Dist:
    return Dist("uniform")


def bingham(a) -> Dist:
    return Dist("bingham", {"a": np.asarray(a, dtype=float)})


def acg(omega) -> Dist:
    return Dist("acg", {"omega": np.asarray(omega, dtype=float)})


def vmf(kappa, mu) -> Dist:
    return Dist("vmf", {"kappa": float(kappa), "mu": np.asarray(mu, dtype=float)})


def fisher_bingham(kappa, mu, a) -> Dist:
    return Dist("fisher_bingham", {"kappa": float(kappa), "mu": np.asarray(mu, dtype=float),
                                   "a": np.asarray(a, dtype=float)})


def von_mises(kappa, mu=0.0) -> Dist:
    return Dist("von_mises", {"kappa": float(kappa), "mu": float(mu)})


def wrapped_cauchy(rho, mu=0.0) -> Dist:
    return Dist("wrapped_cauchy", {"rho": float(rho), "mu": float(mu)})


def _quad(x, m):
    # x' M x, row by row
    return np.sum(x * (x @ m.T), axis=-1)


def log_density_unnorm(dist: Dist, x) -> np.ndarray:
    """Log of the unnormalised density at the point(s) ``x`` (last axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    p = dist.params
    k = dist.kind
    if k == "uniform":
        return np.zeros(x.shape[:-1])
    if k == "bingham":
        return -_quad(x, p["a"])
    if k == "acg":
        return -0.5 * x.shape[-1] * np.log(_quad(x, p["omega"]))
    if k == "vmf":
        return p["kappa"] * (x @ p["mu"])
    if k == "fisher_bingham":
        return p["kappa"] * (x @ p["mu"]) - _quad(x, p["a"])
    if x.shape[-1] != 2:
        raise UnsupportedDistribution(f"{k} is a circle distribution")
    cos_d = x[..., 0] * math.cos(p["mu"]) + x[..., 1] * math.sin(p["mu"])
    if k == "von_mises":
        return p["kappa"] * cos_d
    rho = p["rho"]
    return np.log1p(-rho * rho) - np.log(1 + rho * rho - 2 * rho * cos_d)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Quadrature rule against the uniform measure (weights sum to 1).

    ``kind`` is ``circle`` (equispaced angles), ``sphere2`` (Gauss-Legendre
    in cos(theta) times equispaced longitude) or ``segment`` (Gauss-Legendre
    in ``t`` on [-1, 1], placed on the meridian ``(sqrt(1-t^2), 0, t)``;
    only meaningful for densities symmetric about the third axis).
    """

    kind: str
    sizes: tuple

    def __post_init__(self):
        minimum = {"circle": (4096,), "sphere2": (64, 128), "segment": (64,)}
        if self.kind not in minimum:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if len(self.sizes) != len(minimum[self.kind]) or any(
            s < m for s, m in zip(self.sizes, minimum[self.kind])
        ):
            raise ValueError(f"{self.kind} grid needs sizes >= {minimum[self.kind]}")

    def refined(self) -> QuadratureGrid:
        return QuadratureGrid(self.kind, tuple(2 * s for s in self.sizes))

    def blocks(self, max_points: int = 1 << 20):
        """Yield ``(points, weights)`` blocks covering the grid."""
        if self.kind == "circle":
            n = self.sizes[0]
            th = 2 * np.pi * np.arange(n) / n
            yield np.column_stack([np.cos(th), np.sin(th)]), np.full(n, 1.0 / n)
            return
        t, wt = np.polynomial.legendre.leggauss(self.sizes[0])
        wt = wt / 2
        if self.kind == "segment":
            yield np.column_stack([np.sqrt(1 - t * t), np.zeros_like(t), t]), wt
            return
        n_phi = self.sizes[1]
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        cphi, sphi = np.cos(phi), np.sin(phi)
        rows = max(1, max_points // n_phi)
        for i in range(0, t.size, rows):
            tt = t[i:i + rows, None]
            s = np.sqrt(1 - tt * tt)
            pts = np.stack(np.broadcast_arrays(s * cphi, s * sphi, tt), axis=-1).reshape(-1, 3)
            w = np.repeat(wt[i:i + rows] / n_phi, n_phi)
            yield pts, w

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.sizes))


def circle_grid(n: int = 4096) -> QuadratureGrid:
    return QuadratureGrid("circle", (n,))


def sphere2_grid(n_t: int = 64, n_phi: int = 128) -> QuadratureGrid:
    return QuadratureGrid("sphere2", (n_t, n_phi))


def segment_grid(n: int = 64) -> QuadratureGrid:
    return QuadratureGrid("segment", (n,))


def _log_mean(dist: Dist, grid: QuadratureGrid) -> float:
    parts = [logsumexp(log_density_unnorm(dist, x), b=w) for x, w in grid.blocks()]
    return float(logsumexp(parts))


def log_quadrature_normalizer(dist: Dist, grid: QuadratureGrid | None = None, *,
                              rtol: float = 1e-8, max_doublings: int = 6) -> float:
    """Log of ``c = 1 / <f*>`` with the grid doubled until ``c`` is stable to ``rtol``."""
    if grid is None:
        grid = circle_grid() if dist.kind in ("von_mises", "wrapped_cauchy") else sphere2_grid()
    prev = -_log_mean(dist, grid)
    change = math.inf
    for _ in range(max_doublings):
        grid = grid.refined()
        cur = -_log_mean(dist, grid)
        change = abs(math.expm1(cur - prev))
        if change < rtol:
            return cur
        prev = cur
    raise NotConverged(f"normaliser still changing by {change:.2e} at grid {grid.sizes}")


def quadrature_normalizer(dist: Dist, grid: QuadratureGrid | None = None, **kw) -> float:
    """Normalising constant ``c`` with ``c * f*`` a density w.r.t. the uniform measure."""
    return math.exp(log_quadrature_normalizer(dist, grid, **kw))


def bessel_i0_series(x: float, terms: int = 20) -> float:
    """``I_0(x) = sum (x/2)^(2k) / (k!)^2``, truncated."""
    return sum((x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def mc_normalizer(dist: Dist, q: int, stream, n: int) -> tuple[float, float]:
    """Monte Carlo estimate of ``c`` from ``n`` uniform points on the sphere in R^q.

    Returns ``(c, standard_error)`` with a delta-method error.
    """
    u = stream.normal((n, q))
    u /= np.sqrt(np.sum(u * u, axis=1))[:, None]
    lf = log_density_unnorm(dist, u)
    top = np.max(lf)
    f = np.exp(lf - top)
    mean = f.mean()
    se_mean = f.std(ddof=1) / math.sqrt(n)
    c = math.exp(-top) / mean
    return c, c * se_mean / mean


# --- goodness of fit ---------------------------------------------------------

@dataclass(frozen=True)
class CircleBinning:
    n_bins: int = 64


@dataclass(frozen=True, eq=False)
class SphereBinning:
    """Product bins in ``(cos theta, phi)`` about the axes of ``frame``.

    ``frame`` columns are the x, y and polar axes.  With
    ``edges="quantile"`` the ``cos theta`` edges are placed at equal-mass
    quantiles of the hypothesised density, which keeps power for
    concentrated distributions.
    """

    n_t: int = 16
    n_phi: int = 16
    frame: np.ndarray = field(default_factory=lambda: np.eye(3))
    edges: str = "quantile"


_GL_SUB = 24


def _circle_masses(dist: Dist, n_bins: int) -> np.ndarray:
    g, gw = np.polynomial.legendre.leggauss(_GL_SUB)
    edges = 2 * np.pi * np.arange(n_bins + 1) / n_bins
    half = (edges[1:] - edges[:-1]) / 2
    th = (edges[:-1] + half)[:, None] + half[:, None] * g
    pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
    lf = log_density_unnorm(dist, pts)
    top = lf.max()
    return np.sum(np.exp(lf - top) * gw, axis=1) * half


def _t_quantile_edges(dist: Dist, frame, n_t: int) -> np.ndarray:
    panels, n_phi = 4096, 256
    g, gw = np.polynomial.legendre.leggauss(4)
    e = np.linspace(-1, 1, panels + 1)
    h = (e[1:] - e[:-1]) / 2
    t = ((e[:-1] + h)[:, None] + h[:, None] * g).ravel()
    wt = (h[:, None] * gw).ravel()
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    s = np.sqrt(1 - t * t)[:, None]
    local = np.stack(np.broadcast_arrays(s * np.cos(phi), s * np.sin(phi), t[:, None]), axis=-1)
    lf = log_density_unnorm(dist, local @ frame.T)
    top = lf.max()
    dens = np.exp(lf - top).mean(axis=1) * wt
    cdf = np.concatenate([[0.0], np.cumsum(dens.reshape(panels, 4).sum(axis=1))])
    cdf /= cdf[-1]
    edges = np.interp(np.linspace(0, 1, n_t + 1), cdf, e)
    edges[0], edges[-1] = -1.0, 1.0
    edges = np.maximum.accumulate(edges)
    return np.unique(edges)


def _sphere_masses(dist: Dist, b: SphereBinning):
    frame = np.asarray(b.frame, dtype=float)
    if b.edges == "quantile":
        t_edges = _t_quantile_edges(dist, frame, b.n_t)
    else:
        t_edges = np.linspace(-1, 1, b.n_t + 1)
    p_edges = 2 * np.pi * np.arange(b.n_phi + 1) / b.n_phi
    g, gw = np.polynomial.legendre.leggauss(_GL_SUB)
    ht = (t_edges[1:] - t_edges[:-1]) / 2
    hp = (p_edges[1:] - p_edges[:-1]) / 2
    t = (t_edges[:-1] + ht)[:, None] + ht[:, None] * g          # (nt, G)
    phi = (p_edges[:-1] + hp)[:, None] + hp[:, None] * g        # (np, G)
    s = np.sqrt(1 - t * t)
    # axes: t-bin, t-node, phi-bin, phi-node
    local = np.stack(np.broadcast_arrays(
        s[:, :, None, None] * np.cos(phi)[None, None],
        s[:, :, None, None] * np.sin(phi)[None, None],
        t[:, :, None, None] * np.ones_like(phi)[None, None]), axis=-1)
    lf = log_density_unnorm(dist, local @ frame.T)
    top = lf.max()
    w = (ht[:, None] * gw)[:, :, None, None] * (hp[:, None] * gw)[None, None]
    masses = np.sum(np.exp(lf - top) * w, axis=(1, 3))
    return masses.ravel(), t_edges, p_edges


def _merge_sparse(expected: np.ndarray, observed: np.ndarray, min_expected: float):
    groups_e, groups_o = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            groups_e.append(acc_e)
            groups_o.append(acc_o)
            acc_e = acc_o = 0.0
    if acc_e > 0 or acc_o > 0:
        if groups_e:
            groups_e[-1] += acc_e
            groups_o[-1] += acc_o
        else:
            groups_e.append(acc_e)
            groups_o.append(acc_o)
    return np.array(groups_e), np.array(groups_o)


def gof_chisq(samples, dist: Dist, binning=None, *, min_samples: int = 10_000,
              min_expected: float = 20.0) -> float:
    """Chi-square goodness-of-fit p-value of sample points against ``dist``.

    Circle samples (``n x 2``) are binned by angle, sphere samples
    (``n x 3``) by :class:`SphereBinning`.  Expected bin masses come from
    Gauss-Legendre quadrature of ``dist`` inside each bin; consecutive bins
    are merged until each group expects at least ``min_expected`` points.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n < min_samples:
        raise InsufficientSamples(f"need at least {min_samples} samples, got {n}")
    if x.shape[1] == 2:
        binning = binning or CircleBinning()
        masses = _circle_masses(dist, binning.n_bins)
        ang = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
        idx = np.minimum((ang / (2 * np.pi) * binning.n_bins).astype(int), binning.n_bins - 1)
        observed = np.bincount(idx, minlength=binning.n_bins)
    elif x.shape[1] == 3:
        binning = binning or SphereBinning()
        masses, t_edges, p_edges = _sphere_masses(dist, binning)
        local = x @ np.asarray(binning.frame, dtype=float)
        t = np.clip(local[:, 2], -1, 1)
        ang = np.mod(np.arctan2(local[:, 1], local[:, 0]), 2 * np.pi)
        it = np.clip(np.searchsorted(t_edges, t, side="right") - 1, 0, t_edges.size - 2)
        ip = np.clip(np.searchsorted(p_edges, ang, side="right") - 1, 0, p_edges.size - 2)
        observed = np.bincount(it * (p_edges.size - 1) + ip, minlength=masses.size)
    else:
        raise UnsupportedDistribution("gof_chisq supports points on S1 or S2 only")
    expected = n * masses / masses.sum()
    e, o = _merge_sparse(expected, observed, min_expected)
    if e.size < 2:
        raise InsufficientSamples("fewer than two bins after merging sparse bins")
    stat = float(np.sum((o - e) ** 2 / e))
    return float(sps.chi2.sf(stat, e.size - 1))
