"""Command line interface: ``dirsim sample | efficiency | tables``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import dataclass
from functools import partial
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import oracle
from .ar import AcceptStats, SampleBatch, count_accepts_sharded, sample_sharded
from .bingham import (AcgParams, BinghamParams, bingham_envelope, log_det_omega,
                      normal_cauchy_bound, sample_acg, sample_bingham, standardize)
from .errors import DirsimError
from .fisher import fb_collapsed_envelope, fisher_bingham_params, sample_fisher_bingham
from .matrix import (MatrixBinghamParams, matrix_bingham_envelope, mf_so3_params, sample_macg,
                     sample_matrix_bingham_balanced, sample_matrix_fisher_so3,
                     sample_uniform_sphere, sample_uniform_stiefel)
from .rng import GENERATOR_NAME, NORMAL_METHOD, RngStream

log = logging.getLogger("dirsim")

EXIT_PARAM = 2
EXIT_NUMERIC = 3
SHARD_SIZE = 50_000
MU_AUTO_NORMALIZE = 1e-6

DISTS = ("bingham", "acg", "vmf", "fisher-bingham", "macg", "matrix-bingham", "mf-so3",
         "uniform-sphere", "uniform-stiefel")
TABLE1_P = (1, 2, 3, 4, 5, 10, 50, 100)
TABLE2_ROWS = ((0, 0), (0, 10), (10, 10), (0, 100), (100, 100))


class ParamError(ValueError):
    pass


def build_id() -> str:
    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "dev"
    return f"dirsim-{pkg}/numpy-{np.__version__}/{GENERATOR_NAME}/{NORMAL_METHOD}"


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParamError(f"bad number list {text!r}") from exc


def read_matrix(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    except (OSError, ValueError) as exc:
        raise ParamError(f"cannot read matrix from {path}: {exc}") from exc
    m = np.array(rows, dtype=float)
    if m.ndim != 2:
        raise ParamError(f"{path}: rows have different lengths")
    return m


def _matrix_param(args, what="A") -> np.ndarray:
    if args.a_file and args.lam:
        raise ParamError("give either --a-file or --lambda, not both")
    if args.a_file:
        m = read_matrix(args.a_file)
    elif args.lam:
        m = np.diag(_floats(args.lam))
    else:
        raise ParamError(f"{args.dist} needs {what} via --lambda or --a-file")
    if m.shape[0] != m.shape[1]:
        raise ParamError(f"{what} must be square, got {m.shape}")
    return m


def _mu0(args, q=None) -> np.ndarray:
    if args.mu0:
        mu = np.array(_floats(args.mu0))
    elif q:
        mu = np.zeros(q)
        mu[-1] = 1.0
    else:
        raise ParamError("need --mu0 (or --q for the default last axis)")
    nrm = np.linalg.norm(mu)
    if abs(nrm - 1) > MU_AUTO_NORMALIZE:
        raise ParamError(f"--mu0 has norm {nrm:.8g}, expected a unit vector")
    if nrm != 1.0:
        warnings.warn(f"normalizing --mu0 (norm {nrm:.17g})", stacklevel=2)
        mu = mu / nrm
    return mu


@dataclass
class Plan:
    """A fully parsed sampling request."""

    dist: str
    params: dict
    draw: object
    bound: object = None
    envelope: object = None
    oracle_dist: object = None
    oracle_extra_log_m: float = 0.0


def _wrap_plain(fn):
    def draw(stream, n):
        return SampleBatch(fn(stream, n), AcceptStats(n, n))
    return draw


def make_plan(args) -> Plan:
    d = args.dist
    if d == "bingham":
        a = _matrix_param(args)
        bp = standardize(a)
        return Plan(d, {"a": a.tolist()}, partial(sample_bingham, bp), bp.bound,
                    bingham_envelope(bp.lambdas, bp.bound),
                    oracle_dist=oracle.bingham(np.diag(bp.lambdas)) if bp.q <= 3 else None,
                    oracle_extra_log_m=bp.bound.log_mstar - 0.5 * log_det_omega(bp.lambdas, bp.bound.b0))
    if d == "acg":
        om = _matrix_param(args, "Omega")
        ap = AcgParams.from_omega(om)
        return Plan(d, {"omega": om.tolist()}, _wrap_plain(partial(sample_acg, ap)))
    if d in ("vmf", "fisher-bingham"):
        if args.kappa is None:
            raise ParamError(f"{d} needs --kappa")
        if d == "vmf":
            q = args.q or (len(_floats(args.mu0)) if args.mu0 else None)
            mu = _mu0(args, q)
            a = np.zeros((mu.size, mu.size))
        else:
            a = _matrix_param(args)
            mu = _mu0(args, a.shape[0])
        fp = fisher_bingham_params(args.kappa, mu, a)
        bp, shift = fp.envelope
        extra = shift + bp.bound.log_mstar - 0.5 * log_det_omega(bp.lambdas, bp.bound.b0)
        params = {"kappa": fp.kappa, "mu0": mu.tolist()}
        if d == "fisher-bingham":
            params["a"] = a.tolist()
            params["aligned"] = fp.aligned
        od = oracle.fisher_bingham(fp.kappa, fp.mu0, fp.a) if fp.q <= 3 else None
        return Plan(d, params, partial(sample_fisher_bingham, fp), bp.bound,
                    fb_collapsed_envelope(fp),
                    oracle_dist=od, oracle_extra_log_m=extra)
    if d == "macg":
        om = _matrix_param(args, "Omega")
        r = _need_r(args)
        return Plan(d, {"omega": om.tolist(), "r": r},
                    _wrap_plain(lambda s, n: sample_macg(om, r, s, n)))
    if d == "matrix-bingham":
        a = _matrix_param(args)
        mp = MatrixBinghamParams.from_matrix(a, _need_r(args))
        return Plan(d, {"a": a.tolist(), "r": mp.r},
                    partial(sample_matrix_bingham_balanced, mp), mp.bound,
                    matrix_bingham_envelope(mp.bingham.lambdas, mp.r, mp.bound))
    if d == "mf-so3":
        if not args.f_file:
            raise ParamError("mf-so3 needs --f-file")
        f = read_matrix(args.f_file)
        if f.shape != (3, 3):
            raise ParamError("F must be 3 x 3")
        mf = mf_so3_params(f)
        return Plan(d, {"f": f.tolist()}, partial(sample_matrix_fisher_so3, mf), mf.bingham.bound,
                    bingham_envelope(mf.lambda4, mf.bingham.bound))
    if d == "uniform-sphere":
        q = _need_q(args)
        return Plan(d, {"q": q}, _wrap_plain(lambda s, n: sample_uniform_sphere(q, s, n)))
    if d == "uniform-stiefel":
        q, r = _need_q(args), _need_r(args)
        return Plan(d, {"q": q, "r": r},
                    _wrap_plain(lambda s, n: sample_uniform_stiefel(q, r, s, n)))
    raise ParamError(f"unknown distribution {d!r}")


def _need_q(args) -> int:
    if not args.q:
        raise ParamError(f"{args.dist} needs --q")
    return args.q


def _need_r(args) -> int:
    if not args.r:
        raise ParamError(f"{args.dist} needs --r")
    return args.r


def run_plan(plan: Plan, seed: int, stream_id: int, n: int, threads=None) -> SampleBatch:
    stream = RngStream(seed, stream_id)
    return sample_sharded(plan.draw, stream, n, SHARD_SIZE, threads)


def manifest(plan: Plan, args, batch: SampleBatch, wall: float | None) -> dict:
    m = {
        "distribution": plan.dist,
        "parameters": plan.params,
        "seed": args.seed,
        "stream_id": args.stream_id,
        "n": args.n,
        "shard_size": SHARD_SIZE,
        "b0": plan.bound.b0 if plan.bound else None,
        "log_mstar": plan.bound.log_mstar if plan.bound else None,
        "trials": batch.stats.trials,
        "accepts": batch.stats.accepts,
        "efficiency": batch.stats.efficiency,
        "build": build_id(),
    }
    if wall is not None:
        m["wall_time_s"] = wall
    return m


def format_csv(samples: np.ndarray) -> str:
    rows = samples.reshape(samples.shape[0], -1)
    return "".join(",".join(format(float(v), ".17g") for v in row) + "\n" for row in rows)


def write_outputs(path: Path, fmt: str, samples, man: dict, man_full: dict):
    if fmt == "csv":
        text = format_csv(samples)
    else:
        # wall time is left out so that reruns give byte-identical files
        text = json.dumps({"manifest": man, "samples": samples.tolist()}, indent=1) + "\n"
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(text)
    with open(str(path) + ".manifest.json", "w", newline="\n") as fh:
        json.dump(man_full, fh, indent=2)
        fh.write("\n")


def cmd_sample(args) -> int:
    plan = make_plan(args)
    t0 = time.perf_counter()
    batch = run_plan(plan, args.seed, args.stream_id, args.n, args.threads)
    wall = time.perf_counter() - t0
    man = manifest(plan, args, batch, None)
    full = manifest(plan, args, batch, wall)
    out = Path(args.out)
    write_outputs(out, args.format, batch.samples, man, full)
    log.info("wrote %d samples to %s (efficiency %.4f)", args.n, out, batch.stats.efficiency)
    return 0


def _binomial_ci(k: int, n: int, z: float = 1.959963984540054):
    # Wilson score interval
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return mid - half, mid + half


def measure(plan: Plan, seed: int, stream_id: int, trials: int, threads=None) -> AcceptStats:
    """Acceptance counts over exactly ``trials`` proposals."""
    if plan.envelope is None:
        return AcceptStats(trials, trials)
    return count_accepts_sharded(plan.envelope, RngStream(seed, stream_id), trials,
                                 threads=threads)


def predicted(plan: Plan):
    """Quadrature prediction of the acceptance rate, or None where unavailable."""
    if plan.envelope is None:
        return 1.0
    if plan.oracle_dist is None:
        return None
    log_c = oracle.log_quadrature_normalizer(plan.oracle_dist)
    return math.exp(-(log_c + plan.oracle_extra_log_m))


def cmd_efficiency(args) -> int:
    plan = make_plan(args)
    st = measure(plan, args.seed, args.stream_id, args.trials, args.threads)
    if plan.bound is not None:
        print(f"b0            {plan.bound.b0:.12g}")
        print(f"log M*        {plan.bound.log_mstar:.12g}")
    lo, hi = _binomial_ci(st.accepts, st.trials)
    print(f"trials        {st.trials}")
    print(f"accepts       {st.accepts}")
    print(f"efficiency    {st.efficiency:.6f}  95% CI [{lo:.6f}, {hi:.6f}]")
    if st.stage_efficiency is not None:
        s1, s2 = st.stage_efficiency
        print(f"stage ACG->Bingham     {s1:.6f}")
        print(f"stage Bingham->target  {s2:.6f}")
    pred = predicted(plan)
    if pred is not None:
        se = math.sqrt(pred * (1 - pred) / st.trials)
        agree = abs(pred - st.efficiency) <= max(3 * se, 1e-12)
        print(f"predicted     {pred:.6f}  (1/M from quadrature normaliser)")
        print(f"agreement     {'yes' if agree else 'NO'} (|diff| <= 3 SE)")
    return 0


def table1_rows():
    return [(p, normal_cauchy_bound(p)) for p in TABLE1_P]


def table2_rows(trials: int, seed: int, threads=None):
    rows = []
    for i, (l2, l3) in enumerate(TABLE2_ROWS):
        bp = BinghamParams.from_eigen((0.0, l2, l3))
        env = bingham_envelope(bp.lambdas, bp.bound)
        st = count_accepts_sharded(env, RngStream(seed, i), trials, threads=threads)
        rows.append((l2, l3, st))
    return rows


def cmd_tables(args) -> int:
    if args.which == 1:
        print(f"{'p':>4} {'M':>10} {'eff':>6}")
        for p, m in table1_rows():
            print(f"{p:>4} {m:>10.6f} {100 / m:>5.0f}%")
    else:
        print(f"{'l2':>5} {'l3':>5} {'trials':>9} {'M':>9} {'eff':>7}")
        for l2, l3, st in table2_rows(args.trials, args.seed, args.threads):
            print(f"{l2:>5g} {l3:>5g} {st.trials:>9d} {st.trials / st.accepts:>9.5f} "
                  f"{100 * st.efficiency:>6.1f}%")
    return 0


def _add_dist_flags(p):
    p.add_argument("--dist", required=True, choices=DISTS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--lambda", dest="lam", help="comma list: diagonal of A (or Omega)")
    p.add_argument("--a-file", help="CSV file with the q x q matrix A (or Omega)")
    p.add_argument("--f-file", help="CSV file with the 3 x 3 matrix F (mf-so3)")
    p.add_argument("--kappa", type=float)
    p.add_argument("--mu0", help="comma list, unit mean direction")
    p.add_argument("--q", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--threads", type=int, help="worker threads (DIRSIM_THREADS caps the default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirsim", description="Directional distribution sampling")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample", help="draw samples and write them with a manifest")
    _add_dist_flags(ps)
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--format", choices=("csv", "json"), default="csv")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_sample)

    pe = sub.add_parser("efficiency", help="measure acceptance rate (and predict it on S1/S2)")
    _add_dist_flags(pe)
    pe.add_argument("--trials", type=int, default=10**6)
    pe.set_defaults(func=cmd_efficiency)

    pt = sub.add_parser("tables", help="reproduce the efficiency tables")
    pt.add_argument("which", type=int, choices=(1, 2))
    pt.add_argument("--trials", type=int, default=10**6)
    pt.add_argument("--seed", type=int, default=2013)
    pt.add_argument("--threads", type=int)
    pt.set_defaults(func=cmd_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    if getattr(args, "n", 1) < 1 or getattr(args, "trials", 1) < 1:
        parser.error("--n and --trials must be >= 1")
    try:
        return args.func(args)
    except (ParamError, ValueError) as exc:
        print(f"dirsim: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (ArithmeticError, DirsimError) as exc:
        print(f"dirsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
