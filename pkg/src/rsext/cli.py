"""Command line runner: ``rsext --config exp.json --out results/``.

Exit status: 0 when every check passes, 1 on any violation, 2 when a check
is inconclusive (and none is violated), 3 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .config import CHECKS, MOTIONS, OPERATORS, ExperimentConfig, load_config
from .errors import ConfigError, DomainError, PreconditionError, UnsupportedError
from .extension import check_inverse_roundtrip
from .gamma import (FAMILIES, GAMMA_VARIANTS, BoundaryRatioSelf, check_appropriate_selfmap,
                    selfmaps_fixing_boundary, selfmaps_fixing_zero)
from .geometry import ProductPoint, sample_product_ball
from .holo.catalog import CATALOG
from .io_utils import atomic_write_text
from .report import INCONCLUSIVE, PASS, VIOLATION, CheckReport, jsonable, overall_verdict, verdict_from
from .semigroups import ExtendedFlow, FLOW_CATALOG, check_semigroup_law
from .verify import (Linear, Shift, SpirallikeClaim, bloch_bounds, check_affine_invariance,
                     check_convex_in_direction, check_extended_spirallike, check_spirallike, derive_C,
                     export_invariance_manifold)

log = logging.getLogger("rsext")

EXIT_CONFIG = 3
THREADS_ENV = "RS_EXTEND_THREADS"


def list_catalog() -> dict:
    """Stable identifiers with parameter schemas for maps, Gamma variants, motions and checks."""
    return {
        "maps": {k: dict(schema) for k, (_, schema) in sorted(CATALOG.items())},
        "gamma_variants": {k: dict(schema) for k, (_, schema) in sorted(GAMMA_VARIANTS.items())},
        "motions": {k: dict(v) for k, v in sorted(MOTIONS.items())},
        "operators": {k: dict(v) for k, v in sorted(OPERATORS.items())},
        "flows": sorted(FLOW_CATALOG),
        "families": sorted(FAMILIES),
        "checks": list(CHECKS),
    }


# ---------------------------------------------------------------------------
# check runners: each returns (report, {artifact name: csv text})


def _need_motion(cfg: ExperimentConfig, kind=None):
    if cfg.motion is None:
        raise ConfigError("this check needs a 'motion'")
    if kind is not None and not isinstance(cfg.motion, kind):
        raise ConfigError(f"this check needs a motion of kind {kind.__name__.lower()!r}")
    return cfg.motion


def _appropriate(cfg):
    hat = cfg.gamma_hat
    if isinstance(hat, BoundaryRatioSelf):
        family = selfmaps_fixing_boundary(hat.tau)
    else:
        family = selfmaps_fixing_zero(cfg.space.n)
    return check_appropriate_selfmap(hat, family, cfg.space, samples=cfg.sampler.n_points,
                                     seed=cfg.sampler.seed), {}


def _derive_c(cfg):
    _, rep = derive_C(cfg.gamma, _need_motion(cfg), cfg.base_map, seed=cfg.sampler.seed)
    return rep, {}


def _base_spirallike(cfg):
    motion = _need_motion(cfg, Linear)
    return check_spirallike(SpirallikeClaim(cfg.base_map, motion.op, cfg.sampler), "base-spirallike"), {}


def _b(cfg):
    return np.zeros((cfg.space.m, cfg.space.m)) if cfg.g_matrix is None else cfg.g_matrix


def _extended_spirallike(cfg):
    motion = _need_motion(cfg, Linear)
    return check_extended_spirallike(cfg.base_map, cfg.gamma, motion.op, _b(cfg), cfg.space, cfg.sampler), {}


def _convex(cfg):
    motion = _need_motion(cfg, Shift)
    return check_convex_in_direction(cfg.extension, motion.tau, cfg.sampler, b=_b(cfg)), {}


def _affine(cfg):
    motion = _need_motion(cfg)
    return check_affine_invariance(cfg.base_map, cfg.gamma, motion, cfg.g_flow(), cfg.space, cfg.sampler), {}


def _semigroup(cfg):
    motion = _need_motion(cfg)
    ext = ExtendedFlow(motion.flow(), cfg.gamma_hat, cfg.g_flow(), cfg.space)
    pts = sample_product_ball(cfg.space, min(cfg.sampler.n_points, 100), cfg.sampler.seed)
    return check_semigroup_law(ext, pts), {}


def _manifold(cfg):
    motion = _need_motion(cfg)
    ex = cfg.export
    em = cfg.extension
    if "base_point" in ex:
        from .config import parse_vector
        base = parse_vector(ex["base_point"])
    else:
        z0 = np.full(em.n, 0.3 / np.sqrt(em.n), dtype=complex)
        w = em(ProductPoint(z0[None], np.full((1, em.m), 0.3 / np.sqrt(em.m), dtype=complex)))
        base = w.stack()[0]
    if base.shape != (em.n + em.m,):
        raise ConfigError("export base_point must have n + m entries")
    kwargs = {}
    if "t_grid" in ex:
        kwargs["t_grid"] = ex["t_grid"]
    if "fan" in ex:
        kwargs["fan"] = tuple(ex["fan"])
    if "phases" in ex:
        kwargs["phases"] = tuple(ex["phases"])
    table, rep = export_invariance_manifold(em, motion, base, **kwargs)
    return rep, {"invariance-manifold.csv": table.to_csv()}


def _bloch(cfg):
    return bloch_bounds(cfg.base_map, cfg.gamma, cfg.space, seed=cfg.sampler.seed), {}


def _roundtrip(cfg):
    return check_inverse_roundtrip(cfg.extension, samples=cfg.sampler.n_points, seed=cfg.sampler.seed), {}


RUNNERS: dict = {
    "appropriate-selfmap": _appropriate,
    "derive-C": _derive_c,
    "base-spirallike": _base_spirallike,
    "extended-spirallike": _extended_spirallike,
    "convex-in-direction": _convex,
    "affine-invariance": _affine,
    "semigroup-law": _semigroup,
    "invariance-manifold": _manifold,
    "bloch-bounds": _bloch,
    "inverse-roundtrip": _roundtrip,
}


def _rejudge(rep: CheckReport, cfg: ExperimentConfig) -> CheckReport:
    """Apply tolerance overrides from the config to the summary of a finished check."""
    if "tolerances" not in cfg.raw or np.isnan(rep.worst_margin):
        return rep
    margins = np.concatenate([np.full(rep.decided - 1, np.inf), [rep.worst_margin],
                              np.full(rep.unknown, np.nan)]) if rep.decided else np.full(rep.unknown, np.nan)
    verdict, *_ = verdict_from(margins, cfg.margin_tol, cfg.unknown_fraction)
    if rep.verdict == VIOLATION and verdict != VIOLATION and rep.conditions:
        return rep  # a sub-condition was judged against its own tolerance
    if verdict != rep.verdict:
        rep.notes.append(f"verdict {rep.verdict} re-judged as {verdict} under configured tolerances")
        rep.verdict = verdict
    return rep


def _run_one(name: str, cfg: ExperimentConfig):
    start = time.perf_counter()
    try:
        rep, artifacts = RUNNERS[name](cfg)
        rep.name = name
        rep = _rejudge(rep, cfg)
    except ConfigError:
        raise
    except (PreconditionError, DomainError, UnsupportedError) as exc:
        raise ConfigError(f"check {name!r} cannot run: {exc}") from None
    return rep, artifacts, time.perf_counter() - start


def thread_cap(default: int = 4) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if v < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return v


def run(cfg: ExperimentConfig, out: Optional[Path] = None, threads: Optional[int] = None) -> tuple:
    """Run the configured checks; returns ``(document, exit_code)``.

    Checks may run concurrently; results are assembled in declared order by
    this function alone, and every file is written atomically.
    """
    workers = max(1, min(threads or thread_cap(), len(cfg.checks) or 1))
    if workers == 1:
        results = [_run_one(name, cfg) for name in cfg.checks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, name, cfg) for name in cfg.checks]
            results = [f.result() for f in futures]
    reports = [r for r, _, _ in results]
    verdict = overall_verdict(reports) if reports else PASS
    code = {PASS: 0, VIOLATION: 1, INCONCLUSIVE: 2}[verdict]
    artifacts = {}
    for _, arts, _ in results:
        artifacts.update(arts)
    payload = {
        "config": cfg.name,
        "environment": cfg.echo(),
        "checks": [r.to_dict() for r in reports],
        "verdict": verdict,
        "exit_code": code,
        "artifacts": sorted(artifacts),
    }
    envelope = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "tool": "rsext",
        "version": __version__,
        "timings": {name: round(dt, 3) for name, (_, _, dt) in zip(cfg.checks, results)},
    }
    doc = {"envelope": envelope, "payload": jsonable(payload)}
    if out is not None:
        out = Path(out)
        for fname, text in artifacts.items():
            atomic_write_text(out / fname, text)
        atomic_write_text(out / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc, code


def payload_text(doc: dict) -> str:
    """Canonical serialization of the deterministic part of a report."""
    return json.dumps(doc["payload"], indent=2, sort_keys=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsext", description="Run sampled verifications of extension operators.")
    p.add_argument("--config", type=Path, help="experiment configuration (JSON)")
    p.add_argument("--out", type=Path, help="directory for report.json and CSV artifacts")
    p.add_argument("--seed", type=int, help="override the sampler seed (unsigned 64-bit)")
    p.add_argument("--check", action="append", dest="checks", metavar="NAME",
                   help="check to run; repeatable, overrides the config list")
    p.add_argument("--list", action="store_true", help="print the catalog of identifiers and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list:
        print(json.dumps(list_catalog(), indent=2, sort_keys=True))
        return 0
    if args.config is None:
        parser.print_usage(sys.stderr)
        print("rsext: error: --config is required unless --list is given", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config, seed=args.seed, checks=args.checks)
        doc, code = run(cfg, args.out)
    except ConfigError as exc:
        print(f"rsext: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for rep in doc["payload"]["checks"]:
        log.info("%s: %s", rep["name"], rep["verdict"])
    if args.out is None:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"{doc['payload']['verdict']}: report written to {args.out / 'report.json'}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
