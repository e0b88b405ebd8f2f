"""Experiment configurations: JSON parsing, schema validation and object construction."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema
import numpy as np

from .errors import ConfigError, DomainError, PreconditionError, UnsupportedError
from .extension import ExtendedMap, classic, extend
from .gamma import GAMMA_VARIANTS, GammaSpec, JacobianPower, RatioPower, gamma_from_dict
from .geometry import Norm, ProfileSpec, SpacePair
from .holo.catalog import CATALOG, ball_map, catalog_map
from .holo.maps import HoloMap, compose, diagonal
from .linalg import LinearOperatorSpec
from .report import DEFAULT_TOL, UNKNOWN_FRACTION
from .semigroups import Flow, IdentityFlow, LinearFlow
from .verify import Affine, Linear, Sampler, Shift, default_t_grid

CHECKS = ("appropriate-selfmap", "derive-C", "base-spirallike", "extended-spirallike",
          "convex-in-direction", "affine-invariance", "semigroup-law", "invariance-manifold",
          "bloch-bounds", "inverse-roundtrip")

MOTIONS = {
    "linear": {"A": "n x n matrix, row-major [[re, im], ...] entries"},
    "shift": {"tau": "vector of length n"},
    "affine": {"A": "n x n matrix", "lam": "real >= 0", "tau": "vector of length n"},
}

OPERATORS = {
    "RS": {"param": "unused; Gamma = f'(x)^(1/2)"},
    "GKK": {"param": "alpha in [0, 1/2]"},
    "PS": {"param": "unused; Gamma = det J_f(x)^(1/(n+1))"},
    "GK": {"param": "beta in [0, 1]"},
}


def load_schema() -> dict:
    text = resources.files("rsext").joinpath("config_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def parse_vector(v) -> np.ndarray:
    return np.array([parse_complex(e) for e in v], dtype=complex)


def parse_matrix(rows) -> np.ndarray:
    mat = np.array([[parse_complex(e) for e in row] for row in rows], dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {mat.shape}")
    return mat


def encode_matrix(m) -> list:
    """Row-major [[re, im], ...] form used in configs and reports."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _norm(v) -> Norm:
    return Norm(np.inf if v == "inf" else float(v))


def build_map(d: dict, n: int) -> HoloMap:
    keys = [k for k in ("id", "compose", "diagonal", "matrix") if k in d]
    if len(keys) != 1:
        raise ConfigError("a map needs exactly one of 'id', 'compose', 'diagonal', 'matrix'")
    kind = keys[0]
    if kind == "id":
        if d["id"] not in CATALOG:
            raise ConfigError(f"unknown catalog map {d['id']!r}")
        params = dict(d.get("params", {}))
        if d["id"] == "identity":
            params.setdefault("n", n)
        try:
            return catalog_map(d["id"], **params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {d['id']!r}: {exc}") from None
    if kind == "compose":
        # listed outermost first: compose([f, g]) = f o g
        return compose(*[build_map(p, n) for p in d["compose"]])
    if kind == "matrix":
        return ball_map(parse_matrix(d["matrix"]))
    return diagonal(*[build_map(p, 1) for p in d["diagonal"]])


def build_gamma(d: dict) -> GammaSpec:
    if d["kind"] not in GAMMA_VARIANTS:
        raise ConfigError(f"unknown gamma variant {d['kind']!r}")
    dd = dict(d)
    if "tau" in dd:
        dd["tau"] = [[z.real, z.imag] for z in parse_vector(dd["tau"])]
    for key, needed in (("jacobian-power", "alpha"), ("ratio-power", "beta")):
        if dd["kind"] == key and needed not in dd:
            raise ConfigError(f"gamma variant {key!r} needs {needed!r}")
    return gamma_from_dict(dd)


@dataclass(eq=False)
class ExperimentConfig:
    """A validated experiment, with all objects built."""

    name: str
    space: SpacePair
    base_map: HoloMap
    gamma: GammaSpec
    gamma_hat: GammaSpec
    checks: tuple
    sampler: Sampler
    motion: Optional[Union[Linear, Shift, Affine]] = None
    g_matrix: Optional[np.ndarray] = None
    margin_tol: float = DEFAULT_TOL
    unknown_fraction: float = UNKNOWN_FRACTION
    export: dict = field(default_factory=dict)
    operator: Optional[dict] = None
    raw: dict = field(default_factory=dict)

    @property
    def extension(self) -> ExtendedMap:
        if self.operator is not None:
            return classic(self.operator["kind"], self.base_map, self.operator.get("param"), self.space.m)
        return extend(self.gamma, self.base_map, self.space)

    def g_flow(self) -> Flow:
        if self.g_matrix is None:
            return IdentityFlow(self.space.m)
        return LinearFlow(LinearOperatorSpec(self.g_matrix))

    def echo(self) -> dict:
        return {"seed": self.sampler.seed, "tolerances": {"margin": self.margin_tol,
                                                          "unknown_fraction": self.unknown_fraction},
                "sampler": self.sampler.describe(), "checks": list(self.checks)}


def _t_grid(spec) -> tuple:
    if spec is None:
        return tuple(default_t_grid())
    if isinstance(spec, list):
        return tuple(float(t) for t in spec)
    return tuple(default_t_grid(float(spec.get("min", 0.01)), float(spec["max"]), int(spec.get("count", 25))))


def _operator_gamma(op: dict, dim: int) -> GammaSpec:
    kind = op["kind"]
    param = op.get("param")
    if kind == "RS":
        return JacobianPower(0.5)
    if kind == "GKK":
        alpha = 0.5 if param is None else float(param)
        if not 0 <= alpha <= 0.5:
            raise ConfigError(f"GKK parameter alpha must lie in [0, 1/2], got {alpha}")
        return JacobianPower(alpha)
    if kind == "PS":
        return JacobianPower(1.0 / (dim + 1))
    beta = 1.0 if param is None else float(param)
    if not 0 <= beta <= 1:
        raise ConfigError(f"GK parameter beta must lie in [0, 1], got {beta}")
    return RatioPower(beta)


def build_config(raw: dict, seed: Optional[int] = None, checks=None) -> ExperimentConfig:
    """Validate ``raw`` against the schema and construct all objects; raises ConfigError."""
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None
    try:
        return _build(raw, seed, checks)
    except ConfigError:
        raise
    except (PreconditionError, DomainError, UnsupportedError, ValueError, KeyError) as exc:
        raise ConfigError(f"config rejected: {exc}") from None


def _build(raw: dict, seed, checks) -> ExperimentConfig:
    sp = raw.get("space", {})
    n, m = int(sp.get("n", 1)), int(sp.get("m", 1))
    profile = ProfileSpec(float(sp.get("q", 2.0)), float(sp.get("r", 2.0)))
    profile.validate()
    space = SpacePair(n, m, profile, _norm(sp.get("x_norm", 2.0)), _norm(sp.get("y_norm", 2.0)))
    base = build_map(raw["base_map"], n)
    if base.dim != n:
        raise ConfigError(f"base map has dimension {base.dim}, space has n = {n}")

    operator = raw.get("operator")
    if operator is not None:
        if "gamma" in raw:
            raise ConfigError("give either 'operator' or 'gamma', not both")
        if (profile.q, profile.r) != (2.0, 2.0):
            raise ConfigError("classical operators live on the Euclidean product ball (q = r = 2)")
        gamma = _operator_gamma(operator, n)
    elif "gamma" in raw:
        gamma = build_gamma(raw["gamma"])
    else:
        raise ConfigError("config needs 'gamma' or 'operator'")
    gamma_hat = build_gamma(raw["gamma_hat"]) if "gamma_hat" in raw else gamma

    motion = None
    if "motion" in raw:
        md = raw["motion"]
        kind = md["kind"]
        if kind in ("linear", "affine"):
            if "A" not in md:
                raise ConfigError(f"motion {kind!r} needs 'A'")
            a = LinearOperatorSpec(parse_matrix(md["A"]))
            if a.dim != n:
                raise ConfigError(f"motion matrix has size {a.dim}, space has n = {n}")
            if not a.accretive():
                raise ConfigError(f"motion matrix is not accretive (spectral margin {a.margin:.3g})")
        if kind == "linear":
            motion = Linear(a)
        elif kind == "shift":
            tau = parse_vector(md.get("tau", [1.0]))
            if len(tau) != n:
                raise ConfigError("shift direction has the wrong length")
            motion = Shift(tuple(tau))
        else:
            tau = parse_vector(md.get("tau", [1.0]))
            motion = Affine(a, float(md.get("lam", 0.0)), tuple(tau))

    g_matrix = None
    if raw.get("G", {}).get("kind") == "linear":
        if "B" not in raw["G"]:
            raise ConfigError("G of kind 'linear' needs 'B'")
        g_matrix = parse_matrix(raw["G"]["B"])
        if g_matrix.shape[0] != m:
            raise ConfigError(f"G matrix has size {g_matrix.shape[0]}, space has m = {m}")
        if not LinearOperatorSpec(g_matrix).accretive():
            raise ConfigError("G matrix is not accretive")

    smp = raw.get("sampler", {})
    sampler = Sampler(int(smp.get("n_points", 1000)),
                      int(smp.get("seed", 0) if seed is None else seed),
                      None if "radii" not in smp else tuple(float(r) for r in smp["radii"]),
                      _t_grid(smp.get("t_grid")))
    tol = raw.get("tolerances", {})
    selected = tuple(raw["checks"] if checks is None else checks)
    unknown = [c for c in selected if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks: {unknown}")

    cfg = ExperimentConfig(
        name=raw.get("name", "experiment"), space=space, base_map=base, gamma=gamma,
        gamma_hat=gamma_hat, checks=selected, sampler=sampler, motion=motion, g_matrix=g_matrix,
        margin_tol=float(tol.get("margin", DEFAULT_TOL)),
        unknown_fraction=float(tol.get("unknown_fraction", UNKNOWN_FRACTION)),
        export=raw.get("export", {}), operator=operator, raw=raw)
    # preconditions of Gamma at x = 0 (for example h(0) = 0 for ratio powers)
    cfg.extension
    return cfg


def load_config(path, seed: Optional[int] = None, checks=None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return build_config(raw, seed, checks)
