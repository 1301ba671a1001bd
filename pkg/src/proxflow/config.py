"""
JSON run configuration for the command line.

A config file is one JSON object::

    {
      "seed": 7,                                   # mandatory
      "problem": {"demo": "lasso"},                # or an explicit spec, below
      "flow": {"alpha": 1.0, "step": 0.01, "method": "rk4",
               "t_end": 100.0, "record_every": 10},
      "certify": {"checks": ["monotone", "dini", ...], "n_samples": 1000,
                  "scale": 0.5, "mu": null, "kl_mu": null,
                  "alphas": [0.1, 0.2, 0.5, 1.0], "dini_constant": null},
      "path": {"type": "sinusoidal", "base": [1.0], "amplitude": [0.1],
               "omega": 1.0},                       # track only
      "bench": {"alphas": [0.2, 0.5, 1.0], "steps": [0.01], "jobs": 1},
      "out": "out"
    }

Explicit problems (matrices are nested JSON lists or CSV file paths relative
to the config file):

* ``{"type": "lasso", "A": ..., "u": ..., "lam": 0.1}``
* ``{"type": "quadratic", "Q": ..., "b": ..., "g": G}``
* ``{"type": "matrix-recovery", "ops": [M1, M2, ...], "y": ..., "lam": 0.5}``
* ``{"type": "lasso-tv", "A": ..., "lam": 0.5, "radius": 1.0, "mu": null}``
  (track only; the path gives ``u(t)``)

where ``G`` is ``{"type": "zero"}``, ``{"type": "l1", "lam": ...}``,
``{"type": "box", "lo": [...], "hi": [...]}`` or
``{"type": "nuclear", "lam": ..., "shape": [r, c]}``. Every problem accepts
``"x0"`` (default zeros; ``"optimum"`` for lasso-tv) and convex ones accept
``"fstar"`` (a number, or ``"ista"``, the default).

Paths: ``constant`` (``theta``), ``sinusoidal`` (``base``, ``amplitude``,
``omega``) and ``smooth-stop`` (``start``, ``end``, ``stop_time``).
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import demos
from . import problems as pb
from . import prox_ops as px
from . import time_varying as tv
from .dynamics import FlowConfig

ALL_CHECKS = ("monotone", "dini", "pl", "condition12", "kl", "cauchy-schwarz",
              "alpha-monotone", "rate")

DEFAULT_FLOW = {"alpha": 1.0, "step": 1e-2, "method": "rk4", "t_end": 100.0,
                "record_every": 10}
DEFAULT_TRACK_FLOW = {"alpha": 1.0, "step": 1e-3, "method": "euler", "t_end": 20.0,
                      "record_every": 10}
DEFAULT_CERTIFY = {"checks": list(ALL_CHECKS), "n_samples": 1000, "scale": 0.5, "mu": None,
                   "kl_mu": None, "alphas": [0.1, 0.2, 0.5, 1.0], "dini_constant": None}
DEFAULT_BENCH = {"alphas": [0.2, 0.5, 1.0], "steps": [1e-2], "jobs": 1}

# keys that select where or how outputs are written, not what is computed
_UNHASHED = ("out", "svg")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class CertifyConfig:
    checks: tuple
    n_samples: int = 1000
    scale: float = 0.5
    mu: Optional[float] = None
    kl_mu: Optional[float] = None
    alphas: tuple = (0.1, 0.2, 0.5, 1.0)
    dini_constant: Optional[float] = None


@dataclass(frozen=True)
class BenchConfig:
    alphas: tuple
    steps: tuple
    jobs: int = 1


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration; ``raw`` is the canonical dict it came from."""

    seed: int
    problem: dict
    flow: FlowConfig
    certify: CertifyConfig
    bench: BenchConfig
    path: Optional[dict]
    out: str
    svg: bool
    base_dir: str = "."
    raw: dict = field(default_factory=dict, repr=False)
    file_digests: dict = field(default_factory=dict, repr=False)

    @property
    def hash(self):
        return config_hash(self.raw, self.file_digests)


def config_hash(raw, file_digests=None):
    """sha256 of the canonical JSON of ``raw`` (output-location keys dropped)."""
    body = {k: v for k, v in raw.items() if k not in _UNHASHED}
    if file_digests:
        body["_files"] = dict(sorted(file_digests.items()))
    text = json.dumps(body, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def resolve(raw, command, overrides=None, base_dir="."):
    """
    Merge defaults, ``raw`` and command-line ``overrides`` into a RunConfig.

    ``overrides`` keys: seed, demo, alpha, step, t_end, method, out, svg; None
    values are ignored.
    """
    raw = copy.deepcopy(raw)
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "demo" in ov:
        name = ov["demo"]
        if command == "track":
            if name not in demos.TRACK_DEMOS:
                raise ConfigError(f"unknown tracking demo {name!r}; "
                                  f"choose from {sorted(demos.TRACK_DEMOS)}")
            _, prob, path = demos.TRACK_DEMOS[name]
            raw["problem"], raw["path"] = copy.deepcopy(prob), copy.deepcopy(path)
        else:
            if name not in demos.DEMOS:
                raise ConfigError(f"unknown demo {name!r}; choose from {sorted(demos.DEMOS)}")
            raw["problem"] = {"demo": name}
    if "seed" in ov:
        raw["seed"] = ov["seed"]
    if "seed" not in raw:
        raise ConfigError("seed is mandatory (config 'seed' or --seed)")
    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    if "problem" not in raw:
        raise ConfigError("no problem given (config 'problem' or --demo)")
    if not isinstance(raw["problem"], dict):
        raise ConfigError("'problem' must be an object")

    flow = dict(DEFAULT_TRACK_FLOW if command == "track" else DEFAULT_FLOW)
    flow.update(_section(raw, "flow"))
    for key in ("alpha", "step", "t_end", "method"):
        if key in ov:
            flow[key] = ov[key]
    raw["flow"] = flow
    try:
        flow_cfg = FlowConfig(**flow)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"flow: {exc}") from None

    cert = dict(DEFAULT_CERTIFY)
    cert.update(_section(raw, "certify"))
    raw["certify"] = cert
    bad = [c for c in cert["checks"] if c not in ALL_CHECKS]
    if bad:
        raise ConfigError(f"unsupported check(s) {bad}; choose from {list(ALL_CHECKS)}")
    try:
        cert_cfg = CertifyConfig(tuple(cert["checks"]), int(cert["n_samples"]),
                                 float(cert["scale"]), _opt_float(cert["mu"]),
                                 _opt_float(cert["kl_mu"]),
                                 tuple(float(a) for a in cert["alphas"]),
                                 _opt_float(cert["dini_constant"]))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"certify: {exc}") from None
    if cert_cfg.n_samples < 1:
        raise ConfigError("certify: n_samples must be positive")

    bench = dict(DEFAULT_BENCH)
    bench.update(_section(raw, "bench"))
    raw["bench"] = bench
    try:
        bench_cfg = BenchConfig(tuple(float(a) for a in bench["alphas"]),
                                tuple(float(s) for s in bench["steps"]), int(bench["jobs"]))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bench: {exc}") from None

    path = raw.get("path")
    if path is not None and not isinstance(path, dict):
        raise ConfigError("'path' must be an object")
    if "out" in ov:
        raw["out"] = ov["out"]
    out = str(raw.get("out", "out"))
    svg = bool(ov.get("svg", raw.get("svg", False)))
    digests = _file_digests(raw["problem"], base_dir)
    return RunConfig(seed, raw["problem"], flow_cfg, cert_cfg, bench_cfg, path, out, svg,
                     str(base_dir), raw, digests)


def _section(raw, key):
    sec = raw.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"'{key}' must be an object")
    return sec


def _opt_float(v):
    return None if v is None else float(v)


def _file_digests(spec, base_dir):
    out = {}

    def walk(v):
        if isinstance(v, dict):
            for w in v.values():
                walk(w)
        elif isinstance(v, list):
            for w in v:
                walk(w)
        elif isinstance(v, str) and v.endswith(".csv"):
            try:
                data = (Path(base_dir) / v).read_bytes()
            except OSError as exc:
                raise ConfigError(f"cannot read {v}: {exc}") from None
            out[v] = hashlib.sha256(data).hexdigest()

    walk(spec)
    return out


# ---------------------------------------------------------------------------
# Problem construction
# ---------------------------------------------------------------------------

def _array(v, name, base_dir, ndim):
    if isinstance(v, str):
        try:
            a = np.loadtxt(Path(base_dir) / v, delimiter=",", ndmin=ndim, dtype=float)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{name}: cannot load {v}: {exc}") from None
    else:
        try:
            a = np.asarray(v, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: not a numeric array") from None
    if ndim == 1:
        a = np.atleast_1d(a)
        if a.ndim == 2 and 1 in a.shape:
            a = a.ravel()
    if a.ndim != ndim:
        raise ConfigError(f"{name}: expected {ndim}-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{name}: non-finite entries")
    return a


def _need(spec, key, kind):
    if key not in spec:
        raise ConfigError(f"{kind} problem needs '{key}'")
    return spec[key]


def build_regularizer(spec, base_dir="."):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("regularizer must be an object with a 'type'")
    kind = spec["type"]
    if kind == "zero":
        return px.make_zero()
    if kind == "l1":
        return px.make_l1(float(_need(spec, "lam", "l1")))
    if kind == "box":
        return px.make_box_indicator(_array(_need(spec, "lo", "box"), "lo", base_dir, 1),
                                     _array(_need(spec, "hi", "box"), "hi", base_dir, 1))
    if kind == "nuclear":
        return px.make_nuclear(float(_need(spec, "lam", "nuclear")),
                               tuple(int(s) for s in _need(spec, "shape", "nuclear")))
    raise ConfigError(f"unknown regularizer type {kind!r}")


def build_problem(spec, seed, base_dir="."):
    """Return ``(problem, x0)`` for a static problem spec."""
    try:
        return _build_problem(spec, seed, base_dir)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"problem: {exc}") from None


def _build_problem(spec, seed, base_dir):
    if "demo" in spec:
        try:
            demo = demos.get_demo(spec["demo"])
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        return demo.build(seed)
    kind = spec.get("type")
    if kind == "lasso":
        A = _array(_need(spec, "A", kind), "A", base_dir, 2)
        p = pb.lasso_problem(A, _array(_need(spec, "u", kind), "u", base_dir, 1),
                             float(_need(spec, "lam", kind)))
    elif kind == "quadratic":
        g = build_regularizer(spec.get("g", {"type": "zero"}), base_dir)
        p = pb.quadratic_problem(_array(_need(spec, "Q", kind), "Q", base_dir, 2),
                                 _array(_need(spec, "b", kind), "b", base_dir, 1), g)
    elif kind == "matrix-recovery":
        ops = [_array(a, f"ops[{i}]", base_dir, 2)
               for i, a in enumerate(_need(spec, "ops", kind))]
        p = pb.matrix_recovery_problem(ops, _array(_need(spec, "y", kind), "y", base_dir, 1),
                                       float(_need(spec, "lam", kind)))
    elif kind == "lasso-tv":
        raise ConfigError("lasso-tv problems are only valid for 'track'")
    else:
        raise ConfigError(f"unknown problem type {kind!r}")
    x0 = _array(spec["x0"], "x0", base_dir, 1) if "x0" in spec else np.zeros(p.dim)
    if x0.size != p.dim:
        raise ConfigError(f"x0 has {x0.size} entries, problem dim is {p.dim}")
    fstar = spec.get("fstar", "ista")
    if p.fstar is None and fstar is not None:
        if fstar == "ista":
            p = pb.attach_ista_fstar(p)
        else:
            p = p.with_fstar(float(fstar), "config")
    return p, x0


def build_path(spec, t_end, base_dir="."):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("track needs a 'path' object with a 'type'")
    kind = spec["type"]
    try:
        if kind == "constant":
            return tv.constant_path(_array(_need(spec, "theta", kind), "theta", base_dir, 1),
                                    t_end)
        if kind == "sinusoidal":
            return tv.sinusoidal_path(_array(_need(spec, "base", kind), "base", base_dir, 1),
                                      _array(_need(spec, "amplitude", kind), "amplitude",
                                             base_dir, 1),
                                      t_end, float(spec.get("omega", 1.0)))
        if kind == "smooth-stop":
            return tv.smooth_stop_path(_array(_need(spec, "start", kind), "start", base_dir, 1),
                                       _array(_need(spec, "end", kind), "end", base_dir, 1),
                                       float(_need(spec, "stop_time", kind)), t_end)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"path: {exc}") from None
    raise ConfigError(f"unknown path type {kind!r}")


def build_tracking(spec, path_spec, t_end, base_dir="."):
    """Return ``(TvProblem, x0)``; ``x0`` may be the string ``"optimum"``."""
    if spec.get("type") != "lasso-tv":
        raise ConfigError("track needs a problem of type 'lasso-tv'")
    path = build_path(path_spec, t_end, base_dir)
    A = _array(_need(spec, "A", "lasso-tv"), "A", base_dir, 2)
    try:
        tp = tv.lasso_tv_problem(A, float(_need(spec, "lam", "lasso-tv")), path,
                                 float(spec.get("radius", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None
    if path.theta(0.0).size != A.shape[0]:
        raise ConfigError("path dimension must equal the number of rows of A")
    if spec.get("mu") is not None:
        tp = tv.TvProblem(tp.family, tp.path, mu=float(spec["mu"]))
    x0 = spec.get("x0")
    if x0 is None:
        x0 = np.zeros(A.shape[1])
    elif x0 != "optimum":
        x0 = _array(x0, "x0", base_dir, 1)
        if x0.size != A.shape[1]:
            raise ConfigError(f"x0 has {x0.size} entries, expected {A.shape[1]}")
    return tp, x0
