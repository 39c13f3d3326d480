"""Experiment configuration: JSON schema, validation and canonical serialization.

A configuration is a JSON object::

    {
      "schema_version": 1,
      "kind": "mc-vs-pde",
      "mixture": [[1.0, 0.5]],
      "order": null,
      "triplet": {"drift": 0.0, "sigma2": 0.0, "jumps": null},
      "coefficients": {"preset": "brownian"},
      "grids": {"delta": 0.001, "dt": 0.001, "dx": 0.02, "L": 8.0, "t_max": 1.0},
      "x0": 0.0,
      "n_paths": 100000,
      "seed": 1,
      "output": "out",
      "params": {}
    }

Missing optional fields take defaults; ``params`` is completed with the
defaults of the chosen kind. :func:`serialize` writes the completed object
with sorted keys, which is the canonical form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..fracpde import DistributedOrder
from ..levy import JumpLaw, LevyTriplet, SymmetricStable
from ..sde import SDECoefficients
from ..subordination import MixtureSpec

__all__ = [
    "SCHEMA_VERSION",
    "KINDS",
    "COEFFICIENT_PRESETS",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "serialize",
    "canonical",
]

SCHEMA_VERSION = 1

KINDS = (
    "subordinator-check",
    "inverse-moments",
    "mc-vs-pde",
    "dode-two-atom",
    "stable-driver",
    "feynman-kac",
    "solver-convergence",
)

STATISTICAL = set(KINDS) - {"solver-convergence"}

# Ascending polynomial coefficients of b, sigma and g.
COEFFICIENT_PRESETS = {
    "zero": {"b": [], "sigma": [], "g": []},
    "brownian": {"b": [], "sigma": [1.0], "g": []},
    "ou": {"b": [0.0, -1.0], "sigma": [1.0], "g": []},
    "unit-drift": {"b": [1.0], "sigma": [], "g": []},
    "levy-driven": {"b": [], "sigma": [], "g": [1.0]},
}

DEFAULT_GRIDS = {"delta": 1e-3, "dt": 1e-3, "dx": 0.02, "L": 8.0, "t_max": 1.0}

DEFAULT_PARAMS = {
    "subordinator-check": {"s_values": [0.5, 1.0, 2.0], "n_se": 3.0},
    "inverse-moments": {"t": None, "lam": 1.0, "n_se": 3.0},
    "mc-vs-pde": {"ks_tol": 0.02, "triangle": True, "triangle_tol": 5e-3, "tau_step": 0.005},
    "dode-two-atom": {"ks_tol": 0.03, "triangle": False, "triangle_tol": 5e-3, "tau_step": 0.005},
    "stable-driver": {"xi_values": [0.5, 1.0, 2.0], "abs_tol": 5e-3, "n_se": 3.0},
    "feynman-kac": {"q": 1.0, "phi": 1.0, "t_values": [1.0], "bias": None, "n_se": 3.0},
    "solver-convergence": {"lam": 1.0, "dt_values": [1e-2, 5e-3, 2.5e-3], "min_order": 1.3},
}

TOP_KEYS = {
    "schema_version", "kind", "mixture", "order", "triplet", "coefficients",
    "grids", "x0", "n_paths", "seed", "output", "params",
}


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _number(v, path, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(path, f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        _fail(path, "must be positive")
    if nonneg and not v >= 0:
        _fail(path, "must be nonnegative")
    return float(v)


def _integer(v, path, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        _fail(path, f"must be at least {minimum}")
    return int(v)


def _pairs(v, path):
    if not isinstance(v, list) or not v:
        _fail(path, "expected a nonempty list of [weight, index] pairs")
    out = []
    for i, item in enumerate(v):
        if not isinstance(item, list) or len(item) != 2:
            _fail(f"{path}[{i}]", "expected [weight, index]")
        c = _number(item[0], f"{path}[{i}][0]", positive=True)
        b = _number(item[1], f"{path}[{i}][1]")
        if not 0 < b < 1:
            _fail(f"{path}[{i}][1]", "index must lie in (0, 1)")
        out.append((c, b))
    return tuple(out)


def _poly(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return [_number(v, path)]
    if not isinstance(v, list):
        _fail(path, "expected a number or a list of polynomial coefficients")
    return [_number(c, f"{path}[{i}]") for i, c in enumerate(v)]


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        _fail(path, "expected an object")
    extra = set(d) - set(allowed)
    if extra:
        _fail(path, f"unknown field(s) {sorted(extra)}")


def _parse_triplet(d, path="triplet"):
    d = {"drift": 0.0, "sigma2": 0.0, "jumps": None, **(d or {})}
    _check_keys(d, {"drift", "sigma2", "jumps"}, path)
    out = {"drift": _number(d["drift"], f"{path}.drift"), "sigma2": _number(d["sigma2"], f"{path}.sigma2", nonneg=True)}
    j = d["jumps"]
    if j is None:
        out["jumps"] = None
    else:
        _check_keys(j, {"type", "alpha", "rate", "law"}, f"{path}.jumps")
        kind = j.get("type")
        if kind == "symmetric_stable":
            a = _number(j.get("alpha"), f"{path}.jumps.alpha")
            if not 0 < a < 2:
                _fail(f"{path}.jumps.alpha", "must lie in (0, 2)")
            out["jumps"] = {"type": kind, "alpha": a}
        elif kind == "compound_poisson":
            rate = _number(j.get("rate"), f"{path}.jumps.rate", positive=True)
            law = j.get("law")
            _check_keys(law, {"type", "a", "lo", "hi"}, f"{path}.jumps.law")
            if law.get("type") == "point":
                law = {"type": "point", "a": _number(law.get("a"), f"{path}.jumps.law.a")}
            elif law.get("type") == "uniform":
                lo = _number(law.get("lo"), f"{path}.jumps.law.lo")
                hi = _number(law.get("hi"), f"{path}.jumps.law.hi")
                if not hi > lo:
                    _fail(f"{path}.jumps.law", "needs hi > lo")
                law = {"type": "uniform", "lo": lo, "hi": hi}
            else:
                _fail(f"{path}.jumps.law.type", "expected 'point' or 'uniform'")
            out["jumps"] = {"type": kind, "rate": rate, "law": law}
        else:
            _fail(f"{path}.jumps.type", "expected 'symmetric_stable' or 'compound_poisson'")
    return out


def _parse_coefficients(d, path="coefficients"):
    d = d if d is not None else {"preset": "zero"}
    if isinstance(d, dict) and "preset" in d:
        _check_keys(d, {"preset"}, path)
        if d["preset"] not in COEFFICIENT_PRESETS:
            _fail(f"{path}.preset", f"unknown preset {d['preset']!r}; choose from {sorted(COEFFICIENT_PRESETS)}")
        return {"preset": d["preset"]}
    _check_keys(d, {"b", "sigma", "g"}, path)
    return {k: _poly(d.get(k, []), f"{path}.{k}") for k in ("b", "sigma", "g")}


def _parse_params(kind, d):
    base = DEFAULT_PARAMS[kind]
    d = d or {}
    _check_keys(d, set(base), "params")
    out = {}
    for k, default in base.items():
        v = d.get(k, default)
        p = f"params.{k}"
        if v is None:
            out[k] = None
        elif isinstance(default, bool):
            if not isinstance(v, bool):
                _fail(p, "expected true or false")
            out[k] = v
        elif k in ("q", "phi"):
            out[k] = _poly(v, p)[0] if isinstance(v, (int, float)) else _poly(v, p)
        elif isinstance(default, list):
            if not isinstance(v, list) or not v:
                _fail(p, "expected a nonempty list")
            out[k] = [_number(x, f"{p}[{i}]", positive=True) for i, x in enumerate(v)]
        else:
            out[k] = _number(v, p, positive=k not in ("lam", "bias"), nonneg=True)
    if kind == "feynman-kac" and isinstance(out["q"], float) and out["q"] < 0:
        _fail("params.q", "killing rate must be nonnegative")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration; build with :func:`parse_config`."""

    kind: str
    mixture: tuple
    triplet: dict
    coefficients: dict
    grids: dict
    n_paths: int
    seed: int
    output: str = "out"
    x0: float = 0.0
    order: tuple = None
    params: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    # -- domain objects ----------------------------------------------------

    def mixture_spec(self):
        return MixtureSpec(self.mixture)

    def distributed_order(self):
        if self.order is not None:
            return DistributedOrder(self.order)
        return DistributedOrder.from_mixture(self.mixture_spec())

    def coefficient_lists(self):
        if "preset" in self.coefficients:
            return COEFFICIENT_PRESETS[self.coefficients["preset"]]
        return self.coefficients

    def sde_coefficients(self):
        c = self.coefficient_lists()
        return SDECoefficients.polynomial(c["b"], c["sigma"], c["g"])

    def levy_triplet(self):
        t = self.triplet
        j = t["jumps"]
        if j is None:
            return LevyTriplet(t["drift"], t["sigma2"])
        if j["type"] == "symmetric_stable":
            return LevyTriplet(t["drift"], t["sigma2"], SymmetricStable(j["alpha"]))
        law = j["law"]
        jl = JumpLaw.point(law["a"]) if law["type"] == "point" else JumpLaw.uniform(law["lo"], law["hi"])
        return LevyTriplet.compound_poisson(j["rate"], jl, t["drift"], t["sigma2"])

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "mixture": [list(a) for a in self.mixture],
            "order": None if self.order is None else [list(a) for a in self.order],
            "triplet": self.triplet,
            "coefficients": self.coefficients,
            "grids": self.grids,
            "x0": self.x0,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "output": self.output,
            "params": self.params,
        }

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return parse_config(d)


def parse_config(source, kind=None):
    """Validate a JSON text or an already decoded mapping.

    Parameters
    ----------
    source : str or dict
    kind : str, optional
        Experiment kind requested on the command line; must agree with the
        file when both are given.

    Raises
    ------
    ConfigError
        With the offending field path, or the line and column of a JSON
        syntax error.
    """
    if isinstance(source, (str, bytes)):
        try:
            d = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    else:
        d = json.loads(json.dumps(source))
    _check_keys(d, TOP_KEYS, "config")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    k = d.get("kind", kind)
    if kind is not None and k != kind:
        _fail("kind", f"file says {k!r} but {kind!r} was requested")
    if k not in KINDS:
        _fail("kind", f"unknown experiment kind {k!r}; choose from {list(KINDS)}")
    if "mixture" not in d:
        _fail("mixture", "required")
    mixture = _pairs(d["mixture"], "mixture")
    order = None if d.get("order") is None else _pairs(d["order"], "order")
    if order is not None:
        induced = sorted((c**b, b) for c, b in mixture)
        given = sorted(order)
        ok = len(induced) == len(given) and all(
            math.isclose(c1, c2, rel_tol=1e-12) and b1 == b2 for (c1, b1), (c2, b2) in zip(induced, given)
        )
        if not ok:
            _fail("order", f"must equal the pairing induced by the mixture, {[list(a) for a in induced]}")
    grids = {**DEFAULT_GRIDS, **(d.get("grids") or {})}
    _check_keys(grids, set(DEFAULT_GRIDS), "grids")
    grids = {g: _number(v, f"grids.{g}", positive=True) for g, v in sorted(grids.items())}
    n_paths = _integer(d.get("n_paths", 100000), "n_paths", minimum=1)
    if k in STATISTICAL and n_paths < 100:
        _fail("n_paths", "statistical experiments need at least 100 paths")
    seed = _integer(d.get("seed", 0), "seed", minimum=0)
    if seed >= 2**64:
        _fail("seed", "must fit in 64 bits")
    output = d.get("output", "out")
    if not isinstance(output, str) or not output:
        _fail("output", "expected a nonempty string")
    cfg = ExperimentConfig(
        kind=k,
        mixture=mixture,
        triplet=_parse_triplet(d.get("triplet")),
        coefficients=_parse_coefficients(d.get("coefficients")),
        grids=grids,
        n_paths=n_paths,
        seed=seed,
        output=output,
        x0=_number(d.get("x0", 0.0), "x0"),
        order=order,
        params=_parse_params(k, d.get("params")),
    )
    if k == "dode-two-atom" and len(mixture) != 2:
        _fail("mixture", "dode-two-atom needs exactly two atoms")
    return cfg


def load_config(path, kind=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, kind)


def serialize(cfg):
    """Canonical JSON text: completed fields, sorted keys, two-space indent."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"


def canonical(text):
    """Canonical form of a configuration text."""
    return serialize(parse_config(text))
