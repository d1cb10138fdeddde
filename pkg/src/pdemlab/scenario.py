"""Scenario documents: JSON, dimensionless units with hbar = 1."""

import json
import re
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .canonical import MODES, QCTConstraints
from .errors import ConfigInvalid
from .invariant import InvariantConstants
from .model import Grid, MassProfile, PotentialSpec
from .timefuncs import Constant, Sinusoid, Table, linear

_NUM = {"type": "number"}
_TABLE = {
    "type": "object",
    "required": ["t", "values"],
    "properties": {"t": {"type": "array", "items": _NUM, "minItems": 2}, "values": {"type": "array", "items": _NUM, "minItems": 2}},
    "additionalProperties": False,
}


def _one_key(name, body):
    return {"type": "object", "required": [name], "properties": {name: body}, "additionalProperties": False}


_C0 = {
    "oneOf": [
        _NUM,
        _one_key("constant", _NUM),
        _one_key(
            "linear",
            {"type": "object", "required": ["value", "rate"], "properties": {"value": _NUM, "rate": _NUM}, "additionalProperties": False},
        ),
        _one_key("table", _TABLE),
    ]
}
_V0 = {
    "oneOf": [
        _NUM,
        _one_key("constant", _NUM),
        _one_key(
            "sinusoid",
            {
                "type": "object",
                "properties": {"offset": _NUM, "amplitude": _NUM, "omega": _NUM, "phase": _NUM},
                "additionalProperties": False,
            },
        ),
        _one_key("table", _TABLE),
    ]
}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj(
    {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "units": {"type": "string"},
        "profile": _obj({"alpha": _NUM, "c0": _C0}, ["alpha", "c0"]),
        "potential": _obj({"beta": _NUM, "V0": _V0}, ["beta"]),
        "grid": _obj(
            {"x_min": _NUM, "x_max": _NUM, "N": {"type": "integer", "minimum": 8}},
            ["x_min", "x_max", "N"],
        ),
        "invariant": _obj(
            {
                "constants": _obj({k: _NUM for k in ("alpha3", "alpha6", "alpha7", "a0", "theta0")}),
                "t_window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_check": _NUM,
                "control_perturbation": _NUM,
            }
        ),
        "state": _obj(
            {
                "kind": {"enum": ["gaussian", "eigenstate"]},
                "x0": _NUM,
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "k0": _NUM,
                "index": {"type": "integer", "minimum": 0},
            }
        ),
        "evolution": _obj(
            {"dt": {"type": "number", "exclusiveMinimum": 0}, "t1": _NUM}
        ),
        "canonical": _obj(
            {
                "mu1": _NUM,
                "mu2": _NUM,
                "mu3": _NUM,
                "epsilon0": _NUM,
                "mode": {"enum": list(MODES)},
                "t_check": _NUM,
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "states": {"type": "integer", "minimum": 1},
            }
        ),
        "outputs": _obj(
            {"directory": {"type": "string"}, "sample_stride": {"type": "integer", "minimum": 1}}
        ),
    },
    ["name", "profile", "potential", "grid"],
)


@dataclass(frozen=True)
class StateSpec:
    kind: str = "gaussian"
    x0: float = None
    sigma: float = 0.06
    k0: float = 0.0
    index: int = 0


@dataclass(frozen=True)
class CanonicalSpec:
    constraints: QCTConstraints
    mode: str = "gauge-exact"
    t_check: float = 0.2
    dt: float = 1e-5
    states: int = 3


@dataclass(frozen=True)
class Scenario:
    name: str
    profile: MassProfile
    potential: PotentialSpec
    grid: Grid
    constants: InvariantConstants
    t_window: tuple
    dt: float
    t_check: float
    control_perturbation: float
    state: StateSpec
    evolution_dt: float
    evolution_t1: float
    canonical: CanonicalSpec = None
    directory: str = None
    sample_stride: int = 1
    raw: dict = field(default=None, compare=False, repr=False)

    @property
    def alpha(self):
        return self.profile.alpha

    @property
    def beta(self):
        return self.potential.beta


def _line_of(text, key):
    if text is None or key is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(str(key)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(text, path, message):
    key = path[-1] if path else None
    where = ".".join(str(p) for p in path) or "<document>"
    line = _line_of(text, key)
    if line is not None:
        message = f"{message} (line {line})"
    raise ConfigInvalid(where, message)


def _time_function(spec, kind):
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    (tag, body), = spec.items()
    if tag == "constant":
        return Constant(float(body))
    if tag == "linear":
        return linear(body["value"], body["rate"])
    if tag == "sinusoid":
        return Sinusoid(body.get("offset", 0.0), body.get("amplitude", 1.0), body.get("omega", 1.0), body.get("phase", 0.0))
    if tag == "table":
        if len(body["t"]) != len(body["values"]):
            raise ValueError("table t and values differ in length")
        return Table(tuple(body["t"]), tuple(body["values"]))
    raise ValueError(f"unknown {kind} form {tag!r}")


def from_dict(doc, text=None):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        _fail(text, list(err.absolute_path), err.message)

    prof_doc = doc["profile"]
    pot_doc = doc["potential"]
    try:
        c0 = _time_function(prof_doc["c0"], "c0")
    except ValueError as exc:
        _fail(text, ["profile", "c0"], str(exc))
    try:
        V0 = _time_function(pot_doc.get("V0", 0.0), "V0")
    except ValueError as exc:
        _fail(text, ["potential", "V0"], str(exc))
    profile = MassProfile(float(prof_doc["alpha"]), c0)
    potential = PotentialSpec(profile, float(pot_doc["beta"]), V0)

    g = doc["grid"]
    if not g["x_max"] > g["x_min"]:
        _fail(text, ["grid", "x_max"], "x_max must exceed x_min")
    grid = Grid(float(g["x_min"]), float(g["x_max"]), int(g["N"]))

    inv = doc.get("invariant", {})
    consts = dict(a0=2.0)
    consts.update(inv.get("constants", {}))
    constants = InvariantConstants(**{k: float(v) for k, v in consts.items()})
    t_window = tuple(float(v) for v in inv.get("t_window", (0.0, 1.0)))
    if not t_window[1] > t_window[0]:
        _fail(text, ["invariant", "t_window"], "t_window must be increasing")
    dt = float(inv.get("dt", 1e-3))

    # positive mass on the whole domain for every t in the window
    ts = np.linspace(t_window[0], t_window[1], 201)
    for t in ts:
        for xv in (grid.x_min, grid.x_max):
            if not profile.inverse_mass(xv, t) > 0:
                _fail(text, ["profile", "c0"], f"1/(2m) <= 0 at x={xv:g}, t={t:g}; mass must be positive on the domain")

    st = doc.get("state", {})
    state = StateSpec(
        kind=st.get("kind", "gaussian"),
        x0=float(st.get("x0", 0.5 * (grid.x_min + grid.x_max))),
        sigma=float(st.get("sigma", 0.06)),
        k0=float(st.get("k0", 0.0)),
        index=int(st.get("index", 0)),
    )

    ev = doc.get("evolution", {})
    evolution_t1 = float(ev.get("t1", t_window[0] + 0.5))
    if not evolution_t1 > t_window[0]:
        _fail(text, ["evolution", "t1"], "t1 must exceed the start of t_window")

    canonical = None
    if "canonical" in doc:
        can = doc["canonical"]
        if potential.beta != 0:
            _fail(text, ["potential", "beta"], "the canonical section requires beta = 0")
        if profile.alpha == 0:
            _fail(text, ["profile", "alpha"], "the canonical section requires alpha != 0")
        for key, label in (("mu1", "μ₁ ≠ 0"), ("mu2", "μ₂ ≠ 0")):
            if key not in can:
                _fail(text, ["canonical"], f"missing {key}; constraint {label} requires a value")
            if can[key] == 0:
                _fail(text, ["canonical", key], f"constraint {label} violated")
        constraints = QCTConstraints(
            float(can["mu1"]), float(can["mu2"]), float(can.get("mu3", 0.0)), float(can.get("epsilon0", 1.0))
        )
        canonical = CanonicalSpec(
            constraints,
            can.get("mode", "gauge-exact"),
            float(can.get("t_check", 0.2)),
            float(can.get("dt", 1e-5)),
            int(can.get("states", 3)),
        )

    out = doc.get("outputs", {})
    return Scenario(
        name=doc["name"],
        profile=profile,
        potential=potential,
        grid=grid,
        constants=constants,
        t_window=t_window,
        dt=dt,
        t_check=float(inv.get("t_check", 0.3)),
        control_perturbation=float(inv.get("control_perturbation", 0.1)),
        state=state,
        evolution_dt=float(ev.get("dt", 1e-4)),
        evolution_t1=evolution_t1,
        canonical=canonical,
        directory=out.get("directory"),
        sample_stride=int(out.get("sample_stride", 1)),
        raw=doc,
    )


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("<document>", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid("<document>", "scenario must be a JSON object")
    return from_dict(doc, text)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid("--scenario", f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)
