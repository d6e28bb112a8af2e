"""Experiment configuration: JSON schema and builders for the runtime objects.

Every config is validated against :data:`SCHEMA` (unknown keys rejected)
before anything is built.  Complex numbers are written either as plain
numbers or as ``{"re": .., "im": ..}``; phases in turns as numbers, fraction
strings like ``"1/3"`` or ``"golden"``.
"""

from __future__ import annotations

import copy
import json

import jsonschema
import numpy as np

from . import dynsys as ds
from . import linops as lo
from . import seqcore as sc
from . import shiftcex as sx
from .averages import Factor, L2_HORIZON, POINTWISE_HORIZON
from .errors import InputError

KINDS = ("decompose", "average", "rtt", "poly", "cex", "kvn", "universal-report")

_COMPLEX = {
    "anyOf": [
        {"type": "number"},
        {"type": "object", "additionalProperties": False, "required": ["re"],
         "properties": {"re": {"type": "number"}, "im": {"type": "number"}}},
    ]
}
_TURNS = {
    "anyOf": [
        {"type": "number"},
        {"type": "string", "pattern": r"^-?(golden|[0-9]+(/[0-9]+)?)$"},
    ]
}
_VECTOR = {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}
_MATRIX = {"type": "array", "minItems": 1, "maxItems": lo.MAX_DIM,
           "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}}
_HORIZON = {"type": "integer", "minimum": 1, "maximum": sc.MAX_HORIZON}


def _obj(required, **props):
    return {"type": "object", "additionalProperties": False,
            "required": list(required), "properties": props}


def _tagged(tag, required=(), **props):
    return _obj(["type", *required], type={"const": tag}, **props)


_DEFS = {
    "complex": _COMPLEX,
    "turns": _TURNS,
    "vector": _VECTOR,
    "matrix": _MATRIX,
    "horizons": {"type": "array", "minItems": 1, "items": _HORIZON},
    "intpoly": {"type": "array", "minItems": 1, "maxItems": ds.MAX_POLY_DEGREE + 1,
                "items": {"type": "integer"}},
    "operator": {
        "anyOf": [
            _obj(["matrix"], matrix={"$ref": "#/$defs/matrix"},
                 tol={"type": "number", "exclusiveMinimum": 0}),
            _obj(["dim", "stable"],
                 dim={"type": "integer", "minimum": 1, "maximum": lo.MAX_DIM},
                 eigenpairs={"type": "array", "items": _obj(
                     ["re", "projection"], re={"type": "number"}, im={"type": "number"},
                     projection={"$ref": "#/$defs/matrix"})},
                 stable={"$ref": "#/$defs/matrix"},
                 C={"type": "number", "minimum": 0}, r={"type": "number", "minimum": 0}),
        ]
    },
    "system": {
        "anyOf": [
            _obj(["kind"], kind={"const": "circle_rotation"}, alpha={"$ref": "#/$defs/turns"}),
            _obj(["kind", "alphas"], kind={"const": "torus_rotation"},
                 alphas={"type": "array", "minItems": 1, "maxItems": 3,
                         "items": {"$ref": "#/$defs/turns"}}),
            _obj(["kind"], kind={"const": "skew_product"}, alpha={"$ref": "#/$defs/turns"}),
            _obj(["kind", "m"], kind={"const": "cyclic_permutation"},
                 m={"type": "integer", "minimum": 1}, step={"type": "integer"}),
        ]
    },
    "observable": {
        "anyOf": [
            _obj(["fourier"], fourier={"type": "array", "minItems": 1, "items": _obj(
                ["k", "coef"],
                k={"anyOf": [{"type": "integer"},
                             {"type": "array", "minItems": 1, "maxItems": 3,
                              "items": {"type": "integer"}}]},
                coef={"$ref": "#/$defs/complex"})}),
            _obj(["table"], table={"$ref": "#/$defs/vector"}),
        ]
    },
    "point": {
        "anyOf": [{"type": "number"},
                  {"type": "array", "minItems": 1, "maxItems": 3, "items": {"type": "number"}}]
    },
    "factor": _obj(["system", "observable", "point"], system={"$ref": "#/$defs/system"},
                   observable={"$ref": "#/$defs/observable"}, point={"$ref": "#/$defs/point"}),
    "functional": {
        "anyOf": [
            _tagged("block_sign", ["delta"], delta={"type": "number", "exclusiveMinimum": 0},
                    growth={"type": "integer", "minimum": 2},
                    alternating={"type": "boolean"}),
            _tagged("constant", [], value={"$ref": "#/$defs/complex"}),
        ]
    },
    "weight": {
        "anyOf": [
            _tagged("constant", [], value={"$ref": "#/$defs/complex"}),
            _tagged("character", ["turns"], turns={"$ref": "#/$defs/turns"}),
            _tagged("trig", ["terms"], terms={"type": "array", "minItems": 1, "items": _obj(
                ["coef", "turns"], coef={"$ref": "#/$defs/complex"},
                turns={"$ref": "#/$defs/turns"})}),
            _tagged("polyphase", ["coefficients"], coefficients={
                "type": "array", "minItems": 1, "maxItems": ds.MAX_PHASE_DEGREE + 1,
                "items": {"$ref": "#/$defs/turns"}}),
            _tagged("geometric", ["ratio"], ratio={"$ref": "#/$defs/complex"}),
            _tagged("squares"),
            _tagged("linear", ["operator", "x", "xprime"], operator={"$ref": "#/$defs/operator"},
                    x={"$ref": "#/$defs/vector"}, xprime={"$ref": "#/$defs/vector"},
                    part={"enum": ["full", "almost_periodic", "residual"]}),
            _tagged("random_linear", [], dim={"type": "integer", "minimum": 1, "maximum": 8},
                    unimodular={"type": "integer", "minimum": 0, "maximum": 4},
                    stable_radius={"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    part={"enum": ["full", "almost_periodic", "residual"]}),
            _tagged("shift", ["x", "functional"], x={"$ref": "#/$defs/vector"},
                    functional={"$ref": "#/$defs/functional"}),
            _tagged("correlation", ["system", "observables", "polynomials"],
                    system={"$ref": "#/$defs/system"},
                    observables={"type": "array", "minItems": 1,
                                 "items": {"$ref": "#/$defs/observable"}},
                    polynomials={"type": "array", "minItems": 1,
                                 "items": {"$ref": "#/$defs/intpoly"}}),
        ]
    },
}

_COMMON = {
    "kind": {"enum": list(KINDS)},
    "description": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "out": {"type": "string"},
}


def _kind(kind, required, **props):
    return _obj(["kind", *required], **{**_COMMON, "kind": {"const": kind}}, **props)


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": _DEFS,
    "oneOf": [
        _kind("decompose", ["operator", "x", "xprime"], operator={"$ref": "#/$defs/operator"},
              x={"$ref": "#/$defs/vector"}, xprime={"$ref": "#/$defs/vector"},
              terms={"type": "integer", "minimum": 1, "maximum": 100000},
              horizon=_HORIZON),
        _kind("average", ["weight", "system", "observable", "point"],
              weight={"$ref": "#/$defs/weight"}, system={"$ref": "#/$defs/system"},
              observable={"$ref": "#/$defs/observable"}, point={"$ref": "#/$defs/point"},
              horizons={"$ref": "#/$defs/horizons"}),
        _kind("rtt", ["weight", "towers"], weight={"$ref": "#/$defs/weight"},
              towers={"type": "array", "minItems": 1, "maxItems": 6,
                      "items": {"$ref": "#/$defs/factor"}},
              horizons={"$ref": "#/$defs/horizons"}),
        _kind("poly", ["weight", "system", "pairs"], weight={"$ref": "#/$defs/weight"},
              system={"$ref": "#/$defs/system"},
              pairs={"type": "array", "minItems": 1, "items": _obj(
                  ["observable", "polynomial"], observable={"$ref": "#/$defs/observable"},
                  polynomial={"$ref": "#/$defs/intpoly"})},
              horizons={"$ref": "#/$defs/horizons"}),
        _kind("cex", ["x", "functional"], x={"$ref": "#/$defs/vector"},
              functional={"$ref": "#/$defs/functional"}, **{"lambda": {"$ref": "#/$defs/turns"}},
              horizon=_HORIZON, tail_eps={"type": "number", "minimum": 0}),
        _kind("kvn", ["weight", "horizon", "levels"], weight={"$ref": "#/$defs/weight"},
              horizon={"type": "integer", "minimum": 1, "maximum": 1 << 26},
              levels={"type": "array", "minItems": 1,
                      "items": {"type": "number", "exclusiveMinimum": 0}}),
        _kind("universal-report", ["weights", "towers"],
              weights={"type": "array", "minItems": 2, "items": {"$ref": "#/$defs/weight"}},
              towers={"type": "array", "minItems": 2, "maxItems": 10,
                      "items": {"type": "array", "minItems": 1, "maxItems": 6,
                                "items": {"$ref": "#/$defs/factor"}}},
              horizons={"$ref": "#/$defs/horizons"}),
    ],
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def validate(doc) -> dict:
    """Raise InputError naming the offending path unless ``doc`` matches the schema."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        kind = doc.get("kind") if isinstance(doc, dict) else None
        if kind not in KINDS:
            raise InputError(f"config 'kind' must be one of {', '.join(KINDS)}")
        # oneOf errors are noisy; report the branch of the declared kind
        branch = SCHEMA["oneOf"][KINDS.index(kind)]
        sub = sorted(jsonschema.Draft202012Validator({**branch, "$defs": _DEFS}).iter_errors(doc),
                     key=lambda e: list(e.absolute_path))
        err = sub[0] if sub else errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise InputError(f"invalid config at {where}: {err.message}")
    return doc


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from exc
    return validate(doc)


def override_horizon(doc: dict, N: int) -> dict:
    """Copy of ``doc`` with its top horizon replaced by N."""
    doc = copy.deepcopy(doc)
    if doc["kind"] in ("decompose", "cex", "kvn"):
        doc["horizon"] = int(N)
    else:
        default = L2_HORIZON if doc["kind"] == "poly" else POINTWISE_HORIZON
        hs = doc.get("horizons") or sc.dyadic_horizons(default)
        doc["horizons"] = [h for h in hs if h < N] + [int(N)]
    return validate(doc)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def complex_of(v) -> complex:
    return lo._from_cx(v)


def turns_of(v):
    return v if isinstance(v, str) else float(v)


def build_operator(doc) -> lo.SpectralOperator:
    return lo.operator_from_json(doc)


def build_system(doc) -> ds.DynamicalSystem:
    kind = doc["kind"]
    if kind == "circle_rotation":
        return ds.circle_rotation(turns_of(doc.get("alpha", "golden")))
    if kind == "torus_rotation":
        return ds.torus_rotation([turns_of(a) for a in doc["alphas"]])
    if kind == "skew_product":
        return ds.skew_product(turns_of(doc.get("alpha", "golden")))
    return ds.cyclic_permutation(doc["m"], doc.get("step", 1))


def build_observable(doc, system: ds.DynamicalSystem) -> ds.Observable:
    if "table" in doc:
        return ds.table([complex_of(v) for v in doc["table"]])
    d = system.dim if system.is_torus else 1
    return ds.fourier([(t["k"], complex_of(t["coef"])) for t in doc["fourier"]], d)


def build_factor(doc) -> Factor:
    S = build_system(doc["system"])
    g = build_observable(doc["observable"], S)
    p = doc["point"]
    point = int(p) if not S.is_torus else np.atleast_1d(np.asarray(p, dtype=np.float64))
    return Factor(S, g, point)


def build_functional(doc) -> sx.BoundedFunctional:
    if doc["type"] == "block_sign":
        return sx.block_sign_sequence(doc["delta"], doc.get("growth", 2),
                                      doc.get("alternating", True))
    return sx.constant_functional(complex_of(doc.get("value", 1.0)))


def _linear_part(T, pair, part):
    if part == "full":
        return lo.linear_sequence(T, pair)
    trig, res = lo.structure_split(T, pair)
    return trig.as_sequence("almost_periodic") if part == "almost_periodic" else res


def build_weight(doc, rng: np.random.Generator) -> sc.WeightSequence:
    """Weight sequence from its config entry; ``rng`` feeds the random families."""
    t = doc["type"]
    if t == "constant":
        return sc.constant(complex_of(doc.get("value", 1.0)))
    if t == "character":
        return sc.character(turns_of(doc["turns"]))
    if t == "trig":
        p = sc.TrigPolynomial.from_turns([(complex_of(term["coef"]), turns_of(term["turns"]))
                                          for term in doc["terms"]])
        return p.as_sequence()
    if t == "polyphase":
        return ds.polyphase_weight([turns_of(c) for c in doc["coefficients"]])
    if t == "geometric":
        return sc.geometric(complex_of(doc["ratio"]))
    if t == "squares":
        return sc.square_indicator()
    if t == "linear":
        T = build_operator(doc["operator"])
        pair = lo.VectorPair(lo.vector_from_json(doc["x"]), lo.vector_from_json(doc["xprime"]))
        return _linear_part(T, pair, doc.get("part", "full"))
    if t == "random_linear":
        dim = doc.get("dim", 4)
        T = lo.random_spectral_operator(rng, dim, doc.get("unimodular", 1),
                                        doc.get("stable_radius", 0.9))
        x = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        xp = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return _linear_part(T, lo.VectorPair(x, xp), doc.get("part", "full"))
    if t == "shift":
        return sx.shift_sequence(sx.L1Vector(lo.vector_from_json(doc["x"])),
                                 build_functional(doc["functional"]))
    if t == "correlation":
        S = build_system(doc["system"])
        gs = [build_observable(g, S) for g in doc["observables"]]
        ps = [ds.IntPolynomial(p) for p in doc["polynomials"]]
        return ds.correlation_sequence(S, gs, ps)
    raise InputError(f"unknown weight type {t!r}")        # unreachable after validation
