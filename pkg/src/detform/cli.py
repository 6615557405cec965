"""Experiment runner.

    python -m detform eval --route direct --triple golden
    python -m detform check --symmetry permutations --triple golden
    python -m detform sharpness --p 2 --q 4 --r 4 --N 14
    python -m detform commutator --route kappa
    python -m detform certificate --exponents 3 3 3
    python -m detform schema

Every run is described by a JSON config (file given by --config or the
DETFORM_CONFIG environment variable, then overridden by flags).  The config
is validated against CONFIG_SCHEMA; unknown keys are rejected.  Records are
written as JSON lines, sweeps additionally as CSV.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
import time
from datetime import datetime, timezone

import jsonschema
import numpy as np

from .commutator import (calibrated_constant, commutator_kappa, commutator_pairing_direct, commutator_via_lambda,
                         reference_inputs)
from .fiberwise import hoelder_certificate
from .golden import golden_triple, projective_triple, random_matrix, random_triple
from .quadrature import EvalResult, QuadratureSpec, _jsonable
from .routes import ROUTES, evaluate
from .schwartz import ExponentTriple, SchwartzMix
from .sharpness import (CounterexampleSpec, counterexample_norms, cumulative_ratios,
                        lambda_counterexample_terms)
from .symmetries import (ROTATION, check_alternating, check_dilation, check_modulation,
                         check_permutations, check_projective)

CONFIG_ENV = "DETFORM_CONFIG"
COMMANDS = ("eval", "check", "sharpness", "commutator", "certificate")
SYMMETRIES = ("permutations", "alternating", "dilation", "modulation", "projective")
SHARPNESS_HEADER = ("n", "term", "lower_bound", "cumulative_ratio")

_MIX = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dim", "atoms"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1, "maximum": 2},
        "atoms": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["amp", "center", "modulation", "shape"],
                "properties": {
                    "amp": {"oneOf": [{"type": "number"},
                                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]},
                    "center": {"type": "array", "items": {"type": "number"}},
                    "modulation": {"type": "array", "items": {"type": "number"}},
                    "shape": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                },
            },
        },
    },
}

_NUM3 = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 3, "maxItems": 3}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "detform experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "triple": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["golden", "projective", "random"]},
                "seed": {"type": "integer", "minimum": 0},
                "atoms": {"type": "integer", "minimum": 1},
                "mixes": {"type": "array", "items": _MIX, "minItems": 3, "maxItems": 3},
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_depth": {"type": "integer", "minimum": 1},
                "max_evals": {"type": "integer", "minimum": 1},
                "pv_epsilon0": {"type": "number", "exclusiveMinimum": 0},
                "domain_cutoff_radius": {"type": "number", "exclusiveMinimum": 0},
                "singular_angle_margin": {"type": "number", "minimum": 0},
                "inner_order": {"type": "integer", "minimum": 4},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "route": {"enum": list(ROUTES)},
        "symmetry": {"enum": list(SYMMETRIES)},
        "count": {"type": "integer", "minimum": 1},
        "matrices": {"type": "array", "items": {"enum": ["identity", "blockdiag", "rotation"]}},
        "spectrum_level": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": ["string", "null"]},
        "csv": {"type": ["string", "null"]},
        "sharpness": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "number"}, "q": {"type": "number"}, "r": {"type": "number"},
                "N": {"type": "integer"}, "delta": {"type": "number"}, "n_min": {"type": "integer"},
            },
        },
        "commutator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "route": {"enum": ["direct", "kappa", "lambda"]},
                "eta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                "calibrate": {"type": "boolean"},
                "exponents": _NUM3,
                "inputs": {"type": "array", "items": _MIX, "minItems": 3, "maxItems": 3},
            },
        },
        "certificate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "exponents": _NUM3,
                "mixed": {"type": ["array", "null"], "minItems": 3, "maxItems": 3,
                          "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
            },
        },
    },
}

DEFAULTS = {
    "triple": {"name": "golden"},
    "quadrature": {},
    "route": "direct",
    "symmetry": "permutations",
    "count": 3,
    "matrices": ["identity", "blockdiag", "rotation"],
    "spectrum_level": 1e-16,
    "seed": 0,
    "output": None,
    "csv": None,
    "sharpness": {"p": 2.0, "q": 4.0, "r": 4.0, "N": 16, "delta": 0.01, "n_min": 10},
    "commutator": {"route": "kappa", "eta": 0.05, "calibrate": True, "exponents": [3.0, 3.0, 3.0]},
    "certificate": {"exponents": [3.0, 3.0, 3.0], "mixed": None},
}

# keys that only say where results go; they do not enter the config hash
_OUTPUT_KEYS = ("output", "csv")


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None


def normalize_config(cfg: dict) -> dict:
    """Validate and fill defaults (nested sections are merged key by key)."""
    validate_config(cfg)
    out = copy.deepcopy(DEFAULTS)
    for k, v in cfg.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **copy.deepcopy(v)}
        else:
            out[k] = copy.deepcopy(v)
    out["quadrature"] = QuadratureSpec.from_dict(out["quadrature"]).to_dict()
    validate_config(out)
    return out


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k not in _OUTPUT_KEYS}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def build_triple(spec: dict):
    if "mixes" in spec:
        mixes = tuple(SchwartzMix.from_json(m) for m in spec["mixes"])
        if any(m.dim != 2 for m in mixes):
            raise ConfigError("triple mixes must be two-dimensional")
        return mixes
    name = spec.get("name", "golden")
    if name == "golden":
        return golden_triple()
    if name == "projective":
        return projective_triple()
    return random_triple(spec.get("seed", 0), spec.get("atoms", 1))


def _commutator_inputs(spec: dict):
    if "inputs" in spec:
        F, G, H = (SchwartzMix.from_json(m) for m in spec["inputs"])
        if any(m.dim != 1 for m in (F, G, H)):
            raise ConfigError("commutator inputs must be one-dimensional")
        return F, G, H
    ref = reference_inputs()
    return ref.F, ref.G, ref.H


# ---------------------------------------------------------------------------
# Commands; each yields (EvalResult, extra diagnostics, passed or None)
# ---------------------------------------------------------------------------

def _run_eval(cfg, quad):
    f, g, h = build_triple(cfg["triple"])
    yield evaluate(cfg["route"], f, g, h, quad), {}, None


def _report(rep):
    d = rep.to_record()
    d.pop("lhs")
    return rep.lhs, {"report": d, "rhs": rep.rhs.to_record()}, rep.passed


def _run_check(cfg, quad):
    f, g, h = build_triple(cfg["triple"])
    sym, route = cfg["symmetry"], cfg["route"]
    rng = np.random.default_rng(cfg["seed"])
    if sym == "permutations":
        for rep in check_permutations(f, g, h, route, quad):
            yield _report(rep)
    elif sym == "alternating":
        yield _report(check_alternating(f, h, route, quad))
    elif sym == "dilation":
        base = evaluate(route, f, g, h, quad)
        n = cfg["count"]
        for k in range(n):
            A = random_matrix(rng, negative=True if k == n - 1 else None)
            yield _report(check_dilation(f, g, h, A, route, quad, base=base))
    elif sym == "modulation":
        base = evaluate(route, f, g, h, quad)
        for _ in range(cfg["count"]):
            yield _report(check_modulation(f, g, h, rng.uniform(-1, 1, 2), route, quad, base=base))
    else:
        level = cfg["spectrum_level"]
        for name in cfg["matrices"]:
            if name == "identity":
                M = np.eye(3)
            elif name == "blockdiag":
                M = np.eye(3)
                M[1:, 1:] = random_matrix(rng)
            else:
                M = ROTATION
            yield _report(check_projective(f, g, h, M, quad, level=level))


def _run_commutator(cfg, quad):
    spec = cfg["commutator"]
    F, G, H = _commutator_inputs(spec)
    if spec["route"] == "direct":
        res = commutator_pairing_direct(F, G, H, quad)
    elif spec["route"] == "kappa":
        res = commutator_kappa(F, G, H, quad)
    else:
        const = calibrated_constant(quad, spec["eta"]) if spec["calibrate"] else None
        res = commutator_via_lambda(F, G, H, ExponentTriple(*spec["exponents"]), spec["eta"], quad,
                                    constant=const)
    yield res, {}, None


def _run_certificate(cfg, quad):
    f, g, h = build_triple(cfg["triple"])
    spec = cfg["certificate"]
    mixed = tuple(tuple(p) for p in spec["mixed"]) if spec["mixed"] else None
    cert = hoelder_certificate(f, g, h, ExponentTriple(*spec["exponents"], mixed=mixed), quad)
    res = EvalResult(cert.bound if cert.finite else complex(np.inf), 0.0, "certificate")
    yield res, {"certificate": cert.to_record()}, cert.finite


def sharpness_rows(cfg, quad):
    s = cfg["sharpness"]
    spec = CounterexampleSpec(s["p"], s["q"], s["r"], s["N"], s["delta"], s["n_min"])
    terms = lambda_counterexample_terms(spec, range(spec.n_min, spec.N + 1), quad)
    ratios = cumulative_ratios(spec, terms, quad)
    norms = counterexample_norms(spec, quad)
    return spec, terms, ratios, norms


def _run_sharpness(cfg, quad, csv_rows):
    spec, terms, ratios, norms = sharpness_rows(cfg, quad)
    for t, ratio in zip(terms, ratios):
        csv_rows.append((t.n, t.term, t.lower_bound, ratio))
        extra = {"term": t.to_record(), "cumulative_ratio": ratio,
                 "norms": {"f": norms.f, "g": norms.g, "h": norms.h, "g_series": norms.g_series,
                           "h_series": norms.h_series, "f_closed": norms.f_closed}}
        yield EvalResult(t.term, t.error, "sharpness"), extra, t.meets_lower_bound


def run(cfg: dict, out=None, csv_out=None) -> bool:
    """Run a normalized config, writing JSON lines to ``out``; returns overall pass."""
    quad = QuadratureSpec.from_dict(cfg["quadrature"])
    chash = config_hash(cfg)
    cmd = cfg["command"]
    csv_rows = []
    if cmd == "eval":
        stream = _run_eval(cfg, quad)
    elif cmd == "check":
        stream = _run_check(cfg, quad)
    elif cmd == "commutator":
        stream = _run_commutator(cfg, quad)
    elif cmd == "certificate":
        stream = _run_certificate(cfg, quad)
    else:
        stream = _run_sharpness(cfg, quad, csv_rows)

    ok = True
    t0 = time.perf_counter()
    for res, extra, passed in stream:
        t1 = time.perf_counter()
        rec = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config_hash": chash,
            "command": cmd,
            **res.to_record(),
            "runtime": t1 - t0,
        }
        rec["diagnostics"].update(_jsonable(extra))
        if passed is not None:
            rec["pass"] = bool(passed)
            ok = ok and bool(passed)
        if out is not None:
            out.write(json.dumps(rec) + "\n")
            out.flush()
        t0 = t1
    if csv_rows and csv_out is not None:
        w = csv.writer(csv_out, lineterminator="\n")
        w.writerow(SHARPNESS_HEADER)
        for row in csv_rows:
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
    return ok


def strip_volatile(rec: dict) -> dict:
    """Record without timestamp and runtime, for determinism comparisons."""
    return {k: v for k, v in rec.items() if k not in ("timestamp", "runtime")}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    p.add_argument("--output", "-o", help="JSON-lines output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--abs-tol", type=float)
    p.add_argument("--max-evals", type=int)


def _triple_args(p: argparse.ArgumentParser):
    p.add_argument("--triple", choices=["golden", "projective", "random"])
    p.add_argument("--triple-seed", type=int, help="seed of the random triple")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detform", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate the form on a triple")
    _common(p)
    _triple_args(p)
    p.add_argument("--route", choices=ROUTES)

    p = sub.add_parser("check", help="run a symmetry check")
    _common(p)
    _triple_args(p)
    p.add_argument("--symmetry", choices=SYMMETRIES)
    p.add_argument("--route", choices=ROUTES)
    p.add_argument("--count", type=int)
    p.add_argument("--matrices", nargs="+", choices=["identity", "blockdiag", "rotation"])
    p.add_argument("--spectrum-level", type=float)

    p = sub.add_parser("sharpness", help="dyadic counterexample sweep (CSV)")
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--csv", help="CSV path (default: stdout when --output is given, else stdout after records)")

    p = sub.add_parser("commutator", help="Calderon commutator pairing")
    _common(p)
    p.add_argument("--route", choices=["direct", "kappa", "lambda"])
    p.add_argument("--eta", type=float)
    p.add_argument("--no-calibrate", dest="calibrate", action="store_false", default=None,
                   help="divide by the sharp-indicator constant instead of the reference-triple ratio")

    p = sub.add_parser("certificate", help="Hoelder certificate for a triple")
    _common(p)
    _triple_args(p)
    p.add_argument("--exponents", type=float, nargs=3)
    p.add_argument("--mixed", type=float, nargs=6, metavar=("P1", "P2", "Q1", "Q2", "R1", "R2"))

    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def config_from_args(args) -> dict:
    cfg = load_config(getattr(args, "config", None))
    if "command" in cfg and cfg["command"] != args.command:
        raise ConfigError(f"config command {cfg['command']!r} does not match {args.command!r}")
    cfg["command"] = args.command

    def section(name):
        return cfg.setdefault(name, {})

    quad = {"rel_tol": args.rel_tol, "abs_tol": args.abs_tol, "max_evals": args.max_evals}
    for k, v in quad.items():
        if v is not None:
            section("quadrature")[k] = v
    for key in ("seed", "output"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    if getattr(args, "triple", None) is not None:
        cfg["triple"] = {"name": args.triple}
    if getattr(args, "triple_seed", None) is not None:
        section("triple")["seed"] = args.triple_seed
        section("triple").setdefault("name", "random")

    cmd = args.command
    if cmd in ("eval", "check") and args.route is not None:
        cfg["route"] = args.route
    if cmd == "check":
        for key in ("symmetry", "count", "matrices", "spectrum_level"):
            if getattr(args, key) is not None:
                cfg[key] = getattr(args, key)
    elif cmd == "sharpness":
        for key in ("p", "q", "r", "N"):
            if getattr(args, key) is not None:
                section("sharpness")[key] = getattr(args, key)
        if args.csv is not None:
            cfg["csv"] = args.csv
    elif cmd == "commutator":
        if args.route is not None:
            section("commutator")["route"] = args.route
        if args.eta is not None:
            section("commutator")["eta"] = args.eta
        if args.calibrate is not None:
            section("commutator")["calibrate"] = args.calibrate
    elif cmd == "certificate":
        if args.exponents is not None:
            section("certificate")["exponents"] = list(args.exponents)
        if args.mixed is not None:
            m = args.mixed
            section("certificate")["mixed"] = [m[0:2], m[2:4], m[4:6]]
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    try:
        cfg = normalize_config(config_from_args(args))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_path, csv_path = cfg["output"], cfg["csv"]
    out = open(out_path, "w") if out_path else sys.stdout
    csv_buf = io.StringIO()
    try:
        ok = run(cfg, out, csv_buf)
    except Exception as exc:  # surfaced with a nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    finally:
        if out_path:
            out.close()
    if csv_buf.getvalue():
        if csv_path:
            with open(csv_path, "w") as fh:
                fh.write(csv_buf.getvalue())
        else:
            sys.stdout.write(csv_buf.getvalue())
    if cfg["command"] in ("check", "certificate") and not ok:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
