"""Command line interface: ``ccx generate | norm | extract | sweep | verify``.

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 numerical
failure.  Every JSON record and CSV row carries the quadrature settings and
a hash of the normalized invocation, so identical invocations give
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from . import __version__, acceptance
from .bubbles import (DEFAULT_S_MAX, concentration, gen_anisotropic, gen_custom, gen_diffeo, gen_flattening,
                      gen_matrix, gen_moser, gen_same_scale_pair, gen_two_scale_sum, gen_translate_away,
                      matrix_conditions, moser_profile, translate_profile)
from .errors import BadInput, BadRange, NumericalFailure
from .extract import ExtractionConfig, decompose
from .field import BaseField, Disc, QuadratureSpec
from .io import field_to_json, load_field, profile_from_json, save_field
from .orlicz import dirichlet_energy, l2_norm, orlicz_norm, tm_refined_functional
from .profile import Triplet

log = logging.getLogger("ccx")

EXIT_OK, EXIT_FAIL, EXIT_BAD_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

FAMILIES = ["moser", "anisotropic", "diffeo", "matrix", "same_scale_pair", "two_scale_sum", "translate_away",
            "flattening", "custom_sum"]
SWEEP_FAMILIES = FAMILIES[:-1] + ["translated"]
NORMS = ["l2", "energy", "orlicz", "orlicz-region", "tm"]


# ---------------------------------------------------------------------------
# parsing helpers

def _floats(text: str, n: int | None, flag: str) -> tuple[float, ...]:
    if not text.strip() and n is None:
        return ()
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise BadInput(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise BadInput(f"{flag} expects {n} comma-separated numbers, got {len(vals)}")
    return vals


def _hash(obj: Any) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def manifest(command: str, params: dict[str, Any], spec: QuadratureSpec, seed: int = 0,
             outputs: Sequence[str] = ()) -> dict[str, Any]:
    params = {k: v for k, v in sorted(params.items()) if v is not None}
    body = {"command": command, "params": params, "seed": seed, "tool_version": __version__,
            "outputs": list(outputs), "quadrature": spec.to_json(),
            "quad_profile": os.environ.get("CCX_QUAD_PROFILE", "default")}
    return {**body, "config_hash": _hash(body)}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# generate

def build_family(family: str, p: dict[str, Any]) -> tuple[BaseField, dict[str, Any]]:
    """Instantiate a generator family from flag values; returns the field and extra echo values."""
    alpha = p.get("alpha")
    need_alpha = family not in ("flattening", "custom_sum", "translate_away")
    if need_alpha and alpha is None:
        raise BadInput(f"{family} needs --alpha")
    core = p.get("core") or (0.0, 0.0)
    echo: dict[str, Any] = {}
    if family == "moser":
        return gen_moser(alpha), echo
    if family == "translated":
        return concentration(alpha, core, translate_profile(moser_profile(), p.get("a") or 0.0)), echo
    if family == "anisotropic":
        return gen_anisotropic(alpha, p.get("a") or 2.0, p.get("b") or 0.5), echo
    if family == "diffeo":
        return gen_diffeo(alpha, phi=p.get("phi") or "shear:1"), echo
    if family == "matrix":
        if p.get("A") is None:
            raise BadInput("matrix needs --A m11,m12,m21,m22")
        A = [list(p["A"][:2]), list(p["A"][2:])]
        field = gen_matrix(alpha, A)
        echo = matrix_conditions(alpha, A)
        return field, echo
    if family == "same_scale_pair":
        return gen_same_scale_pair(alpha), echo
    if family == "two_scale_sum":
        if p.get("beta") is None:
            raise BadInput("two_scale_sum needs --beta")
        a = 1.0 if p.get("a") is None else p["a"]
        b = 1.0 if p.get("b") is None else p["b"]
        return gen_two_scale_sum(a, b, alpha, p["beta"], core), echo
    if family == "translate_away":
        base = gen_moser(1.0 if alpha is None else alpha)
        return gen_translate_away(base, core), echo
    if family == "flattening":
        n = p.get("a")
        if n is None:
            raise BadInput("flattening needs --a (the flattening index n)")
        return gen_flattening(n), echo
    if family == "custom_sum":
        if not p.get("config"):
            raise BadInput("custom_sum needs --config with a list of concentrations")
        obj = json.loads(Path(p["config"]).read_text())
        items = obj["concentrations"] if isinstance(obj, dict) else obj
        trs = [Triplet(float(c["alpha"]), tuple(c.get("core", (0.0, 0.0))),
                       profile_from_json(c.get("profile", {"kind": "moser", "s_max": DEFAULT_S_MAX})))
               for c in items]
        coefs = obj.get("coefs") if isinstance(obj, dict) else None
        return gen_custom(trs, coefs), echo
    raise BadInput(f"unknown family {family!r}")


def _family_params(args) -> dict[str, Any]:
    return {"alpha": args.alpha, "beta": args.beta, "a": args.a, "b": args.b,
            "core": _floats(args.core, 2, "--core") if args.core else None,
            "A": _floats(args.A, 4, "--A") if args.A else None,
            "phi": args.phi, "config": args.config}


def cmd_generate(args) -> int:
    spec = QuadratureSpec.from_env()
    params = _family_params(args)
    field, echo = build_family(args.family, params)
    out = args.out or f"{args.family}.json"
    save_field(field, out)
    record = {"family": args.family, "file": out, "support_radius": field.support_radius, "echo": echo,
              "manifest": manifest("generate", {**params, "family": args.family}, spec, args.seed, [out])}
    sys.stdout.write(_dump(record))
    return EXIT_OK


# ---------------------------------------------------------------------------
# norm

def _norm_value(field: BaseField, which: str, spec: QuadratureSpec, region=None) -> dict[str, float]:
    if which == "l2":
        return {"l2": l2_norm(field, spec)}
    if which == "energy":
        return {"energy": dirichlet_energy(field, spec)}
    if which == "orlicz":
        return {"orlicz": orlicz_norm(field, spec=spec)}
    if which == "orlicz-region":
        return {"orlicz": orlicz_norm(field, spec=spec, region=region)}
    if which == "tm":
        res = tm_refined_functional(field, spec)
        return {"tm": res.value, "tm_ratio": res.ratio}
    raise BadInput(f"unknown norm {which!r}")


def cmd_norm(args) -> int:
    spec = QuadratureSpec.from_env()
    field = load_field(args.field)
    region = None
    if args.which == "orlicz-region":
        if args.radius is None:
            raise BadInput("orlicz-region needs --radius")
        region = Disc(_floats(args.core, 2, "--core") if args.core else (0.0, 0.0), args.radius)
    values = _norm_value(field, args.which, spec, region)
    params = {"field": _hash(field_to_json(field)), "which": args.which, "core": args.core, "radius": args.radius}
    record = {"which": args.which, "values": values, "manifest": manifest("norm", params, spec, args.seed, [args.out] if args.out else [])}
    _emit(_dump(record), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# extract

def cmd_extract(args) -> int:
    spec = QuadratureSpec.from_env()
    try:
        field = load_field(args.field)
        cfg = ExtractionConfig.from_json(json.loads(Path(args.config).read_text())) if args.config \
            else ExtractionConfig()
    except OSError as exc:
        raise NumericalFailure(f"cannot read input: {exc}") from exc
    rep = decompose(field, cfg, spec)
    record = rep.to_json()
    record["manifest"] = manifest("extract", {"field": _hash(field_to_json(field)), "config": cfg.to_json()}, spec,
                                  args.seed, [args.out] if args.out else [])
    try:
        _emit(_dump(record), args.out)
    except OSError as exc:
        raise NumericalFailure(f"cannot write report: {exc}") from exc
    if rep.triplets:
        led = rep.energy_ledger
        log.info("%d triplets, ledger residual %.4g of input energy %.4g", len(rep.triplets),
                 led.get("residual", math.nan), led.get("input", math.nan))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

SWEEP_KEYS = ("alpha", "beta", "a", "b")


def sweep_rows(family: str, ranges: dict[str, Sequence[float]], fixed: dict[str, Any], spec: QuadratureSpec,
               threads: int = 1) -> list[dict[str, Any]]:
    for k, vals in ranges.items():
        if len(vals) == 0:
            raise BadRange(f"empty range for --{k}")
    keys = list(ranges)
    combos = [dict(zip(keys, c)) for c in itertools.product(*(ranges[k] for k in keys))]
    if not combos:
        raise BadRange("empty parameter range")

    def one(params: dict[str, float]) -> dict[str, Any]:
        field, _ = build_family(family, {**fixed, **params})
        return {**params, "orlicz": orlicz_norm(field, spec=spec), "l2": l2_norm(field, spec),
                "energy": dirichlet_energy(field, spec)}

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, combos))
    return [one(c) for c in combos]


def cmd_sweep(args) -> int:
    spec = QuadratureSpec.from_env()
    ranges = {k: _floats(getattr(args, k), None, f"--{k}") if getattr(args, k) is not None else None
              for k in SWEEP_KEYS}
    ranges = {k: v for k, v in ranges.items() if v is not None}
    if not ranges:
        raise BadRange("sweep needs at least one of --alpha, --beta, --a, --b")
    fixed = {"core": _floats(args.core, 2, "--core") if args.core else None,
             "A": _floats(args.A, 4, "--A") if args.A else None, "phi": args.phi}
    rows = sweep_rows(args.family, ranges, fixed, spec, args.threads)
    man = manifest("sweep", {"family": args.family, "ranges": ranges, **fixed}, spec, args.seed,
                   [args.out] if args.out else [])
    buf = io.StringIO()
    cols = list(ranges) + ["orlicz", "l2", "energy", "config_hash", "quad_profile"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**{k: repr(float(v)) for k, v in r.items()},
                    "config_hash": man["config_hash"], "quad_profile": man["quad_profile"]})
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    if args.suite not in acceptance.SUITES:
        raise BadInput(f"unknown suite {args.suite!r}; choose from {', '.join(acceptance.SUITES)}")
    results = []
    for key in acceptance.SUITES[args.suite]:
        res = acceptance.run_check(key, seed=args.seed)
        print(res.line(), flush=True)
        results.append(res)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} passed")
    if args.out:
        Path(args.out).write_text(_dump({"suite": args.suite, "seed": args.seed,
                                         "checks": [r.to_json() for r in results]}))
    return EXIT_OK if n_pass == len(results) else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    parser = argparse.ArgumentParser(prog="ccx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def family_flags(p, numeric_type):
        p.add_argument("--alpha", type=numeric_type)
        p.add_argument("--beta", type=numeric_type)
        p.add_argument("--a", type=numeric_type, help="weight, stretch, shift or flattening index")
        p.add_argument("--b", type=numeric_type, help="second weight or stretch")
        p.add_argument("--core", help="x,y")
        p.add_argument("--A", help="m11,m12,m21,m22")
        p.add_argument("--phi", help="built-in diffeomorphism, e.g. shear:1")

    g = sub.add_parser("generate", parents=[common], help="write a field descriptor")
    g.add_argument("family", choices=FAMILIES)
    family_flags(g, float)
    g.add_argument("--config", help="concentration list for custom_sum")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    n = sub.add_parser("norm", parents=[common], help="evaluate a norm of a field descriptor")
    n.add_argument("field")
    n.add_argument("--which", choices=NORMS, default="orlicz")
    n.add_argument("--core", help="region center x,y for orlicz-region")
    n.add_argument("--radius", type=float, help="region radius for orlicz-region")
    n.add_argument("--out")
    n.set_defaults(func=cmd_norm)

    e = sub.add_parser("extract", parents=[common], help="profile decomposition of a field descriptor")
    e.add_argument("field")
    e.add_argument("--config")
    e.add_argument("--out")
    e.set_defaults(func=cmd_extract)

    s = sub.add_parser("sweep", parents=[common], help="norms over a parameter grid, as CSV")
    s.add_argument("family", choices=SWEEP_FAMILIES)
    family_flags(s, str)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    v.add_argument("suite", choices=list(acceptance.SUITES))
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
