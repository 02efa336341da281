"""JSON descriptors for fields and radial functions.

A plain field is

    {"type": "field",
     "concentrations": [{"alpha": 40.0, "core": [0, 0], "profile": {...}}],
     "background": {...} | null,
     "transform": {"kind": ..., "params": {...}} | null,
     "support_radius": 1.0}

where a profile is either ``{"kind": "moser"}`` (optionally with ``s_max``
and ``shift``) or the sampled form ``{"grid": [...], "derivative": [...],
"s_max": ...}``.  Lazy combinations nest: ``{"type": "sum", "terms": [...],
"coefs": [...]}``, ``{"type": "radial", "s": [...], "values": [...],
"center": [x, y]}`` and ``{"type": "cutoff", "alpha", "a", "M", "inner"}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import BadInput
from .field import BaseField, Field, MappedField, RadialField, SumField, background_from_json, map_from_json
from .profile import Profile, Triplet

__all__ = ["field_to_json", "field_from_json", "profile_from_json", "load_field", "save_field"]


def profile_from_json(obj: dict[str, Any]) -> Profile:
    from .bubbles import DEFAULT_S_MAX, moser_profile, ramp_profile, translate_profile

    kind = obj.get("kind")
    if kind is None:
        return Profile.from_json(obj)
    s_max = float(obj.get("s_max", DEFAULT_S_MAX))
    if kind == "moser":
        psi = moser_profile(s_max)
    elif kind == "ramp":
        psi = ramp_profile(s_max)
    else:
        raise BadInput(f"unknown profile kind {kind!r}")
    shift = float(obj.get("shift", 0.0))
    return translate_profile(psi, shift) if shift else psi


def field_to_json(field: BaseField) -> dict[str, Any]:
    if isinstance(field, Field):
        return {
            "type": "field",
            "concentrations": [{"alpha": t.alpha, "core": list(t.core), "profile": t.profile.to_json()}
                               for t in field.concentrations],
            "background": field.background.to_json() if field.background is not None else None,
            "transform": field.transform.to_json(),
            "support_radius": field.support_radius,
        }
    if isinstance(field, SumField):
        return {"type": "sum", "terms": [field_to_json(f) for f in field.terms], "coefs": list(field.coefs)}
    if isinstance(field, RadialField):
        return {"type": "radial", "s": field.s.tolist(), "values": field.values.tolist(),
                "center": list(field.center)}
    if isinstance(field, MappedField) and field.label == "cutoff":
        return {"type": "cutoff", **field.params, "inner": field_to_json(field.inner)}
    raise BadInput(f"cannot serialize {type(field).__name__}")


def field_from_json(obj: dict[str, Any]) -> BaseField:
    from .bubbles import apply_cutoff

    kind = obj.get("type", "field")
    if kind == "field":
        trs = [Triplet(c["alpha"], tuple(c["core"]), profile_from_json(c["profile"]))
               for c in obj.get("concentrations", [])]
        return Field(trs, background_from_json(obj.get("background")), map_from_json(obj.get("transform")),
                     obj.get("support_radius"))
    if kind == "sum":
        return SumField([field_from_json(t) for t in obj["terms"]], obj.get("coefs"))
    if kind == "radial":
        return RadialField(obj["s"], obj["values"], tuple(obj.get("center", (0.0, 0.0))))
    if kind == "cutoff":
        return apply_cutoff(field_from_json(obj["inner"]), obj["alpha"], obj["a"], obj["M"])
    raise BadInput(f"unknown field type {kind!r}")


def save_field(field: BaseField, path: str | Path) -> None:
    Path(path).write_text(json.dumps(field_to_json(field), indent=2, sort_keys=True) + "\n")


def load_field(path: str | Path) -> BaseField:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BadInput(f"{path}: not valid JSON ({exc})") from exc
    return field_from_json(obj)
