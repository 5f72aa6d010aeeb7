"""JSON system descriptions: a chart, a Lichnerowicz pair and named observables.

Example::

    {
      "chart": {"name": "contact3", "coords": ["q", "p", "z"]},
      "pi": {"q,p": "-1", "p,z": "p"},
      "r": ["0", "0", "-1"],
      "unit_conversions": ["2 + q^2"],
      "hamiltonians": {"oscillator": "(q^2 + p^2)/2"},
      "constraints": {"zero_section": ["z"]},
      "sample": {"seed": 0, "count": 100, "box": {"q": [-2, 2]}},
      "x0": [1, 0, 0]
    }

``pi`` keys name a strict-upper-triangle entry either by coordinate names
or by 0-based positions (``"0,1"``).  Everything except ``chart`` is
optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import expr as E
from .expr import Chart
from .jacobi import LichnerowiczStructure

__all__ = ["SystemDescription", "DescriptionError", "load_description", "parse_description",
           "resolve_path", "bundled_names"]


class DescriptionError(ValueError):
    """A system description that cannot be turned into a structure."""


@dataclass(frozen=True)
class SystemDescription:
    structure: LichnerowiczStructure
    hamiltonians: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    unit_conversions: tuple = ()
    sample: dict = field(default_factory=dict)
    x0: tuple | None = None
    source: str = ""

    @property
    def chart(self) -> Chart:
        return self.structure.chart


def bundled_names() -> list:
    root = resources.files("unitfree.data")
    return sorted(p.name for p in root.iterdir()
                  if p.name.endswith(".json") and p.name != "factors.json" and not p.name.endswith("-points.json"))


def resolve_path(path: str):
    """A local file if it exists, otherwise a bundled file of that name (``.json`` optional)."""
    p = Path(path)
    if p.exists():
        return p
    root = resources.files("unitfree.data")
    for name in (path, path + ".json"):
        cand = root.joinpath(name)
        if "/" not in name and cand.is_file():
            return cand
    raise FileNotFoundError(f"no such file: {path}")


def _expr(text, where):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return E.Constant(text)
    if not isinstance(text, str):
        raise DescriptionError(f"{where}: expected an expression string, got {text!r}")
    return E.parse(text)


def _parse_expr(text, where):
    from .errors import ExprError
    try:
        return _expr(text, where)
    except (ExprError, SyntaxError) as exc:
        raise DescriptionError(f"{where}: {exc}") from None


def parse_description(data: dict, source: str = "<memory>") -> SystemDescription:
    if not isinstance(data, dict):
        raise DescriptionError("top level must be a JSON object")
    try:
        ch = data["chart"]
        chart = Chart(str(ch.get("name", "M")), tuple(ch["coords"]))
    except (KeyError, TypeError, AttributeError) as exc:
        raise DescriptionError(f"chart must be an object with 'coords': {exc}") from None
    except ValueError as exc:
        raise DescriptionError(f"chart: {exc}") from None
    upper = {}
    for key, text in dict(data.get("pi", {})).items():
        parts = [s.strip() for s in str(key).split(",")]
        if len(parts) != 2:
            raise DescriptionError(f"pi key {key!r} must look like 'i,j'")
        idx = []
        for s in parts:
            if s.lstrip("-").isdigit():
                k = int(s)
                if not 0 <= k < chart.dim:
                    raise DescriptionError(f"pi index {k} out of range for dim {chart.dim}")
            elif s in chart.coords:
                k = chart.coords.index(s)
            else:
                raise DescriptionError(f"pi key {key!r}: {s!r} is not a coordinate")
            idx.append(k)
        if idx[0] >= idx[1]:
            raise DescriptionError(f"pi key {key!r} is not in the strict upper triangle")
        upper[tuple(idx)] = _parse_expr(text, f"pi[{key}]")
    r = data.get("r")
    if r is None:
        r = ["0"] * chart.dim
    if not isinstance(r, list) or len(r) != chart.dim:
        raise DescriptionError(f"r must be a list of {chart.dim} expressions")
    rv = [_parse_expr(t, f"r[{i}]") for i, t in enumerate(r)]
    every = list(upper.values()) + rv
    ham = {str(k): _parse_expr(v, f"hamiltonians.{k}") for k, v in dict(data.get("hamiltonians", {})).items()}
    cons = {}
    for k, v in dict(data.get("constraints", {})).items():
        if not isinstance(v, list) or not v:
            raise DescriptionError(f"constraints.{k} must be a nonempty list")
        cons[str(k)] = [_parse_expr(t, f"constraints.{k}") for t in v]
    conv = tuple(_parse_expr(t, "unit_conversions") for t in data.get("unit_conversions", []) or [])
    every += list(ham.values()) + [e for v in cons.values() for e in v] + list(conv)
    try:
        chart.check(*every)
        structure = LichnerowiczStructure(chart, upper, rv, name=chart.name)
    except ValueError as exc:
        raise DescriptionError(str(exc)) from None
    sample = dict(data.get("sample", {}) or {})
    box = sample.get("box", {}) or {}
    for k, v in box.items():
        if k not in chart.coords or not (isinstance(v, list) and len(v) == 2 and v[0] < v[1]):
            raise DescriptionError(f"sample.box entry {k!r} must be a coordinate with [low, high]")
    x0 = data.get("x0")
    if x0 is not None:
        if not isinstance(x0, list) or len(x0) != chart.dim:
            raise DescriptionError(f"x0 must list {chart.dim} numbers")
        x0 = tuple(float(v) for v in x0)
    return SystemDescription(structure, ham, cons, conv, sample, x0, source)


def load_description(path: str) -> SystemDescription:
    """Read a description file, falling back to the bundled examples."""
    p = resolve_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DescriptionError(f"{path}: invalid JSON: {exc}") from None
    return parse_description(data, str(path))
