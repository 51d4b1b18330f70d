"""Flow-map JSON documents.

Schema::

    {"variables": ["v", "w"],
     "maps": {"v": [{"c": "3", "e": {"v": 2}}, ...], "w": [...]}}

Coefficients are decimal strings; exact rationals are written ``"p/q"``.
Exponent maps omit zero entries.  Serialization is canonical: variables
alphabetical, terms graded-lex, so equal maps produce identical bytes and
the document hash is stable.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .errors import FlowMapParseError
from .poly import FlowMap, Polynomial


def _format_coefficient(c) -> str:
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return str(c.numerator)
        return f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def _parse_coefficient(raw, field: str):
    if isinstance(raw, str):
        text = raw.strip()
        try:
            if "/" in text:
                return Fraction(text)
            try:
                return Fraction(int(text))
            except ValueError:
                return float(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise FlowMapParseError(f"bad coefficient {raw!r}: {exc}", field) from None
    if isinstance(raw, bool):
        raise FlowMapParseError(f"bad coefficient {raw!r}", field)
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return raw
    raise FlowMapParseError(f"coefficient must be a string or number, got {type(raw).__name__}", field)


def serialize_flowmap(f: FlowMap) -> str:
    variables = sorted(f.variables)
    doc: dict = {"variables": variables, "maps": {}}
    for name in variables:
        poly = f.components[name]
        named = []
        for m in poly.monomials():
            exps = tuple(m.exponents.get(v, 0) for v in variables)
            named.append((exps, m.coefficient))
        named.sort(key=lambda item: (sum(item[0]), item[0]))
        doc["maps"][name] = [
            {
                "c": _format_coefficient(coef),
                "e": {v: e for v, e in zip(variables, exps) if e},
            }
            for exps, coef in named
        ]
    return json.dumps(doc, indent=2, sort_keys=False)


def parse_flowmap(text: str) -> FlowMap:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FlowMapParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FlowMapParseError("document root must be an object")
    variables = doc.get("variables")
    if not isinstance(variables, list) or not variables or not all(isinstance(v, str) for v in variables):
        raise FlowMapParseError("must be a non-empty list of strings", "variables")
    if len(set(variables)) != len(variables):
        raise FlowMapParseError("duplicate names", "variables")
    maps = doc.get("maps")
    if not isinstance(maps, dict):
        raise FlowMapParseError("must be an object keyed by variable", "maps")
    unknown = set(maps) - set(variables)
    if unknown:
        raise FlowMapParseError(f"components {sorted(unknown)} not in variables", "maps")
    missing = set(variables) - set(maps)
    if missing:
        raise FlowMapParseError(f"missing components {sorted(missing)}", "maps")

    variables = tuple(variables)
    index = {v: i for i, v in enumerate(variables)}
    components = {}
    for name, entries in maps.items():
        if not isinstance(entries, list):
            raise FlowMapParseError("component must be a list of terms", f"maps.{name}")
        terms: dict[tuple, object] = {}
        for i, entry in enumerate(entries):
            field = f"maps.{name}[{i}]"
            if not isinstance(entry, dict) or "c" not in entry:
                raise FlowMapParseError("term must be an object with 'c' and 'e'", field)
            coef = _parse_coefficient(entry["c"], f"{field}.c")
            exp_map = entry.get("e", {})
            if not isinstance(exp_map, dict):
                raise FlowMapParseError("'e' must be an object", f"{field}.e")
            exps = [0] * len(variables)
            for v, e in exp_map.items():
                if v not in index:
                    raise FlowMapParseError(f"unknown variable {v!r}", f"{field}.e")
                if not isinstance(e, int) or isinstance(e, bool) or e < 0:
                    raise FlowMapParseError(f"exponent for {v!r} must be a non-negative integer", f"{field}.e")
                exps[index[v]] = e
            key = tuple(exps)
            # duplicate exponent vectors merge by coefficient addition
            terms[key] = terms.get(key, 0) + coef
        components[name] = Polynomial(variables, {k: c for k, c in terms.items() if c != 0})
    return FlowMap(variables, components)


def load_flowmap(path) -> FlowMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_flowmap(fh.read())


def save_flowmap(f: FlowMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_flowmap(f))
        fh.write("\n")


def content_hash(f: FlowMap) -> str:
    """Stable sha256 of the canonical serialization; identifies map content."""
    return hashlib.sha256(serialize_flowmap(f).encode("utf-8")).hexdigest()
