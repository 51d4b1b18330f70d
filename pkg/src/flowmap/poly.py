"""Sparse multivariate polynomials and the flow maps built from them.

A polynomial is stored as a mapping from exponent tuples (aligned with an
ordered variable list) to nonzero coefficients.  Coefficients are exact
``Fraction`` values when a map was derived by fault enumeration and plain
floats when it was loaded from a file or fitted; arithmetic follows normal
numeric promotion, so mixing the two degrades to float.

A flow map bundles one polynomial per location variable.  Applying it once
gives the location failure probabilities after one level of recursive
simulation; iterating or composing it gives deeper levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    CompositionOverflowError,
    ProbabilityRangeError,
    VariableBindingError,
)

Coefficient = Fraction | int | float

#: Beyond this many terms a symbolic composition aborts; iterate numerically.
DEFAULT_TERM_CAP = 10**6

#: Negative evaluation results larger than this are treated as derivation bugs.
NEGATIVE_CLAMP = 1e-15


def _normalize_coefficient(c: Coefficient) -> Fraction | float:
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, (Fraction, float)):
        return c
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


@dataclass(frozen=True)
class Monomial:
    """One term: a coefficient times a product of variable powers.

    ``exponents`` omits zero entries and the coefficient is never zero.
    """

    coefficient: Fraction | float
    exponents: Mapping[str, int]

    def __post_init__(self):
        if self.coefficient == 0:
            raise ValueError("monomial coefficient must be nonzero")
        if any(e <= 0 for e in self.exponents.values()):
            raise ValueError("exponent map must omit zero entries")

    @property
    def total_degree(self) -> int:
        return sum(self.exponents.values())


class FailureVector:
    """Per-location failure probabilities, each in [0, 1]."""

    __slots__ = ("values",)

    def __init__(self, values: Mapping[str, Coefficient]):
        vals = {}
        for name, v in values.items():
            if not 0 <= v <= 1:
                raise ProbabilityRangeError(f"{name}={v} is outside [0, 1]")
            vals[name] = v
        self.values = vals

    def __getitem__(self, name: str):
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, FailureVector) and self.values == other.values

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.values.items())
        return f"FailureVector({inner})"

    def as_dict(self) -> dict:
        return dict(self.values)

    def max_entry(self) -> float:
        return max(self.values.values())

    def min_entry(self) -> float:
        return min(self.values.values())


class Polynomial:
    """Sparse polynomial over named variables.

    Terms are keyed by exponent tuples aligned with ``variables``; no two
    terms share an exponent vector and zero coefficients are dropped.
    """

    __slots__ = ("variables", "terms", "_float_fn")

    def __init__(self, variables: Iterable[str], terms: Mapping[tuple, Coefficient]):
        self._float_fn = None
        self.variables: tuple[str, ...] = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        nvars = len(self.variables)
        clean: dict[tuple, Fraction | float] = {}
        for exps, coef in terms.items():
            exps = tuple(exps)
            if len(exps) != nvars:
                raise ValueError(f"exponent tuple {exps} does not match {nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            c = _normalize_coefficient(coef)
            if c != 0:
                clean[exps] = clean.get(exps, 0) + c if exps in clean else c
                if clean[exps] == 0:
                    del clean[exps]
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, variables: Iterable[str] = ()) -> "Polynomial":
        return cls(variables, {})

    @classmethod
    def constant(cls, value: Coefficient, variables: Iterable[str] = ()) -> "Polynomial":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, name: str, variables: Iterable[str]) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise VariableBindingError(f"variable {name!r} not among {variables}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    @classmethod
    def from_monomials(cls, variables: Iterable[str], monomials: Iterable[Monomial]) -> "Polynomial":
        variables = tuple(variables)
        index = {v: i for i, v in enumerate(variables)}
        terms: dict[tuple, Coefficient] = {}
        for m in monomials:
            exps = [0] * len(variables)
            for name, e in m.exponents.items():
                if name not in index:
                    raise VariableBindingError(f"monomial uses unknown variable {name!r}")
                exps[index[name]] = e
            key = tuple(exps)
            terms[key] = terms.get(key, 0) + m.coefficient
        return cls(variables, {k: c for k, c in terms.items() if c != 0})

    # -- inspection ----------------------------------------------------

    def monomials(self) -> list[Monomial]:
        out = []
        for exps, coef in self.terms.items():
            named = {v: e for v, e in zip(self.variables, exps) if e}
            out.append(Monomial(coef, named))
        return out

    def named_terms(self) -> dict[tuple, Fraction | float]:
        """Terms keyed by sorted (variable, exponent) pairs; order-independent."""
        out = {}
        for exps, coef in self.terms.items():
            key = tuple(sorted((v, e) for v, e in zip(self.variables, exps) if e))
            out[key] = coef
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def min_total_degree(self) -> int:
        if not self.terms:
            return 0
        return min(sum(e) for e in self.terms)

    def used_variables(self) -> set[str]:
        used = set()
        for exps in self.terms:
            for v, e in zip(self.variables, exps):
                if e:
                    used.add(v)
        return used

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.named_terms() == other.named_terms()

    def isclose(self, other: "Polynomial", rel: float = 1e-12) -> bool:
        """Coefficient-wise comparison: exact for rationals, relative for floats."""
        a, b = self.named_terms(), other.named_terms()
        if a.keys() != b.keys():
            return False
        for key, ca in a.items():
            cb = b[key]
            if isinstance(ca, Fraction) and isinstance(cb, Fraction):
                if ca != cb:
                    return False
            elif not math.isclose(float(ca), float(cb), rel_tol=rel, abs_tol=rel):
                return False
        return True

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for exps in sorted(self.terms, key=lambda e: (sum(e), e)):
            factors = [str(self.terms[exps])]
            for v, e in zip(self.variables, exps):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            parts.append("*".join(factors))
        return "Polynomial(" + " + ".join(parts) + ")"

    # -- arithmetic ----------------------------------------------------

    def _aligned(self, variables: tuple[str, ...]) -> "Polynomial":
        if variables == self.variables:
            return self
        index = {v: i for i, v in enumerate(variables)}
        for v in self.used_variables():
            if v not in index:
                raise VariableBindingError(f"variable {v!r} missing from target alignment")
        terms = {}
        for exps, coef in self.terms.items():
            new = [0] * len(variables)
            for v, e in zip(self.variables, exps):
                if e:
                    new[index[v]] = e
            terms[tuple(new)] = coef
        return Polynomial(variables, terms)

    @staticmethod
    def _merge_vars(a: "Polynomial", b: "Polynomial") -> tuple[str, ...]:
        merged = list(a.variables)
        merged.extend(v for v in b.variables if v not in a.variables)
        return tuple(merged)

    def __add__(self, other) -> "Polynomial":
        if isinstance(other, (int, float, Fraction)):
            other = Polynomial.constant(other, self.variables)
        variables = self._merge_vars(self, other)
        a = self._aligned(variables)
        b = other._aligned(variables)
        terms = dict(a.terms)
        for exps, coef in b.terms.items():
            s = terms.get(exps, 0) + coef
            if s == 0:
                terms.pop(exps, None)
            else:
                terms[exps] = s
        return Polynomial(variables, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        if isinstance(other, (int, float, Fraction)):
            other = Polynomial.constant(other, self.variables)
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other, term_cap: int = DEFAULT_TERM_CAP) -> "Polynomial":
        if isinstance(other, (int, float, Fraction)):
            if other == 0:
                return Polynomial.zero(self.variables)
            return Polynomial(self.variables, {e: c * other for e, c in self.terms.items()})
        variables = self._merge_vars(self, other)
        a = self._aligned(variables)
        b = other._aligned(variables)
        terms: dict[tuple, Coefficient] = {}
        for ea, ca in a.terms.items():
            for eb, cb in b.terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                s = terms.get(key, 0) + ca * cb
                if s == 0:
                    terms.pop(key, None)
                else:
                    terms[key] = s
            if len(terms) > term_cap:
                raise CompositionOverflowError(
                    f"product exceeded the {term_cap}-term cap; use numeric iteration"
                )
        return Polynomial(variables, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(1, self.variables)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- evaluation and substitution ------------------------------------

    def evaluate(self, point: Mapping[str, Coefficient] | FailureVector):
        """Term-sum evaluation; exact when point and coefficients are rational."""
        values = point.values if isinstance(point, FailureVector) else point
        for v in self.used_variables():
            if v not in values:
                raise VariableBindingError(f"no value bound for variable {v!r}")
        total = 0
        for exps, coef in self.terms.items():
            prod = coef
            for v, e in zip(self.variables, exps):
                if e:
                    prod = prod * values[v] ** e
            total = total + prod
        return total

    def evaluate_float(self, point: Mapping[str, float]) -> float:
        """Double-precision evaluation through a compiled term sum.

        Exactness is not preserved (coefficients go through float), so the
        exact :meth:`evaluate` stays the path for rational work.
        """
        if self._float_fn is None:
            names = [f"x{i}" for i in range(len(self.variables))]
            parts = []
            for exps, coef in self.terms.items():
                factors = [repr(float(coef))]
                for name, e in zip(names, exps):
                    if e == 1:
                        factors.append(name)
                    elif e > 1:
                        factors.append(f"{name}**{e}")
                parts.append("*".join(factors))
            body = " + ".join(parts) if parts else "0.0"
            namespace: dict = {}
            exec(f"def _f({', '.join(names)}):\n    return {body}", namespace)
            self._float_fn = namespace["_f"]
        for v in self.used_variables():
            if v not in point:
                raise VariableBindingError(f"no value bound for variable {v!r}")
        return self._float_fn(*(float(point.get(v, 0.0)) for v in self.variables))

    def evaluate_array(self, point: Mapping[str, np.ndarray]) -> np.ndarray:
        """Vectorized evaluation over numpy arrays of points."""
        for v in self.used_variables():
            if v not in point:
                raise VariableBindingError(f"no value bound for variable {v!r}")
        shape = np.broadcast(*point.values()).shape if point else ()
        total = np.zeros(shape)
        for exps, coef in self.terms.items():
            prod = np.full(shape, float(coef))
            for v, e in zip(self.variables, exps):
                if e:
                    prod = prod * np.asarray(point[v], dtype=float) ** e
            total = total + prod
        return total

    def substitute(
        self,
        mapping: Mapping[str, "Polynomial"],
        term_cap: int = DEFAULT_TERM_CAP,
    ) -> "Polynomial":
        """Replace variables by polynomials and expand.

        Variables absent from ``mapping`` are kept as themselves.
        """
        out_vars: list[str] = []
        for v in self.variables:
            if v in mapping:
                for w in mapping[v].variables:
                    if w not in out_vars:
                        out_vars.append(w)
            elif v not in out_vars:
                out_vars.append(v)
        basis: dict[str, Polynomial] = {}
        for v in self.variables:
            repl = mapping.get(v)
            if repl is None:
                if v not in out_vars:
                    out_vars.append(v)
                repl = Polynomial.variable(v, (v,))
            basis[v] = repl
        result = Polynomial.zero(tuple(out_vars))
        # power caching keeps repeated exponents cheap
        powers: dict[tuple[str, int], Polynomial] = {}

        def power(v: str, e: int) -> Polynomial:
            key = (v, e)
            if key not in powers:
                powers[key] = basis[v] ** e if e != 1 else basis[v]
            return powers[key]

        for exps, coef in self.terms.items():
            term = Polynomial.constant(coef, ())
            for v, e in zip(self.variables, exps):
                if e:
                    term = term.__mul__(power(v, e), term_cap=term_cap)
            result = result + term
            if len(result.terms) > term_cap:
                raise CompositionOverflowError(
                    f"substitution exceeded the {term_cap}-term cap; use numeric iteration"
                )
        return result

    def differentiate(self, name: str) -> "Polynomial":
        """Exact partial derivative with respect to one variable."""
        if name not in self.variables:
            return Polynomial.zero(self.variables)
        idx = self.variables.index(name)
        terms: dict[tuple, Coefficient] = {}
        for exps, coef in self.terms.items():
            e = exps[idx]
            if e:
                key = exps[:idx] + (e - 1,) + exps[idx + 1 :]
                terms[key] = terms.get(key, 0) + coef * e
        return Polynomial(self.variables, terms)

    def truncate(self, max_total_degree, mode: str = "drop") -> "Polynomial":
        """Drop terms above a total degree.

        ``drop`` discards them.  ``round-up-coefficients`` folds each dropped
        positive coefficient onto a kept monomial obtained by reducing its
        exponents to the cutoff degree (and discards dropped negative terms),
        so the result upper-bounds the original on [0, 1]^n.
        """
        if max_total_degree is None or max_total_degree == math.inf:
            return self
        if max_total_degree < 0:
            raise ValueError("max_total_degree must be >= 0")
        if mode not in ("drop", "round-up-coefficients", "round-up"):
            raise ValueError(f"unknown truncation mode {mode!r}")
        terms: dict[tuple, Coefficient] = {}
        for exps, coef in self.terms.items():
            total = sum(exps)
            if total <= max_total_degree:
                terms[exps] = terms.get(exps, 0) + coef
                continue
            if mode == "drop" or coef < 0:
                continue
            # reduce exponents (last variable first) down to the cutoff
            reduced = list(exps)
            excess = total - max_total_degree
            for i in range(len(reduced) - 1, -1, -1):
                take = min(reduced[i], excess)
                reduced[i] -= take
                excess -= take
                if not excess:
                    break
            key = tuple(reduced)
            terms[key] = terms.get(key, 0) + coef
        return Polynomial(self.variables, {e: c for e, c in terms.items() if c != 0})


def _clamp_probability(name: str, value):
    if value < 0:
        if value >= -NEGATIVE_CLAMP:
            return 0.0
        raise ProbabilityRangeError(
            f"component {name!r} evaluated to {value}; negative beyond round-off"
        )
    if value > 1:
        if float(value) <= 1 + 1e-12:
            return 1.0
        raise ProbabilityRangeError(
            f"component {name!r} evaluated to {value}; probabilities must stay in [0, 1]"
        )
    return value


class FlowMap:
    """One polynomial per location variable; the level-1 failure map.

    Maps derived from fault enumeration fix the origin: no faults, no
    failure.
    """

    __slots__ = ("variables", "components", "_jacobian_cache")

    def __init__(self, variables: Iterable[str], components: Mapping[str, Polynomial]):
        self.variables: tuple[str, ...] = tuple(variables)
        if set(components) != set(self.variables):
            raise VariableBindingError(
                f"components {sorted(components)} do not match variables {sorted(self.variables)}"
            )
        for name, poly in components.items():
            extra = poly.used_variables() - set(self.variables)
            if extra:
                raise VariableBindingError(
                    f"component {name!r} uses variables {sorted(extra)} outside the map"
                )
        self.components = dict(components)
        self._jacobian_cache = None

    @classmethod
    def identity(cls, variables: Iterable[str]) -> "FlowMap":
        variables = tuple(variables)
        return cls(variables, {v: Polynomial.variable(v, variables) for v in variables})

    @classmethod
    def one_parameter(cls, coefficient: Coefficient, exponent: int, name: str = "g") -> "FlowMap":
        """The single-location map gamma -> C * gamma^exponent."""
        return cls((name,), {name: Polynomial((name,), {(exponent,): coefficient})})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FlowMap)
            and set(self.variables) == set(other.variables)
            and all(self.components[v] == other.components[v] for v in self.variables)
        )

    def __repr__(self) -> str:
        return f"FlowMap(variables={self.variables})"

    def evaluate(self, x: FailureVector) -> FailureVector:
        """Componentwise evaluation with round-off clamping at 0 and 1.

        Rational inputs go through the exact path; all-float inputs use the
        compiled double-precision path.
        """
        values = x.values if isinstance(x, FailureVector) else x
        exact = any(isinstance(v, Fraction) for v in values.values())
        out = {}
        for name in self.variables:
            poly = self.components[name]
            value = poly.evaluate(x) if exact else poly.evaluate_float(values)
            out[name] = _clamp_probability(name, value)
        return FailureVector(out)

    def evaluate_array(self, point: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Vectorized map application; clamps round-off into [0, 1]."""
        out = {}
        for name in self.variables:
            vals = self.components[name].evaluate_array(point)
            bad = vals < -NEGATIVE_CLAMP
            if np.any(bad):
                raise ProbabilityRangeError(
                    f"component {name!r} evaluated negative beyond round-off"
                )
            out[name] = np.clip(vals, 0.0, 1.0)
        return out

    def iterate(self, x: FailureVector, levels: int) -> FailureVector:
        """Apply the map ``levels`` times; level 0 returns the input."""
        if levels < 0:
            raise ValueError("levels must be >= 0")
        for _ in range(levels):
            x = self.evaluate(x)
        return x

    def compose(self, inner: "FlowMap", term_cap: int = DEFAULT_TERM_CAP) -> "FlowMap":
        """Symbolic composition self(inner(.)); raises beyond the term cap."""
        if set(self.variables) != set(inner.variables):
            raise VariableBindingError("composition requires identical variable sets")
        mapping = inner.components
        out = {}
        for name in self.variables:
            out[name] = self.components[name].substitute(mapping, term_cap=term_cap)._aligned(
                self.variables
            )
        return FlowMap(self.variables, out)

    def _jacobian_polys(self) -> list[list[Polynomial]]:
        if self._jacobian_cache is None:
            self._jacobian_cache = [
                [self.components[row].differentiate(col) for col in self.variables]
                for row in self.variables
            ]
        return self._jacobian_cache

    def jacobian(self, x: FailureVector) -> np.ndarray:
        """d(component_i)/d(variable_j) at x, via symbolic differentiation."""
        polys = self._jacobian_polys()
        n = len(self.variables)
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = float(polys[i][j].evaluate(x))
        return out

    def truncate(self, max_total_degree, mode: str = "drop") -> "FlowMap":
        return FlowMap(
            self.variables,
            {name: poly.truncate(max_total_degree, mode) for name, poly in self.components.items()},
        )

    def displacement(self, x: FailureVector) -> dict[str, float]:
        """The flow vector at x: one application of the map minus x."""
        y = self.evaluate(x)
        return {name: float(y[name]) - float(x[name]) for name in self.variables}


def eval_poly(p: Polynomial, x: FailureVector | Mapping[str, Coefficient]):
    """Functional alias for :meth:`Polynomial.evaluate`."""
    return p.evaluate(x)


def eval_map(f: FlowMap, x: FailureVector) -> FailureVector:
    """Functional alias for :meth:`FlowMap.evaluate`."""
    return f.evaluate(x)


def compose(outer: FlowMap, inner: FlowMap, term_cap: int = DEFAULT_TERM_CAP) -> FlowMap:
    """Functional alias for :meth:`FlowMap.compose`."""
    return outer.compose(inner, term_cap=term_cap)


def iterate(f: FlowMap, x: FailureVector, levels: int) -> FailureVector:
    """Functional alias for :meth:`FlowMap.iterate`."""
    return f.iterate(x, levels)
