"""Family catalog: loading, parameter handling and constraint predicates."""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ConstraintViolation
from .expr import GREEK_ALIASES, PARAMETER_NAMES, Expr, parse

__all__ = [
    "SCALAR_NAMES",
    "FORM_NAMES",
    "FamilySpec",
    "ParamValue",
    "load_catalog",
    "get_family",
    "family_ids",
    "parse_param_value",
    "eval_scalar",
]

SCALAR_NAMES = ("alpha", "beta", "gamma", "lambda", "nu", "tau")
FORM_NAMES = ("X", "Y", "Z", "Q", "V")
_CMP = {"==": operator.eq, "!=": operator.ne, ">=": operator.ge, "<=": operator.le,
        ">": operator.gt, "<": operator.lt}
_PRED_TOL = 1e-12


@dataclass(frozen=True)
class ParamValue:
    name: str
    value: complex


def canonical_name(name: str) -> str:
    name = GREEK_ALIASES.get(name.strip(), name.strip())
    if name not in PARAMETER_NAMES:
        raise KeyError(f"unknown parameter {name!r}")
    return name


def parse_param_value(text: str) -> complex | float:
    """Number from a flag or catalog value; Python complex literals accepted."""
    text = text.strip().replace(" ", "")
    try:
        return float(text)
    except ValueError:
        pass
    try:
        v = complex(text.replace("i", "j") if "j" not in text else text)
    except ValueError as exc:
        raise ValueError(f"cannot read a number from {text!r}") from exc
    return v.real if v.imag == 0 else v


def eval_scalar(src: str, env: Mapping[str, complex]) -> complex:
    """Evaluate numeric arithmetic over numbers, ``pi`` and named values."""
    tree = ast.parse(src.strip(), mode="eval")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name):
            if node.id == "pi":
                return math.pi
            name = GREEK_ALIASES.get(node.id, node.id)
            if name in env:
                return env[name]
            raise KeyError(f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            ops = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
                   ast.Div: operator.truediv, ast.Pow: operator.pow}
            for t, f in ops.items():
                if isinstance(node.op, t):
                    return f(a, b)
        raise ValueError(f"unsupported syntax in {src!r}")

    return ev(tree)


@dataclass
class FamilySpec:
    """One catalog entry: symbolic forms, structure constants and metadata."""

    id: str
    title: str
    forms: dict[str, Expr]
    scalars: dict[str, Expr]
    defaults: dict[str, complex]
    constraints: list[str]
    eliminations: dict[str, Expr]
    domain: tuple[str, str]
    n: int
    boundary: str
    hermitian: bool
    expected_algebra: str
    expected_case: int | None
    printed: dict[str, Expr] = field(default_factory=dict)
    source: dict[str, str] = field(default_factory=dict)

    def __getattr__(self, name):
        forms = self.__dict__.get("forms", {})
        if name in forms:
            return forms[name]
        raise AttributeError(name)

    @property
    def free_params(self) -> list[str]:
        names = set(self.defaults)
        for e in list(self.forms.values()) + list(self.scalars.values()):
            names |= e.params()
        return sorted(names)

    def resolve_params(self, overrides: Mapping[str, complex] | None = None) -> dict[str, complex]:
        """Defaults merged with overrides; names validated."""
        vals = dict(self.defaults)
        for k, v in (overrides or {}).items():
            name = canonical_name(k)
            if name not in self.free_params:
                raise KeyError(f"parameter {name!r} is not used by family {self.id}")
            vals[name] = v
        missing = [p for p in self.free_params if p not in vals]
        if missing:
            raise KeyError(f"family {self.id} needs values for {', '.join(missing)}")
        return vals

    def scalar_values(self, params: Mapping[str, complex]) -> dict[str, complex]:
        out = {}
        for name, e in self.scalars.items():
            out[name] = complex(e.evaluate(0.0, params).item())
        return out

    def check_constraints(self, params: Mapping[str, complex]) -> None:
        """Raise :class:`ConstraintViolation` naming the first failing predicate."""
        env = dict(params)
        scal = self.scalar_values(params)
        env.update(scal)
        for pred in self.constraints:
            if not _predicate_holds(pred, env):
                raise ConstraintViolation(pred, f"constraint violated in {self.id}: {pred}")

    def domain_values(self, params: Mapping[str, complex]) -> tuple[float, float]:
        env = dict(params)
        lo = eval_scalar(self.domain[0], env)
        hi = eval_scalar(self.domain[1], env)
        return float(complex(lo).real), float(complex(hi).real)


def _predicate_holds(pred: str, env: Mapping[str, complex]) -> bool:
    m = re.fullmatch(r"\s*(real|imag)\(\s*([^)]+?)\s*\)\s*", pred)
    if m:
        v = complex(env[canonical_name(m.group(2))])
        scale = max(1.0, abs(v))
        if m.group(1) == "real":
            return abs(v.imag) <= _PRED_TOL * scale
        return abs(v.real) <= _PRED_TOL * scale
    m = re.fullmatch(r"(.+?)(==|!=|>=|<=|>|<)(.+)", pred)
    if not m:
        raise ValueError(f"cannot read predicate {pred!r}")
    lhs = _const_value(m.group(1), env)
    rhs = _const_value(m.group(3), env)
    op = m.group(2)
    scale = max(1.0, abs(lhs), abs(rhs))
    if op in ("==", "!="):
        eq = abs(lhs - rhs) <= _PRED_TOL * scale
        return eq if op == "==" else not eq
    if abs(lhs.imag) > _PRED_TOL * scale or abs(rhs.imag) > _PRED_TOL * scale:
        return False
    return _CMP[op](lhs.real, rhs.real)


def _const_value(src: str, env: Mapping[str, complex]) -> complex:
    e = parse(src)
    return complex(e.evaluate(0.0, env).item())


def _catalog_path() -> Path:
    return Path(str(resources.files("ladderalg") / "data" / "families.ini"))


def load_catalog(path: str | Path | None = None) -> dict[str, FamilySpec]:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    with open(path or _catalog_path(), encoding="utf-8") as fh:
        cp.read_file(fh)
    out = {}
    for sec in cp.sections():
        s = cp[sec]
        forms = {k: parse(s[k]) for k in FORM_NAMES}
        scalars = {k: parse(s[k]) for k in SCALAR_NAMES}
        defaults = {}
        for item in filter(None, (t.strip() for t in s.get("defaults", "").split(","))):
            k, v = item.split("=", 1)
            defaults[canonical_name(k)] = parse_param_value(v)
        constraints = [c.strip() for c in s.get("constraints", "").split(";") if c.strip()]
        elims = {}
        for item in filter(None, (t.strip() for t in s.get("eliminate", "").split(";"))):
            k, v = item.split("=", 1)
            elims[canonical_name(k)] = parse(v)
        lo, hi = (t.strip() for t in s["domain"].split(","))
        printed = {k.split(".", 1)[1]: parse(v) for k, v in s.items() if k.startswith("printed.")}
        case = s.get("expected_case", "none").strip()
        out[sec] = FamilySpec(
            id=sec,
            title=s.get("title", sec),
            forms=forms,
            scalars=scalars,
            defaults=defaults,
            constraints=constraints,
            eliminations=elims,
            domain=(lo, hi),
            n=int(s.get("n", "2000")),
            boundary=s.get("boundary", "dirichlet").strip(),
            hermitian=s.getboolean("hermitian"),
            expected_algebra=s["expected_algebra"].strip(),
            expected_case=None if case == "none" else int(case),
            printed=printed,
            source={k: s[k] for k in FORM_NAMES + SCALAR_NAMES},
        )
    return out


_CACHE: dict[str, FamilySpec] | None = None


def _catalog() -> dict[str, FamilySpec]:
    global _CACHE
    if _CACHE is None:
        _CACHE = load_catalog()
    return _CACHE


def get_family(family_id: str) -> FamilySpec:
    cat = _catalog()
    if family_id not in cat:
        raise KeyError(f"unknown family {family_id!r}; known: {', '.join(cat)}")
    return cat[family_id]


def family_ids() -> list[str]:
    return list(_catalog())
