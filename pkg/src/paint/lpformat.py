"""Reader/writer for the LP text file format (CPLEX-style).

Only the subset this package emits is supported: a single linear objective
with an optional constant, named linear constraints, a Bounds section with
``free`` markers, and a Binaries section.  Output is deterministic: terms
are written in the order given, numbers with shortest round-trip repr.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError

Term = tuple[str, float]


@dataclass
class LpModel:
    name: str = ""
    sense: str = "min"
    objective: list[Term] = field(default_factory=list)
    objective_constant: float = 0.0
    constraints: list[tuple[str, list[Term], str, float]] = field(default_factory=list)
    bounds: dict[str, tuple[float | None, float | None]] = field(default_factory=dict)
    free: list[str] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)

    def variable_names(self) -> set[str]:
        names = {v for v, _ in self.objective}
        for _, terms, _, _ in self.constraints:
            names.update(v for v, _ in terms)
        names.update(self.bounds)
        names.update(self.free)
        names.update(self.binaries)
        return names


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_terms(terms: list[Term], constant: float = 0.0) -> str:
    parts: list[str] = []
    for var, coef in terms:
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        chunk = var if mag == 1.0 else f"{_fmt(mag)} {var}"
        if not parts and sign == "+":
            parts.append(chunk)
        else:
            parts.append(f"{sign} {chunk}")
    if constant != 0.0 or not parts:
        sign = "-" if constant < 0 else "+"
        if not parts and sign == "+":
            parts.append(_fmt(constant))
        else:
            parts.append(f"{sign} {_fmt(abs(constant))}")
    return " ".join(parts)


def write_lp_text(model: LpModel) -> str:
    lines: list[str] = []
    if model.name:
        lines.append(f"\\ {model.name}")
    lines.append("Minimize" if model.sense == "min" else "Maximize")
    lines.append(f" obj: {_write_terms(model.objective, model.objective_constant)}")
    lines.append("Subject To")
    for name, terms, rel, rhs in model.constraints:
        op = {"<=": "<=", ">=": ">=", "=": "="}[rel]
        lines.append(f" {name}: {_write_terms(terms)} {op} {_fmt(rhs)}")
    if model.bounds or model.free:
        lines.append("Bounds")
        for var, (lo, hi) in model.bounds.items():
            if lo is not None and hi is not None:
                lines.append(f" {_fmt(lo)} <= {var} <= {_fmt(hi)}")
            elif lo is not None:
                lines.append(f" {var} >= {_fmt(lo)}")
            elif hi is not None:
                lines.append(f" {var} <= {_fmt(hi)}")
        for var in model.free:
            lines.append(f" {var} free")
    if model.binaries:
        lines.append("Binaries")
        for var in model.binaries:
            lines.append(f" {var}")
    lines.append("End")
    return "\n".join(lines) + "\n"


_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.#]*$")
_SECTION = {
    "minimize": "objective_min",
    "min": "objective_min",
    "maximize": "objective_max",
    "max": "objective_max",
    "subject": "constraints",
    "st": "constraints",
    "s.t.": "constraints",
    "bounds": "bounds",
    "binaries": "binaries",
    "binary": "binaries",
    "bin": "binaries",
    "general": "general",
    "generals": "general",
    "end": "end",
}


def _tokenize_expr(text: str) -> list[str]:
    # split operators out, keep numbers/names whole
    text = text.replace("<=", " <= ").replace(">=", " >= ")
    text = re.sub(r"(?<![<>=])=(?!=)", " = ", text)
    text = text.replace("+", " + ").replace("-", " - ")
    # repair exponents broken by the sign split (1e - 05 -> 1e-05)
    tokens = text.split()
    merged: list[str] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        is_broken_exponent = (
            i + 2 < len(tokens)
            and re.match(r"^\d[\d.]*[eE]$", tok)
            and tokens[i + 1] in ("+", "-")
            and tokens[i + 2].isdigit()
        )
        if is_broken_exponent:
            merged.append(tok + tokens[i + 1] + tokens[i + 2])
            i += 3
        else:
            merged.append(tok)
            i += 1
    return merged


def _parse_expr(tokens: list[str]) -> tuple[list[Term], float]:
    terms: list[Term] = []
    constant = 0.0
    sign = 1.0
    pending: float | None = None
    for tok in tokens:
        if tok == "+":
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = 1.0
        elif tok == "-":
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = -1.0
        elif _NUMBER.match(tok):
            if pending is not None:
                constant += sign * pending
            pending = float(tok)
        elif _NAME.match(tok):
            coef = sign * (pending if pending is not None else 1.0)
            terms.append((tok, coef))
            pending = None
            sign = 1.0
        else:
            raise ParseError(f"unexpected token {tok!r} in expression")
    if pending is not None:
        constant += sign * pending
    return terms, constant


def parse_lp_text(text: str) -> LpModel:
    model = LpModel()
    section = None
    # strip comments, gather logical lines
    lines = []
    for raw in text.splitlines():
        line = raw.split("\\")[0].rstrip()
        if line.strip():
            lines.append(line)

    i = 0
    buffered: list[str] = []

    def flush_constraint():
        if not buffered:
            return
        joined = " ".join(buffered)
        buffered.clear()
        name = ""
        if ":" in joined:
            name, joined = joined.split(":", 1)
            name = name.strip()
        tokens = _tokenize_expr(joined)
        rel = None
        for r in ("<=", ">=", "="):
            if r in tokens:
                rel = r
                break
        if section == "constraints":
            if rel is None:
                raise ParseError(f"constraint {name!r} missing relation")
            idx = tokens.index(rel)
            lhs, _ = _parse_expr(tokens[:idx])
            rhs_terms, rhs_const = _parse_expr(tokens[idx + 1 :])
            if rhs_terms:
                raise ParseError(f"constraint {name!r}: variables on the right-hand side")
            model.constraints.append((name, lhs, rel, rhs_const))
        else:  # objective
            terms, const = _parse_expr(tokens)
            model.objective = terms
            model.objective_constant = const

    while i < len(lines):
        stripped = lines[i].strip()
        head = stripped.split()[0].lower().rstrip(":") if stripped else ""
        if head in _SECTION or stripped.lower() in ("subject to", "such that"):
            flush_constraint()
            key = _SECTION.get(head, "constraints")
            if key == "objective_min":
                model.sense, section = "min", "objective"
            elif key == "objective_max":
                model.sense, section = "max", "objective"
            elif key == "constraints":
                section = "constraints"
            elif key == "end":
                section = "end"
            else:
                section = key
            i += 1
            continue
        if section in ("objective", "constraints"):
            # a new named row starts a new logical line
            if section == "constraints" and ":" in stripped and buffered:
                flush_constraint()
            buffered.append(stripped)
            if section == "objective":
                pass
        elif section == "bounds":
            tokens = _tokenize_expr(stripped)
            if len(tokens) == 2 and tokens[1].lower() == "free":
                model.free.append(tokens[0])
            elif "<=" in tokens:
                idx = [j for j, t in enumerate(tokens) if t == "<="]
                if len(idx) == 2:  # lo <= var <= hi
                    lo = _parse_expr(tokens[: idx[0]])[1]
                    var = tokens[idx[0] + 1]
                    hi = _parse_expr(tokens[idx[1] + 1 :])[1]
                    model.bounds[var] = (lo, hi)
                else:
                    left = tokens[: idx[0]]
                    right = tokens[idx[0] + 1 :]
                    if len(left) == 1 and _NAME.match(left[0]):
                        model.bounds[left[0]] = (
                            model.bounds.get(left[0], (None, None))[0],
                            _parse_expr(right)[1],
                        )
                    else:
                        model.bounds[right[0]] = (_parse_expr(left)[1], None)
            elif ">=" in tokens:
                idx = tokens.index(">=")
                var = tokens[0]
                model.bounds[var] = (_parse_expr(tokens[idx + 1 :])[1], None)
        elif section == "binaries":
            model.binaries.extend(stripped.split())
        i += 1
    flush_constraint()
    return model
