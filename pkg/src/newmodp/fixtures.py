"""Newform fixture files: parsing, validation, and the shipped pack.

File grammar (UTF-8, one item per line)::

    # comment
    label = 15.4.b
    level = 15
    weight = 4
    coeff_ring = ZZ            # or Z/7^2
    al_signs = 3:+1 5:-1
    provenance = free text
    an = 1, 3, -3, 1, ...      # a_1, a_2, ...; 'r/n' tokens for Z/p^b

Several fixtures may share a file, separated by a line ``---``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import Inconsistent, InvariantViolation, ParseError
from .rings import ZZ, ZmodPB, is_prime, is_squarefree, prime_factors, RingDesc
from .qexp import QExp

ENV_VAR = "NEWMODP_FIXTURES"
PACK_DIR = Path(__file__).with_name("data")

_KEYS = {"label", "level", "weight", "coeff_ring", "al_signs", "provenance", "an"}


@dataclass
class NewformFixture:
    label: str
    level: int
    weight: int
    coeff_ring: RingDesc
    an: list  # a_1 .. a_P
    al_signs: dict = field(default_factory=dict)
    provenance: str = ""

    @property
    def prec(self):
        """Number of known coefficients including a_0."""
        return len(self.an) + 1

    def qexp(self, ring=None, prec=None) -> QExp:
        R = self.coeff_ring if ring is None else ring
        vals = [0] + list(self.an)
        if prec is not None:
            if prec > len(vals):
                from .errors import PrecisionTooLow
                raise PrecisionTooLow(f"{self.label} has {len(vals)} coefficients, {prec} requested")
            vals = vals[:prec]
        if R is ZZ or getattr(R, "kind", "") in ("Integers", "Rationals"):
            return QExp(R, [R.coerce(v) for v in vals])
        return QExp(R, [R.coerce(v) for v in vals])

    def a(self, n):
        return self.an[n - 1]


def _parse_ring(text, line):
    t = text.strip()
    if t in ("ZZ", "Z", "Integers"):
        return ZZ
    if t.startswith("Z/"):
        body = t[2:]
        p, _, b = body.partition("^")
        try:
            return ZmodPB(int(p), int(b) if b else 1)
        except Exception as exc:
            raise ParseError(line, f"bad coefficient ring {t!r}") from exc
    raise ParseError(line, f"unsupported coefficient ring {t!r}")


def _parse_int(tok, line):
    tok = tok.strip()
    if not tok:
        raise ParseError(line, "empty coefficient")
    if any(ch in tok for ch in ".eE") and not tok.lstrip("+-").isdigit():
        raise ParseError(line, f"non-integer token {tok!r}")
    try:
        return int(tok)
    except ValueError as exc:
        raise ParseError(line, f"bad integer {tok!r}") from exc


def parse_fixture(text: str, validate: bool = True) -> NewformFixture:
    fx = parse_fixtures(text, validate=validate)
    if len(fx) != 1:
        raise ParseError(0, f"expected one fixture, found {len(fx)}")
    return fx[0]


def parse_fixtures(text: str, validate: bool = True) -> list[NewformFixture]:
    out = []
    chunk: list[tuple[int, str]] = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line == "---":
            if chunk:
                out.append(_parse_chunk(chunk, validate))
            chunk = []
            continue
        if line:
            chunk.append((i, line))
    if chunk:
        out.append(_parse_chunk(chunk, validate))
    return out


def _parse_chunk(lines, validate):
    vals = {}
    an_line = 0
    for i, line in lines:
        if "=" not in line:
            raise ParseError(i, "expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ParseError(i, f"unknown key {key!r}")
        if key in vals:
            raise ParseError(i, f"duplicate key {key!r}")
        vals[key] = (i, value.strip())
        if key == "an":
            an_line = i
    for key in ("label", "level", "weight", "an"):
        if key not in vals:
            raise ParseError(lines[-1][0] if lines else 0, f"missing key {key!r}")
    label = vals["label"][1]
    level = _parse_int(vals["level"][1], vals["level"][0])
    weight = _parse_int(vals["weight"][1], vals["weight"][0])
    ring = _parse_ring(vals["coeff_ring"][1], vals["coeff_ring"][0]) if "coeff_ring" in vals else ZZ
    an = []
    for tok in vals["an"][1].split(","):
        if "/" in tok:
            r, _, n = tok.partition("/")
            if not isinstance(ring, ZmodPB):
                raise ParseError(an_line, "residue token in an integer fixture")
            if _parse_int(n, an_line) != ring.n:
                raise ParseError(an_line, f"modulus {n.strip()} does not match {ring}")
            an.append(_parse_int(r, an_line) % ring.n)
        else:
            v = _parse_int(tok, an_line)
            an.append(v % ring.n if isinstance(ring, ZmodPB) else v)
    signs = {}
    if "al_signs" in vals:
        ln, txt = vals["al_signs"]
        for pair in txt.split():
            q, _, s = pair.partition(":")
            if s not in ("+1", "-1"):
                raise ParseError(ln, f"bad sign {pair!r}")
            signs[_parse_int(q, ln)] = 1 if s == "+1" else -1
    prov = vals["provenance"][1] if "provenance" in vals else ""
    fx = NewformFixture(label, level, weight, ring, an, signs, prov)
    if validate:
        validate_fixture(fx)
    return fx


def validate_fixture(fx: NewformFixture) -> None:
    """Raise InvariantViolation on the first failed check."""
    N, k = fx.level, fx.weight
    R = fx.coeff_ring
    mod = R.n if isinstance(R, ZmodPB) else None

    def eq(a, b):
        return (a - b) % mod == 0 if mod else a == b

    if N < 1 or not is_squarefree(N):
        raise InvariantViolation("squarefree level", None, f"level {N} not squarefree")
    if k < 2 or k % 2:
        raise InvariantViolation("even weight", None, f"weight {k}")
    if not fx.provenance.strip():
        raise InvariantViolation("provenance", None, "provenance is mandatory")
    P = len(fx.an)
    if P < 1 or not eq(fx.an[0], 1):
        raise InvariantViolation("normalization", 1)
    a = fx.a
    for n in range(2, P + 1):
        fs = _factor(n)
        if len(fs) > 1:
            q, e = fs[0]
            m = q ** e
            if not eq(a(n), a(m) * a(n // m)):
                raise InvariantViolation("multiplicativity", n)
    for r in range(2, P + 1):
        if not is_prime(r):
            continue
        pw = r * r
        prev2, prev1 = 1, a(r)
        while pw <= P:
            if N % r:
                want = a(r) * prev1 - r ** (k - 1) * prev2
            else:
                want = a(r) * prev1
            if not eq(a(pw), want):
                raise InvariantViolation("hecke recurrence", pw)
            prev2, prev1 = prev1, a(pw)
            pw *= r
    for q in prime_factors(N):
        if q not in fx.al_signs:
            raise InvariantViolation("al sign", q, f"missing Atkin-Lehner sign at {q}")
        if q <= P and not eq(a(q), -fx.al_signs[q] * q ** ((k - 2) // 2)):
            raise InvariantViolation("al sign", q)
    for q in fx.al_signs:
        if N % q:
            raise InvariantViolation("al sign", q, f"{q} does not divide the level")
    if mod is None:
        for r in range(2, P + 1):
            if not is_prime(r) or N % r == 0:
                continue
            # |a_r| <= 2 r^{(k-1)/2}, compared as squares
            if a(r) * a(r) > 4 * r ** (k - 1):
                raise InvariantViolation("ramanujan bound", r)
            if not weil_strict(a(r), r, k):
                raise InvariantViolation("weil bound", r)


def weil_strict(ar: int, ell: int, k: int) -> bool:
    """|a_ell| < (ell + 1) ell^{(k-2)/2}."""
    bound = (ell + 1) * ell ** ((k - 2) // 2)
    return abs(ar) < bound


def _factor(n):
    out = []
    for q in prime_factors(n):
        e = 0
        while n % q == 0:
            n //= q
            e += 1
        out.append((q, e))
    return out


def al_sign(fx: NewformFixture, q: int) -> int:
    if fx.level % q or (fx.level // q) % q == 0:
        raise Inconsistent(f"{q} does not exactly divide level {fx.level}")
    stored = fx.al_signs.get(q)
    k = fx.weight
    aq = fx.a(q)
    scale = q ** ((k - 2) // 2)
    if isinstance(fx.coeff_ring, ZmodPB):
        n = fx.coeff_ring.n
        if (aq + scale) % n == 0:
            derived = 1
        elif (aq - scale) % n == 0:
            derived = -1
        else:
            derived = None
    else:
        derived = Fraction(-aq, scale)
        derived = int(derived) if derived in (1, -1) else None
    if derived is None or stored is None or derived != stored:
        raise Inconsistent(f"{fx.label}: stored sign {stored}, derived {derived}")
    return stored


def pack_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else PACK_DIR


def load_pack(directory=None, validate: bool = True) -> list[NewformFixture]:
    d = Path(directory) if directory is not None else pack_dir()
    out = []
    if not d.is_dir():
        return out
    for path in sorted(d.glob("*.fix")):
        out.extend(parse_fixtures(path.read_text(encoding="utf-8"), validate=validate))
    return out


# (level, weight) pairs whose new part the test matrix reads from fixtures
REQUIRED = ((5, 4), (15, 4), (3, 12), (3, 16))


def validate_pack(directory=None, required=REQUIRED) -> dict:
    """Parse every file and check coverage.  Never raises; returns a report."""
    from .spaces import new_dimension

    d = Path(directory) if directory is not None else pack_dir()
    report = {"files": 0, "fixtures": 0, "errors": [], "duplicates": [], "missing": [],
              "covered": []}
    fixtures = []
    if d.is_dir():
        for path in sorted(d.glob("*.fix")):
            report["files"] += 1
            try:
                fixtures.extend(parse_fixtures(path.read_text(encoding="utf-8")))
            except (ParseError, InvariantViolation) as exc:
                report["errors"].append(f"{path.name}: {exc}")
    report["fixtures"] = len(fixtures)
    seen = {}
    for fx in fixtures:
        if fx.label in seen:
            report["duplicates"].append(fx.label)
        seen[fx.label] = fx
    for (N, k) in required:
        have = sum(1 for fx in fixtures if fx.level == N and fx.weight == k
                   and fx.coeff_ring is ZZ)
        need = new_dimension(N, k)
        if have < need:
            report["missing"].append((N, k, need - have))
        else:
            report["covered"].append((N, k, need))
    report["ok"] = not (report["errors"] or report["duplicates"] or report["missing"])
    return report


def fixtures_for(fixtures, level, weight):
    return [fx for fx in (fixtures or []) if fx.level == level and fx.weight == weight]


def format_fixture(fx: NewformFixture) -> str:
    lines = [f"label = {fx.label}", f"level = {fx.level}", f"weight = {fx.weight}",
             f"coeff_ring = {'ZZ' if fx.coeff_ring is ZZ else fx.coeff_ring}"]
    if fx.al_signs:
        lines.append("al_signs = " + " ".join(f"{q}:{'+1' if s > 0 else '-1'}"
                                             for q, s in sorted(fx.al_signs.items())))
    lines.append(f"provenance = {fx.provenance}")
    lines.append("an = " + ", ".join(str(x) for x in fx.an))
    return "\n".join(lines) + "\n"
