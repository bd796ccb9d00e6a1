"""``newmodp``: build spaces and run the checks from the command line.

Every run writes one report, a key/value text file with ``[section]``
headers, to stdout and (with ``--out DIR``) to a file in DIR.  The report is
byte-identical for identical inputs and fixture pack, apart from the
``timing_seconds`` line.  The exit status is 0 exactly when every check in
the run passed; 1 when a check failed or raised; 2 on a usage error.

Options are resolved flags first, then the ``[newmodp]`` section of the
``--config`` INI file, then built-in defaults.
"""
from __future__ import annotations

import argparse
import configparser
import os
import platform
import sys
import time
from pathlib import Path

from . import __version__
from .errors import NewModPError, Unsupported
from .fixtures import ENV_VAR, load_pack
from .rings import QQ, FiniteField, parse_ring

SUITES = ("identities", "newformthm", "keyker", "levelraising", "span",
          "filtration-standard", "filtration-monsky", "duality")
EXAMPLES = ("mod5-level3", "mod7-level15")

DEFAULTS = {
    "R": 20,           # Hecke primes r <= R
    "d": 8,            # word degree for annihilator comparisons
    "kmax": None,
    "prec": None,      # automatic, from the Sturm bound
    "b": 2,
    "normalization": "w",
    "kind": "auto",
}
# the duality basis needs its own degree and a much larger truncation
DUALITY_DEFAULTS = {"d": 6, "kmax": 972}
FILTRATION_KMAX = 36


# ---------------------------------------------------------------- reports

class Report:
    """Ordered sections of key/value pairs."""

    def __init__(self, command: str):
        self.command = command
        self.params: dict = {}
        self.sections: list[tuple[str, dict]] = []
        self.results: list[bool] = []
        self.timing = 0.0

    def section(self, name: str, values: dict, passed=None):
        vals = dict(values)
        if passed is not None:
            vals = {"passed": bool(passed), **{k: v for k, v in vals.items() if k != "passed"}}
            self.results.append(bool(passed))
        self.sections.append((name, vals))

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(self.results)

    def render(self, timing=True) -> str:
        lines = ["# newmodp report", f"command = {self.command}",
                 f"toolchain = newmodp {__version__}; python {platform.python_version()}", ""]
        lines.append("[parameters]")
        for k, v in self.params.items():
            lines.append(f"{k} = {_fmt(v)}")
        for name, vals in self.sections:
            lines.append("")
            lines.append(f"[{name}]")
            for k, v in _flatten(vals):
                lines.append(f"{k} = {_fmt(v)}")
        lines.append("")
        lines.append("[summary]")
        lines.append(f"checks = {len(self.results)}")
        lines.append(f"failed = {sum(1 for r in self.results if not r)}")
        lines.append(f"passed = {_fmt(self.passed)}")
        if timing:
            lines.append(f"timing_seconds = {self.timing:.3f}")
        return "\n".join(lines) + "\n"


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _prefix(coeffs, n=12):
    coeffs = getattr(coeffs, "coeffs", coeffs)
    return [int(x) if not isinstance(x, tuple) else list(x) for x in list(coeffs)[:n]]


# ---------------------------------------------------------------- argument handling

def _ring_arg(text: str):
    try:
        return parse_ring(text)
    except (NewModPError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"unknown ring {text!r} (use Q, Z, F7, F7^2 or Z/7^2)") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newmodp", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="INI file with a [newmodp] section")
    ap.add_argument("--out", help="directory for the report file")
    ap.add_argument("--fixtures", help=f"fixture pack directory (default: ${ENV_VAR} or the shipped pack)")
    ap.add_argument("--quiet", action="store_true", help="do not echo the report")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="build a space and print its dimensions")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--weight", type=int, help="fixed weight (or kappa for a graded space)")
    sp.add_argument("--ring", type=_ring_arg, default=None)
    sp.add_argument("--kind", choices=("S", "M", "auto"), default=None,
                    help="cusp forms or all forms; auto means S, or M in weight 0")
    sp.add_argument("--p", type=int, help="graded space mod p (with --kmax)")
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--prec", type=int)

    vp = sub.add_parser("verify", help="run a named check suite")
    vp.add_argument("suite", choices=SUITES)
    vp.add_argument("--N", type=int, default=1)
    vp.add_argument("--ell", type=int, default=3)
    vp.add_argument("--p", type=int)
    vp.add_argument("--k", type=int, help="fixed weight; omit with --kmax for graded spaces")
    vp.add_argument("--kmax", type=int)
    vp.add_argument("--prec", type=int)
    vp.add_argument("--R", type=int, help="Hecke primes r <= R")
    vp.add_argument("--d", type=int, help="word degree")
    vp.add_argument("--b", type=int, help="p-adic precision for the span conditions")
    vp.add_argument("--normalization", choices=("w", "W"))
    vp.add_argument("--ring", type=_ring_arg, default=None, help="coefficient ring (default F_p, or Q)")

    ep = sub.add_parser("examples", help="replay a worked example")
    ep.add_argument("name", help="one of: " + ", ".join(EXAMPLES))
    return ap


def _load_config(path):
    if not path:
        return {}
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise Unsupported(f"cannot read config file {path}")
    if not cp.has_section("newmodp"):
        return {}
    out = {}
    for k, v in cp.items("newmodp"):
        out[k] = v
    return out


def _resolve(args, config, key, default, cast=int):
    v = getattr(args, key, None)
    if v is not None:
        return v
    for ck in (key, key.lower()):
        if ck in config:
            return cast(config[ck])
    return default


# ---------------------------------------------------------------- space

def cmd_space(args, config, fixtures, rep: Report):
    from .spaces import SpaceParams, auto_prec, build_space, dim_data, graded_prec, graded_space

    kind = _resolve(args, config, "kind", DEFAULTS["kind"], str)
    if args.kmax is not None:
        if args.p is None:
            raise Unsupported("graded spaces need --p")
        kappa = args.weight or 0
        cusp = kind == "S"
        prec = args.prec or graded_prec(args.level, args.p, kappa, args.kmax)
        gs = graded_space(args.level, args.p, kappa, args.kmax, prec, fixtures, cusp)
        rep.params.update({"level": args.level, "p": args.p, "kappa": gs.kappa, "kmax": args.kmax,
                           "prec": prec, "kind": "S" if cusp else "M"})
        rep.section("graded space", {"dim": gs.dim, "weights": gs.weights,
                                     "weight_profile": [f"{k}:{v}" for k, v in sorted(gs.weight_profile.items())]},
                    passed=True)
        return
    if args.weight is None:
        raise Unsupported("give --weight, or --p and --kmax for a graded space")
    k = args.weight
    if kind == "auto":
        kind = "M" if k == 0 else "S"
    ring = args.ring or QQ
    prec = args.prec or auto_prec(k, args.level)
    sp = build_space(SpaceParams(args.level, k, ring, prec, kind == "S"), fixtures)
    dd = dim_data(args.level, k)
    want = dd.dim_Sk if kind == "S" else dd.dim_Mk
    rep.params.update({"level": args.level, "weight": k, "ring": str(ring), "kind": kind, "prec": prec})
    tags = {}
    for t in sp.provenance:
        tags[str(t)] = tags.get(str(t), 0) + 1
    vals = {"dim": sp.dim, "formula_dim": want, "complete": sp.complete,
            "provenance": [f"{k} x{v}" for k, v in sorted(tags.items())]}
    for i in range(min(sp.dim, 4)):
        vals[f"row{i}"] = _prefix(sp.row(i).coeffs, 10)
    rep.section("space", vals, passed=sp.dim == want)


# ---------------------------------------------------------------- verify

def _field_or(args, config):
    if args.ring is not None:
        return args.ring
    return FiniteField(args.p) if args.p else QQ


def _fixed_space(args, config, fixtures, ring=None, extra_primes=()):
    from .spaces import SpaceParams, auto_prec, build_space
    M = args.N * args.ell
    ring = ring or _field_or(args, config)
    prec = args.prec or auto_prec(args.k, M, [args.ell] + list(extra_primes))
    return build_space(SpaceParams(M, args.k, ring, prec), fixtures), prec


def _primes(args, config, level, p, ell=None):
    from .heckealg import default_primes
    R = _resolve(args, config, "R", DEFAULTS["R"])
    return default_primes(level, p or 1, ell, R)


def suite_identities(args, config, fixtures, rep):
    from .operators import check_identities, lift_independence
    ring = _field_or(args, config)
    R = [r for r in _primes(args, config, args.N * args.ell, args.p, args.ell) if r <= 7][:2]
    if args.k is None:
        kmax = _resolve(args, config, "kmax", 24)
        res = check_identities(args.N, args.ell, ring, kmax=kmax, prec=args.prec, primes=tuple(R),
                               fixtures=fixtures)
        rep.params.update({"kmax": kmax})
    else:
        res = check_identities(args.N, args.ell, ring, weight=args.k, prec=args.prec, primes=tuple(R),
                               fixtures=fixtures)
    rep.params["R"] = R
    for c in res["checks"]:
        rep.section(f"identity {c.name}", {"detail": c.detail} if c.detail else {}, passed=c.passed)
    if args.k is not None and args.p and args.p >= 5:
        ok = lift_independence(args.N * args.ell, args.ell, args.p, args.k, fixtures=fixtures)
        rep.section("identity lift independence via E_(p-1)", {}, passed=ok)


def suite_newformthm(args, config, fixtures, rep):
    from .newold import check_newformthm
    if args.k is None:
        from .spaces import graded_space, graded_prec
        kmax = _resolve(args, config, "kmax", 24)
        prec = args.prec or graded_prec(args.N * args.ell, args.p, 0, kmax)
        sp = graded_space(args.N * args.ell, args.p, 0, kmax, prec, fixtures, cuspidal=True)
        rep.params.update({"kmax": kmax, "prec": prec})
    else:
        sp, prec = _fixed_space(args, config, fixtures)
        rep.params["prec"] = prec
    res = check_newformthm(sp, args.ell)
    rep.section("newformthm kerS = kerTr ∩ kerTrW", res, passed=res["passed"])


def suite_keyker(args, config, fixtures, rep):
    from .newold import keyker_check
    from .operators import lower_space
    if args.k is None:
        raise Unsupported("keyker runs on a fixed weight; give --k")
    norm = _resolve(args, config, "normalization", DEFAULTS["normalization"], str)
    sp, prec = _fixed_space(args, config, fixtures)
    low = lower_space(sp, args.ell)
    rep.params.update({"prec": prec, "normalization": norm})
    n = low.dim
    R = sp.ring
    basis = [[R.one if i == j else R.zero for j in range(n)] for i in range(n)]
    zero = [R.zero] * n
    cases = [(0, None, None)] if n == 0 else []
    for i in range(n):
        for j in range(n):
            cases.append((f"e{i}+W e{j}", basis[i], basis[j]))
        cases.append((f"e{i}+W 0", basis[i], zero))
    for name, f, g in cases:
        if f is None:
            res = keyker_check(sp, [], [], args.ell, norm)
            name = "empty level-N space"
        else:
            res = keyker_check(sp, f, g, args.ell, norm)
        rep.section(f"keyker {name}", res, passed=res["passed"])


def suite_levelraising(args, config, fixtures, rep):
    from .newold import intersect_old_new
    if not args.p:
        raise Unsupported("level raising is computed over F_p; give --p")
    if args.k is None:
        from .spaces import graded_space, graded_prec
        kmax = _resolve(args, config, "kmax", 24)
        prec = args.prec or graded_prec(args.N * args.ell, args.p, 0, kmax)
        sp = graded_space(args.N * args.ell, args.p, 0, kmax, prec, fixtures, cuspidal=True)
        rep.params.update({"kmax": kmax, "prec": prec})
    else:
        R = _primes(args, config, args.N * args.ell, args.p, args.ell)
        sp, prec = _fixed_space(args, config, fixtures, FiniteField(args.p), extra_primes=R)
        rep.params["prec"] = prec
    r = intersect_old_new(sp, args.ell)
    vals = {"dim": r.dim, "lambda": r.lam, "case": r.case, "closed_form_matches": r.matches}
    if r.dim:
        vals["witness_prefix"] = _prefix(_combine(sp, r.subspace[0], r.field), 12)
    rep.section("levelraising old ∩ new", vals, passed=r.matches is not False)
    for i, c in enumerate(r.components):
        rep.section(f"levelraising component {i}", c, passed=c["passed"])


def _combine(sp, coords, F):
    rows = sp.basis
    out = [F.zero] * len(rows[0])
    for c, row in zip(coords, rows):
        if F.is_zero(c):
            continue
        out = [F.add(x, F.mul(c, F.coerce(y))) for x, y in zip(out, row)]
    return out


def suite_span(args, config, fixtures, rep):
    from .newold import span_conditions
    if not args.p or args.k is None:
        raise Unsupported("span conditions need --p and --k")
    b = _resolve(args, config, "b", DEFAULTS["b"])
    R = _primes(args, config, args.N * args.ell, args.p)
    rep.params.update({"b": b, "R": R})
    for i, c in enumerate(span_conditions(args.N, args.ell, args.p, args.k, b, fixtures, R, args.prec)):
        rep.section(f"span component {i}", c, passed=c["passed"])


def _pair(args, config, fixtures):
    from .heckealg import level_pair
    if not args.p:
        raise Unsupported("filtrations need --p")
    kmax = _resolve(args, config, "kmax", FILTRATION_KMAX)
    R = _primes(args, config, args.N * args.ell, args.p, args.ell)
    rep_params = {"kmax": kmax, "R": R, "kappa": args.k or 0}
    pair = level_pair(args.N, args.ell, args.p, args.k or 0, kmax, args.prec, R, fixtures)
    return pair, rep_params


def suite_filtration_standard(args, config, fixtures, rep):
    from .heckealg import quotient_annihilators, standard_filtration
    pair, params = _pair(args, config, fixtures)
    d = _resolve(args, config, "d", DEFAULTS["d"])
    rep.params.update(params, d=d)
    for i, c in enumerate(pair.comps_up):
        f = standard_filtration(pair, c)
        vals = {"system": c.system.fmt(), "dims": [len(r) for _, r in f.chain],
                "nested": f.nested, "stable": f.stable, **f.data,
                "surjective_slices": [s["k"] for s in f.slices if s["Tr_onto"] and s["TrW_onto"]]}
        ok = f.nested and f.stable and f.data["equivariant_Tr"] and f.data["equivariant_TrW"]
        if "check_iso_Tr" in f.data:
            ok = ok and f.data["check_iso_Tr"] and f.data["check_iso_TrW"]
        rep.section(f"filtration-standard component {i}", vals, passed=ok)
        qa = quotient_annihilators(pair, c, d)
        rep.section(f"filtration-standard component {i} quotient relations", qa,
                    passed=qa["low_in_quotient"])


def suite_filtration_monsky(args, config, fixtures, rep):
    from .heckealg import monsky_filtration, monskyfiltruth_check
    from .errors import BadCongruence
    if not args.p:
        raise Unsupported("filtrations need --p")
    if (args.ell + 1) % args.p:
        raise BadCongruence(f"{args.ell} is not -1 mod {args.p}")
    pair, params = _pair(args, config, fixtures)
    d = _resolve(args, config, "d", DEFAULTS["d"])
    rep.params.update(params, d=d)
    for i, c in enumerate(pair.comps_up):
        f = monsky_filtration(pair, c)
        rep.section(f"filtration-monsky component {i}",
                    {"system": c.system.fmt(), "dims": [len(r) for _, r in f.chain],
                     "nested": f.nested, "stable": f.stable},
                    passed=f.nested and f.stable)
        chk = monskyfiltruth_check(pair, c, d)
        slices = chk.pop("slices")
        chk["coker_slices"] = [s["k"] for s in slices if s["coker"]]
        chk["exact_slices"] = [s["k"] for s in slices if s["exact"]]
        rep.section(f"filtration-monsky component {i} sequence", chk, passed=chk["passed"])


def suite_duality(args, config, fixtures, rep):
    from .heckealg import component_ops, decompose, duality_basis, k_space, surj_nzdiv
    p = args.p or 2
    kmax = _resolve(args, config, "kmax", DUALITY_DEFAULTS["kmax"])
    d = _resolve(args, config, "d", DUALITY_DEFAULTS["d"])
    x, y = 3, 5
    ks = k_space(args.N, p, 0, kmax, args.prec, fixtures, primes=(x, y, 7))
    rep.params.update({"p": p, "kmax": kmax, "d": d, "generators": [x, y], "prec": ks.graded.prec})
    comps = decompose(ks, [x, y, 7])
    for i, c in enumerate(comps):
        try:
            db = duality_basis(ks, c, d, x, y)
        except NewModPError as exc:
            rep.section(f"duality component {i}", {"system": c.system.fmt(),
                                                   "error": f"{type(exc).__name__}: {exc}"}, passed=False)
            continue
        vals = {"system": c.system.fmt(), "forms": len(db.forms), "pairing_rank": db.pairing_rank,
                "space_dim": db.space_dim, "shifts_ok": db.shifts_ok}
        for e in sorted(db.forms):
            q = ks.graded.form(db.ambient_rows[e])
            lead = next((n for n, c in enumerate(q) if c), None)
            vals[f"m({e[0]},{e[1]}).leading_exponent"] = lead
            if sum(e) <= 1:
                vals[f"m({e[0]},{e[1]}).prefix"] = _prefix(q, 12)
        rep.section(f"duality component {i}", vals,
                    passed=db.shifts_ok and db.pairing_rank == len(db.forms))
        ops = component_ops(c, [x, y])
        for r in (x, y):
            s = surj_nzdiv(ks, c, ops[r], d, [x, y, 7])
            s.pop("surjPerWeight")
            rep.section(f"duality component {i} T{r}", s, passed=bool(s["surj"] and s["nzdiv"]))


def cmd_verify(args, config, fixtures, rep: Report):
    R = _resolve(args, config, "R", DEFAULTS["R"])
    rep.params.update({"N": args.N, "ell": args.ell, "p": args.p, "k": args.k, "R_bound": R})
    fn = {
        "identities": suite_identities,
        "newformthm": suite_newformthm,
        "keyker": suite_keyker,
        "levelraising": suite_levelraising,
        "span": suite_span,
        "filtration-standard": suite_filtration_standard,
        "filtration-monsky": suite_filtration_monsky,
        "duality": suite_duality,
    }[args.suite]
    fn(args, config, fixtures, rep)


def cmd_examples(args, config, fixtures, rep: Report):
    from .examples import run_example
    res = run_example(args.name, fixtures)
    checks = res.pop("checks")
    res.pop("passed")
    rep.params["example"] = args.name
    rep.section(f"example {args.name}", res)
    for k, v in checks.items():
        rep.section(f"check {k}", {}, passed=v)


# ---------------------------------------------------------------- entry point

def _report_name(args) -> str:
    parts = [args.command]
    if args.command == "verify":
        parts += [args.suite, f"N{args.N}", f"l{args.ell}"]
        if args.p:
            parts.append(f"p{args.p}")
        if args.k is not None:
            parts.append(f"k{args.k}")
        if args.kmax is not None:
            parts.append(f"kmax{args.kmax}")
    elif args.command == "examples":
        parts.append(args.name)
    else:
        parts.append(f"level{args.level}")
        if args.weight is not None:
            parts.append(f"w{args.weight}")
    return "-".join(parts) + ".txt"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "examples" and args.name not in EXAMPLES:
        parser.error(f"unknown example {args.name!r}; choose from {', '.join(EXAMPLES)}")
    try:
        config = _load_config(args.config)
    except NewModPError as exc:
        parser.error(str(exc))
    fx_dir = args.fixtures or config.get("fixtures") or None
    fixtures = load_pack(fx_dir) if fx_dir else load_pack()
    echo = " ".join(["newmodp"] + list(argv if argv is not None else sys.argv[1:]))
    rep = Report(echo)
    rep.params["fixture_pack"] = Path(fx_dir).name if fx_dir else (
        "env" if os.environ.get(ENV_VAR) else "shipped")
    rep.params["fixtures"] = len(fixtures)
    t0 = time.perf_counter()
    try:
        {"space": cmd_space, "verify": cmd_verify, "examples": cmd_examples}[args.command](
            args, config, fixtures, rep)
    except NewModPError as exc:
        rep.section("error", {"type": type(exc).__name__, "message": str(exc)}, passed=False)
    rep.timing = time.perf_counter() - t0
    text = rep.render()
    out = args.out or config.get("out")
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / _report_name(args)).write_text(text, encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
