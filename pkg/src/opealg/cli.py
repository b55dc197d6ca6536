"""Command-line front end.

Usage::

    opealg check [--only NAMES] [--max-weight L] [--window D] [--format text|json-lines] SPEC
    opealg ope SPEC A B
    opealg product SPEC A N NBAR B
    opealg construct SPEC
    opealg closure SPEC

Exit codes: 0 when every selected check holds, 1 on a failing check (or a
failed computation such as a non-local pair), 2 on a spec or usage error.

Spec files are flat ``key = value`` lists under ``[section]`` headers;
``#`` starts a comment.  Numbers are exact rationals written ``p/q``.
Sections and keys::

    [algebra]  backend = heisenberg | fermion | tensor
               level = p/q          (heisenberg)
               name = identifier    (generator name)
               max_weight = p/q     (truncation weight L)
               window = n           (margin / window depth)
               generators = a, b    (default: every generator)
               bar_swap = true|false  (tensor: right factor in zbar)
    [left], [right]  backend, level, name   (tensor factors)
    [check]    only = name, ...; format = text | json-lines; seed = n;
               corpus = p/q (weight of quantified state pairs); samples = n
    [corrupt]  field = name; mode = n, nbar; factor = p/q   (negative control)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

from . import __version__
from .axioms import (Inconsistent, NotSpanning, check_chiral_subalgebra, check_completeness,
                     check_creativity, check_duality_direct, check_duality_exchange, check_locality,
                     check_module_dual, check_pijk_identity, check_skew_symmetry,
                     check_translation_covariance, check_vbbk_support, construct_by_existence,
                     goddard_probe)
from .backends import (Field, GradedSpace, InvalidSpec, ScaledModeField, build_fermion, build_heisenberg,
                       tensor)
from .ope import (NotLocal, YMap, dong_closure, extract_reduced_ope, fingerprint, general_product,
                  verify_multiple_locality)
from .scalars import ExpPair, fmt, parse_rational
from .verdict import Verdict, fails, plain

EXIT_OK, EXIT_FAIL, EXIT_SPEC = 0, 1, 2


class SpecError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message, self.line, self.col = message, line, col

    def __str__(self) -> str:
        if not self.line:
            return f" {self.message}"
        return f"{self.line}:{self.col}: {self.message}"


# -- spec files -------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def _rational(text: str) -> Fraction:
    return parse_rational(text)


def _natural(text: str) -> int:
    if not re.fullmatch(r"\d+", text):
        raise ValueError(f"expected a natural number, got {text!r}")
    return int(text)


def _bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true or false, got {text!r}")
    return text == "true"


def _ident(text: str) -> str:
    if not _IDENT.match(text):
        raise ValueError(f"not an identifier: {text!r}")
    return text


def _names(text: str) -> List[str]:
    if not text.strip():
        return []
    return [_ident(x.strip()) for x in text.split(",")]


def _pair(text: str) -> ExpPair:
    parts = [x.strip() for x in text.split(",")]
    if len(parts) != 2:
        raise ValueError("expected two rationals separated by a comma")
    return ExpPair(parse_rational(parts[0]), parse_rational(parts[1]))


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _check_names(text: str) -> List[str]:
    if not text.strip():
        return []
    out = []
    for x in text.split(","):
        x = x.strip()
        if not re.fullmatch(r"[a-z][a-z0-9-]*", x):
            raise ValueError(f"not a check name: {x!r}")
        out.append(x)
    return out


_BACKENDS = ("heisenberg", "fermion", "tensor")
_FACTOR = {"backend": _choice("heisenberg", "fermion"), "level": _rational, "name": _ident}
SCHEMA: Dict[str, Dict[str, Callable[[str], object]]] = {
    "algebra": {"backend": _choice(*_BACKENDS), "level": _rational, "name": _ident,
                "max_weight": _rational, "window": _natural, "generators": _names, "bar_swap": _bool},
    "left": dict(_FACTOR),
    "right": dict(_FACTOR),
    "check": {"only": _check_names, "format": _choice("text", "json-lines"),
              "seed": _natural, "corpus": _rational, "samples": _natural},
    "corrupt": {"field": _ident, "mode": _pair, "factor": _rational},
}


def parse_spec_text(text: str) -> Dict[str, Dict[str, object]]:
    """Parse spec text into ``{section: {key: value}}``; raises SpecError."""
    out: Dict[str, Dict[str, object]] = {}
    section: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        col = len(line) - len(stripped) + 1
        if stripped.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", stripped)
            if not m:
                raise SpecError("malformed section header", lineno, col)
            section = m.group(1)
            if section not in SCHEMA:
                raise SpecError(f"unknown section [{section}]", lineno, col + 1)
            if section in out:
                raise SpecError(f"duplicate section [{section}]", lineno, col)
            out[section] = {}
            continue
        if "=" not in stripped:
            raise SpecError("expected 'key = value'", lineno, col)
        if section is None:
            raise SpecError("key outside of a section", lineno, col)
        key, value = stripped.split("=", 1)
        key = key.strip()
        vcol = col + len(stripped.split("=", 1)[0]) + 1 + (len(value) - len(value.lstrip()))
        value = value.strip()
        if key not in SCHEMA[section]:
            raise SpecError(f"unknown key {key!r} in [{section}]", lineno, col)
        if key in out[section]:
            raise SpecError(f"duplicate key {key!r}", lineno, col)
        try:
            out[section][key] = SCHEMA[section][key](value)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"bad value for {key}: {exc}", lineno, vcol) from None
    if "algebra" not in out:
        raise SpecError("missing [algebra] section", 1, 1)
    if "backend" not in out["algebra"]:
        raise SpecError("missing key 'backend' in [algebra]", 1, 1)
    return out


@dataclass
class AlgebraSpec:
    sections: Dict[str, Dict[str, object]]
    max_weight: Fraction
    window: int
    only: List[str]
    fmt: str
    seed: int
    corpus: Fraction
    samples: Optional[int]

    def digest(self) -> str:
        canon = dict(self.sections)
        canon["effective"] = {"max_weight": self.max_weight, "window": self.window, "only": self.only,
                              "seed": self.seed, "corpus": self.corpus, "samples": self.samples}
        blob = json.dumps(plain(canon), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_spec(text: str, max_weight=None, window=None, only=None, fmt_=None) -> AlgebraSpec:
    sec = parse_spec_text(text)
    alg, chk = sec["algebra"], sec.get("check", {})
    backend = alg["backend"]
    if backend == "tensor":
        for side in ("left", "right"):
            if side not in sec:
                raise SpecError(f"tensor backend needs a [{side}] section", 1, 1)
    L = Fraction(max_weight) if max_weight is not None else alg.get("max_weight", Fraction(3))
    spec = AlgebraSpec(sec, L, window if window is not None else alg.get("window", 2),
                       only if only is not None else chk.get("only", []),
                       fmt_ or chk.get("format", "text"), chk.get("seed", 0),
                       min(chk.get("corpus", Fraction(3)), L), chk.get("samples"))
    return spec


# -- building the algebra ----------------------------------------------------------

@dataclass
class Algebra:
    space: GradedSpace
    generators: Dict[str, Field]
    Y: YMap
    spec: AlgebraSpec


def _primitive(sec: Dict[str, object], L):
    backend = sec.get("backend", "heisenberg")
    if backend == "heisenberg":
        return build_heisenberg(sec.get("level", 1), max(L, 1), sec.get("name", "alpha"))[0]
    return build_fermion(max(L, Fraction(1, 2)), sec.get("name", "psi"))[0]


def build_algebra(spec: AlgebraSpec) -> Algebra:
    sec = spec.sections
    alg = sec["algebra"]
    L = spec.max_weight
    try:
        if alg["backend"] == "tensor":
            space: GradedSpace = tensor(_primitive(sec["left"], L), _primitive(sec["right"], L),
                                        alg.get("bar_swap", True))
        else:
            space = _primitive(alg, L)
    except InvalidSpec as exc:
        raise SpecError(str(exc), 1, 1) from None
    gens = dict(space.generators)
    wanted = alg.get("generators")
    if wanted is not None:
        for g in wanted:
            if g not in gens:
                raise SpecError(f"unknown generator {g!r}", 1, 1)
        gens = {g: gens[g] for g in wanted}
    table: Dict[Hashable, Field] = {}
    if "corrupt" in sec:
        c = sec["corrupt"]
        name = c.get("field")
        if name not in gens:
            raise SpecError(f"[corrupt] names unknown generator {name!r}", 1, 1)
        bad = ScaledModeField(gens[name], c.get("mode", ExpPair.of(1, -1)), c.get("factor", Fraction(2)))
        gens[name] = bad
        for key in gens[name].s1():
            table[key] = bad
    return Algebra(space, gens, YMap(space, table), spec)


def resolve_field(alg: Algebra, name: str) -> Field:
    """A generator name, ``1`` for the identity field, or a basis state label."""
    if name in alg.generators:
        return alg.generators[name]
    if name == "1":
        return alg.space.identity
    for key in alg.space.basis(alg.spec.max_weight):
        if alg.space.label(key) == name:
            return alg.Y(key)
    raise KeyError(name)


# -- checks -----------------------------------------------------------------------

Instance = Tuple[str, Verdict]


def _gen_list(alg: Algebra) -> List[Field]:
    return [alg.generators[k] for k in sorted(alg.generators)]


def _corpus(alg: Algebra) -> List[Hashable]:
    return alg.space.basis(alg.spec.corpus)


def _pairs(alg: Algebra):
    lab = alg.space.label
    for a in _corpus(alg):
        for b in _corpus(alg):
            yield f"{lab(a)} | {lab(b)}", a, b


def run_creativity(alg):
    return [(g.name, check_creativity(g, alg.spec.max_weight)) for g in _gen_list(alg)]


def run_translation(alg):
    return [(g.name, check_translation_covariance(g, alg.spec.max_weight)) for g in _gen_list(alg)]


def run_completeness(alg):
    return [("generators", check_completeness(_gen_list(alg), alg.spec.max_weight, alg.space))]


def run_locality(alg):
    gs = _gen_list(alg)
    return [(f"{a.name} | {b.name}", check_locality(a, b, alg.spec.max_weight, alg.spec.window))
            for a in gs for b in gs]


def run_skew(alg):
    return [(n, check_skew_symmetry(a, b, alg.Y, alg.spec.max_weight)) for n, a, b in _pairs(alg)]


def run_duality_direct(alg):
    L = alg.spec.max_weight
    return [(n, check_duality_direct(a, b, alg.Y, L, middle=_corpus(alg))) for n, a, b in _pairs(alg)]


def run_duality_exchange(alg):
    L = alg.spec.max_weight
    out = []
    for n, a, b in _pairs(alg):
        v = check_duality_exchange(a, b, alg.Y, L, targets=_corpus(alg))
        v.data.pop("witness", None)
        out.append((n, v))
    return out


def run_pijk(alg):
    L = alg.spec.max_weight
    out, left = [], 20
    for n, a, b in _pairs(alg):
        if left <= 0:
            break
        v = check_pijk_identity(a, b, alg.Y, L, instances=left, targets=_corpus(alg))
        if v.log or not v.holds:
            out.append((n, v))
            left -= len(v.log)
    return out


def run_module_dual(alg):
    s = alg.spec
    return [("V over V", check_module_dual(alg.Y, s.corpus, samples=s.samples, seed=s.seed))]


def run_closure(alg):
    c = dong_closure(_gen_list(alg), alg.spec.max_weight, alg.spec.window, space=alg.space)
    return [("generators", c.verdict)]


def run_goddard(alg):
    L = alg.spec.max_weight
    c = dong_closure(_gen_list(alg), L, verify=False, space=alg.space)
    try:
        v = goddard_probe(c.fields, L)
    except Inconsistent as exc:
        v = fails("goddard-injective", dict(exc.counterexample, reason=str(exc)), {"L": fmt(L)})
    return [("closure", v)]


def run_existence(alg):
    L = alg.spec.max_weight
    try:
        v = construct_by_existence(_gen_list(alg), alg.space, L, alg.spec.window).verdict
    except (NotSpanning, NotLocal) as exc:
        v = fails("existence", dict(exc.counterexample, reason=str(exc)), {"L": fmt(L)})
    return [("generators", v)]


def run_chiral(alg):
    return [("V", check_chiral_subalgebra(alg.Y, alg.spec.max_weight))]


def run_vbbk(alg):
    return [("V", check_vbbk_support(alg.Y, alg.spec.corpus))]


def run_multiple_locality(alg):
    gs = _gen_list(alg)
    out = []
    for a in gs:
        for b in gs:
            for c in gs:
                out.append((f"{a.name},{b.name},{c.name}",
                            verify_multiple_locality([a, b, c], alg.spec.window)))
    return out


CHECKS: Dict[str, Callable[[Algebra], List[Instance]]] = {
    "creativity": run_creativity,
    "translation-covariance": run_translation,
    "completeness": run_completeness,
    "locality": run_locality,
    "skew-symmetry": run_skew,
    "duality-direct": run_duality_direct,
    "duality-exchange": run_duality_exchange,
    "pijk-identity": run_pijk,
    "module-dual": run_module_dual,
    "dong-closure": run_closure,
    "goddard": run_goddard,
    "existence": run_existence,
    "chiral-subalgebra": run_chiral,
    "vbbk-support": run_vbbk,
    "multiple-locality": run_multiple_locality,
}


def _run_guarded(name: str, alg: Algebra) -> List[Instance]:
    try:
        return CHECKS[name](alg)
    except NotLocal as exc:
        return [("-", fails(name, dict(exc.counterexample, reason=str(exc)), {"L": fmt(alg.spec.max_weight)}))]


# -- commands ------------------------------------------------------------------------

def _load(path: str, **overrides) -> Algebra:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc.strerror}", 0, 0) from None
    return build_algebra(load_spec(text, **overrides))


def cmd_check(args, out) -> int:
    only = None
    if args.only is not None:
        only = _check_names(args.only)
    alg = _load(args.spec, max_weight=args.max_weight, window=args.window, only=only, fmt_=args.format)
    spec = alg.spec
    names = spec.only or list(CHECKS)
    for n in names:
        if n not in CHECKS:
            raise SpecError(f"unknown check {n!r}", 0, 0)
    jsonl = spec.fmt == "json-lines"
    failed = total = 0
    if jsonl:
        out.write(json.dumps({"record": "report", "tool": "opealg", "version": __version__,
                              "spec_digest": spec.digest(), "seed": spec.seed, "checks": names},
                             sort_keys=True) + "\n")
    else:
        out.write(f"opealg {__version__}  spec {spec.digest()}  L={fmt(spec.max_weight)} "
                  f"window={spec.window} corpus={fmt(spec.corpus)}\n")
    for name in names:
        t0 = time.perf_counter()
        results = _run_guarded(name, alg)
        dt = time.perf_counter() - t0
        for inst, v in results:
            total += 1
            failed += not v.holds
            if jsonl:
                rec = dict(v.record(), record="verdict", check=name, instance=inst)
                out.write(json.dumps(rec, sort_keys=True) + "\n")
            elif not v.holds:
                out.write(f"[FAIL] {name} {inst}\n  {v.summary()}\n")
        if not jsonl:
            bad = sum(not v.holds for _, v in results)
            out.write(f"[{'PASS' if not bad else 'FAIL'}] {name}: {len(results) - bad}/{len(results)} hold"
                      f"  ({dt:.2f} s)\n")
    if jsonl:
        out.write(json.dumps({"record": "summary", "total": total, "failed": failed}, sort_keys=True) + "\n")
    else:
        out.write(f"{total} verdicts, {failed} failed\n")
    return EXIT_FAIL if failed else EXIT_OK


def _field_arg(alg: Algebra, name: str) -> Field:
    try:
        return resolve_field(alg, name)
    except KeyError:
        raise SpecError(f"unknown field {name!r}", 0, 0) from None


def cmd_ope(args, out) -> int:
    alg = _load(args.spec)
    a, b = _field_arg(alg, args.a), _field_arg(alg, args.b)
    try:
        ope = extract_reduced_ope(a, b, alg.spec.max_weight, alg.spec.window)
    except NotLocal as exc:
        out.write(f"not local: {exc}\n")
        for k in sorted(exc.counterexample):
            out.write(f"  {k}: {plain(exc.counterexample[k])}\n")
        return EXIT_FAIL
    out.write(ope.to_text() + "\n")
    return EXIT_OK


def _field_table(f: Field, L) -> List[str]:
    space = f.space
    lines = []
    fp = fingerprint(f, L)
    for (v, vk, u) in sorted(fp, key=lambda t: (space.total_weight(t[0]), repr(t[0]), t[1], repr(t[2]))):
        lines.append(f"  mode {vk} on {space.label(v)} -> {fmt(fp[(v, vk, u)])}*{space.label(u)}")
    return lines


def cmd_product(args, out) -> int:
    alg = _load(args.spec)
    a, b = _field_arg(alg, args.a), _field_arg(alg, args.b)
    try:
        vn = ExpPair(parse_rational(args.n), parse_rational(args.nbar))
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"bad exponent: {exc}", 0, 0) from None
    f = general_product(a, vn, b)
    space = alg.space
    out.write(f"product {a.name}_{vn}{b.name}  weight {f.weight}  parity {f.parity}\n")
    out.write(f"state: {space.describe_vector(f.s1())}\n")
    out.write(f"field on weight <= {fmt(alg.spec.max_weight)}:\n")
    lines = _field_table(f, alg.spec.max_weight)
    out.write("\n".join(lines) + "\n" if lines else "  (zero)\n")
    return EXIT_OK


def cmd_construct(args, out) -> int:
    alg = _load(args.spec)
    L = alg.spec.max_weight
    try:
        c = construct_by_existence(_gen_list(alg), alg.space, L, alg.spec.window)
    except (NotSpanning, NotLocal) as exc:
        out.write(f"construction failed: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    space = alg.space
    for v in space.basis(L):
        f = c.Y(v)
        out.write(f"Y({space.label(v)}) = {f.name}  weight {f.weight} parity {f.parity}\n")
    out.write(c.verdict.summary() + "\n")
    return EXIT_OK if c.verdict.holds else EXIT_FAIL


def cmd_closure(args, out) -> int:
    alg = _load(args.spec)
    c = dong_closure(_gen_list(alg), alg.spec.max_weight, alg.spec.window, space=alg.space)
    for f in c.fields:
        out.write(f"{f.name}  weight {f.weight} parity {f.parity}\n")
    out.write(c.verdict.summary() + "\n")
    return EXIT_OK if c.verdict.holds else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_SPEC)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="opealg", description="Exact checks for two-sector OPE-algebras.")
    p.add_argument("--version", action="version", version=f"opealg {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    c = sub.add_parser("check", help="run axiom checks from a spec file")
    c.add_argument("--only", help="comma-separated check names")
    c.add_argument("--max-weight", dest="max_weight", type=parse_rational, help="truncation weight L")
    c.add_argument("--window", type=int, help="margin / window depth")
    c.add_argument("--format", choices=("text", "json-lines"))
    c.add_argument("spec")
    o = sub.add_parser("ope", help="print the reduced OPE of two fields")
    o.add_argument("spec")
    o.add_argument("a")
    o.add_argument("b")
    r = sub.add_parser("product", help="print a_(n,nbar) b as a state and a field")
    r.add_argument("spec")
    r.add_argument("a")
    r.add_argument("n")
    r.add_argument("nbar")
    r.add_argument("b")
    k = sub.add_parser("construct", help="build Y from the generators")
    k.add_argument("spec")
    d = sub.add_parser("closure", help="Dong closure of the generators")
    d.add_argument("spec")
    return p


COMMANDS = {"check": cmd_check, "ope": cmd_ope, "product": cmd_product,
            "construct": cmd_construct, "closure": cmd_closure}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except SpecError as exc:
        where = getattr(args, "spec", "")
        sys.stderr.write(f"{where}:{exc}\n")
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
