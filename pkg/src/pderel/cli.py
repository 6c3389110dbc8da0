"""Config-driven experiment runner.

Exit codes: 0 success, 1 schema or input error, 2 expectation mismatch.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from decimal import Decimal
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import dsl
from .dynamics import EvolutionError, EvolutionSpec, GridFlow, evolve
from .jet import ApproximationData, DerivationError, derive_pde, pde_equal_mod_scalar, pde_from_text
from .maxplus import ElementaryRational, PositivityError, equivalent, tropical_constants
from .relation import (
    BoundExtras,
    CertificationError,
    QParams,
    RelationClass,
    certify_point,
    q_table,
)
from .solutions import witness_linear, witness_translation

log = logging.getLogger("pderel")

OK, SCHEMA, MISMATCH = 0, 1, 2


class SchemaError(Exception):
    pass


class Config:
    def __init__(self, parser: configparser.ConfigParser, source: str):
        self.parser = parser
        self.source = source

    def section(self, name: str) -> configparser.SectionProxy:
        if not self.parser.has_section(name):
            raise SchemaError(f"{self.source}: missing section [{name}]")
        return self.parser[name]

    def has(self, name: str) -> bool:
        return self.parser.has_section(name)

    def get(self, section: str, key: str, default=None) -> str:
        sec = self.section(section)
        if key not in sec:
            if default is None:
                raise SchemaError(f"{self.source}: missing key {key!r} in [{section}]")
            return default
        return sec[key].strip()

    def rational(self, section: str, key: str, default=None) -> Fraction:
        text = self.get(section, key, None if default is None else str(default))
        try:
            return dsl.evaluate(dsl.parse(text), self.parameters())
        except (dsl.ParseError, dsl.EvaluationError) as exc:
            raise SchemaError(f"{self.source}: [{section}] {key}: {exc}") from None

    def integer(self, section: str, key: str, default=None) -> int:
        q = self.rational(section, key, default)
        if q.denominator != 1:
            raise SchemaError(f"{self.source}: [{section}] {key} must be an integer")
        return int(q)

    def rationals(self, section: str, key: str, default=None) -> list[Fraction]:
        text = self.get(section, key, default)
        try:
            return [dsl.evaluate(dsl.parse(p), self.parameters()) for p in text.split(",")]
        except (dsl.ParseError, dsl.EvaluationError) as exc:
            raise SchemaError(f"{self.source}: [{section}] {key}: {exc}") from None

    def parameters(self) -> dict[str, Fraction]:
        if not self.has("parameters"):
            return {}
        out: dict[str, Fraction] = {}
        for k, v in self.parser["parameters"].items():
            try:
                out[k] = dsl.evaluate(dsl.parse(v), out)
            except (dsl.ParseError, dsl.EvaluationError) as exc:
                raise SchemaError(f"{self.source}: [parameters] {k}: {exc}") from None
        return out


def load_config(path: str) -> Config:
    p = Path(path)
    if not p.exists():
        bundled = resources.files("pderel") / "configs" / (path if path.endswith(".ini") else f"{path}.ini")
        if not bundled.is_file():
            raise SchemaError(f"config {path!r} not found")
        text, source = bundled.read_text(), f"<bundled {path}>"
    else:
        text, source = p.read_text(), str(p)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",))
    parser.optionxform = str  # keep key case (M, C, ...)
    try:
        parser.read_string(text, source)
    except configparser.Error as exc:
        raise SchemaError(str(exc)) from None
    return Config(parser, source)


def _parse(text: str, what: str) -> dsl.Expression:
    try:
        return dsl.parse(text)
    except dsl.ParseError as exc:
        raise SchemaError(f"{what}: {exc}") from None


# -- subcommands ---------------------------------------------------------------


def _flows(cfg: Config, args) -> tuple[GridFlow, GridFlow, tuple[int, int]]:
    window = tuple(int(v) for v in cfg.rationals("run", "window"))
    if len(window) != 2:
        raise SchemaError("window must be 'N_max, t_max'")
    backend = args.backend or cfg.get("run", "backend", "exact")
    precision = args.precision or cfg.integer("run", "precision", 100)
    params = cfg.parameters()
    grids = []
    for name in ("z", "w"):
        sec = f"dynamics.{name}"
        rule_text = cfg.get(sec, "rule")
        rule = None if rule_text == "closed-form" else _parse(rule_text, f"[{sec}] rule")
        boundary = _parse(cfg.get(sec, "boundary"), f"[{sec}] boundary")
        try:
            spec = EvolutionSpec(rule, boundary, params, backend, precision)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        grids.append(evolve(spec, window))
    return grids[0], grids[1], window


def _qparams(cfg: Config, args) -> QParams:
    params = cfg.parameters()
    if "eps" not in params:
        raise SchemaError("[parameters] must define eps")
    return QParams(
        L=cfg.integer("relation", "band"),
        eps=params["eps"],
        c=cfg.rational("relation", "c", 2),
        D=cfg.rational("relation", "D", 1),
        k=cfg.rational("relation", "k", 2),
        offset=cfg.rational("relation", "offset", 3),
        precision=args.precision or cfg.integer("run", "precision", 100),
    )


def cmd_evolve(cfg: Config, args, out: Path) -> int:
    z, w, _ = _flows(cfg, args)
    with open(out / "grid.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["flow", "N", "t", "value", "provenance"])
        for name, g in (("z", z), ("w", w)):
            for row in csv.reader(g.to_csv(digits=args.digits, exact=args.exact).splitlines()[1:]):
                writer.writerow([name] + row)
    print(f"wrote {out / 'grid.csv'}")
    return OK


def cmd_relate(cfg: Config, args, out: Path) -> int:
    z, w, window = _flows(cfg, args)
    qp = _qparams(cfg, args)
    flavor = cfg.get("relation", "flavor", "e")
    style = cfg.get("relation", "render", "sig4")
    mode = cfg.get("relation", "mode", "direct")
    table = q_table(z, w, window, flavor, qp)
    md = table.markdown(style, mode)
    (out / "qtable.md").write_text(md)
    with open(out / "qtable.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(table.csv_rows())
    print(md, end="")
    status = OK
    if cfg.has("expect") and "table" in cfg.section("expect"):
        tol = Decimal(cfg.get("expect", "tolerance", "0"))
        rows = [r.split() for r in cfg.get("expect", "table").splitlines() if r.strip()]
        rendered = table.render(style, mode)
        for N, row in enumerate(rows):
            for t, text in enumerate(row):
                got = rendered[N][t]
                if abs(Decimal(got) - Decimal(text)) > tol:
                    print(f"mismatch at N={N} t={t}: expected {text}, got {got}")
                    status = MISMATCH
    if cfg.has("expect") and cfg.get("expect", "zero_ee", "false").lower() == "true":
        ee = q_table(z, w, window, "ee", qp)
        nonzero = [(N, t) for N, row in enumerate(ee.values) for t, v in enumerate(row) if v != 0]
        print(f"double-exponential statistic zero on the window: {not nonzero}")
        if nonzero:
            status = MISMATCH
    return status


def _class(cfg: Config) -> RelationClass:
    return RelationClass(
        M=cfg.rational("relation", "M"),
        c=cfg.rational("relation", "c", 1),
        D=cfg.rational("relation", "D", 1),
        L=cfg.integer("relation", "L", cfg.get("relation", "band", "1")),
        alpha=cfg.integer("relation", "alpha", 1),
        flavor=cfg.get("relation", "class_flavor", cfg.get("relation", "flavor", "e")),
        domain=cfg.get("relation", "domain", "fin"),
    )


def _expected_outcome(cfg: Config, args) -> str:
    if args.expect:
        return args.expect
    if cfg.has("expect"):
        return cfg.get("expect", "outcome", "none")
    return "none"


def cmd_certify(cfg: Config, args, out: Path) -> int:
    z, w, window = _flows(cfg, args)
    try:
        cls = _class(cfg)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    form = cfg.get("relation", "form", "pointwise")
    eps = cfg.parameters()["eps"]
    extras = BoundExtras(k=cfg.rational("relation", "k", 1), n=cfg.rational("relation", "n", 1))
    spec = cfg.get("relation", "points", "all")
    if spec == "all":
        points = [(N, t) for N in range(window[0] + 1) for t in range(window[1] + 1)]
    else:
        points = [tuple(int(v) for v in p.split(",")) for p in spec.split(";")]
    prec = args.precision or cfg.integer("run", "precision", 100)
    certs = [certify_point(z, w, p, cls, form, eps, extras, prec=prec) for p in points]
    violated = [c for c in certs if c.verdict == "violated"]
    with open(out / "certificates.txt", "w") as fh:
        for c in certs:
            fh.write(c.text() + "\n")
    outcome = "unrelated" if violated else "related"
    print(f"{len(certs)} points checked, {len(violated)} violated; outcome {outcome}")
    if violated:
        first = violated[0]
        print(f"first violation at N={first.point[0]} t={first.point[1]} ({first.method})")
    want = _expected_outcome(cfg, args)
    return OK if want in ("none", outcome) else MISMATCH


def cmd_derive(cfg: Config, args, out: Path) -> int:
    rule = _parse(cfg.get("derive", "rule"), "[derive] rule")
    try:
        data = ApproximationData(
            tuple(rule.stencil),
            cfg.integer("derive", "m", 1),
            cfg.integer("derive", "p", 1),
            cfg.integer("derive", "q", 1),
            cfg.integer("derive", "alpha", 1),
        )
        letter = cfg.get("derive", "letter", "u")
        d = derive_pde(rule, data, letter=letter, eps_max=cfg.rational("derive", "eps_max", 1))
    except (ValueError, DerivationError) as exc:
        raise SchemaError(str(exc)) from None
    text = d.format()
    print(text)
    print(f"leading: {d.leading.format(letter)}")
    print(f"error constant: {d.error_constant if d.error_constant is not None else 'unavailable (' + d.error_note + ')'}")
    print(f"class (M,c,L,k,D): {tuple(str(v) for v in d.class_tuple)}; consistent: {d.consistent}")
    (out / "derived.txt").write_text(text + "\n")
    status = OK
    if cfg.has("expect"):
        sec = cfg.section("expect")
        if "pde" in sec and not pde_equal_mod_scalar(d.reduced, pde_from_text(sec["pde"], letter)):
            print("mismatch: derived PDE differs from the expected one")
            status = MISMATCH
        if "denominator" in sec and not pde_equal_mod_scalar(d.denominator_jets, pde_from_text(sec["denominator"], letter)):
            print("mismatch: denominator differs")
            status = MISMATCH
        if "error_constant" in sec and d.error_constant != cfg.rational("expect", "error_constant"):
            print(f"mismatch: error constant {d.error_constant}")
            status = MISMATCH
        if "class" in sec and list(d.class_tuple) != cfg.rationals("expect", "class"):
            print(f"mismatch: class tuple {tuple(d.class_tuple)}")
            status = MISMATCH
    return status


def _elementary(cfg: Config, section: str, key: str) -> ElementaryRational:
    expr = _parse(cfg.get(section, key), f"[{section}] {key}")
    try:
        return ElementaryRational.from_expression(expr, binding=cfg.parameters())
    except (PositivityError, dsl.EvaluationError) as exc:
        raise SchemaError(f"[{section}] {key}: {exc}") from None


def cmd_equiv(cfg: Config, args, out: Path) -> int:
    f, g = _elementary(cfg, "equiv", "f"), _elementary(cfg, "equiv", "g")
    if f.dimension != g.dimension:
        raise SchemaError("the two maps have different stencils")
    verdict = equivalent(f, g)
    print(f"tropically equivalent: {verdict}")
    if cfg.has("expect") and "equivalent" in cfg.section("expect"):
        return OK if (cfg.get("expect", "equivalent").lower() == "true") == verdict else MISMATCH
    return OK


def cmd_constants(cfg: Config, args, out: Path) -> int:
    consts = tropical_constants(_elementary(cfg, "constants", "f"))
    print(f"M_f = {consts.M}, c_f = {consts.c}")
    if cfg.has("expect") and "constants" in cfg.section("expect"):
        return OK if [Fraction(consts.M), consts.c] == cfg.rationals("expect", "constants") else MISMATCH
    return OK


def cmd_witness(cfg: Config, args, out: Path) -> int:
    kind = cfg.get("witness", "kind", "linear")
    if kind == "linear":
        pair = cfg.rationals("witness", "pair") if "pair" in cfg.section("witness") else None
        try:
            wit = witness_linear(cfg.rational("witness", "M"), cfg.rational("witness", "D"), cfg.integer("witness", "L"), pair)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        outcome = "unrelated" if wit.verdict == "violated" else "related"
        report = wit.text()
        checks = {"l": Fraction(wit.l)}
    elif kind == "translation":
        try:
            cls = RelationClass(
                cfg.rational("witness", "M"), cfg.rational("witness", "c", 1), cfg.rational("witness", "D", 1),
                cfg.integer("witness", "L"), flavor="ee",
            )
            wit = witness_translation(
                cfg.rational("witness", "delta0"), cfg.rational("witness", "delta"), cfg.rational("witness", "C"),
                cfg.rational("witness", "C_prime"), cfg.rational("witness", "eps"), cfg.integer("witness", "L"), cls,
            )
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        outcome = "unrelated" if wit.verdict == "violated" else "related"
        report = wit.text()
        checks = {"I0": wit.I0}
    else:
        raise SchemaError(f"unknown witness kind {kind!r}")
    print(report, end="")
    (out / "certificates.txt").write_text(report)
    status = OK
    want = _expected_outcome(cfg, args)
    if want not in ("none", outcome):
        status = MISMATCH
    if cfg.has("expect"):
        for key, got in checks.items():
            if key in cfg.section("expect") and cfg.rational("expect", key) != got:
                print(f"mismatch: {key} = {got}")
                status = MISMATCH
    return status


COMMANDS = {
    "derive": cmd_derive,
    "equiv": cmd_equiv,
    "constants": cmd_constants,
    "evolve": cmd_evolve,
    "relate": cmd_relate,
    "certify": cmd_certify,
    "witness": cmd_witness,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pderel", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI file, or the name of a bundled config")
    ap.add_argument("--out", default=".", help="directory for artifacts")
    ap.add_argument("--precision", type=int, help="decimal digits (overrides the config)")
    ap.add_argument("--backend", choices=["exact", "decimal"])
    ap.add_argument("--expect", choices=["related", "unrelated", "none"])
    ap.add_argument("--digits", type=int, default=20, help="digits in grid.csv")
    ap.add_argument("--exact", action="store_true", help="write exact p/q values in grid.csv")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return SCHEMA if exc.code else OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return SCHEMA
    except (EvolutionError, CertificationError, dsl.EvaluationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return SCHEMA


if __name__ == "__main__":
    sys.exit(main())
