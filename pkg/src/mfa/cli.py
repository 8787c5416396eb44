"""Command-line front end.

Every subcommand reads an INI file with sections ``[system]``,
``[potential]``, ``[numerics]`` and ``[output]``; flags override file
values.  The effective configuration is echoed to stdout as ``#`` lines and
tables go to ``--out`` (or stdout when no path is given).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import gdms, measures, potentials, pressure, spectrum, thermo
from .errors import BudgetError, ConvergenceError, DomainError, MfaError

EXIT_CONFIG, EXIT_DOMAIN, EXIT_CONVERGENCE = 2, 3, 4
SUBCOMMANDS = ("check", "pressure", "dim", "temperature", "spectrum", "localdim", "concentrate")


class ConfigError(MfaError):
    """Unreadable or inconsistent configuration."""


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _records(text: str) -> list:
    """``a,b,c; d,e,f`` -> ``[[a, b, c], [d, e, f]]`` of stripped strings."""
    return [[f.strip() for f in rec.split(",")] for rec in text.split(";") if rec.strip()]


@dataclass
class RunConfig:
    system: dict = field(default_factory=dict)
    potential: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    NUMERIC_DEFAULTS = {
        "n_max": "16", "q_min": "-5", "q_max": "5", "q_steps": "101", "seed": "42",
        "word_budget": str(gdms.DEFAULT_WORD_BUDGET), "t_values": "0", "q": "1",
        "q_values": "0,1,2", "count": "200", "word_length": "14", "band": "0.1", "memory": "1",
    }

    @classmethod
    def load(cls, path: Optional[str]) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    parser.read_file(fh)
            except (OSError, configparser.Error) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = cls(*(dict(parser[s]) if parser.has_section(s) else {}
                    for s in ("system", "potential", "numerics", "output")))
        for k, v in cls.NUMERIC_DEFAULTS.items():
            cfg.numerics.setdefault(k, v)
        cfg.output.setdefault("precision", "17")
        return cfg

    def override(self, args: argparse.Namespace):
        pairs = {"seed": args.seed, "threads": args.threads, "q_min": args.q_min, "q_max": args.q_max,
                 "q_steps": args.q_steps, "n_max": args.n_max, "nodes": args.nodes}
        for k, v in pairs.items():
            if v is not None:
                self.numerics[k] = str(v)
        if args.out is not None:
            self.output["path"] = args.out

    def echo(self) -> list:
        lines = []
        for name in ("system", "potential", "numerics", "output"):
            for k, v in sorted(getattr(self, name).items()):
                lines.append(f"# {name}.{k} = {v}")
        return lines

    # -- typed accessors ----------------------------------------------------

    def num(self, key: str, cast=float, default=None):
        raw = self.numerics.get(key)
        if raw is None or raw == "":
            return default
        try:
            return cast(float(raw)) if cast is int else cast(raw)
        except ValueError as exc:
            raise ConfigError(f"numerics.{key}: cannot parse {raw!r}") from exc

    def q_grid(self) -> np.ndarray:
        q_min, q_max = self.num("q_min"), self.num("q_max")
        steps = self.num("q_steps", int)
        if not q_min < q_max or steps < 2:
            raise ConfigError("q grid needs q_min < q_max and q_steps >= 2")
        return np.linspace(q_min, q_max, steps)

    def budget(self) -> int:
        b = self.num("word_budget", int)
        if b <= 0:
            raise ConfigError("word_budget must be positive")
        return b

    def build_system(self) -> gdms.SystemSpec:
        s = self.system
        name = s.get("name", "").strip()
        if not name:
            raise ConfigError("[system] needs a name")
        try:
            if name == "custom":
                return self._custom_system()
            params = {}
            if "n" in s:
                params["N"] = int(s["n"])
            if "eps" in s:
                params["eps"] = float(s["eps"])
            if "digits" in s:
                params["digits"] = [int(x) for x in _floats(s["digits"])]
            if "ratios" in s:
                params["ratios"] = _floats(s["ratios"])
            if "gaps" in s:
                params["gaps"] = _floats(s["gaps"])
            return gdms.builtin_system(name, **params)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"[system]: {exc}") from exc

    def _custom_system(self) -> gdms.SystemSpec:
        s = self.system
        vertices = [(int(r[0]), float(r[1]), float(r[2])) for r in _records(s["vertices"])]
        edges = [(int(r[0]), int(r[1]), int(r[2]), r[3], tuple(float(x) for x in r[4:]))
                 for r in _records(s["edges"])]
        incidence = None
        if "incidence" in s:
            incidence = [[bool(int(float(x))) for x in row] for row in _records(s["incidence"])]
        tail = None
        if "tail_gamma" in s:
            acc = s.get("tail_accumulation")
            tail = gdms.TailModel(float(s["tail_gamma"]), float(s.get("tail_log_power", 0.0)),
                                  None if acc is None else float(acc))
        known = {v[0] for v in vertices}
        for e in edges:
            if e[1] not in known or e[2] not in known:
                raise ConfigError(f"edge {e[0]} references an unknown vertex")
        return gdms.custom_system(vertices, edges, incidence, tail, name="custom")

    def build_family(self, system: gdms.SystemSpec) -> potentials.PotentialFamily:
        p = self.potential
        kind = p.get("kind", "zero").strip()
        u_raw = p.get("u", "").strip()
        if u_raw == "hd":
            u = thermo.hausdorff_dimension(system, M=self.num("nodes", int), n_max=None).value
        elif u_raw:
            u = float(u_raw)
        else:
            u = potentials.finiteness_parameter(system) + 1.0
        try:
            if kind == "zero":
                fam = potentials.PotentialFamily.zero(u)
            elif kind == "probabilities":
                fam = potentials.PotentialFamily.from_probabilities(system, _floats(p["probabilities"]), u)
            elif kind == "constants":
                vals = {int(r[0]): float(r[1]) for r in (x.split(":") for x in p["values"].split(","))}
                fam = potentials.PotentialFamily.constants(vals, u)
            elif kind == "affine":
                vals = {int(r[0]): (float(r[1]), float(r[2])) for r in (x.split(":") for x in p["values"].split(","))}
                fam = potentials.PotentialFamily("affine", vals, u=u, v_beta=float(p.get("v_beta", 0.0)))
            else:
                raise ConfigError(f"unknown potential kind {kind!r}")
        except (KeyError, ValueError, IndexError) as exc:
            raise ConfigError(f"[potential]: {exc}") from exc
        if p.get("normalize", "true").strip().lower() in ("1", "true", "yes", "on"):
            fam = potentials.normalize(system, fam, M=self.num("nodes", int))
        return fam


def _write_table(rows: list, header: tuple, destination: Optional[str], stdout):
    if destination:
        with open(destination, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    else:
        w = csv.writer(stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _run(cmd: str, cfg: RunConfig, stdout) -> None:
    system = cfg.build_system()
    M = cfg.num("nodes", int)
    threads = cfg.num("threads", int)
    out = cfg.output.get("path")
    for line in cfg.echo():
        print(line, file=stdout)

    if cmd == "check":
        for line in gdms.diagnostics(system).lines():
            print(line, file=stdout)
        return

    if cmd == "dim":
        est = thermo.hausdorff_dimension(system, M=M, n_max=cfg.num("n_max", int), budget=cfg.budget())
        row = [_fmt(est.value), "" if est.lower is None else _fmt(est.lower),
               "" if est.upper is None else _fmt(est.upper)]
        _write_table([row], ("dim", "lower", "upper"), out, stdout)
        return

    family = cfg.build_family(system)

    if cmd == "pressure":
        rows = []
        n_max = cfg.num("n_max", int)
        for q in cfg.q_grid():
            for t in _floats(cfg.numerics["t_values"]):
                est = pressure.pressure_collocation(system, family, q, t, M=M)
                lo = hi = ""
                if n_max and system.is_full_shift:
                    br = pressure.pressure_bracket(system, family, q, t, n_max=n_max)
                    lo, hi = _fmt(br.lower), _fmt(br.upper)
                rows.append([_fmt(q), _fmt(t), _fmt(est.value), lo, hi, est.method])
        _write_table(rows, ("q", "t", "pressure", "lower", "upper", "method"), out, stdout)
        return

    if cmd == "temperature":
        curve = spectrum.spectrum_curve(system, family, cfg.q_grid(), M=M, threads=threads)
        _report_failures(curve)
        rows = [[_fmt(p.q), _fmt(p.T), _fmt(p.root_residual)] for p in curve.points]
        _write_table(rows, ("q", "T", "residual"), out, stdout)
        return

    if cmd == "spectrum":
        curve = spectrum.spectrum_curve(system, family, cfg.q_grid(), M=M, threads=threads)
        _report_failures(curve)
        if curve.flagged:
            print("# flagged_q = " + ",".join(_fmt(q) for q in curve.flagged), file=stdout)
        if out:
            spectrum.export_curve(curve, out)
        else:
            spectrum.export_curve(curve, stdout)
        return

    seed = cfg.num("seed", int)
    count, length = cfg.num("count", int), cfg.num("word_length", int)
    memory = cfg.num("memory", int)

    if cmd == "localdim":
        q = cfg.num("q")
        T, _ = thermo.Thermo(system, family, M).temperature(q)
        pts = measures.sample_mu_q(system, family, q, count, length, seed, T=T, memory=memory)
        model = measures.cylinder_weights(system, family, length + 2, budget=cfg.budget(), M=M)
        depth = gdms.word_levels(system, length, domain="full", budget=cfg.budget())[-1]
        r_min = float(np.abs(depth.y[:, -1] - depth.y[:, 0]).max())
        slopes, errs = measures.local_dimensions(model, pts, measures.default_radii(model, r_min))
        rows = [[_fmt(x), _fmt(s), _fmt(e)] for x, s, e in zip(pts, slopes, errs)]
        _write_table(rows, ("x", "slope", "stderr"), out, stdout)
        return

    if cmd == "concentrate":
        rows = []
        for q in _floats(cfg.numerics["q_values"]):
            res = measures.concentration_test(system, family, q, count=count,
                                              tolerance_band=cfg.num("band"), word_length=length,
                                              seed=seed, memory=memory)
            rows.append([_fmt(q), _fmt(res.alpha), _fmt(res.fraction)])
        _write_table(rows, ("q", "alpha", "fraction_in_band"), out, stdout)
        return


def _report_failures(curve: spectrum.SpectrumCurve):
    for q, msg in sorted(curve.failures.items()):
        print(f"warning: q={q:g}: {msg}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfa", description="Pressure, dimension and multifractal spectra "
                                     "of conformal graph directed systems on the line.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--q-min", dest="q_min", type=float)
        p.add_argument("--q-max", dest="q_max", type=float)
        p.add_argument("--q-steps", dest="q_steps", type=int)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--nodes", type=int, help="collocation node count")
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        cfg = RunConfig.load(args.config)
        cfg.override(args)
        if cfg.num("threads", int) is None and os.environ.get("MFA_THREADS"):
            cfg.numerics["threads"] = os.environ["MFA_THREADS"]
        _run(args.command, cfg, stdout)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConvergenceError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, ValueError, KeyError) as exc:
        # ParameterError and StructureError are ValueErrors: bad configuration
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
