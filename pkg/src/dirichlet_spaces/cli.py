"""Command-line driver.

Exit codes: 0 success, 1 failed assertion or divergent iteration (a JSON
failure manifest is written), 2 bad input.  All JSON output is sorted and
free of wall-clock data, so reruns with the same inputs, seed and thread
count are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from . import decomposition as dc
from . import functionals as fn
from . import kernels as kn
from . import serialize as sz
from .corpus import CORPUS_SEED, decomposition_corpus, function_corpus, measure_corpus
from .hyperbolic import LatticeCertificationError, build_lattice
from .measure import poisson_extension
from .quadrature import DEFAULT_NR, DEFAULT_NTHETA, QuadratureError
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


class Failure(RuntimeError):
    def __init__(self, message: str, manifest: dict):
        super().__init__(message)
        self.manifest = manifest


@dataclass
class RunConfig:
    command: str
    inputs: Dict[str, Optional[str]] = field(default_factory=dict)
    nr: int = DEFAULT_NR
    ntheta: int = DEFAULT_NTHETA
    eta: Optional[float] = None
    b: float = dc.DEFAULT_B
    tol: float = dc.DEFAULT_TOL
    threads: int = 1
    seed: int = CORPUS_SEED
    out: Optional[str] = None

    def validate(self):
        if self.nr < 2 or self.ntheta < 4:
            raise InputError("--nr must be >= 2 and --ntheta >= 4")
        if self.threads < 1:
            raise InputError("--threads must be >= 1")
        if self.tol <= 0 or not np.isfinite(self.tol):
            raise InputError("--tol must be a positive number")
        if self.eta is not None and not (0.0 < self.eta < 1.0):
            raise InputError("--eta must lie in (0, 1)")
        if not np.isfinite(self.b) or self.b <= 0:
            raise InputError("--b must be a positive number")

    def meta(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "nr": self.nr,
            "ntheta": self.ntheta,
            "eta": self.eta,
            "b": self.b,
            "tol": self.tol,
            "threads": self.threads,
            "seed": self.seed,
            "version": __version__,
        }


# -- input loading ------------------------------------------------------------------


def load_measure(ref: Optional[str]):
    """A JSON file path, or ``corpus:<name>`` for m, delta0 or mix."""
    if ref is None:
        raise InputError("a measure is required (--measure)")
    if ref.startswith("corpus:"):
        name = ref.split(":", 1)[1]
        corpus = measure_corpus()
        if name not in corpus:
            raise InputError(f"unknown corpus measure {name!r}; choose from {', '.join(corpus)}")
        return corpus[name]
    return sz.measure_from_dict(sz.load_json(ref))


def load_function(ref: Optional[str], seed: int = CORPUS_SEED):
    """A JSON file path, or ``corpus:<name>`` from the function corpora."""
    if ref is None:
        raise InputError("a function is required (--function)")
    if ref.startswith("corpus:"):
        name = ref.split(":", 1)[1]
        corpus = dict(function_corpus(seed))
        corpus.update(decomposition_corpus())
        if name not in corpus:
            raise InputError(f"unknown corpus function {name!r}; choose from {', '.join(corpus)}")
        return corpus[name]
    return sz.function_from_dict(sz.load_json(ref))


def parse_point(s: str) -> complex:
    try:
        z = complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise InputError(f"cannot parse point {s!r}; write e.g. 0.5+0.2j") from exc
    if abs(z) >= 1.0:
        raise InputError(f"point {s} is not inside the open unit disk")
    return z


def parse_params(items: List[str]) -> Dict[str, str]:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise InputError(f"parameter {it!r} must look like key=value")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _strip_times(d):
    if isinstance(d, dict):
        return {k: _strip_times(v) for k, v in d.items() if k not in ("seconds", "runtime")}
    if isinstance(d, list):
        return [_strip_times(v) for v in d]
    return d


def emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def grid_points(radii: str, angles: int, points: List[str]) -> np.ndarray:
    pts = [parse_point(p) for p in points or []]
    if radii:
        try:
            rs = [float(r) for r in radii.split(",") if r.strip()]
        except ValueError as exc:
            raise InputError(f"bad --radii list {radii!r}") from exc
        if any(r < 0 or r >= 1 for r in rs):
            raise InputError("radii must lie in [0, 1)")
        if angles < 1:
            raise InputError("--angles must be >= 1")
        t = 2 * np.pi * np.arange(angles) / angles
        for r in rs:
            pts.extend((r * np.exp(1j * t)).tolist() if r > 0 else [0j])
    if not pts:
        raise InputError("no points given (use --radii/--angles or --point)")
    return np.asarray(pts, complex)


# -- commands --------------------------------------------------------------------------


def cmd_pmu(cfg: RunConfig, args) -> str:
    mu = load_measure(args.measure)
    zs = grid_points(args.radii, args.angles, args.point)
    vals = poisson_extension(mu, zs)
    if args.format == "json":
        return sz.dumps({"meta": cfg.meta(), "points": [[z.real, z.imag] for z in zs], "values": vals})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "P_mu"])
    for z, v in zip(zs, vals):
        w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(v))])
    return buf.getvalue()


def cmd_norms(cfg: RunConfig, args) -> str:
    f = load_function(args.function, cfg.seed)
    mu = load_measure(args.measure)
    rep = fn.norm_report(f, mu, args.function, args.measure, cfg.nr, cfg.ntheta, include_double=not args.fast, threads=cfg.threads)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rep.to_csv(timings=args.timings))
    d = rep.to_dict(timings=args.timings)
    d["meta"] = cfg.meta()
    return sz.dumps(d)


def cmd_dblint(cfg: RunConfig, args) -> str:
    f = load_function(args.function, cfg.seed)
    mu = load_measure(args.measure)
    outer = fn.cached_disk_rule(float(args.sigma), cfg.nr, cfg.ntheta)
    val = fn.double_integral(f, mu, args.sigma, args.tau, outer, threads=cfg.threads)
    semi = fn.dirichlet_seminorm_sq(f, mu)
    return sz.dumps({"meta": cfg.meta(), "sigma": args.sigma, "tau": args.tau, "value": val, "seminorm_sq": semi, "ratio": val / semi if semi > 0 else None})


def cmd_mo(cfg: RunConfig, args) -> str:
    f = load_function(args.function, cfg.seed)
    mu = load_measure(args.measure)
    outer = fn.cached_disk_rule(0.0, cfg.nr, cfg.ntheta)
    val = fn.mo_seminorm_sq(f, mu, args.variant, args.r, outer=outer, threads=cfg.threads)
    semi = fn.dirichlet_seminorm_sq(f, mu)
    d = {"meta": cfg.meta(), "variant": args.variant, "r": args.r, "value": val, "seminorm_sq": semi, "ratio": val / semi if semi > 0 else None}
    if args.point:
        zs = np.asarray([parse_point(p) for p in args.point])
        ch = fn.pointwise_chain(f, zs, args.r)
        d["pointwise"] = [{"z": [z.real, z.imag], "grad": g, "mo_r": a, "mo": m} for z, g, a, m in zip(zs, ch["grad"], ch["mo_r"], ch["mo"])]
    return sz.dumps(d)


def _need_eta(cfg):
    if cfg.eta is None:
        raise InputError("--eta is required")
    return cfg.eta


def cmd_lattice(cfg: RunConfig, args) -> str:
    lat = build_lattice(_need_eta(cfg))
    d = {"meta": cfg.meta(), "lattice": sz.lattice_to_dict(lat)}
    if args.measure:
        d["poisson_at_points"] = poisson_extension(load_measure(args.measure), lat.points)
    return sz.dumps(d)


def cmd_decompose(cfg: RunConfig, args) -> str:
    f = load_function(args.function, cfg.seed)
    mu = load_measure(args.measure)
    if cfg.b <= 2:
        raise InputError("--b must exceed 2 for the decomposition")
    lat = build_lattice(_need_eta(cfg))
    try:
        dec = dc.analyze(f, mu, lat, cfg.b, cfg.tol, args.max_terms)
    except dc.NeumannDivergenceError as exc:
        raise Failure(
            f"Neumann series diverges at eta = {cfg.eta:g}: {exc}",
            {"meta": cfg.meta(), "failure": "divergence", "message": str(exc), "term_norms": list(exc.term_norms), "lattice_id": lat.lattice_id, "n_points": lat.size},
        )
    payload = {
        "meta": cfg.meta(),
        "decomposition": _strip_times(sz.decomposition_to_dict(dec)),
        "lattice": sz.lattice_to_dict(lat),
        "function": sz.function_to_dict(f),
        "measure": sz.measure_to_dict(mu),
    }
    if not dec.diagnostics["converged"]:
        raise Failure(
            f"Neumann series did not reach tol = {cfg.tol:g} within {args.max_terms} terms",
            dict(payload, failure="not_converged", message="term norms stayed above tol"),
        )
    return sz.dumps(payload)


def cmd_synthesize(cfg: RunConfig, args) -> str:
    if not args.input:
        raise InputError("--input decomposition file is required")
    d = sz.load_json(args.input)
    for key in ("decomposition", "lattice"):
        if key not in d:
            raise InputError(f"decomposition file lacks the {key!r} block")
    dec = sz.decomposition_from_dict(d["decomposition"])
    lat = sz.lattice_from_dict(d["lattice"])
    g = dc.synthesize(dec, lat)
    out = {"meta": cfg.meta(), "function": sz.function_to_dict(g), "n_atoms": int(g.n_atoms)}
    if "function" in d and "measure" in d:
        f = sz.function_from_dict(d["function"])
        mu = sz.measure_from_dict(d["measure"])
        r = dc.reconstruction_residual(f, g, mu)
        out["reconstruction_residual"] = r
        sys.stderr.write(f"reconstruction residual {r:.6e}\n")
    return sz.dumps(out)


def cmd_schur(cfg: RunConfig, args) -> str:
    mu = load_measure(args.measure)
    if args.kernel == "H":
        spec = kn.kernel_H(args.n, args.alpha, mu)
    else:
        spec = kn.kernel_L(args.alpha, mu)
    exps = [float(e) for e in args.exponent] if args.exponent else None
    cert = kn.schur_certify(spec, exps, threads=cfg.threads)
    d = {"meta": cfg.meta(), "certificate": cert.to_dict()}
    if cert.certified and args.empirical:
        d["empirical_norms"] = kn.empirical_norms(spec, corpus=kn.operator_test_corpus(cfg.seed), threads=cfg.threads)
        worst = max(d["empirical_norms"].values())
        if worst > cert.C:
            raise Failure(f"empirical norm {worst:.6g} exceeds certified C = {cert.C:.6g}", dict(d, failure="empirical_norm_above_C"))
    if not cert.certified:
        raise Failure(f"no Schur certificate for {spec.kernel_id}; witness {cert.witness}", dict(d, failure="not_certified"))
    return sz.dumps(d)


def cmd_probe(cfg: RunConfig, args) -> str:
    raw = parse_params(args.param)
    params: Dict = {}
    for k, v in raw.items():
        if k == "mu":
            params[k] = load_measure(v)
        else:
            try:
                params[k] = float(v)
            except ValueError as exc:
                raise InputError(f"parameter {k} must be numeric") from exc
    if args.lemma == "5.3":
        params.setdefault("b", cfg.b)
        if cfg.eta is not None:
            params.setdefault("eta", cfg.eta)
    try:
        rep = kn.estimate_probe(args.lemma, params, density=args.density)
    except KeyError as exc:
        raise InputError(f"probe {args.lemma} needs parameter {exc.args[0]}") from exc
    return sz.dumps({"meta": cfg.meta(), "probe": rep})


def cmd_verify(cfg: RunConfig, args) -> str:
    kwargs = {"threads": cfg.threads, "seed": cfg.seed, "b": cfg.b, "tol": cfg.tol}
    try:
        checks = run_suite(args.suite, **kwargs)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from exc
    d = {"meta": cfg.meta(), "suite": args.suite, "checks": [c.to_dict() for c in checks], "passed": all(c.passed for c in checks)}
    for c in checks:
        sys.stderr.write(f"{'PASS' if c.passed else 'FAIL'} {args.suite}: {c.name}\n")
    if not d["passed"]:
        failing = [c.name for c in checks if not c.passed]
        raise Failure(f"suite {args.suite} failed: {'; '.join(failing)}", dict(d, failure="assertion", failing=failing))
    return sz.dumps(d)


COMMANDS = {
    "pmu": cmd_pmu,
    "norms": cmd_norms,
    "dblint": cmd_dblint,
    "mo": cmd_mo,
    "lattice": cmd_lattice,
    "decompose": cmd_decompose,
    "synthesize": cmd_synthesize,
    "schur": cmd_schur,
    "probe": cmd_probe,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nr", type=int, default=DEFAULT_NR, help="radial quadrature nodes")
    common.add_argument("--ntheta", type=int, default=DEFAULT_NTHETA, help="angular quadrature nodes")
    common.add_argument("--eta", type=float, default=None, help="lattice scale in (0, 1)")
    common.add_argument("--b", type=float, default=dc.DEFAULT_B, help="atom exponent")
    common.add_argument("--tol", type=float, default=dc.DEFAULT_TOL, help="Neumann stopping tolerance")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=CORPUS_SEED, help="seed of the randomized corpora")
    common.add_argument("--out", default=None, help="output path (stdout if omitted)")

    p = argparse.ArgumentParser(prog="dirichlet-spaces", description="Numerical toolkit for Dirichlet-type spaces D(mu).")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pmu", parents=[common], help="Poisson extension on a grid")
    s.add_argument("--measure", required=True)
    s.add_argument("--radii", default="0,0.25,0.5,0.75,0.9")
    s.add_argument("--angles", type=int, default=8)
    s.add_argument("--point", action="append", help="extra point such as 0.5+0.1j; repeatable")
    s.add_argument("--format", choices=("csv", "json"), default="csv")

    s = sub.add_parser("norms", parents=[common], help="norm report for one function and measure")
    s.add_argument("--function", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--csv", default=None, help="also write the CSV table here")
    s.add_argument("--fast", action="store_true", help="skip the double integral and mean-oscillation rows")
    s.add_argument("--timings", action="store_true", help="include runtimes (breaks byte-identical output)")

    s = sub.add_parser("dblint", parents=[common], help="weighted double integral")
    s.add_argument("--function", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--tau", type=float, default=0.0)

    s = sub.add_parser("mo", parents=[common], help="mean-oscillation seminorm")
    s.add_argument("--function", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--variant", choices=("MO", "MO_r"), default="MO")
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--point", action="append")

    s = sub.add_parser("lattice", parents=[common], help="build and certify a lattice")
    s.add_argument("--measure", default=None)

    s = sub.add_parser("decompose", parents=[common], help="atomic decomposition")
    s.add_argument("--function", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--max-terms", type=int, default=dc.DEFAULT_MAX_TERMS)

    s = sub.add_parser("synthesize", parents=[common], help="rebuild f from a decomposition file")
    s.add_argument("--input", required=True)

    s = sub.add_parser("schur", parents=[common], help="Schur test certificate")
    s.add_argument("--kernel", choices=("H", "L"), required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--exponent", action="append", help="test exponent (sigma for H, epsilon for L); repeatable")
    s.add_argument("--empirical", action="store_true", help="also compare empirical operator norms with C")

    s = sub.add_parser("probe", parents=[common], help="estimate an inequality constant")
    s.add_argument("--lemma", choices=kn.LEMMAS, required=True)
    s.add_argument("--param", action="append", help="key=value; mu takes a measure reference")
    s.add_argument("--density", type=int, default=4)

    s = sub.add_parser("verify", parents=[common], help="run a named invariant suite")
    s.add_argument("suite", choices=sorted(SUITES))
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        inputs={k: getattr(args, k) for k in ("function", "measure", "input") if getattr(args, k, None) is not None},
        nr=args.nr,
        ntheta=args.ntheta,
        eta=args.eta,
        b=args.b,
        tol=args.tol,
        threads=args.threads,
        seed=args.seed,
        out=args.out,
    )
    try:
        cfg.validate()
        text = COMMANDS[args.command](cfg, args)
    except Failure as exc:
        sys.stderr.write(f"error: {exc}\n")
        emit(sz.dumps(exc.manifest), cfg.out)
        return EXIT_FAIL
    except LatticeCertificationError as exc:
        sys.stderr.write(f"error: lattice certification failed: {exc}\n")
        emit(sz.dumps({"meta": cfg.meta(), "failure": "lattice_certification", "message": str(exc)}), cfg.out)
        return EXIT_FAIL
    except (InputError, sz.FormatError, QuadratureError, fn.CostGuardError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    emit(text, cfg.out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
