"""Command-line driver.

Subcommands
-----------
solve    run one solver, write residual history and a JSON summary
predict  crossover Krylov dimension from the two spectral gaps
table    crossover tables for the two diagonal test families
modes    per-eigenmode decay slopes of several methods on a diagonal matrix
bench    matvec counts for a manifest of (matrix, method) runs

Exit codes are 0 (converged / success), 1 (not converged, no crossover)
and 2 (usage or I/O error). Every CSV has a header row and writes floats
with 17 significant digits, so repeated runs produce identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import modal_decay_run, modal_series
from .exceptions import (BreakdownError, DivergenceError, MatrixFormatError,
                         NoCrossoverError, NotDiagonalError, SpectralTieError)
from .matrix import (make_diag_descending, make_diag_indefinite,
                     read_matrix_market)
from .rates import SpectrumGaps, default_cheb_degree, m_cr_approx, m_cr_solve
from .solvers import LANCZOS_FAMILY, SOLVERS, SolverConfig, solve

__all__ = ["RunSpec", "main", "build_parser", "table_rows", "format_float"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

TABLE_SIZES = {
    1: [128, 256, 512, 1024, 2048, 4096, 8192, 16384],
    2: [128, 256, 512, 1024, 2048],
}
BENCH_CAP = 5000


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit status 2."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class RunSpec:
    """One solver run: where the matrix comes from, which method, and its settings."""

    source: str                  # "mm", "diag" or "indef"
    value: str                   # path or size
    method: str = "momentum-dynamic"
    m: Optional[int] = None
    beta: Optional[float] = None
    tol: float = 1e-12
    residual_mode: str = "absolute"
    max_matvecs: int = BENCH_CAP
    v0: Optional[str] = None
    outputs: dict = field(default_factory=dict)

    def validate(self):
        if self.method not in SOLVERS:
            raise UsageError(f"unknown method {self.method!r}; choose from {', '.join(SOLVERS)}")
        if self.beta is not None and self.method != "momentum-static":
            raise UsageError("--beta only applies to momentum-static")
        if self.method == "momentum-static" and self.beta is None:
            raise UsageError("momentum-static needs --beta")
        if self.m is not None and self.method not in LANCZOS_FAMILY:
            raise UsageError("--m only applies to the Lanczos methods")
        if self.method in LANCZOS_FAMILY and self.m is None:
            raise UsageError(f"{self.method} needs --m")
        try:
            self.config()
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def config(self, **overrides) -> SolverConfig:
        kw = dict(tol=self.tol, residual_mode=self.residual_mode, max_matvecs=self.max_matvecs,
                  m=self.m, beta=self.beta)
        kw.update(overrides)
        return SolverConfig(**kw)

    def load_matrix(self):
        return load_matrix(self.source, self.value)

    def start_vector(self, n: int):
        if self.v0 is None:
            return np.ones(n)
        try:
            v = np.loadtxt(self.v0, dtype=np.float64, ndmin=1)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read start vector {self.v0}: {exc}") from None
        if v.shape != (n,):
            raise UsageError(f"start vector has {v.size} entries, matrix dimension is {n}")
        return v


def load_matrix(source: str, value):
    try:
        if source == "mm":
            return read_matrix_market(value)
        n = int(value)
        if source == "diag":
            return make_diag_descending(n)
        if source == "indef":
            return make_diag_indefinite(n)
    except FileNotFoundError:
        raise UsageError(f"matrix file not found: {value}") from None
    except (MatrixFormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown matrix source {source!r}")


def _fraction(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from None


def _add_matrix_args(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--mm", metavar="PATH", help="Matrix Market file (real symmetric)")
    g.add_argument("--diag", metavar="N", type=int, help="diag(N, N-1, ..., 1)")
    g.add_argument("--indef", metavar="N", type=int, help="diag(N, ..., 0, ..., -N/2)")


def _add_run_args(p):
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--relative", action="store_true", help="stop on |A x - nu x| / |nu|")
    p.add_argument("--max-matvecs", type=int, default=BENCH_CAP)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specmom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one solver")
    _add_matrix_args(p)
    _add_run_args(p)
    p.add_argument("--method", default="momentum-dynamic", choices=sorted(SOLVERS))
    p.add_argument("--m", type=int, help="Krylov dimension (Lanczos methods)")
    p.add_argument("--beta", type=float, help="momentum parameter (momentum-static)")
    p.add_argument("--v0", metavar="PATH", help="start vector, one entry per line (default ones)")
    p.add_argument("--history", metavar="PATH", help="residual history CSV")
    p.add_argument("--json", metavar="PATH", help="JSON run summary")
    p.add_argument("--modes", metavar="PATH",
                   help="per-mode amplitude CSV relative to the dominant mode (diagonal only)")
    p.add_argument("--track", metavar="J,J,...",
                   help="0-based mode indices for --modes (default: all)")

    p = sub.add_parser("predict", help="crossover dimension from eps and eps_L")
    p.add_argument("eps", type=_fraction)
    p.add_argument("eps_L", type=_fraction)
    p.add_argument("N", type=int, nargs="?", default=199, help="momentum polynomial degree")

    p = sub.add_parser("table", help="crossover table for a diagonal test family")
    p.add_argument("--example", type=int, choices=(1, 2), default=1,
                   help="1: diag(n..1); 2: diag(n..-n/2)")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")

    p = sub.add_parser("modes", help="per-mode decay slopes on a diagonal matrix")
    _add_matrix_args(p)
    _add_run_args(p)
    p.add_argument("--methods", default="power,momentum-dynamic,lanczos:16,lanczos:64",
                   help="comma list; Lanczos methods take ':m', momentum-static ':beta'")
    p.add_argument("--burn-in", type=int, default=0, help="ignore snapshots before this matvec")
    p.add_argument("--modes", metavar="PATH", help="write CSV here instead of stdout")

    p = sub.add_parser("bench", help="matvec counts for a JSON manifest")
    p.add_argument("manifest")
    p.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")
    p.add_argument("--json", metavar="PATH", help="per-run details")
    return parser


def _source(args) -> tuple[str, str]:
    for key in ("mm", "diag", "indef"):
        val = getattr(args, key, None)
        if val is not None:
            return key, str(val)
    raise UsageError("no matrix source")


def _open_out(path):
    if path is None:
        return _Stdout()
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()
        return False


# ---------------------------------------------------------------- solve

def cmd_solve(args) -> int:
    src, val = _source(args)
    spec = RunSpec(src, val, method=args.method, m=args.m, beta=args.beta, tol=args.tol,
                   residual_mode="relative" if args.relative else "absolute",
                   max_matvecs=args.max_matvecs, v0=args.v0,
                   outputs={"history": args.history, "json": args.json, "modes": args.modes})
    spec.validate()
    A = spec.load_matrix()
    v0 = spec.start_vector(A.n)
    track = None
    if args.modes:
        if not A.is_diagonal:
            raise UsageError("--modes needs a diagonal matrix")
        track = _parse_track(args.track, A.n)
    cfg = spec.config(record_modes=bool(args.modes))
    try:
        out = solve(A, spec.method, cfg, v0=v0)
    except (BreakdownError, SpectralTieError, DivergenceError) as exc:
        print(f"{spec.method}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL

    summary = {
        "method": spec.method, "n": A.n, "m": spec.m, "beta": spec.beta,
        "tol": spec.tol, "residual_mode": spec.residual_mode,
        "matvecs_used": out.matvecs_used, "nu1": out.nu1, "status": str(out.status),
        "final_residual": out.final_residual, "best_residual": out.best_residual,
        "accounting": "each residual check reuses the product that starts the next stage",
    }
    if args.history:
        with _open_out(args.history) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["matvec", "residual", "nu"])
            for (k, r), nu in zip(out.residuals, out.estimates):
                w.writerow([k, format_float(r), format_float(nu)])
    if args.modes:
        _write_mode_traces(args.modes, out.modes, A, track)
    if args.json:
        with _open_out(args.json) as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    print(f"{spec.method}: status={out.status} matvecs={out.matvecs_used} "
          f"nu1={format_float(out.nu1)} residual={out.final_residual:.3e}")
    return EXIT_OK if out.converged else EXIT_FAIL


def _parse_track(text, n):
    if not text:
        return list(range(n))
    try:
        idx = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad --track list {text!r}") from None
    if any(not 0 <= j < n for j in idx):
        raise UsageError(f"--track indices must lie in [0, {n})")
    return idx


def _write_mode_traces(path, modes, A, track):
    dominant = int(np.argmax(np.abs(A.diagonal())))
    k, R = modal_series(modes, dominant)
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["matvec"] + [f"mode_{j}" for j in track])
        for i in range(k.size):
            w.writerow([int(k[i])] + [format_float(R[i, j]) for j in track])


# ---------------------------------------------------------------- predict / table

def cmd_predict(args) -> int:
    try:
        approx = m_cr_approx(args.eps, args.eps_L)
        solved = m_cr_solve(args.eps, args.eps_L, args.N)
    except NoCrossoverError as exc:
        print(f"no crossover: {exc}")
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"m_cr_approx={approx} m_cr_solved={solved}")
    return EXIT_OK


def table_rows(example: int, sizes=None) -> list[tuple[int, float, int, int]]:
    """``(n, eps, m_cr_approx, m_cr_solved)`` for each size of a test family.

    The gaps are those of the generated matrix itself, and the momentum
    polynomial degree is 199 up to n = 4096 and 349 above.
    """
    sizes = TABLE_SIZES[example] if sizes is None else sizes
    make = make_diag_descending if example == 1 else make_diag_indefinite
    rows = []
    for n in sizes:
        gaps = SpectrumGaps.from_eigenvalues(make(n).diagonal())
        N = default_cheb_degree(n)
        rows.append((n, gaps.eps, m_cr_approx(gaps.eps, gaps.eps_L),
                     m_cr_solve(gaps.eps, gaps.eps_L, N)))
    return rows


def cmd_table(args) -> int:
    try:
        rows = table_rows(args.example, args.sizes)
    except NoCrossoverError as exc:
        print(f"no crossover: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "eps", "m_cr_approx", "m_cr_solved"])
        for n, eps, a, s in rows:
            w.writerow([n, format_float(eps), a, s])
    return EXIT_OK


# ---------------------------------------------------------------- modes

def parse_method(token: str) -> tuple[str, Optional[int], Optional[float], str]:
    """``'lanczos:16'`` -> ``('lanczos', 16, None, 'lanczos_16')``."""
    name, _, param = token.strip().partition(":")
    if name not in SOLVERS:
        raise UsageError(f"unknown method {name!r}")
    m = beta = None
    try:
        if name in LANCZOS_FAMILY:
            if not param:
                raise UsageError(f"{name} needs a Krylov dimension, e.g. {name}:64")
            m = int(param)
        elif name == "momentum-static":
            if not param:
                raise UsageError("momentum-static needs a beta, e.g. momentum-static:0.25")
            beta = float(Fraction(param))
        elif param:
            raise UsageError(f"{name} takes no parameter")
    except ValueError:
        raise UsageError(f"bad parameter in {token!r}") from None
    label = name if not param else f"{name}_{param}"
    return name, m, beta, label


def cmd_modes(args) -> int:
    methods = [parse_method(t) for t in args.methods.split(",") if t.strip()]
    if not methods:
        raise UsageError("no methods given")
    src, val = _source(args)
    A = load_matrix(src, val)
    if not A.is_diagonal:
        raise UsageError("modal slopes need a diagonal matrix")
    mode = "relative" if args.relative else "absolute"
    reports = []
    for name, m, beta, label in methods:
        try:
            cfg = SolverConfig(tol=args.tol, residual_mode=mode, max_matvecs=args.max_matvecs,
                               m=m, beta=beta)
        except ValueError as exc:
            raise UsageError(f"{label}: {exc}") from None
        try:
            reports.append(modal_decay_run(A, name, cfg, burn_in=args.burn_in, label=label))
        except (NotDiagonalError, BreakdownError, SpectralTieError, DivergenceError) as exc:
            print(f"{label}: failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
    with _open_out(args.modes) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_ratio"] + [f"slope_{r.method}" for r in reports])
        for i, ratio in enumerate(reports[0].eigenvalue_ratio):
            w.writerow([format_float(ratio)] + [format_float(r.slope[i]) for r in reports])
    return EXIT_OK


# ---------------------------------------------------------------- bench

def _bench_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPECMOM_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def _manifest_matrix(entry: dict, base: Path) -> tuple[str, str, str]:
    for key in ("mm", "diag", "indef"):
        if key in entry:
            val = entry[key]
            if key == "mm":
                val = str((base / val) if not Path(val).is_absolute() else Path(val))
            return entry.get("name", f"{key}{entry[key]}" if key != "mm" else Path(val).stem), key, str(val)
    raise UsageError(f"manifest matrix entry needs mm, diag or indef: {entry}")


def bench_cell(outcome) -> str:
    """Matvec count, or ``F(best residual)`` when the run did not converge."""
    if outcome is None:
        return "error"
    if outcome.converged:
        return str(outcome.matvecs_used)
    return f"F({outcome.best_residual:.0e})"


def cmd_bench(args) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text())
    except FileNotFoundError:
        raise UsageError(f"manifest not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}") from None
    matrices = [_manifest_matrix(e, path.parent) for e in manifest.get("matrices", [])]
    methods = manifest.get("methods", [])
    if not matrices or not methods:
        raise UsageError("manifest needs non-empty 'matrices' and 'methods'")
    mode = "relative" if manifest.get("relative", False) else "absolute"
    specs = []
    for meth in methods:
        spec = RunSpec("diag", "0", method=meth.get("method", ""), m=meth.get("m"),
                       beta=meth.get("beta"), tol=float(manifest.get("tol", 1e-12)),
                       residual_mode=mode,
                       max_matvecs=int(manifest.get("max_matvecs", BENCH_CAP)))
        spec.validate()
        label = meth.get("label") or (spec.method if spec.m is None else f"{spec.method}({spec.m})")
        specs.append((label, spec))

    loaded, missing = {}, []
    for name, src, val in matrices:
        try:
            loaded[name] = load_matrix(src, val)
        except UsageError as exc:
            missing.append(name)
            print(f"missing or unreadable matrix {name}: {exc}", file=sys.stderr)
    names = [name for name, _, _ in matrices if name in loaded]

    def run(job):
        name, (label, spec) = job
        A = loaded[name]
        try:
            return solve(A, spec.method, spec.config(record_history=True))
        except (BreakdownError, SpectralTieError, DivergenceError) as exc:
            print(f"{label} on {name}: {exc}", file=sys.stderr)
            return None

    jobs = [(name, s) for s in specs for name in names]
    with ThreadPoolExecutor(max_workers=_bench_threads()) as pool:
        results = list(pool.map(run, jobs))
    cells = dict(zip(((name, label) for name, (label, _) in jobs), results))

    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method"] + names)
        for label, _ in specs:
            w.writerow([label] + [bench_cell(cells[(name, label)]) for name in names])
    if args.json:
        details = [
            {"matrix": name, "method": label, "matvecs_used": o.matvecs_used, "nu1": o.nu1,
             "status": str(o.status), "best_residual": o.best_residual}
            if o is not None else {"matrix": name, "method": label, "status": "error"}
            for (name, (label, _)), o in zip(jobs, results)
        ]
        with _open_out(args.json) as fh:
            json.dump({"runs": details, "missing": missing}, fh, indent=2)
            fh.write("\n")
    return EXIT_USAGE if missing else EXIT_OK


COMMANDS = {"solve": cmd_solve, "predict": cmd_predict, "table": cmd_table,
            "modes": cmd_modes, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"specmom {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
