"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 1 replay
mismatch.
"""
from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from typing import List, Optional

from . import experiments as ex
from .assembly import SigmaProfile, assemble_hamiltonian, write_coo
from .eigensolve import SolverError
from .geometry import StripSpec, build_strip_mesh, snap_atoms
from .io import csv_text, read_jsonl, write_jsonl
from .randomness import sample_stream
from .separable_robin import mu_hat3, mu_square, mu_triangle_dirichlet_limit

logger = logging.getLogger("molecule_spectra")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

COMMANDS = ("sample", "solve", "mc", "converge", "gamma", "appendix", "mesh-dump")


@dataclass
class RunConfig:
    """Every tunable of every subcommand, with its default."""

    command: str = "solve"
    d: float = 1.0
    L: float = 6.0
    M: int = 16
    sigma: str = "0"
    nu: float = 1.0
    seed: int = 0
    index: int = 0
    horizon: Optional[float] = None
    atoms: str = ""
    sample: bool = False
    n: int = 200
    m: int = 1
    tau: Optional[float] = None
    tol: float = 1e-8
    jobs: int = 1
    eta: float = 1.05
    delta: Optional[float] = None
    n_a: int = 9
    trials: int = 1000
    L_list: str = "4,6,8"
    M_list: str = "8,16,32"
    a_k: Optional[float] = None
    gamma: float = 1e4
    coo: Optional[str] = None
    replay: Optional[str] = None
    output: str = "-"
    format: Optional[str] = None
    timing: bool = False

    @classmethod
    def keys(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_kv(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys raise."""
        out = dataclasses.replace(base) if base is not None else cls()
        types = {f.name: f.type for f in fields(cls)}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in types:
                raise ValueError(f"config line {n}: unknown key {key!r}")
            setattr(out, key, _convert(types[key], value))
        return out


def _convert(type_name, value: str):
    t = str(type_name)
    if value.lower() in ("none", "") and "Optional" in t:
        return None
    if "bool" in t:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if "float" in t:
        return float(value)
    if "int" in t:
        return int(value)
    return value


def _float_list(text: str) -> List[float]:
    return [float(s) for s in text.replace(" ", "").split(",") if s]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="molecule-spectra", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, physics=True):
        sp.add_argument("--config", help="flat key=value file supplying defaults")
        sp.add_argument("--output", "-o")
        sp.add_argument("--format", choices=("jsonl", "csv", "text"))
        sp.add_argument("--timing", action="store_true", default=None, help="include wall-clock in reports")
        if physics:
            sp.add_argument("--d", type=float)
            sp.add_argument("--L", type=float)
            sp.add_argument("--M", type=int)
            sp.add_argument("--sigma", help='strength: number, "inf" or "pw:v0@b1,v1"')
            sp.add_argument("--tol", type=float)
            sp.add_argument("--tau", type=float)

    s = sub.add_parser("sample", help="print one Poisson configuration")
    common(s, physics=False)
    s.add_argument("--nu", type=float)
    s.add_argument("--horizon", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--index", type=int)

    s = sub.add_parser("solve", help="one ground-state computation")
    common(s)
    s.add_argument("--atoms", help="comma separated atom positions")
    s.add_argument("--sample", action="store_true", default=None, help="draw atoms from the Poisson process")
    s.add_argument("--nu", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--index", type=int)
    s.add_argument("--m", type=int, help="number of eigenvalues")
    s.add_argument("--replay", help="re-run the reports in a JSON-lines file")

    s = sub.add_parser("mc", help="Monte-Carlo class probabilities")
    common(s)
    s.add_argument("--nu", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--replay", help="re-run the sample reports in a JSON-lines file")

    s = sub.add_parser("converge", help="E0 over L and M with extrapolation")
    common(s)
    s.add_argument("--atoms")
    s.add_argument("--L-list", dest="L_list")
    s.add_argument("--M-list", dest="M_list")

    s = sub.add_parser("gamma", help="estimate the Robin threshold gamma(d)")
    common(s, physics=False)
    s.add_argument("--d", type=float)
    s.add_argument("--eta", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--n-a", dest="n_a", type=int)
    s.add_argument("--a-k", dest="a_k", type=float, help="also verify a single atom at this position")
    s.add_argument("--gamma", type=float, help="strength for the single-atom check")
    s.add_argument("--L", type=float)
    s.add_argument("--M", type=int)

    s = sub.add_parser("appendix", help="rectangle scaling harnesses and the mu table")
    common(s, physics=False)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--d", type=float)
    s.add_argument("--eta", type=float)
    s.add_argument("--delta", type=float)

    s = sub.add_parser("mesh-dump", help="export a strip mesh (and matrices) for inspection")
    common(s)
    s.add_argument("--atoms")
    s.add_argument("--coo", help="prefix for COO matrix files")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = RunConfig(command=args.command)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = RunConfig.from_kv(fh.read(), cfg)
        cfg.command = args.command
    for key in RunConfig.keys():
        if key == "command":
            continue
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if cfg.format is None:
        cfg.format = "text" if cfg.command == "appendix" else "jsonl"
    if cfg.format not in ("jsonl", "csv", "text"):
        raise ValueError(f"unknown format {cfg.format!r}")
    return cfg


@contextlib.contextmanager
def _open_output(path: str):
    if path in ("-", ""):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit(cfg: RunConfig, reports, text_lines: Optional[List[str]] = None):
    with _open_output(cfg.output) as fh:
        if cfg.format == "csv":
            fh.write(csv_text(reports))
        elif cfg.format == "text" and text_lines is not None:
            fh.write("\n".join(text_lines) + "\n")
        else:
            write_jsonl(reports, fh, include_timing=cfg.timing)


def _atoms(cfg: RunConfig):
    if cfg.sample:
        horizon = cfg.horizon if cfg.horizon is not None else cfg.L + cfg.d
        return sample_stream(cfg.nu, horizon, cfg.seed, cfg.index)
    return _float_list(cfg.atoms)


def cmd_sample(cfg: RunConfig) -> int:
    horizon = cfg.horizon if cfg.horizon is not None else cfg.L + cfg.d
    conf = sample_stream(cfg.nu, horizon, cfg.seed, cfg.index)
    with _open_output(cfg.output) as fh:
        fh.write(conf.dumps() + "\n")
    return EXIT_OK


def cmd_replay(cfg: RunConfig) -> int:
    with open(cfg.replay) as fh:
        originals = read_jsonl(fh)
    reruns, mismatches = [], 0
    for r in originals:
        if r.kind == "mc_summary":
            continue
        new = ex.replay(r)
        if ex.eigenvalues_of(new) != ex.eigenvalues_of(r):
            mismatches += 1
            logger.error("replay mismatch for %s: %s != %s", r.kind, ex.eigenvalues_of(new), ex.eigenvalues_of(r))
        reruns.append(new)
    _emit(cfg, reruns)
    print(f"replayed {len(reruns)} report(s), mismatches: {mismatches}", file=sys.stderr)
    return EXIT_MISMATCH if mismatches else EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    if cfg.replay:
        return cmd_replay(cfg)
    report = ex.solve_report(cfg.d, cfg.L, cfg.M, _atoms(cfg), SigmaProfile.parse(cfg.sigma),
                             m=cfg.m, tol=cfg.tol, tau=cfg.tau)
    _emit(cfg, [report])
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    if cfg.replay:
        return cmd_replay(cfg)
    res = ex.mc_probability(cfg.nu, cfg.d, SigmaProfile.parse(cfg.sigma), cfg.n, cfg.seed,
                            L=cfg.L, M=cfg.M, tau=cfg.tau, tol=cfg.tol, jobs=cfg.jobs)
    _emit(cfg, res.samples + [res.summary])
    lo, hi = res.ci[ex.NONEMPTY]
    elo, ehi = res.ci[ex.EMPTY]
    print(
        f"NONEMPTY {res.p_hat[ex.NONEMPTY]:.3f} [{lo:.3f}, {hi:.3f}]  "
        f"EMPTY {res.p_hat[ex.EMPTY]:.3f} [{elo:.3f}, {ehi:.3f}]  "
        f"UNDECIDED {res.p_hat[ex.UNDECIDED]:.3f}  ({res.summary.wall_clock:.1f} s)",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    study = ex.convergence_study(cfg.d, _float_list(cfg.atoms), SigmaProfile.parse(cfg.sigma),
                                 _float_list(cfg.L_list), [int(m) for m in _float_list(cfg.M_list)])
    tau = ex.default_tau(cfg.d) if cfg.tau is None else cfg.tau
    cls = ex.classify_discrete(study.extrapolated, study.error_bar, cfg.d, tau)
    report = ex.ExperimentReport(
        "converge",
        {"d": cfg.d, "sigma": cfg.sigma, "atoms": _float_list(cfg.atoms), "tau": tau},
        {**study.to_json(), "class": cls, "threshold": ex.threshold(cfg.d)},
    )
    _emit(cfg, [report])
    return EXIT_OK


def cmd_gamma(cfg: RunConfig) -> int:
    est = ex.estimate_gamma(cfg.d, cfg.eta, cfg.delta, n_a=cfg.n_a)
    reports = [ex.ExperimentReport("gamma", {"d": cfg.d, "eta": cfg.eta, "delta": est.delta, "n_a": cfg.n_a},
                                   est.to_json())]
    if cfg.a_k is not None:
        reports.append(ex.verify_destruction_config(cfg.d, cfg.a_k, cfg.gamma, cfg.L, cfg.M, cfg.tau, cfg.tol))
    _emit(cfg, reports)
    return EXIT_OK


def mu_table(d: float, eta: float, delta: float) -> List[str]:
    a = d / 2 - delta
    rows = [
        ("mu1(inf, d/2)", mu_square(d / 2, math.inf), 2 * math.pi ** 2 / d ** 2),
        ("mu_hat3(inf, d/2-delta)", mu_hat3(a, math.inf, d), math.pi ** 2 / (d + 2 * delta) ** 2),
        ("mu2(inf, (d/2-delta)/eta)", mu_triangle_dirichlet_limit(eta, delta, d),
         2 * math.pi ** 2 / (d * (1 - 1 / eta) + 2 * delta / eta) ** 2),
    ]
    out = [f"threshold pi^2/(2d^2) = {ex.threshold(d)!r}"]
    out += [f"{name:28s} {v!r:>22}  closed form {c!r}" for name, v, c in rows]
    return out


def cmd_appendix(cfg: RunConfig) -> int:
    a1 = ex.check_prop_A1(cfg.trials, cfg.seed)
    a2 = ex.check_prop_A2(cfg.trials, cfg.seed)
    delta = 0.02 * cfg.d if cfg.delta is None else cfg.delta
    lines = [
        f"A1 violations: {a1.violations} (trials {a1.trials}, min slack {a1.min_slack:.3e}, "
        f"identity error {a1.identity_max_error:.1e})",
        f"A2 violations: {a2.violations} (trials {a2.trials}, min slack {a2.min_slack:.3e})",
    ] + mu_table(cfg.d, cfg.eta, delta)
    report = ex.ExperimentReport("appendix", {"trials": cfg.trials, "seed": cfg.seed},
                                 {"A1": a1.to_json(), "A2": a2.to_json()})
    _emit(cfg, [report], text_lines=lines)
    return EXIT_OK if a1.violations == 0 and a2.violations == 0 else EXIT_SOLVER


def cmd_mesh_dump(cfg: RunConfig) -> int:
    spec = StripSpec(cfg.d, cfg.L, cfg.M)
    atoms = [a for a in _float_list(cfg.atoms) if a <= cfg.L + cfg.d]
    snapped, _ = snap_atoms(atoms, spec.h)
    mesh = build_strip_mesh(spec, snapped)
    with _open_output(cfg.output) as fh:
        fh.write(mesh.dumps() + "\n")
    if cfg.coo:
        forms = assemble_hamiltonian(mesh, atoms, SigmaProfile.parse(cfg.sigma))
        write_coo(f"{cfg.coo}.K.coo", forms.K, "stiffness, Dirichlet nodes removed")
        write_coo(f"{cfg.coo}.M.coo", forms.M, "mass, Dirichlet nodes removed")
        for k, T in enumerate(forms.T, start=1):
            write_coo(f"{cfg.coo}.T{k}.coo", T, f"trace term of atom {k}")
    return EXIT_OK


HANDLERS = {
    "sample": cmd_sample,
    "solve": cmd_solve,
    "mc": cmd_mc,
    "converge": cmd_converge,
    "gamma": cmd_gamma,
    "appendix": cmd_appendix,
    "mesh-dump": cmd_mesh_dump,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
