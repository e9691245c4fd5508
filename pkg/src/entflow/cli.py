"""Command-line experiment runner.

Every CSV starts with ``#`` metadata lines (version, seed, full config); a
``# created:`` timestamp line is the only part that changes between identical
runs.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2
EXIT_NUMERIC = 3

SEED_ENV = "ENTFLOW_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    out: str | None
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def header(self) -> list[str]:
        return [
            f"# created: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}",
            f"# entflow {__version__}",
            f"# seed: {self.seed}",
            f"# config: {json.dumps(asdict(self), sort_keys=True)}",
        ]


def _write_csv(path: Path, cfg: ExperimentConfig, columns: Sequence[str], rows: np.ndarray) -> None:
    lines = cfg.header() + [",".join(columns)]
    lines += [",".join(f"{v:.15g}" for v in row) for row in np.atleast_2d(rows)]
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, cfg: ExperimentConfig, payload: dict) -> None:
    data = {"entflow": __version__, "seed": cfg.seed, "config": asdict(cfg), **payload}
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def _outdir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


# --- subcommands ----------------------------------------------------------------

def cmd_rates(args, cfg: ExperimentConfig) -> int:
    from .rate_eqs import lower_bound_curves, saturated_curves, upper_bound_curves

    if args.distance < 2:
        raise UsageError("--distance must be at least 2")
    K = args.distance // 2
    couplings = np.array(args.couplings if args.couplings else [1.0])
    if couplings.size not in (1, K):
        raise UsageError(f"--couplings needs 1 or {K} values")
    sat = saturated_curves(args.distance, couplings)
    params, up = upper_bound_curves(K, args.eps, grid=sat.t)
    low = lower_bound_curves(K, grid=sat.t)
    out = _outdir(args.out)
    names = ["t"] + [f"f_{k}" for k in range(1, K + 1)]
    _write_csv(out / "saturated.csv", cfg, names, np.column_stack([sat.t, sat.curves.T]))
    _write_csv(out / "upper.csv", cfg, ["t"] + [f"u_{k}" for k in range(1, K + 1)],
               np.column_stack([up.t, up.curves.T]))
    _write_csv(out / "lower.csv", cfg, ["t"] + [f"l_{k}" for k in range(1, K + 1)],
               np.column_stack([low.t, low.curves.T]))
    print(f"wrote {K} saturated curves and bounds to {out}")
    return EXIT_OK


def cmd_scaling(args, cfg: ExperimentConfig) -> int:
    from .rate_eqs import scaling_experiment

    if any(L < 4 for L in args.lengths):
        raise UsageError("every chain length must be at least 4")
    rows = scaling_experiment(args.lengths)
    out = _outdir(args.out)
    data = np.array([[r.L, r.T_numeric, r.T_lower, r.T_upper] for r in rows])
    _write_csv(out / "scaling.csv", cfg, ["L", "T_numeric", "T_lower", "T_upper"], data)
    for r in rows:
        print(f"L={r.L:4d}  T={r.T_numeric:.6f}  [{r.T_lower:.6f}, {r.T_upper:.6f}]")
    return EXIT_OK


def cmd_verify(args, cfg: ExperimentConfig) -> int:
    from . import verify

    if args.check not in verify.CHECKS:
        raise UsageError(f"unknown check {args.check!r}; valid checks: {', '.join(sorted(verify.CHECKS))}")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    report = verify.run_campaign(args.check, args.trials, cfg.seed, args.jobs)
    out = _outdir(args.out)
    path = out / f"verify_{args.check}.json"
    _write_json(path, cfg, report.to_dict())
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {args.check}: {len(report.reports)} evaluations, {len(report.failures)} failures, "
          f"worst slack {report.worst_slack:.3e} -> {path}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_protocol(args, cfg: ExperimentConfig) -> int:
    from .protocols import engineered_chain, swap_protocol

    if args.name == "engineered" and args.length % 2 == 0:
        raise UsageError("the engineered protocol needs an odd --length")
    if args.length < (5 if args.name == "engineered" else 4):
        raise UsageError("--length too small for this protocol")
    fn = swap_protocol if args.name == "swap" else engineered_chain
    run = fn(args.length, samples=args.samples, seed=cfg.seed)
    env = run.envelope_check()
    out = _outdir(args.out)
    K = run.K
    _write_csv(out / f"{args.name}_L{args.length}.csv", cfg, ["t"] + [f"F_{k}" for k in range(1, K + 1)],
               np.column_stack([run.curves.t, run.curves.curves.T]))
    summary = run.summary(env.passed)
    summary["envelope_slack"] = env.slack
    summary["time_to_0.9"] = [run.time_to(k, 0.9) for k in range(1, K + 1)]
    _write_json(out / f"{args.name}_L{args.length}.json", cfg, summary)
    print(json.dumps(summary))
    return EXIT_OK if env.passed else EXIT_FAILED


def cmd_simulate(args, cfg: ExperimentConfig) -> int:
    from .dynamics import assemble_hamiltonian, evolve, load_network
    from .hilbert import PureState, SZ, embed_operator, partial_trace
    from .measures import entangled_fraction

    net = load_network(args.network)
    digits = [int(c) for c in args.initial] if args.initial else [0] * net.n
    if len(digits) != net.n:
        raise UsageError(f"--initial needs {net.n} digits")
    psi0 = PureState.basis(net.dims, digits)
    times = np.linspace(0.0, args.t_end, args.samples)
    res = evolve(net, psi0, times)
    H = assemble_hamiltonian(net) if net.dim <= 2**10 else None
    cols = ["t", "energy"] + [f"z_{i}" for i in range(net.n) if net.dims[i] == 2]
    zops = [embed_operator(SZ, [i], net.dims) for i in range(net.n) if net.dims[i] == 2] if H is not None else []
    if args.pair:
        cols.append(f"F_{args.pair[0]}_{args.pair[1]}")
    rows = []
    for t, st in zip(times, res.states):
        v = st.amps
        energy = np.vdot(v, H @ v).real if H is not None else np.vdot(v, net.apply(v)).real
        row = [t, energy] + [np.vdot(v, z @ v).real for z in zops]
        if args.pair:
            row.append(entangled_fraction(partial_trace(st, args.pair), [0]).value)
        rows.append(row)
    out = _outdir(args.out)
    _write_csv(out / "simulate.csv", cfg, cols, np.array(rows))
    print(f"wrote {len(rows)} samples to {out / 'simulate.csv'}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entflow", description="Entanglement flow experiments")
    p.add_argument("--version", action="version", version=f"entflow {__version__}")
    p.add_argument("--seed", type=int, default=None, help=f"campaign seed (fallback ${SEED_ENV}, then 0)")
    p.add_argument("--jobs", type=int, default=1, help="maximum worker processes")
    p.add_argument("--tol", action="append", default=[], metavar="KIND=VALUE",
                   help="override a verification tolerance (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("rates", help="saturated curves f_k and bound curves u_k, l_k")
    r.add_argument("--distance", type=int, required=True)
    r.add_argument("--couplings", type=_float_list, default=None, help="one value or one per level")
    r.add_argument("--eps", type=float, default=1e-6)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rates)

    s = sub.add_parser("scaling", help="T_ent versus chain length")
    s.add_argument("--lengths", type=_int_list, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scaling)

    v = sub.add_parser("verify", help="run a randomized verification campaign")
    v.add_argument("--check", required=True)
    v.add_argument("--trials", type=int, required=True)
    v.add_argument("--out", default=".")
    v.set_defaults(func=cmd_verify)

    pr = sub.add_parser("protocol", help="simulate an entanglement-generation protocol")
    pr.add_argument("--name", choices=["swap", "engineered"], required=True)
    pr.add_argument("--length", type=int, required=True)
    pr.add_argument("--samples", type=int, default=200, help="samples per segment")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_protocol)

    sm = sub.add_parser("simulate", help="evolve a network description file")
    sm.add_argument("--network", required=True)
    sm.add_argument("--t-end", type=float, required=True)
    sm.add_argument("--samples", type=int, default=101)
    sm.add_argument("--initial", default=None, help="basis digits, e.g. 0100")
    sm.add_argument("--pair", type=int, nargs=2, default=None, help="two qubits to track")
    sm.add_argument("--out", required=True)
    sm.set_defaults(func=cmd_simulate)
    return p


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def _apply_tolerances(items: list[str]) -> dict:
    from . import verify

    out = {}
    for item in items:
        key, _, val = item.partition("=")
        if key not in verify.TOLERANCES or not val:
            raise UsageError(f"bad --tol {item!r}; kinds: {', '.join(verify.TOLERANCES)}")
        try:
            out[key] = float(val)
        except ValueError:
            raise UsageError(f"bad --tol value {val!r}") from None
        if not out[key] >= 0:
            raise UsageError("tolerances must be nonnegative")
    verify.TOLERANCES.update(out)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be positive")
        seed = _resolve_seed(args.seed)
        tols = _apply_tolerances(args.tol)
        params = {k: v for k, v in vars(args).items() if k not in ("func", "command", "seed", "tol", "out")}
        cfg = ExperimentConfig(args.command, seed, getattr(args, "out", None), params, tols)
        return args.func(args, cfg)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, RuntimeError, np.linalg.LinAlgError) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
