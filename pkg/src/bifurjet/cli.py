"""Command-line pipeline: ``bifurjet <subcommand> ...``.

Every subcommand that writes an output file also writes
``<out>.config.json`` echoing the resolved configuration. Result files are
a deterministic function of that configuration; wall-clock timings go to
separate sidecar files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .adiabatic import AnnealSchedule, anneal_evolve, ground_state_probability
from .durham import durham_exclusive, event_preselection
from .events import (EventFormatError, Process, SyntheticSpec, generate_sample, read_events,
                     simplify_event, write_events)
from .ising import qubo_to_ising
from .jetqubo import Metric, build_multijet_qubo, distance_matrix
from .metrics import reconstruct_masses, time_to_solution, trajectory_aggregate
from .pipeline import cluster_event, default_shots
from .solvers import SolverSpec, multi_shot, shot_seed

log = logging.getLogger("bifurjet")

THREADS_ENV = "BIFURJET_THREADS"
TRAJECTORY_HEADER = ["step", "time_s", "energy_mean", "energy_std", "eff_mean", "eff_std"]


class UsageError(Exception):
    pass


def _pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_solver_args(p: argparse.ArgumentParser, multi: bool = False) -> None:
    p.add_argument("--events", required=True, type=Path, help="input JSONL event file")
    p.add_argument("--njet", type=_positive_int, help="jet multiplicity (default: from process)")
    p.add_argument("--metric", choices=[m.value for m in Metric], default="eekt")
    p.add_argument("--solver", default="bsb",
                   help="comma-separated list of bsb, dsb, sa" if multi else "bsb, dsb or sa")
    p.add_argument("--shots", type=_positive_int, help="shots per event (default 100 for 2 jets, else 50)")
    p.add_argument("--steps", type=_positive_int, default=1000, help="SB steps or SA sweeps")
    p.add_argument("--dt", type=float, default=0.25)
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--beta-min", type=float, default=0.1)
    p.add_argument("--beta-max", type=float, default=10.0)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="one-hot penalty weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bifurjet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic events")
    p.add_argument("--process", choices=[x.value for x in Process], required=True)
    p.add_argument("--events", type=_positive_int, required=True, help="number of events")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sqrt-s", type=float, default=None)
    p.add_argument("--particles-per-jet", type=_pair, default=(3, 8))
    p.add_argument("--spread", type=float, default=0.1, help="angular spread in radians")
    p.add_argument("--smear", type=float, default=0.0, help="relative Gaussian energy smear")
    p.add_argument("--no-preselect", action="store_true")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("durham", help="exclusive Durham clustering")
    p.add_argument("--events", required=True, type=Path)
    p.add_argument("--njet", type=_positive_int, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("cluster", help="QUBO clustering with an Ising solver")
    _add_solver_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--timing-out", type=Path, default=None,
                   help="per-event wall times (default: <out>.timing.jsonl)")

    p = sub.add_parser("bench", help="energy/efficiency trajectories per solver")
    _add_solver_args(p, multi=True)
    p.add_argument("--record-every", type=_positive_int, default=10)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("mass", help="invariant masses from Durham or cluster jets")
    p.add_argument("--events", required=True, type=Path)
    p.add_argument("--njet", type=_positive_int, required=True)
    p.add_argument("--results", type=Path, default=None, help="cluster output to take jets from")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("anneal", help="simulated adiabatic evolution on slimmed events")
    p.add_argument("--events", required=True, type=Path)
    p.add_argument("--njet", type=_positive_int, default=2)
    p.add_argument("--keep", type=_positive_int, default=6, help="particles kept per event")
    p.add_argument("--metric", choices=[m.value for m in Metric], default="eekt")
    p.add_argument("--total-time", type=float, default=100.0)
    p.add_argument("--steps", type=_positive_int, default=10_000)
    p.add_argument("--record-every", type=_positive_int, default=100)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("tts", help="time to solution")
    p.add_argument("--p", dest="p_success", type=float, required=True)
    p.add_argument("--t-shot", type=float, required=True)
    p.add_argument("--target", type=float, default=0.99)
    return parser


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if value < 1:
            raise UsageError(f"{THREADS_ENV} must be positive")
        return value
    return 1


def _echo_config(args, out: Path) -> None:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}
    config["version"] = __version__
    Path(str(out) + ".config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def _load(path: Path):
    if not path.exists():
        raise UsageError(f"event file not found: {path}")
    return read_events(path)


def _njet(args, events) -> int:
    processes = {e.meta.get("process") for e in events} - {None}
    expected = {Process(p).n_jet for p in processes if p in {x.value for x in Process}}
    if args.njet is None:
        if len(expected) != 1:
            raise UsageError("--njet is required when the event file does not name a single process")
        return expected.pop()
    if expected and expected != {args.njet}:
        log.warning("--njet %d differs from the process multiplicity %s", args.njet, sorted(expected))
    return args.njet


def _solver(args, kind: str) -> SolverSpec:
    if kind in ("bsb", "dsb"):
        return SolverSpec.make(kind, steps=args.steps, dt=args.dt, c0=args.c0)
    if kind == "sa":
        return SolverSpec.make("sa", steps=args.steps, beta_min=args.beta_min, beta_max=args.beta_max)
    raise UsageError(f"unknown solver {kind!r}; expected bsb, dsb or sa")


def _jets_json(jets) -> list[dict]:
    return [{"constituents": j.constituents, "p4": [float(v) for v in j.p4], "btag": j.btag}
            for j in jets]


def cmd_gen(args) -> None:
    spec = SyntheticSpec(args.process, args.sqrt_s, args.particles_per_jet, args.spread,
                         args.seed, args.smear)
    events = generate_sample(spec, args.events, preselect=not args.no_preselect)
    write_events(events, args.out)
    _echo_config(args, args.out)
    log.info("wrote %d events to %s", len(events), args.out)


def cmd_durham(args) -> None:
    events = _load(args.events)
    njet = _njet(args, events)
    with open(args.out, "w") as fh:
        for k, event in enumerate(events):
            jets = durham_exclusive(event, njet)
            passed, reasons = event_preselection(jets) if njet >= 2 else (True, [])
            rec = {"event": k, "jets": _jets_json(jets),
                   "preselection": {"pass": passed, "reasons": reasons}}
            fh.write(json.dumps(rec) + "\n")
    _echo_config(args, args.out)


def cmd_cluster(args) -> None:
    events = _load(args.events)
    njet = _njet(args, events)
    solver = _solver(args, args.solver)
    shots = args.shots or default_shots(njet)
    threads = _threads(args)
    timing_path = args.timing_out or Path(str(args.out) + ".timing.jsonl")
    with open(args.out, "w") as fh, open(timing_path, "w") as tf:
        for k, event in enumerate(events):
            res = cluster_event(event, njet, solver, shots, shot_seed(args.seed, k), args.metric,
                                args.lam, threads=threads)
            rec = {
                "event": k,
                "qubo_size": res.qubo_size,
                "best_energy": res.best_energy,
                "violations": res.n_violations,
                "unassigned": res.assignment.unassigned,
                "multiply_assigned": res.assignment.multiply_assigned,
                "empty_jets": res.assignment.empty_jets,
                "jets": res.assignment.jets,
                "efficiency": res.efficiency.per_jet,
                "efficiency_mean": res.efficiency.mean,
                "masses": reconstruct_masses(res.jets) if len(res.jets) == njet else {},
            }
            fh.write(json.dumps(rec) + "\n")
            tf.write(json.dumps({"event": k, "wall_time_s": res.wall_time}) + "\n")
            log.info("event %d: E=%.6g eff=%.3f violations=%d", k, res.best_energy,
                     res.efficiency.mean, res.n_violations)
    _echo_config(args, args.out)


def cmd_bench(args) -> None:
    events = _load(args.events)
    njet = _njet(args, events)
    kinds = [s.strip() for s in args.solver.split(",") if s.strip()]
    solvers = [(kind, _solver(args, kind)) for kind in kinds]
    shots = args.shots or default_shots(njet)
    threads = _threads(args)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "event"] + TRAJECTORY_HEADER)
        for k, event in enumerate(events):
            model = qubo_to_ising(build_multijet_qubo(event, njet, args.metric, args.lam))
            d = distance_matrix(event.particles, args.metric)
            reference = durham_exclusive(event, njet)
            for kind, solver in solvers:
                ens = multi_shot(solver, model, shots, shot_seed(args.seed, k),
                                 args.record_every, threads)
                for row in trajectory_aggregate(ens, reference, len(event), njet, d):
                    writer.writerow([kind, k, row.step, repr(row.time_s), repr(row.energy_mean),
                                     repr(row.energy_std), repr(row.eff_mean), repr(row.eff_std)])
    _echo_config(args, args.out)


def cmd_mass(args) -> None:
    from .durham import make_jets

    events = _load(args.events)
    groups: Optional[list] = None
    if args.results is not None:
        if not args.results.exists():
            raise UsageError(f"results file not found: {args.results}")
        with open(args.results) as fh:
            groups = [json.loads(line)["jets"] for line in fh if line.strip()]
        if len(groups) != len(events):
            raise UsageError(f"{len(groups)} result records for {len(events)} events")
    with open(args.out, "w") as fh:
        for k, event in enumerate(events):
            if groups is None:
                jets = durham_exclusive(event, args.njet)
            else:
                jets = make_jets(groups[k], event.particles)
            masses = reconstruct_masses(jets) if len(jets) == args.njet else {}
            fh.write(json.dumps({"event": k, "masses": masses}) + "\n")
    _echo_config(args, args.out)


def cmd_anneal(args) -> None:
    events = _load(args.events)
    summary = []
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "s", "energy_expectation", "ground_probability", "norm"])
        for k, event in enumerate(events):
            slim = simplify_event(event, args.keep)
            model = qubo_to_ising(build_multijet_qubo(slim, args.njet, args.metric))
            trace: list = []
            psi = anneal_evolve(model, AnnealSchedule(), args.total_time, args.steps,
                                args.record_every, trace)
            for row in trace:
                writer.writerow([k, repr(row.s), repr(row.energy_expectation),
                                 repr(row.ground_probability), repr(row.norm)])
            p = ground_state_probability(psi, model)
            tts = time_to_solution(p, args.total_time) if p > 0 else None
            summary.append({"event": k, "spins": model.n, "ground_probability": p, "tts": tts})
    print(json.dumps(summary))
    _echo_config(args, args.out)


def cmd_tts(args) -> None:
    print(repr(time_to_solution(args.p_success, args.t_shot, args.target)))


COMMANDS = {
    "gen": cmd_gen,
    "durham": cmd_durham,
    "cluster": cmd_cluster,
    "bench": cmd_bench,
    "mass": cmd_mass,
    "anneal": cmd_anneal,
    "tts": cmd_tts,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, EventFormatError, ValueError, OSError) as exc:
        print(f"bifurjet {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
