"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration (nothing was simulated),
3 runtime failure. Reports are JSON on stdout (and ``--out``); traces are
CSV (``--trace``).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__
from . import oracle
from .measurement import allocate_shots, group_terms
from .mitigation import ZneConfig, zne_estimate
from .objectives import ObjectiveSpec
from .optimizers import OptimizerConfig
from .pauli import format_term, parse_observable
from .qaoa import (
    LinearConstraint,
    maxcut_to_ising,
    parse_graph,
    penalty_observable,
    random_params,
    run_interp,
    run_lbl,
    run_qaoa,
    schedule_params,
)
from .simulator import NoiseModel, parse_circuit
from .vqe import AnsatzSpec, SampledEstimator, exact_ground_energy, run_vqe

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass
class ExperimentConfig:
    """Validated inputs for one command; built before any simulation runs."""

    command: str
    values: dict[str, Any] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    def take(self, name: str, fn: Callable[[], Any]) -> Any:
        try:
            value = fn()
        except (ValueError, OSError, KeyError) as e:
            self.errors.append(f"{name}: {e}")
            value = None
        self.values[name] = value
        return value

    def check(self) -> "ExperimentConfig":
        if self.errors:
            raise ConfigError(self.errors)
        return self

    def __getitem__(self, name: str) -> Any:
        return self.values[name]


def _read(path: str) -> str:
    return Path(path).read_text()


def _shots(text: str) -> int | None:
    if text == "exact":
        return None
    n = int(text)
    if n < 1:
        raise ValueError("shots must be >= 1 or 'exact'")
    return n


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _noise(args) -> NoiseModel | None:
    if args.noise == "none":
        return None
    base = NoiseModel()
    return NoiseModel(
        base.p1 if args.p1 is None else args.p1,
        base.p2 if args.p2 is None else args.p2,
        base.readout_flip0 if args.readout0 is None else args.readout0,
        base.readout_flip1 if args.readout1 is None else args.readout1,
    )


def _ansatz(text: str, n_qubits: int) -> AnsatzSpec:
    kind, _, layers = text.partition(":")
    if kind == "single_ry":
        return AnsatzSpec("single_ry", n_qubits)
    if kind == "layered":
        return AnsatzSpec("layered", n_qubits, int(layers or 1))
    raise ValueError(f"unknown ansatz {text!r}")


_OPTIMIZERS = {"gd": "gradient_descent", "nm": "nelder_mead",
               "gradient_descent": "gradient_descent", "nelder_mead": "nelder_mead"}


def _optimizer(args, default_restarts: int) -> OptimizerConfig:
    if args.optimizer not in _OPTIMIZERS:
        raise ValueError(f"unknown optimizer {args.optimizer!r}")
    return OptimizerConfig(
        method=_OPTIMIZERS[args.optimizer],
        step_size=args.step_size,
        fd_epsilon=args.fd_epsilon,
        max_evaluations=args.max_evals,
        value_tolerance=args.tol,
        restarts=default_restarts if args.restarts is None else args.restarts,
        seed=args.seed or 0,
    )


def _require_seed(cfg: ExperimentConfig, args) -> None:
    if args.seed is None:
        cfg.errors.append("seed: --seed is required for sampled runs")


def _provenance(seed, started: float) -> dict:
    return {"seed": seed, "version": __version__, "wall_time_s": round(time.perf_counter() - started, 6)}


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, sort_keys=False)
    print(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")


# -- commands ------------------------------------------------------------------

def cmd_vqe(args) -> int:
    started = time.perf_counter()
    cfg = ExperimentConfig("vqe run")
    obs = cfg.take("hamiltonian", lambda: parse_observable(_read(args.hamiltonian)))
    shots = cfg.take("shots", lambda: _shots(args.shots))
    objective = cfg.take("objective", lambda: ObjectiveSpec.parse(args.objective))
    opt = cfg.take("optimizer", lambda: _optimizer(args, 1 if shots is None else 3))
    noise = cfg.take("noise", lambda: _noise(args))
    if obs is not None:
        spec = cfg.take("ansatz", lambda: _ansatz(args.ansatz, obs.n_qubits))
        if args.x0 is not None and spec is not None:
            x0 = cfg.take("x0", lambda: _floats(args.x0))
            if x0 is not None and len(x0) != spec.parameter_count:
                cfg.errors.append(f"x0: expected {spec.parameter_count} values, got {len(x0)}")
    if shots is not None:
        _require_seed(cfg, args)
    elif objective is not None and objective.kind != "expectation":
        cfg.errors.append(f"objective: {objective} needs --shots N (not exact)")
    cfg.check()
    if shots is None:
        estimator = "exact"
    else:
        estimator = SampledEstimator(shots, args.seed, args.allocation, args.grouping, noise)
    x0 = cfg.values.get("x0")
    res = run_vqe(obs, cfg["ansatz"], opt, estimator, objective, x0=x0)
    if args.trace:
        res.trace.to_csv(args.trace)
    _emit({
        "best_energy": res.best_energy,
        "std_error": res.std_error,
        "best_objective": res.best_objective,
        "best_params": [float(x) for x in res.best_params],
        "exact_ground": res.exact_ground,
        "gap": res.gap_to_exact,
        "evaluations": res.trace.evaluations,
        "shots_total": res.trace.shots,
        "trace_path": args.trace,
        "inputs": {
            "hamiltonian": args.hamiltonian, "ansatz": args.ansatz, "optimizer": opt.method,
            "shots": args.shots, "objective": str(objective), "max_evaluations": opt.max_evaluations,
        },
        "provenance": _provenance(args.seed, started),
    }, args)
    return EXIT_OK


def _init_spec(text: str) -> tuple[str, float]:
    kind, _, arg = text.partition(":")
    if kind not in ("schedule", "random", "interp", "lbl"):
        raise ValueError(f"unknown init {text!r}")
    return kind, float(arg) if arg else 0.5


def cmd_qaoa(args) -> int:
    started = time.perf_counter()
    cfg = ExperimentConfig("qaoa run")
    graph = cfg.take("graph", lambda: parse_graph(_read(args.graph)))
    objective = cfg.take("objective", lambda: ObjectiveSpec.parse(args.objective))
    opt = cfg.take("optimizer", lambda: _optimizer(args, 3))
    init = cfg.take("init", lambda: _init_spec(args.init))
    constraints = cfg.take("constraint", lambda: [LinearConstraint.parse(c) for c in args.constraint])
    warm = None
    if args.warm_start:
        warm = cfg.take("warm_start", lambda: _floats(args.warm_start))
        if warm is not None and (any(not 0 <= c <= 1 for c in warm)):
            cfg.errors.append("warm_start: values must lie in [0, 1]")
    if args.p < 1:
        cfg.errors.append("p: must be >= 1")
    if args.shots < 1:
        cfg.errors.append("shots: must be >= 1")
    _require_seed(cfg, args)
    if graph is not None:
        if warm is not None and len(warm) != graph.n_nodes:
            cfg.errors.append(f"warm_start: expected {graph.n_nodes} values, got {len(warm)}")
        for c in constraints or []:
            if any(not 0 <= q < graph.n_nodes for q in c.qubits):
                cfg.errors.append(f"constraint: qubits {c.qubits} outside the graph")
    cfg.check()

    problem = maxcut_to_ising(graph)
    for c in constraints:
        problem = problem + penalty_observable(c, problem.n_qubits)
    kind, delta = init
    common = dict(objective=objective, shots=args.shots, seed=args.seed, warm_start=warm, graph=graph)
    if kind == "interp":
        res = run_interp(problem, args.p, opt, delta=delta, **common)[-1]
    elif kind == "lbl":
        res = run_lbl(problem, args.p, opt, delta=delta, **common)[-1]
    else:
        params = schedule_params(args.p, delta) if kind == "schedule" else random_params(args.p, args.seed)
        res = run_qaoa(problem, args.p, params, opt, **common)
    if args.trace:
        res.trace.to_csv(args.trace)
    ratio = None
    if graph.n_nodes <= 20:
        best_cut, _ = graph.max_cut()
        ratio = 1.0 if best_cut <= 0 else res.cut_value / best_cut
    _emit({
        "best_objective": res.best_objective,
        "best_params": {"gammas": list(res.best_params.gammas), "betas": list(res.best_params.betas)},
        "solution_bitstring": res.solution_bitstring,
        "solution_cost": res.solution_cost,
        "cut_value": res.cut_value,
        "approximation_ratio": ratio,
        "evaluations": res.trace.evaluations,
        "shots_total": res.trace.shots,
        "trace_path": args.trace,
        "inputs": {"graph": args.graph, "p": args.p, "init": args.init, "objective": str(objective),
                   "shots": args.shots, "optimizer": opt.method, "restarts": opt.restarts,
                   "warm_start": warm, "constraints": args.constraint},
        "provenance": _provenance(args.seed, started),
    }, args)
    return EXIT_OK


def cmd_group(args) -> int:
    cfg = ExperimentConfig("group")
    obs = cfg.take("hamiltonian", lambda: parse_observable(_read(args.hamiltonian)))
    if args.strategy not in ("one_per_term", "qwc_greedy"):
        cfg.errors.append(f"strategy: unknown {args.strategy!r}")
    cfg.check()
    groups = group_terms(obs, args.strategy)
    _emit({
        "strategy": args.strategy,
        "n_groups": len(groups),
        "groups": [[format_term(t.coefficient, t.string) for t in g.terms] for g in groups],
    }, args)
    return EXIT_OK


def cmd_shots(args) -> int:
    cfg = ExperimentConfig("shots plan")
    obs = cfg.take("hamiltonian", lambda: parse_observable(_read(args.hamiltonian)))
    if args.strategy not in ("uniform", "proportional"):
        cfg.errors.append(f"strategy: unknown {args.strategy!r}")
    if args.grouping not in ("one_per_term", "qwc_greedy"):
        cfg.errors.append(f"grouping: unknown {args.grouping!r}")
    cfg.check()
    groups = group_terms(obs, args.grouping)
    try:
        plan = allocate_shots(groups, args.budget, args.strategy)
    except ValueError as e:
        raise ConfigError([f"budget: {e}"]) from None
    _emit({
        "strategy": args.strategy,
        "budget": args.budget,
        "allocations": [
            {"group": k, "terms": [format_term(t.coefficient, t.string) for t in groups[k].terms],
             "shots": s}
            for k, s in plan.allocations
        ],
    }, args)
    return EXIT_OK


def cmd_zne(args) -> int:
    started = time.perf_counter()
    cfg = ExperimentConfig("zne run")
    circuit = cfg.take("circuit", lambda: parse_circuit(_read(args.circuit)))
    obs = cfg.take("observable", lambda: parse_observable(_read(args.observable)))
    shots = cfg.take("shots", lambda: _shots(args.shots))
    zcfg = cfg.take("zne", lambda: ZneConfig(
        tuple(int(s) for s in args.scales.split(",")), args.fit, args.trajectories, shots))
    noise = cfg.take("noise", lambda: _noise(args) or NoiseModel.noiseless())
    _require_seed(cfg, args)
    if circuit is not None and obs is not None and circuit.n_qubits != obs.n_qubits:
        if circuit.n_qubits < obs.n_qubits:
            cfg.values["circuit"] = circuit = type(circuit)(obs.n_qubits, circuit.gates)
        else:
            cfg.errors.append(f"observable: acts on {obs.n_qubits} qubits, circuit on {circuit.n_qubits}")
    cfg.check()
    res = zne_estimate(circuit, obs, noise, zcfg, args.seed)
    _emit({
        "per_scale": [{"scale": s, "mean": m, "std": sd} for s, m, sd in res.per_scale],
        "extrapolated": res.extrapolated,
        "raw": res.raw,
        "fit": zcfg.fit,
        "inputs": {"circuit": args.circuit, "observable": args.observable,
                   "trajectories": zcfg.trajectories, "shots": args.shots,
                   "noise": None if noise is None else vars(noise)},
        "provenance": _provenance(args.seed, started),
    }, args)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = ExperimentConfig("spectrum")
    obs = cfg.take("hamiltonian", lambda: parse_observable(_read(args.hamiltonian)))
    cfg.check()
    report = {"n_qubits": obs.n_qubits, "ground_energy": exact_ground_energy(obs)}
    if obs.is_diagonal:
        report["method"] = "bitstring_scan"
        _, argmins = oracle.brute_force_min(obs)
        report["ground_bitstrings"] = argmins
    else:
        report["method"] = "shifted_power_iteration"
    _emit(report, args)
    return EXIT_OK


def cmd_demo(args) -> int:
    from . import demos

    if args.name not in demos.DEMOS:
        raise ConfigError([f"name: unknown demo {args.name!r}; choose from {sorted(demos.DEMOS)}"])
    started = time.perf_counter()
    seed = 0 if args.seed is None else args.seed
    checks = demos.DEMOS[args.name](seed=seed, repeats=args.repeats)
    for c in checks:
        print(c.line(), file=sys.stderr)
    _emit({
        "demo": args.name,
        "checks": [c.as_dict() for c in checks],
        "all_passed": all(c.passed for c in checks),
        "provenance": _provenance(seed, started),
    }, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import demos

    checks = demos.verify(seed=args.seed or 0)
    for c in checks:
        print(c.line(), file=sys.stderr)
    _emit({"checks": [c.as_dict() for c in checks], "all_passed": all(c.passed for c in checks)}, args)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_RUNTIME


# -- parser --------------------------------------------------------------------

def _add_optimizer_args(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--optimizer", default=default, help="gd | nm")
    p.add_argument("--max-evals", type=int, default=1000)
    p.add_argument("--step-size", type=float, default=0.1)
    p.add_argument("--fd-epsilon", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--restarts", type=int, default=None)


def _add_noise_args(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--noise", choices=("default", "none"), default=default)
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--readout0", type=float)
    p.add_argument("--readout1", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varqlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    vqe = sub.add_parser("vqe").add_subparsers(dest="action", required=True).add_parser("run")
    vqe.add_argument("--hamiltonian", required=True)
    vqe.add_argument("--ansatz", default="single_ry", help="single_ry | layered:L")
    vqe.add_argument("--shots", default="exact", help="N per energy evaluation, or 'exact'")
    vqe.add_argument("--objective", default="expectation")
    vqe.add_argument("--seed", type=int)
    vqe.add_argument("--allocation", default="proportional", choices=("uniform", "proportional"))
    vqe.add_argument("--grouping", default="qwc_greedy", choices=("qwc_greedy", "one_per_term"))
    vqe.add_argument("--x0", help="comma-separated initial parameters")
    vqe.add_argument("--trace")
    vqe.add_argument("--out")
    _add_optimizer_args(vqe, "gd")
    _add_noise_args(vqe, "none")
    vqe.set_defaults(func=cmd_vqe)

    qaoa = sub.add_parser("qaoa").add_subparsers(dest="action", required=True).add_parser("run")
    qaoa.add_argument("--graph", required=True)
    qaoa.add_argument("--p", type=int, default=1)
    qaoa.add_argument("--init", default="schedule:0.5", help="schedule:D | random | interp | lbl")
    qaoa.add_argument("--objective", default="expectation")
    qaoa.add_argument("--shots", type=int, default=1000)
    qaoa.add_argument("--seed", type=int)
    qaoa.add_argument("--warm-start", help="comma-separated relaxed solution in [0, 1]")
    qaoa.add_argument("--constraint", action="append", default=[],
                      help="k=K,qubits=0;1;2,weight=W (repeatable)")
    qaoa.add_argument("--trace")
    qaoa.add_argument("--out")
    _add_optimizer_args(qaoa, "nm")
    qaoa.set_defaults(func=cmd_qaoa)

    group = sub.add_parser("group")
    group.add_argument("--hamiltonian", required=True)
    group.add_argument("--strategy", default="qwc_greedy")
    group.add_argument("--out")
    group.set_defaults(func=cmd_group)

    shots = sub.add_parser("shots").add_subparsers(dest="action", required=True).add_parser("plan")
    shots.add_argument("--hamiltonian", required=True)
    shots.add_argument("--budget", type=int, required=True)
    shots.add_argument("--strategy", default="proportional")
    shots.add_argument("--grouping", default="qwc_greedy")
    shots.add_argument("--out")
    shots.set_defaults(func=cmd_shots)

    zne = sub.add_parser("zne").add_subparsers(dest="action", required=True).add_parser("run")
    zne.add_argument("--circuit", required=True)
    zne.add_argument("--observable", required=True)
    zne.add_argument("--scales", default="1,3,5")
    zne.add_argument("--fit", default="linear")
    zne.add_argument("--trajectories", type=int, default=200)
    zne.add_argument("--shots", default="100", help="shots per trajectory, or 'exact'")
    zne.add_argument("--seed", type=int)
    zne.add_argument("--out")
    _add_noise_args(zne, "default")
    zne.set_defaults(func=cmd_zne)

    spectrum = sub.add_parser("spectrum")
    spectrum.add_argument("--hamiltonian", required=True)
    spectrum.add_argument("--out")
    spectrum.set_defaults(func=cmd_spectrum)

    demo = sub.add_parser("demo")
    demo.add_argument("name")
    demo.add_argument("--seed", type=int)
    demo.add_argument("--repeats", type=int, default=10000)
    demo.add_argument("--out")
    demo.set_defaults(func=cmd_demo)

    verify = sub.add_parser("verify")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--out")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        print("configuration error(s):", file=sys.stderr)
        for msg in e.errors:
            print(f"  - {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - any failure after validation is a runtime error
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
