"""Experiment assembly, execution and CSV trace output."""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .baselines import solve_pegasos, solve_subgradient
from .completion import build_matrix_completion_problem, read_triplets
from .losses import LossSpec
from .numerics import Dataset, read_libsvm
from .regularizers import (
    CompositeV, ExclusiveLasso, GroupLasso, L1, L1InfRows, L21Rows, L2Norm, LInf,
    Regularizer, SquaredL2Half,
)
from .solvers import (
    SaddleProblem, SingleStep, SolverConfig, SolverTrace, TraceRecord, TwoStep,
    augment_bias, build_erm_problem, solve, tune_step_ratio, tune_step_scale,
)
from .synthetic import gen_synthetic

TASKS = ("erm", "matrix-completion", "svm-dual-cap")
SOLVERS = ("pdprox-dual", "pdprox-dual-fast", "pdprox-primal", "subgradient", "pegasos")
REGULARIZERS = ("l1", "l2", "linf", "l2sq", "group", "l21", "l1inf", "exclusive", "l21sq")
TRACE_HEADER = ("iter", "seconds", "primal_obj", "dual_obj", "gap",
                "primal_sparsity", "dual_sparsity", "gap_flag")

StepValue = Union[float, str, None]


# ---------------------------------------------------------------------------
# CSV


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_trace_csv(trace: SolverTrace, path) -> None:
    """Write one row per record; unavailable values become empty fields."""
    with open(Path(path), "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_HEADER)
        for r in trace:
            wr.writerow([r.iteration, _fmt(float(r.seconds)), _fmt(float(r.primal_obj)),
                         _fmt(None if r.dual_obj is None else float(r.dual_obj)),
                         _fmt(None if r.gap is None else float(r.gap)),
                         _fmt(float(r.primal_sparsity)), _fmt(float(r.dual_sparsity)),
                         r.gap_flag])


def read_trace_csv(path) -> SolverTrace:
    def opt(s):
        return None if s == "" else float(s)

    trace = SolverTrace()
    with open(Path(path), newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if tuple(header or ()) != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        for row in rd:
            trace.append(TraceRecord(int(row[0]), float(row[1]), float(row[2]), opt(row[3]),
                                     opt(row[4]), float(row[5]), float(row[6]), row[7]))
    return trace


# ---------------------------------------------------------------------------
# Specification


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a task, its data, and the solvers to run on it.

    With ``data=None`` a synthetic dataset of kind ``synth`` is drawn from
    ``seed``. ``out`` is a directory receiving ``<solver>.csv`` (or
    ``<solver>_m<cap>.csv`` for the dual-cap task); a path ending in ``.csv``
    is used verbatim when exactly one trace is produced.
    """

    task: str = "erm"
    solvers: Tuple[str, ...] = ("pdprox-dual",)
    data: Optional[str] = None
    synth: str = "classification"
    n: int = 200
    d: int = 20
    noise: float = 0.1
    loss: str = "hinge"
    loss_param: Optional[float] = None
    reg: str = "l2sq"
    lam: float = 0.01
    iters: int = 1000
    stride: int = 10
    step_scale: StepValue = 1.0
    step_ratio: StepValue = None
    tol: Optional[float] = None
    dual_caps: Tuple[float, ...] = ()
    bias: bool = False
    thresholds: Optional[Tuple[float, ...]] = None
    out: str = "results"
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad or not self.solvers:
            raise ValueError(f"unknown solver(s) {bad}; expected names from {SOLVERS}")
        if self.reg not in REGULARIZERS:
            raise ValueError(f"unknown regularizer {self.reg!r}; expected one of {REGULARIZERS}")
        if self.data is not None and not Path(self.data).is_file():
            raise FileNotFoundError(f"data file {self.data!r} does not exist")
        if self.task == "svm-dual-cap" and not self.dual_caps:
            raise ValueError("svm-dual-cap needs at least one dual cap m")
        if self.task == "matrix-completion" and self.data is None:
            raise ValueError("matrix-completion needs a triplet file")
        if self.iters < 1 or self.stride < 1:
            raise ValueError("iters and stride must be >= 1")


@dataclass
class SummaryRow:
    solver: str
    cap: Optional[float]
    iterations: int
    primal_obj: float
    gap: Optional[float]
    seconds: float
    primal_sparsity: float
    dual_sparsity: float
    path: str = ""


def make_loss(name: str, param: Optional[float]) -> LossSpec:
    if name == "generalized_hinge":
        return LossSpec(name, slope=2.0 if param is None else param)
    if name == "piecewise_linear":
        return LossSpec(name, slope=0.5 if param is None else param)
    if name == "eps_insensitive":
        return LossSpec(name, eps=0.1 if param is None else param)
    return LossSpec(name)


def make_regularizer(name: str, ds: Dataset, group_size: int = 5) -> Regularizer:
    """Regularizer over the model shape implied by the dataset."""
    K = ds.n_outputs
    shape = (ds.d, K)
    if name in ("l21", "l1inf", "exclusive", "l21sq") and not ds.is_multi_output:
        raise ValueError(f"regularizer {name!r} needs multi-output labels")
    if name == "l1":
        return L1()
    if name == "l2":
        return L2Norm()
    if name == "linf":
        return LInf()
    if name == "l2sq":
        return SquaredL2Half()
    if name == "group":
        if ds.is_multi_output:
            raise ValueError("group lasso is defined for single-output models")
        groups = ds.groups
        if groups is None:
            groups = tuple(np.arange(s, min(s + group_size, ds.d)) for s in range(0, ds.d, group_size))
        return GroupLasso(groups)
    if name == "l21":
        return L21Rows(shape)
    if name == "l1inf":
        return L1InfRows(shape)
    if name == "exclusive":
        return ExclusiveLasso(shape)
    return CompositeV(L21Rows(shape), p=2)


def load_dataset(spec: ExperimentSpec) -> Dataset:
    if spec.data is not None:
        return read_libsvm(spec.data)
    return gen_synthetic(spec.synth, spec.n, spec.d, spec.noise, spec.seed)


def build_problems(spec: ExperimentSpec) -> List[Tuple[Optional[float], SaddleProblem, Optional[Dataset]]]:
    """``(cap, problem, dataset)`` triples for the task."""
    if spec.task == "matrix-completion":
        td = read_triplets(spec.data)
        loss = tuple(spec.thresholds) if spec.thresholds else "absolute"
        return [(None, build_matrix_completion_problem(td, loss, spec.lam), None)]
    ds = load_dataset(spec)
    if spec.task == "svm-dual-cap":
        reg = make_regularizer(spec.reg, ds)
        return [(m, build_erm_problem(LossSpec("hinge"), ds, reg, spec.lam, dual_cap=m), ds)
                for m in spec.dual_caps]
    reg = make_regularizer(spec.reg, ds)
    return [(None, build_erm_problem(make_loss(spec.loss, spec.loss_param), ds, reg, spec.lam), ds)]


def _pdprox_config(spec: ExperimentSpec, p: SaddleProblem, variant: str) -> SolverConfig:
    cfg = SolverConfig(variant=variant, max_iter=spec.iters, gap_tol=spec.tol, stride=spec.stride)
    if spec.step_ratio is not None:
        ratio = tune_step_ratio(p, cfg) if spec.step_ratio == "grid" else float(spec.step_ratio)
        return replace(cfg, step=TwoStep.from_ratio(p.c, ratio))
    scale = tune_step_scale(p, cfg) if spec.step_scale == "grid" else float(spec.step_scale)
    return replace(cfg, step=SingleStep(scale=scale))


def _run_solver(spec: ExperimentSpec, name: str, p: SaddleProblem, ds: Optional[Dataset]):
    if name == "pegasos":
        if ds is None or spec.bias or p.domain.l1_cap is not None:
            raise ValueError("pegasos runs on an unbiased, uncapped ERM problem only")
        return solve_pegasos(ds, spec.lam, spec.iters, stride=spec.stride, problem=p)
    if name == "subgradient":
        if spec.step_scale == "grid":
            best = None
            for s in (2.0 ** k for k in range(-10, 11)):
                sol, tr = solve_subgradient(p, spec.iters, s, spec.stride)
                if math.isfinite(sol.primal_obj) and (best is None or sol.primal_obj < best[0].primal_obj):
                    best = (sol, tr)
            return best
        return solve_subgradient(p, spec.iters, float(spec.step_scale), spec.stride)
    variant = name[len("pdprox-"):]
    return solve(p, _pdprox_config(spec, p, variant))


def _csv_path(spec: ExperimentSpec, name: str, cap: Optional[float], single: bool) -> Path:
    out = Path(spec.out)
    if single and out.suffix == ".csv":
        out.parent.mkdir(parents=True, exist_ok=True)
        return out
    out.mkdir(parents=True, exist_ok=True)
    stem = name if cap is None else f"{name}_m{cap:g}"
    return out / f"{stem}.csv"


def execute_experiment(spec: ExperimentSpec) -> List[SummaryRow]:
    """Run every solver on every problem of the task and write the traces."""
    problems = build_problems(spec)
    if spec.bias:
        problems = [(m, augment_bias(p), ds) for m, p, ds in problems]
    single = len(problems) * len(spec.solvers) == 1
    rows = []
    for cap, p, ds in problems:
        for name in spec.solvers:
            sol, trace = _run_solver(spec, name, p, ds)
            path = _csv_path(spec, name, cap, single)
            write_trace_csv(trace, path)
            last = trace[-1]
            rows.append(SummaryRow(name, cap, sol.iterations, last.primal_obj, last.gap,
                                   last.seconds, last.primal_sparsity, last.dual_sparsity,
                                   str(path)))
    return rows


def format_summary(rows: Sequence[SummaryRow]) -> str:
    head = f"{'solver':<18}{'m':>8}{'iters':>8}{'primal_obj':>16}{'gap':>13}{'seconds':>10}{'p_sparse':>10}{'d_sparse':>10}"
    lines = [head]
    for r in rows:
        gap = "n/a" if r.gap is None else f"{r.gap:.4e}"
        cap = "-" if r.cap is None else f"{r.cap:g}"
        lines.append(f"{r.solver:<18}{cap:>8}{r.iterations:>8}{r.primal_obj:>16.8g}{gap:>13}"
                     f"{r.seconds:>10.3f}{r.primal_sparsity:>10.3f}{r.dual_sparsity:>10.3f}")
    return "\n".join(lines)


def run_experiment(spec: ExperimentSpec, stream=None) -> int:
    """Execute and print the summary table. Returns 0, or 2 on a runtime failure."""
    stream = stream or sys.stdout
    try:
        rows = execute_experiment(spec)
    except (ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(format_summary(rows), file=stream)
    return 0
