"""Closed-loop learning runs: configuration, objective wiring, records and presets."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import nmopt
from .metrology import (
    FitnessReport,
    PhaseEncoding,
    StrataSet,
    experiment_strata,
    fitness,
    gaussian_strata,
    noon_fidelity,
    qfi_pure,
)
from .qcore import QuantumState, ValidationError
from .spinsys import ControlSequence, SpinSystemSpec, prepare_probe
from .swapsim import NoiseModel, sampled_fitness

logger = logging.getLogger(__name__)

RECORD_MAGIC = "# metroloop-record v1"
BASE_COLUMNS = ("g", "delta_gamma", "fql", "fq_true", "noon_fidelity", "move", "evaluations",
                "bloch_delta", "bloch_phi")
CONVERGED_RATIO = 0.95
FIG2_ITERATIONS = {1: 1000, 2: 2000, 3: 4000, 4: 6000, 5: 10000, 6: 15000, 7: 20000}
FIG2_STRATA_K = 1001


@dataclass
class StrataConfig:
    kind: str = "experiment"  # "experiment" or "gaussian"
    k: int = 9
    dx2: float = 1.0721

    def build(self) -> StrataSet:
        if self.kind == "experiment":
            return experiment_strata()
        if self.kind == "gaussian":
            return gaussian_strata(self.k, self.dx2)
        raise ValidationError(f"unknown strata kind {self.kind!r}")


@dataclass
class OptimizerSection:
    alpha: float = 1.0
    gamma_exp: float = 2.0
    beta: float = 0.5
    delta_shrink: float = 0.5
    max_iterations: int = 25
    init_range: object = "auto"  # "auto" = physical bounds of the spin system
    seed: int = 0
    stall_tolerance: float | None = None
    stall_window: int = 10


@dataclass
class RunConfig:
    system: dict = field(default_factory=dict)
    fitness_mode: str = "exact"
    strata: StrataConfig = field(default_factory=StrataConfig)
    noise: dict = field(default_factory=lambda: {"p": 0.0, "applications": 2})
    shots_per_term: int = 1000
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    restarts: int = 1
    output_path: str = "runs/out"
    record_true_qfi: bool = True
    record_noon_fidelity: bool = True

    def __post_init__(self):
        if isinstance(self.strata, dict):
            self.strata = _strict(StrataConfig, self.strata, "strata")
        if isinstance(self.optimizer, dict):
            self.optimizer = _strict(OptimizerSection, self.optimizer, "optimizer")
        if self.fitness_mode not in ("exact", "sampled"):
            raise ValidationError(f"fitness_mode must be exact or sampled, got {self.fitness_mode!r}")
        if self.fitness_mode == "sampled" and self.shots_per_term < 1:
            raise ValidationError("sampled mode requires shots_per_term >= 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        # JSON-shaped values so the echoed config round-trips exactly
        self.system = json.loads(json.dumps(self.system))
        self.noise = json.loads(json.dumps(self.noise))
        if not isinstance(self.optimizer.init_range, str):
            self.optimizer.init_range = json.loads(json.dumps(list(self.optimizer.init_range)))
        # fail fast on bad physics / noise
        self.spin_spec()
        self.noise_model()

    def spin_spec(self) -> SpinSystemSpec:
        sys_kw = dict(self.system)
        if "dt_bounds" in sys_kw and sys_kw["dt_bounds"] is not None:
            sys_kw["dt_bounds"] = tuple(sys_kw["dt_bounds"])
        allowed = {f.name for f in fields(SpinSystemSpec)}
        unknown = set(sys_kw) - allowed
        if unknown:
            raise ValidationError(f"unknown system keys: {sorted(unknown)}")
        return SpinSystemSpec(**sys_kw)

    def noise_model(self) -> NoiseModel:
        unknown = set(self.noise) - {"p", "applications"}
        if unknown:
            raise ValidationError(f"unknown noise keys: {sorted(unknown)}")
        return NoiseModel(**self.noise)

    def optimizer_config(self, restart: int = 0) -> nmopt.OptimizerConfig:
        o = self.optimizer
        if isinstance(o.init_range, str):
            if o.init_range != "auto":
                raise ValidationError(f"init_range must be 'auto' or [lo, hi], got {o.init_range!r}")
            spec = self.spin_spec()
            init_range = (spec.lower_bounds(), spec.upper_bounds())
        else:
            lo, hi = o.init_range
            init_range = (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        return nmopt.OptimizerConfig(
            alpha=o.alpha, gamma_exp=o.gamma_exp, beta=o.beta, delta_shrink=o.delta_shrink,
            max_iterations=o.max_iterations, init_range=init_range, seed=o.seed + restart,
            stall_tolerance=o.stall_tolerance, stall_window=o.stall_window,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return _strict(cls, data, "config")

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _strict(klass, data, where):
    if not isinstance(data, dict):
        raise ValidationError(f"{where}: expected a mapping")
    allowed = {f.name for f in fields(klass)}
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    return klass(**data)


class Objective:
    """``params -> 1 - delta_gamma`` for a run configuration.

    In sampled mode every call draws shot noise from its own stream,
    ``SeedSequence([seed, call_index])``, so trajectories depend only on
    the seed and the order of evaluations.
    """

    def __init__(self, config: RunConfig, seed: int = 0):
        self.config = config
        self.spec = config.spin_spec()
        self.strata = config.strata.build()
        self.encoding = PhaseEncoding(self.spec.n_qubits)
        self.noise = config.noise_model()
        self.seed = seed
        self.calls = 0
        self._probes: OrderedDict[bytes, QuantumState] = OrderedDict()

    @property
    def dimension(self) -> int:
        return self.spec.n_params

    def probe(self, params) -> QuantumState:
        params = np.ascontiguousarray(params, dtype=float)
        key = params.tobytes()
        state = self._probes.get(key)
        if state is None:
            state = prepare_probe(self.spec, ControlSequence.from_vector(self.spec, params))
            self._probes[key] = state
            # the simplex best vertex is always a recent evaluation
            if len(self._probes) > 4 * (self.dimension + 2):
                self._probes.popitem(last=False)
        return state

    def report(self, params) -> FitnessReport:
        probe = self.probe(params)
        if self.config.fitness_mode == "exact":
            return fitness(probe, self.encoding, self.strata)
        stream = np.random.SeedSequence([self.seed, self.calls])
        return sampled_fitness(probe, self.strata, self.noise, self.config.shots_per_term,
                               stream, self.encoding)

    def __call__(self, params) -> float:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.dimension,):
            raise ValidationError(f"expected {self.dimension} parameters, got shape {params.shape}")
        rep = self.report(params)
        self.calls += 1
        return 1.0 - rep.delta_gamma


def build_objective(config: RunConfig, seed: int | None = None) -> Objective:
    return Objective(config, config.optimizer.seed if seed is None else seed)


def bloch_angles(state: QuantumState) -> tuple[float, float]:
    """``(delta, varphi)`` with ``|psi> ~ cos(delta/2)|0> + sin(delta/2) e^{i varphi}|1>``."""
    a0, a1 = state.data
    delta = 2.0 * math.atan2(abs(a1), abs(a0))
    varphi = float(np.angle(a1) - np.angle(a0)) if abs(a1) > 0 and abs(a0) > 0 else 0.0
    return delta, (varphi + math.pi) % (2 * math.pi) - math.pi


@dataclass
class LearningRunRecord:
    config: dict
    restart: int
    seed: int
    n_qubits: int
    dx2: float
    rows: list = field(default_factory=list)
    wall_time: float = 0.0
    stalled: bool = False

    @property
    def columns(self) -> list[str]:
        n_params = len(self.rows[0]["params"]) if self.rows else 0
        return list(BASE_COLUMNS) + [f"p{i}" for i in range(n_params)]

    def series(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def final(self) -> dict:
        return self.rows[-1]

    def to_text(self, include_wall_time: bool = True) -> str:
        buf = io.StringIO()
        buf.write(RECORD_MAGIC + "\n")
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        buf.write(f"# restart: {self.restart}\n# seed: {self.seed}\n")
        buf.write(f"# n_qubits: {self.n_qubits}\n# dx2: {self.dx2!r}\n")
        buf.write(f"# stalled: {str(self.stalled).lower()}\n")
        if include_wall_time:
            buf.write(f"# wall_time_s: {self.wall_time:.3f}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([r["g"]] + [_fmt(r[c]) for c in BASE_COLUMNS[1:5]] + [r["move"], r["evaluations"]]
                            + [_fmt(r["bloch_delta"]), _fmt(r["bloch_phi"])]
                            + [repr(float(p)) for p in r["params"]])
        return buf.getvalue()

    def write(self, path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_text(), encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write record {path}: {exc}") from exc
        return path

    @classmethod
    def from_text(cls, text: str) -> "LearningRunRecord":
        lines = text.splitlines()
        if not lines or lines[0] != RECORD_MAGIC:
            raise ValidationError("not a metroloop record file")
        header = {}
        i = 1
        while i < len(lines) and lines[i].startswith("# "):
            key, _, value = lines[i][2:].partition(": ")
            header[key] = value
            i += 1
        reader = csv.reader(lines[i:])
        columns = next(reader)
        n_base = len(BASE_COLUMNS)
        if tuple(columns[:n_base]) != BASE_COLUMNS:
            raise ValidationError("unexpected record columns")
        rows = []
        for raw in reader:
            rows.append({
                "g": int(raw[0]),
                "delta_gamma": float(raw[1]),
                "fql": float(raw[2]),
                "fq_true": float(raw[3]),
                "noon_fidelity": float(raw[4]),
                "move": raw[5],
                "evaluations": int(raw[6]),
                "bloch_delta": float(raw[7]),
                "bloch_phi": float(raw[8]),
                "params": [float(v) for v in raw[n_base:]],
            })
        return cls(
            config=json.loads(header["config"]),
            restart=int(header["restart"]),
            seed=int(header["seed"]),
            n_qubits=int(header["n_qubits"]),
            dx2=float(header["dx2"]),
            rows=rows,
            wall_time=float(header.get("wall_time_s", "nan")),
            stalled=header.get("stalled") == "true",
        )

    @classmethod
    def read(cls, path) -> "LearningRunRecord":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read record {path}: {exc}") from exc
        return cls.from_text(text)


def _fmt(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def run_single(config: RunConfig, restart: int = 0) -> LearningRunRecord:
    """One optimizer run; row ``g`` describes the best probe after iteration ``g``."""
    opt_cfg = config.optimizer_config(restart)
    objective = build_objective(config, seed=opt_cfg.seed)
    n = objective.spec.n_qubits
    record = LearningRunRecord(config.to_dict(), restart, opt_cfg.seed, n, objective.strata.dx2)
    dx2 = objective.strata.dx2

    def log_row(simplex, event):
        dgamma = 1.0 - event.best_value
        probe = objective.probe(event.best_vertex)
        fq = qfi_pure(probe, objective.encoding) if config.record_true_qfi else math.nan
        noon = noon_fidelity(probe)[1] if config.record_noon_fidelity else math.nan
        bd, bp = bloch_angles(probe) if n == 1 else (math.nan, math.nan)
        record.rows.append({
            "g": event.iteration,
            "delta_gamma": dgamma,
            "fql": 2.0 * dgamma / dx2 if dx2 > 0 else math.nan,
            "fq_true": fq,
            "noon_fidelity": noon,
            "move": event.move,
            "evaluations": event.evaluations_used,
            "bloch_delta": bd,
            "bloch_phi": bp,
            "params": [float(p) for p in event.best_vertex],
        })

    t0 = time.perf_counter()
    result = nmopt.run(objective.dimension, opt_cfg, objective, callback=log_row)
    record.wall_time = time.perf_counter() - t0
    record.stalled = result.stalled
    return record


def run_experiment(config: RunConfig, write: bool = True) -> tuple[list[LearningRunRecord], bool]:
    """Run all restarts; returns the completed records and whether every restart completed."""
    records = []
    ok = True
    out = Path(config.output_path)
    for r in range(config.restarts):
        try:
            rec = run_single(config, r)
        except Exception:  # a failed restart is skipped, not fatal
            logger.exception("restart %d failed", r)
            ok = False
            continue
        records.append(rec)
        if write:
            rec.write(out / f"record_r{r:02d}.csv")
        logger.info("restart %d: final dgamma=%.6g fql=%.6g fq=%.6g (%.1fs)", r,
                    rec.final["delta_gamma"], rec.final["fql"], rec.final["fq_true"], rec.wall_time)
    if write and records:
        write_summary(out / "summary.json", summarize(records))
    return records, ok


def _iterations_to_fraction(series: np.ndarray, frac: float = 0.95) -> int:
    final = series[-1]
    hits = np.nonzero(series >= frac * final)[0]
    return int(hits[0]) if hits.size else len(series) - 1


def summarize(records: list[LearningRunRecord]) -> list[dict]:
    """Per-qubit-count rows of best-of-restarts figures of merit."""
    if not records:
        raise ValidationError("summarize needs at least one record")
    by_n: dict[int, list[LearningRunRecord]] = {}
    for rec in records:
        by_n.setdefault(rec.n_qubits, []).append(rec)
    rows = []
    for n in sorted(by_n):
        recs = by_n[n]
        best = max(recs, key=lambda r: r.final["fql"])
        best_fq = max(r.final["fq_true"] for r in recs)
        ratio = best_fq / n**2
        rows.append({
            "n_qubits": n,
            "restarts": len(recs),
            "best_fql": max(r.final["fql"] for r in recs),
            "best_delta_gamma": max(r.final["delta_gamma"] for r in recs),
            "best_fq_true": best_fq,
            "fq_ratio": ratio,
            "best_noon_fidelity": max(r.final["noon_fidelity"] for r in recs),
            "iterations_to_95pct": _iterations_to_fraction(best.series("fql")),
            "dx2": best.dx2,
            "converged": bool(ratio >= CONVERGED_RATIO),
        })
    return rows


def write_summary(path, rows: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"rows": rows}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def format_summary(rows: list[dict]) -> str:
    head = f"{'N':>3} {'restarts':>8} {'best F_Q^L':>11} {'best F_Q':>9} {'F_Q/N^2':>8} {'NOON fid':>9} {'it@95%':>7}  flag"
    lines = [head]
    for r in rows:
        flag = "" if r["converged"] else "UNCONVERGED"
        lines.append(f"{r['n_qubits']:>3} {r['restarts']:>8} {r['best_fql']:>11.5f} {r['best_fq_true']:>9.5f} "
                     f"{r['fq_ratio']:>8.4f} {r['best_noon_fidelity']:>9.5f} {r['iterations_to_95pct']:>7}  {flag}")
    return "\n".join(lines)


# presets ---------------------------------------------------------------

def fig3_preset(restarts: int = 5, seed: int = 0, output_path: str = "runs/fig3") -> RunConfig:
    """Single driftless qubit, three segments, nine experiment strata, 25 iterations."""
    spec = SpinSystemSpec.experiment()
    return RunConfig(
        system=_spec_dict(spec),
        fitness_mode="exact",
        strata=StrataConfig(kind="experiment"),
        optimizer=OptimizerSection(max_iterations=25, seed=seed),
        restarts=restarts,
        output_path=output_path,
    )


def fig2_preset(n: int, restarts: int = 5, seed: int = 0, dx2: float = 1e-3,
                output_path: str | None = None, max_iterations: int | None = None) -> RunConfig:
    """Ising chain of ``n`` qubits with the default control budget."""
    spec = SpinSystemSpec.chain(n)
    return RunConfig(
        system=_spec_dict(spec),
        fitness_mode="exact",
        strata=StrataConfig(kind="gaussian", k=FIG2_STRATA_K, dx2=dx2),
        optimizer=OptimizerSection(
            max_iterations=max_iterations or FIG2_ITERATIONS.get(n, 3000 * n), seed=seed),
        restarts=restarts,
        output_path=output_path or os.path.join("runs", f"fig2_n{n}"),
    )


def _spec_dict(spec: SpinSystemSpec) -> dict:
    d = asdict(spec)
    if d["dt_bounds"] is not None:
        d["dt_bounds"] = list(d["dt_bounds"])
    return d
