"""Two-station referee engine: randomized trials, logging, CHSH statistics, audits.

The referee owns all sequencing.  Per trial it tosses two fair coins for
the setting labels, hands station A its setting plus the shared hidden
variable, collects x, then does the same for station B and collects y.
A always answers before B inside a trial; nothing about B's setting can
reach A's response by construction, and the replay audit checks the
converse dynamically.  In the memoryless regime station state is frozen
after initialization; in the between-trial-memory regime both stations
receive the full previous record between trials, never within one.

All randomness is pre-generated as whole-run arrays from four fixed
streams (referee coins, source, station A aux, station B aux) derived
from the master seed.  Both engine paths, the per-trial reference loop
and the vectorized batch path, consume these same arrays, so they must
produce identical records; tests hold them to that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

import numpy as np

from .lhv import (
    HiddenVariableBatch,
    MemoryMode,
    Strategy,
    make_strategy,
)
from .qmoracle import UnitVector3, singlet_correlation
from .seeding import (
    AUDIT_STREAM,
    REFEREE_STREAM,
    SOURCE_STREAM,
    STATION_A_STREAM,
    STATION_B_STREAM,
    check_seed,
    derive_rng,
    derive_seed,
)

CELLS = ((1, 1), (1, 2), (2, 1), (2, 2))

CANONICAL_ANGLES_DEG = (0.0, 90.0, 45.0, -45.0)
# at these angles the override channel's reported S lands at +2*sqrt(2)
VIOLATION_ANGLES_DEG = (0.0, 90.0, -135.0, 135.0)


class RegimeMismatchError(ValueError):
    """Strategy memory mode and experiment regime disagree."""


class OverrideForbiddenError(ValueError):
    """A correlation override was presented outside diagnosis mode."""


class EmptyCellError(ValueError):
    """A setting pair never occurred, so its correlation is undefined."""


@dataclass(frozen=True)
class Settings:
    """The four measurement directions: two per station."""

    a1: UnitVector3
    a2: UnitVector3
    b1: UnitVector3
    b2: UnitVector3

    @classmethod
    def from_degrees(cls, a1: float, a2: float, b1: float, b2: float) -> "Settings":
        return cls(
            UnitVector3.from_xz_degrees(a1),
            UnitVector3.from_xz_degrees(a2),
            UnitVector3.from_xz_degrees(b1),
            UnitVector3.from_xz_degrees(b2),
        )

    def a_stack(self) -> np.ndarray:
        return np.array([self.a1.as_array(), self.a2.as_array()])

    def b_stack(self) -> np.ndarray:
        return np.array([self.b1.as_array(), self.b2.as_array()])


def canonical_settings() -> Settings:
    return Settings.from_degrees(*CANONICAL_ANGLES_DEG)


def violation_settings() -> Settings:
    return Settings.from_degrees(*VIOLATION_ANGLES_DEG)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a run bit for bit."""

    strategy: str
    n_trials: int
    seed: int
    settings: Settings
    regime: MemoryMode = MemoryMode.MEMORYLESS
    diagnosis_mode: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ValueError(f"n_trials must be a positive integer, got {self.n_trials!r}")
        check_seed(self.seed)
        if not isinstance(self.regime, MemoryMode):
            raise ValueError(f"regime must be a MemoryMode, got {self.regime!r}")
        if not isinstance(self.settings, Settings):
            raise ValueError("settings must be a Settings instance")


@dataclass(frozen=True)
class TrialRecord:
    """One completed round; n is the 0-based trial index."""

    n: int
    i: int
    j: int
    x: int
    y: int


@dataclass(frozen=True)
class TrialLog:
    """Columnar record of a whole run: i, j in {1, 2}; x, y in {-1, +1}."""

    i: np.ndarray
    j: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        arrays = {}
        n = None
        for name in ("i", "j", "x", "y"):
            arr = np.asarray(getattr(self, name), dtype=np.int8)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise ValueError("column lengths differ")
            arrays[name] = arr
        if n == 0:
            raise ValueError("a trial log needs at least one trial")
        for name in ("i", "j"):
            if not np.all((arrays[name] == 1) | (arrays[name] == 2)):
                raise ValueError(f"{name} entries must be 1 or 2")
        for name in ("x", "y"):
            if not np.all((arrays[name] == 1) | (arrays[name] == -1)):
                raise ValueError(f"{name} entries must be +-1")
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.i.shape[0]

    def record(self, k: int) -> TrialRecord:
        return TrialRecord(k, int(self.i[k]), int(self.j[k]), int(self.x[k]), int(self.y[k]))

    def __iter__(self) -> Iterator[TrialRecord]:
        return (self.record(k) for k in range(len(self)))


@dataclass(frozen=True)
class ExperimentRun:
    """A completed experiment with the streams needed to replay and audit it."""

    spec: ExperimentSpec
    strategy: Strategy
    log: TrialLog
    hidden: HiddenVariableBatch
    aux_a: np.ndarray
    aux_b: np.ndarray
    engine: str


def _scalar_loop(
    strategy: Strategy,
    i: np.ndarray,
    j: np.ndarray,
    a_stack: np.ndarray,
    b_stack: np.ndarray,
    hvb: HiddenVariableBatch,
    aux_a: np.ndarray,
    aux_b: np.ndarray,
    regime: MemoryMode,
) -> tuple[np.ndarray, np.ndarray]:
    """Reference engine: one trial at a time, states advanced between trials."""
    n = len(hvb)
    x = np.empty(n, dtype=np.int8)
    y = np.empty(n, dtype=np.int8)
    state_a = strategy.initial_state_a()
    state_b = strategy.initial_state_b()
    memory = regime is MemoryMode.BETWEEN_TRIAL_MEMORY
    for k in range(n):
        ik = int(i[k])
        jk = int(j[k])
        hv = hvb.one(k)
        xk = strategy.respond_a(ik, a_stack[ik - 1], hv, float(aux_a[k]), state_a, k)
        yk = strategy.respond_b(jk, b_stack[jk - 1], hv, float(aux_b[k]), state_b, k)
        if xk not in (-1, 1) or yk not in (-1, 1):
            raise ValueError(f"strategy {strategy.name!r} returned a non +-1 outcome at trial {k}")
        x[k] = xk
        y[k] = yk
        if memory:
            rec = TrialRecord(k, ik, jk, xk, yk)
            if strategy.update_state_a is not None:
                state_a = strategy.update_state_a(state_a, rec)
            if strategy.update_state_b is not None:
                state_b = strategy.update_state_b(state_b, rec)
    return x, y


def run_experiment(spec: ExperimentSpec, engine: str = "auto") -> ExperimentRun:
    """Drive N referee-mediated trials and return the run with its streams.

    engine: "auto" picks the strategy's vectorized path when it has one,
    "batch" demands it, "loop" forces the per-trial reference path.  All
    three consume identical pre-generated streams, so the records do not
    depend on the choice.
    """
    strategy = make_strategy(spec.strategy, spec.params)
    if strategy.memory_mode is not spec.regime:
        raise RegimeMismatchError(
            f"strategy {strategy.name!r} runs in {strategy.memory_mode.value!r}, "
            f"spec says {spec.regime.value!r}"
        )
    if strategy.correlation_override is not None and not spec.diagnosis_mode:
        raise OverrideForbiddenError(
            f"strategy {strategy.name!r} carries a correlation override; "
            "the referee accepts it only in diagnosis mode"
        )
    n = spec.n_trials
    referee = derive_rng(spec.seed, REFEREE_STREAM)
    source = derive_rng(spec.seed, SOURCE_STREAM)
    station_a = derive_rng(spec.seed, STATION_A_STREAM)
    station_b = derive_rng(spec.seed, STATION_B_STREAM)

    ij = referee.integers(1, 3, size=(n, 2)).astype(np.int8)
    i = ij[:, 0]
    j = ij[:, 1]
    hvb = strategy.sample_batch(source, n)
    if len(hvb) != n:
        raise ValueError("sampler returned the wrong number of hidden variables")
    aux_a = station_a.random(n)
    aux_b = station_b.random(n)

    a_stack = spec.settings.a_stack()
    b_stack = spec.settings.b_stack()

    if engine == "auto":
        engine = "batch" if strategy.batch_respond is not None else "loop"
    if engine == "batch":
        if strategy.batch_respond is None:
            raise ValueError(f"strategy {strategy.name!r} has no batch path")
        x, y = strategy.batch_respond(i, j, a_stack, b_stack, hvb, aux_a, aux_b)
        x = np.asarray(x, dtype=np.int8)
        y = np.asarray(y, dtype=np.int8)
        for name, arr in (("x", x), ("y", y)):
            if arr.shape != (n,) or not np.all((arr == 1) | (arr == -1)):
                raise ValueError(f"batch path of {strategy.name!r} produced invalid {name}")
    elif engine == "loop":
        x, y = _scalar_loop(strategy, i, j, a_stack, b_stack, hvb, aux_a, aux_b, spec.regime)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    log = TrialLog(i, j, x, y)
    return ExperimentRun(spec, strategy, log, hvb, aux_a, aux_b, engine)


@dataclass(frozen=True)
class ChshEstimate:
    """Per-cell correlations and their CHSH combination."""

    counts: dict
    corr: dict
    s: float
    n_trials: int


def chsh_combination(r11: float, r12: float, r21: float, r22: float) -> float:
    return r11 + r12 + r21 - r22


def chsh_statistic(log: TrialLog) -> ChshEstimate:
    """Pure function of the records; every setting pair must occur.

    Each correlation is (matches - mismatches) / count, an exactly
    representable mean of +-1 products.
    """
    prod = log.x * log.y
    counts = {}
    corr = {}
    for ci, cj in CELLS:
        mask = (log.i == ci) & (log.j == cj)
        cnt = int(np.count_nonzero(mask))
        if cnt == 0:
            raise EmptyCellError(f"no trials with setting pair ({ci},{cj})")
        counts[(ci, cj)] = cnt
        corr[(ci, cj)] = int(prod[mask].sum()) / cnt
    s = chsh_combination(corr[(1, 1)], corr[(1, 2)], corr[(2, 1)], corr[(2, 2)])
    return ChshEstimate(counts=counts, corr=corr, s=s, n_trials=len(log))


@dataclass(frozen=True)
class BellThreeCorrelation:
    """Bell's original three-correlation inequality as a derived report.

    Applicable when the shared setting a2 = b1 exists; then the records
    give E(a1,b1), E(a1,b2), E(a2,b2) and the bound reads
    |E(a1,b1) - E(a1,b2)| <= 1 + E(a2,b2).
    """

    applicable: bool
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    satisfied: Optional[bool] = None


def bell_three_correlation(estimate: ChshEstimate, settings: Settings) -> BellThreeCorrelation:
    shared = settings.a2.dot(settings.b1)
    if abs(shared - 1.0) > 1e-12:
        return BellThreeCorrelation(applicable=False)
    lhs = abs(estimate.corr[(1, 1)] - estimate.corr[(1, 2)])
    rhs = 1.0 + estimate.corr[(2, 2)]
    return BellThreeCorrelation(applicable=True, lhs=lhs, rhs=rhs, satisfied=lhs <= rhs + 1e-12)


@dataclass(frozen=True)
class ReportedCorrelations:
    """What the override channel claims, next to its non-scalar leftovers.

    corr holds the scalar part of the mean per-trial payload per cell;
    bivector_residual the norm of everything the scalar part discards.
    """

    corr: dict
    bivector_residual: dict
    s: float
    method: str


def reported_correlations(run: ExperimentRun, method: str = "aggregate") -> ReportedCorrelations:
    """Evaluate the override channel over a finished diagnosis-mode run.

    method "per-trial" accumulates the payload trial by trial (the
    reference route); "aggregate" uses the channel's exact cell-mean
    shortcut.  Both exist on purpose; tests pin them together.
    """
    override = run.strategy.correlation_override
    if override is None:
        raise OverrideForbiddenError(f"strategy {run.strategy.name!r} has no correlation override")
    log = run.log
    a_stack = run.spec.settings.a_stack()
    b_stack = run.spec.settings.b_stack()
    corr = {}
    residual = {}
    for ci, cj in CELLS:
        mask = (log.i == ci) & (log.j == cj)
        cnt = int(np.count_nonzero(mask))
        if cnt == 0:
            raise EmptyCellError(f"no trials with setting pair ({ci},{cj})")
        a_vec = a_stack[ci - 1]
        b_vec = b_stack[cj - 1]
        if method == "aggregate" and override.batch_mean is not None:
            q_mean = override.batch_mean(a_vec, b_vec, run.hidden.tags[mask])
        elif method in ("aggregate", "per-trial"):
            indices = np.nonzero(mask)[0]
            total = override.per_trial(a_vec, b_vec, run.hidden.one(int(indices[0])))
            for k in indices[1:]:
                total = total + override.per_trial(a_vec, b_vec, run.hidden.one(int(k)))
            q_mean = total.scale(1.0 / cnt)
        else:
            raise ValueError(f"unknown method {method!r}")
        scalar = float(q_mean.scalar_part)
        corr[(ci, cj)] = scalar
        residual[(ci, cj)] = math.sqrt(max(0.0, float(q_mean.norm_squared()) - scalar * scalar))
    s = chsh_combination(corr[(1, 1)], corr[(1, 2)], corr[(2, 1)], corr[(2, 2)])
    return ReportedCorrelations(corr=corr, bivector_residual=residual, s=s, method=method)


@dataclass(frozen=True)
class SweepRow:
    theta_deg: float
    lhv: float
    qm: float
    reported: Optional[float] = None


def correlation_sweep(
    strategy: str,
    angles_deg: list[float],
    n_per_point: int,
    seed: int,
    params: Optional[dict] = None,
    regime: MemoryMode = MemoryMode.MEMORYLESS,
    diagnosis_mode: bool = False,
) -> list[SweepRow]:
    """Empirical correlation vs angle next to the oracle value -cos(theta).

    Each grid point is an independent two-setting experiment (station A
    fixed at 0 degrees, station B at theta) under a seed derived from the
    master seed and the point index.  In diagnosis mode the override
    channel's claimed value is a fourth column.
    """
    if not angles_deg:
        raise ValueError("angle grid is empty")
    rows = []
    for k, theta in enumerate(angles_deg):
        settings = Settings.from_degrees(0.0, 0.0, float(theta), float(theta))
        spec = ExperimentSpec(
            strategy=strategy,
            n_trials=n_per_point,
            seed=derive_seed(seed, k),
            settings=settings,
            regime=regime,
            diagnosis_mode=diagnosis_mode,
            params=dict(params or {}),
        )
        run = run_experiment(spec)
        r_lhv = float(np.mean(run.log.x * run.log.y))
        r_qm = singlet_correlation(settings.a1, settings.b1)
        reported = None
        override = run.strategy.correlation_override
        if override is not None:
            # all four cells share one setting pair here, so pool the trials
            if override.batch_mean is not None:
                q_mean = override.batch_mean(settings.a_stack()[0], settings.b_stack()[0], run.hidden.tags)
                reported = float(q_mean.scalar_part)
            else:
                reported = reported_correlations(run, method="per-trial").corr[(1, 1)]
        rows.append(SweepRow(float(theta), r_lhv, r_qm, reported))
    return rows


@dataclass(frozen=True)
class LocalityViolation:
    n: int
    station: str
    recorded: int
    replayed: int


@dataclass(frozen=True)
class LocalityAuditReport:
    n_trials: int
    violations: tuple

    @property
    def passed(self) -> bool:
        return not self.violations


def replay_locality_audit(run: ExperimentRun) -> LocalityAuditReport:
    """Replay every trial with the other station's setting flipped.

    For each trial, with station states reconstructed from the actual
    records: flip A's setting and re-ask B (same j, same lambda, same
    state); then re-ask A with B's setting flipped, which, since A
    answers first, means re-asking A identically.  Any changed outcome is
    a locality violation.  Response functions must be pure; the shipped
    negative control cheats through a side channel and gets caught here.
    """
    strategy = run.strategy
    log = run.log
    hvb = run.hidden
    a_stack = run.spec.settings.a_stack()
    b_stack = run.spec.settings.b_stack()
    memory = run.spec.regime is MemoryMode.BETWEEN_TRIAL_MEMORY
    state_a = strategy.initial_state_a()
    state_b = strategy.initial_state_b()
    violations = []
    for k in range(len(log)):
        ik = int(log.i[k])
        jk = int(log.j[k])
        hv = hvb.one(k)
        af = float(run.aux_a[k])
        bf = float(run.aux_b[k])
        flipped_i = 3 - ik
        strategy.respond_a(flipped_i, a_stack[flipped_i - 1], hv, af, state_a, k)
        y_replay = strategy.respond_b(jk, b_stack[jk - 1], hv, bf, state_b, k)
        if y_replay != int(log.y[k]):
            violations.append(LocalityViolation(k, "B", int(log.y[k]), int(y_replay)))
        x_replay = strategy.respond_a(ik, a_stack[ik - 1], hv, af, state_a, k)
        if x_replay != int(log.x[k]):
            violations.append(LocalityViolation(k, "A", int(log.x[k]), int(x_replay)))
        if memory:
            rec = log.record(k)
            if strategy.update_state_a is not None:
                state_a = strategy.update_state_a(state_a, rec)
            if strategy.update_state_b is not None:
                state_b = strategy.update_state_b(state_b, rec)
    return LocalityAuditReport(n_trials=len(log), violations=tuple(violations))


@dataclass(frozen=True)
class ShuffleAuditReport:
    n_trials: int
    mismatches: int
    first_mismatch: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.mismatches == 0


def memoryless_shuffle_audit(
    run: ExperimentRun, permutation: Optional[np.ndarray] = None
) -> ShuffleAuditReport:
    """Re-run the trials in a shuffled order; outcomes must follow their trial.

    Valid only for the memoryless regime, where outputs depend on nothing
    from other trials.  The permutation defaults to one drawn from the
    run's audit stream.
    """
    if run.spec.regime is not MemoryMode.MEMORYLESS:
        raise RegimeMismatchError("the shuffle audit applies to the memoryless regime only")
    n = len(run.log)
    if permutation is None:
        permutation = derive_rng(run.spec.seed, AUDIT_STREAM).permutation(n)
    perm = np.asarray(permutation)
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError("not a permutation of the trial indices")
    x2, y2 = _scalar_loop(
        run.strategy,
        run.log.i[perm],
        run.log.j[perm],
        run.spec.settings.a_stack(),
        run.spec.settings.b_stack(),
        run.hidden.permuted(perm),
        run.aux_a[perm],
        run.aux_b[perm],
        run.spec.regime,
    )
    bad = np.nonzero((x2 != run.log.x[perm]) | (y2 != run.log.y[perm]))[0]
    first = int(perm[bad[0]]) if bad.size else None
    return ShuffleAuditReport(n_trials=n, mismatches=int(bad.size), first_mismatch=first)
