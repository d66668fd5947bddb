"""Local hidden-variable strategies and the station response contract.

A strategy supplies everything a pair of measurement stations needs: how
the source draws the shared variable lambda, how each station maps its
own (setting, lambda, local state) to a +-1 outcome, and, for memory
models, how station state advances between trials.  The referee engine
(protocol module) owns sequencing and information flow; a response
function never sees the other station's setting or outcome inside a
trial.  One deliberately broken negative control, "nonlocal-probe",
smuggles the remote setting through a shared cell so the locality audit
has something to catch.

Shipped strategies:

    sign               x = sgn(a.e), y = -sgn(b.e), e uniform on the sphere;
                       correlation -1 + 2*theta/pi, linear in the angle
    override           sign-type outcomes x = t*sgn(a.e), y = -t*sgn(b.e)
                       with a fair-coin tag t, plus an illegal reporting
                       channel whose per-trial algebraic payload has scalar
                       part exactly -a.b
    override-faithful  the same outcome functions with the channel removed
    parity-memory      sign-type outcomes flipped by the other station's
                       previous setting; between-trial-memory regime
    nonlocal-probe     negative control violating the locality contract

sgn(0) maps to +1 everywhere: a measure-zero tie in exact arithmetic, a
possible event in floats, and a reproducibility requirement either way.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Mapping, Optional

import numpy as np

from .clifford import Multivector


class MemoryMode(Enum):
    MEMORYLESS = "memoryless"
    BETWEEN_TRIAL_MEMORY = "memory"


class UnknownStrategyError(ValueError):
    """Raised when a strategy name is not in the registry."""


def sgn(value: float) -> int:
    # tie at exactly 0 goes to +1
    return 1 if value >= 0.0 else -1


def sgn_vec(values: np.ndarray) -> np.ndarray:
    return np.where(values >= 0.0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class HiddenVariable:
    """One trial's shared source draw: a sphere direction, a uniform aux, a coin tag."""

    direction: np.ndarray
    aux: float
    tag: int


@dataclass(frozen=True)
class HiddenVariableBatch:
    """Columnar hidden-variable stream for a whole run.

    directions: (n, 3) unit rows; aux: (n,) uniform on [0, 1); tags: (n,)
    values in {-1, +1}.  Arrays are frozen after validation.
    """

    directions: np.ndarray
    aux: np.ndarray
    tags: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.directions, dtype=float)
        a = np.asarray(self.aux, dtype=float)
        t = np.asarray(self.tags, dtype=np.int8)
        if d.ndim != 2 or d.shape[1] != 3:
            raise ValueError(f"directions must be (n, 3), got {d.shape}")
        n = d.shape[0]
        if a.shape != (n,) or t.shape != (n,):
            raise ValueError("aux and tags must match the direction count")
        if n and np.max(np.abs(np.einsum("ij,ij->i", d, d) - 1.0)) > 1e-9:
            raise ValueError("directions must be unit vectors")
        if not np.all((t == 1) | (t == -1)):
            raise ValueError("tags must be +-1")
        for arr, name in ((d, "directions"), (a, "aux"), (t, "tags")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.directions.shape[0]

    def one(self, k: int) -> HiddenVariable:
        return HiddenVariable(self.directions[k], float(self.aux[k]), int(self.tags[k]))

    def permuted(self, perm: np.ndarray) -> "HiddenVariableBatch":
        return HiddenVariableBatch(self.directions[perm], self.aux[perm], self.tags[perm])


def default_sample_batch(rng: np.random.Generator, n: int) -> HiddenVariableBatch:
    """Source draw order is fixed: directions, then aux, then tags.

    The order is part of the reproducibility contract; both engine paths
    consume this same batch.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    raw = rng.standard_normal((n, 3))
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms == 0.0):
        raise RuntimeError("degenerate zero draw from the sphere sampler")
    directions = raw / norms[:, None]
    aux = rng.random(n)
    tags = (rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1).astype(np.int8)
    return HiddenVariableBatch(directions, aux, tags)


# (setting_index, setting_vector, hv, aux, station_state, trial_index) -> +-1
ResponseFn = Callable[[int, np.ndarray, HiddenVariable, float, Any, int], int]
# (i, j, a_stack, b_stack, hvb, aux_a, aux_b) -> (x, y) arrays
BatchFn = Callable[..., tuple[np.ndarray, np.ndarray]]
UpdateFn = Callable[[Any, Any], Any]
SampleFn = Callable[[np.random.Generator, int], HiddenVariableBatch]


@dataclass(frozen=True)
class CorrelationOverride:
    """Reporting channel that bypasses the +-1 outcomes; illegal by contract.

    The referee accepts it only in diagnosis mode.  per_trial returns the
    algebraic payload q for one trial; batch_mean, when present, returns
    the exact mean payload over a run of trials sharing one setting pair,
    given that cell's tag array.
    """

    label: str
    per_trial: Callable[[np.ndarray, np.ndarray, HiddenVariable], Multivector]
    batch_mean: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], Multivector]] = None


@dataclass(frozen=True)
class Strategy:
    """Station behavior bundle; the locality contract lives in the signatures.

    respond_a and respond_b must be pure functions of their arguments.
    update hooks are permitted only in the between-trial-memory mode and
    receive the full completed trial record.  batch_respond, when present,
    must reproduce the scalar path bit for bit on the same streams.
    """

    name: str
    memory_mode: MemoryMode
    respond_a: ResponseFn
    respond_b: ResponseFn
    sample_batch: SampleFn = default_sample_batch
    initial_state_a: Callable[[], Any] = lambda: None
    initial_state_b: Callable[[], Any] = lambda: None
    update_state_a: Optional[UpdateFn] = None
    update_state_b: Optional[UpdateFn] = None
    batch_respond: Optional[BatchFn] = None
    correlation_override: Optional[CorrelationOverride] = None

    def __post_init__(self) -> None:
        if self.memory_mode is MemoryMode.MEMORYLESS and (
            self.update_state_a is not None or self.update_state_b is not None
        ):
            raise ValueError("memoryless strategy cannot carry state-update hooks")

    def sample_lambda(self, rng: np.random.Generator) -> HiddenVariable:
        """Single-trial draw; same distribution as one row of sample_batch."""
        return self.sample_batch(rng, 1).one(0)


def _no_params(name: str, params: Optional[Mapping[str, Any]]) -> None:
    if params:
        raise ValueError(f"strategy {name!r} takes no parameters, got {sorted(params)}")


def sign_model_correlation(theta_rad: float) -> float:
    """Closed-form sign-model correlation for settings an angle theta apart.

    E(theta) = -1 + 2*theta/pi on [0, pi]: perfect anticorrelation at 0,
    linear to +1 at pi.  Derivation: sgn(a.e) and sgn(b.e) disagree iff e
    falls in the lune of dihedral angle theta, which has probability
    theta/pi under the uniform sphere measure.
    """
    if not 0.0 <= theta_rad <= math.pi + 1e-12:
        theta_rad = math.acos(math.cos(theta_rad))
    return -1.0 + 2.0 * theta_rad / math.pi


def _sign_a(idx: int, vec: np.ndarray, hv: HiddenVariable, aux: float, state: Any, trial: int) -> int:
    return sgn(float(np.dot(vec, hv.direction)))


def _sign_b(idx: int, vec: np.ndarray, hv: HiddenVariable, aux: float, state: Any, trial: int) -> int:
    return -sgn(float(np.dot(vec, hv.direction)))


def _station_dots(i, j, a_stack, b_stack, hvb):
    da = np.einsum("ij,ij->i", a_stack[i - 1], hvb.directions)
    db = np.einsum("ij,ij->i", b_stack[j - 1], hvb.directions)
    return da, db


def _sign_batch(i, j, a_stack, b_stack, hvb, aux_a, aux_b):
    da, db = _station_dots(i, j, a_stack, b_stack, hvb)
    return sgn_vec(da), (-sgn_vec(db)).astype(np.int8)


def strategy_sign_model(params: Optional[Mapping[str, Any]] = None) -> Strategy:
    """Classic sphere-sign model; the canonical contract-respecting baseline."""
    _no_params("sign", params)
    return Strategy(
        name="sign",
        memory_mode=MemoryMode.MEMORYLESS,
        respond_a=_sign_a,
        respond_b=_sign_b,
        batch_respond=_sign_batch,
    )


def _flawed_a(idx, vec, hv, aux, state, trial):
    return hv.tag * sgn(float(np.dot(vec, hv.direction)))


def _flawed_b(idx, vec, hv, aux, state, trial):
    return -hv.tag * sgn(float(np.dot(vec, hv.direction)))


def _flawed_batch(i, j, a_stack, b_stack, hvb, aux_a, aux_b):
    da, db = _station_dots(i, j, a_stack, b_stack, hvb)
    x = (hvb.tags * sgn_vec(da)).astype(np.int8)
    y = (-hvb.tags * sgn_vec(db)).astype(np.int8)
    return x, y


def _override_per_trial(a_vec: np.ndarray, b_vec: np.ndarray, hv: HiddenVariable) -> Multivector:
    """Per-trial payload: the ordered product of the embedded setting vectors.

    The tag picks the order, A*B or B*A.  Either order has scalar part
    exactly -a.b; the orders differ only in the bivector part, which the
    fair tag averages away at the 1/sqrt(N) rate.  Accumulating these
    payloads therefore reports -a.b regardless of the +-1 outcomes: the
    reported "correlation" is an algebraic identity, not a statistic.
    """
    va = Multivector.from_vector(tuple(float(c) for c in a_vec))
    vb = Multivector.from_vector(tuple(float(c) for c in b_vec))
    return va * vb if hv.tag == 1 else vb * va


def _override_batch_mean(a_vec: np.ndarray, b_vec: np.ndarray, tags: np.ndarray) -> Multivector:
    if len(tags) == 0:
        raise ValueError("batch mean needs at least one trial")
    va = Multivector.from_vector(tuple(float(c) for c in a_vec))
    vb = Multivector.from_vector(tuple(float(c) for c in b_vec))
    m = float(np.mean(tags))
    return (va * vb).scale(0.5 * (1.0 + m)) + (vb * va).scale(0.5 * (1.0 - m))


def strategy_flawed_model(params: Optional[Mapping[str, Any]] = None) -> Strategy:
    """Sign-type outcomes plus the illegal -a.b reporting channel.

    The outcome functions are the sign functions appearing in the model's
    own definitions, dressed with the fair-coin tag that also selects the
    payload order; the channel is what makes the model "work", and the
    referee refuses it outside diagnosis mode.
    """
    _no_params("override", params)
    return Strategy(
        name="override",
        memory_mode=MemoryMode.MEMORYLESS,
        respond_a=_flawed_a,
        respond_b=_flawed_b,
        batch_respond=_flawed_batch,
        correlation_override=CorrelationOverride(
            label="ordered-product payload; scalar part is -a.b identically",
            per_trial=_override_per_trial,
            batch_mean=_override_batch_mean,
        ),
    )


def strategy_faithful_outcomes(base: Optional[Strategy] = None) -> Strategy:
    """The flawed model scored honestly: same outcomes, no override channel."""
    if base is None:
        base = strategy_flawed_model()
    return dataclasses.replace(base, name="override-faithful", correlation_override=None)


def _parity_a(idx, vec, hv, aux, state, trial):
    s = sgn(float(np.dot(vec, hv.direction)))
    return -s if state == 2 else s


def _parity_b(idx, vec, hv, aux, state, trial):
    s = -sgn(float(np.dot(vec, hv.direction)))
    return -s if state == 2 else s


def _parity_batch(i, j, a_stack, b_stack, hvb, aux_a, aux_b):
    da, db = _station_dots(i, j, a_stack, b_stack, hvb)
    prev_j = np.concatenate(([1], j[:-1]))
    prev_i = np.concatenate(([1], i[:-1]))
    flip_a = np.where(prev_j == 2, -1, 1).astype(np.int8)
    flip_b = np.where(prev_i == 2, -1, 1).astype(np.int8)
    x = (flip_a * sgn_vec(da)).astype(np.int8)
    y = (flip_b * -sgn_vec(db)).astype(np.int8)
    return x, y


def strategy_parity_memory(params: Optional[Mapping[str, Any]] = None) -> Strategy:
    """Memory double: each station flips on the other station's previous setting.

    Legal in the between-trial-memory regime, where the referee hands both
    stations the full previous record between trials.  Within a trial it
    is still local.  The flip parity is independent of the current trial,
    so its correlations collapse toward zero and the martingale bound
    holds with room to spare; what the double exercises is the machinery,
    not the bound's edge.
    """
    _no_params("parity-memory", params)
    return Strategy(
        name="parity-memory",
        memory_mode=MemoryMode.BETWEEN_TRIAL_MEMORY,
        respond_a=_parity_a,
        respond_b=_parity_b,
        initial_state_a=lambda: 1,
        initial_state_b=lambda: 1,
        update_state_a=lambda state, record: record.j,
        update_state_b=lambda state, record: record.i,
        batch_respond=_parity_batch,
    )


def strategy_nonlocal_probe(params: Optional[Mapping[str, Any]] = None) -> Strategy:
    """Negative control: station B reads station A's current setting.

    The two response closures share a mutable cell, exactly the
    cross-station channel the contract forbids.  Station A writes its
    setting index on every call (the engine calls A before B within a
    trial); B's outcome flips with it, so the replay audit must flag
    every trial.  Never use outside audit tests.
    """
    _no_params("nonlocal-probe", params)
    cell = {"i": 1}

    def respond_a(idx, vec, hv, aux, state, trial):
        cell["i"] = idx
        return sgn(float(np.dot(vec, hv.direction)))

    def respond_b(idx, vec, hv, aux, state, trial):
        base = -sgn(float(np.dot(vec, hv.direction)))
        return base if cell["i"] == 1 else -base

    def batch(i, j, a_stack, b_stack, hvb, aux_a, aux_b):
        da, db = _station_dots(i, j, a_stack, b_stack, hvb)
        x = sgn_vec(da)
        y0 = -sgn_vec(db)
        y = np.where(i == 1, y0, -y0).astype(np.int8)
        return x, y

    return Strategy(
        name="nonlocal-probe",
        memory_mode=MemoryMode.MEMORYLESS,
        respond_a=respond_a,
        respond_b=respond_b,
        batch_respond=batch,
    )


STRATEGY_FACTORIES: dict[str, Callable[[Optional[Mapping[str, Any]]], Strategy]] = {
    "sign": strategy_sign_model,
    "override": strategy_flawed_model,
    "override-faithful": lambda params=None: (
        _no_params("override-faithful", params),
        strategy_faithful_outcomes(),
    )[1],
    "parity-memory": strategy_parity_memory,
    "nonlocal-probe": strategy_nonlocal_probe,
}


def available_strategies() -> tuple[str, ...]:
    return tuple(sorted(STRATEGY_FACTORIES))


def make_strategy(name: str, params: Optional[Mapping[str, Any]] = None) -> Strategy:
    """Build a fresh strategy instance from its registry name."""
    try:
        factory = STRATEGY_FACTORIES[name]
    except KeyError:
        known = ", ".join(available_strategies())
        raise UnknownStrategyError(f"unknown strategy {name!r}; known: {known}") from None
    return factory(params)
