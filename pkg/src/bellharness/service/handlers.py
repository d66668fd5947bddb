"""In-process handlers shared by the HTTP routes and the CLI.

Each handler maps a request model to its response model.  The CLI's
default mode calls these directly and its --server mode posts the same
request over HTTP, so both paths produce identical payloads.
"""

from __future__ import annotations

import math

import numpy as np

from .. import clifford
from ..certify import enumeration_report, make_certificate
from ..lhv import MemoryMode
from ..protocol import (
    TrialLog,
    bell_three_correlation,
    chsh_statistic,
    correlation_sweep,
    memoryless_shuffle_audit,
    replay_locality_audit,
    reported_correlations,
    run_experiment,
)
from ..qmoracle import correlation_curve
from ..serialize import SCHEMA_VERSION, cells_to_json
from .schemas import (
    AlgebraCheckResponse,
    AssignmentRow,
    AssociativityBlock,
    AuditRequest,
    AuditResponse,
    BellReport,
    CertificateModel,
    CertifyRequest,
    EnumerateResponse,
    LocalityBlock,
    QmCurveRequest,
    QmCurveResponse,
    QmCurveRow,
    ReportedBlock,
    RunRequest,
    RunResponse,
    ShuffleBlock,
    SweepRequest,
    SweepResponse,
    SweepRowModel,
    ViolationModel,
    WitnessBlock,
)

# keep audit payloads bounded; the count field stays exact
MAX_LISTED_VIOLATIONS = 20

ALGEBRA_RANDOM_TOLERANCE = 1e-9


def run_with_records(request: RunRequest):
    """Execute a run request; returns (response, run) so callers can dump the log."""
    run = run_experiment(request.to_spec())
    est = chsh_statistic(run.log)
    cert = make_certificate(run.log, run.spec.seed, run.spec.strategy)
    bell = bell_three_correlation(est, run.spec.settings)
    reported = None
    if run.strategy.correlation_override is not None:
        rep = reported_correlations(run)
        reported = ReportedBlock(
            r_ij=cells_to_json(rep.corr),
            bivector_residual=cells_to_json(rep.bivector_residual),
            S=rep.s,
            method=rep.method,
        )
    response = RunResponse(
        schema_version=SCHEMA_VERSION,
        strategy=run.spec.strategy,
        seed=run.spec.seed,
        N=len(run.log),
        engine=run.engine,
        n_ij=cells_to_json(cert.counts),
        r_ij=cells_to_json(cert.corr),
        S=cert.s_observed,
        epsilon=cert.epsilon,
        bound_constant=cert.bound_constant,
        tail_bound=cert.tail_bound,
        bell_1964=BellReport(
            applicable=bell.applicable,
            lhs=bell.lhs,
            rhs=bell.rhs,
            satisfied=bell.satisfied,
        ),
        reported=reported,
    )
    return response, run


def handle_run(request: RunRequest) -> RunResponse:
    return run_with_records(request)[0]


def handle_certify(request: CertifyRequest) -> CertificateModel:
    n = len(request.i)
    if not (len(request.j) == n and len(request.x) == n and len(request.y) == n):
        raise ValueError("columns i, j, x, y must have equal length")
    if n == 0:
        raise ValueError("a trial log needs at least one trial")
    columns = {}
    for name, values, allowed in (
        ("i", request.i, (1, 2)),
        ("j", request.j, (1, 2)),
        ("x", request.x, (-1, 1)),
        ("y", request.y, (-1, 1)),
    ):
        col = np.asarray(values, dtype=np.int64)
        # validate before the int8 cast so out-of-range ints cannot wrap
        if not np.isin(col, allowed).all():
            raise ValueError(f"column {name} has entries outside {allowed}")
        columns[name] = col.astype(np.int8)
    log = TrialLog(columns["i"], columns["j"], columns["x"], columns["y"])
    cert = make_certificate(log, request.seed, request.strategy)
    return CertificateModel(**cert.to_json_dict())


def handle_enumerate() -> EnumerateResponse:
    report = enumeration_report()
    rows = [
        AssignmentRow(a1=a1, a2=a2, b1=b1, b2=b2, s=s)
        for (a1, a2, b1, b2), s in report.rows
    ]
    return EnumerateResponse(
        schema_version=SCHEMA_VERSION,
        rows=rows,
        max_abs_s=report.max_abs_s,
        s_values=list(report.s_values),
    )


def handle_algebra_check(samples: int = 200, seed: int = 20240901) -> AlgebraCheckResponse:
    """Every exact identity the algebra is responsible for, in one payload."""
    m = clifford.pseudoscalar()
    m_squared = m * m
    m_squared_is_one = m_squared == clifford.Multivector.scalar(1)
    lo, hi = clifford.zero_divisor_witness()
    product = lo * hi
    witness = WitnessBlock(
        m_minus_one=[int(c) for c in lo.coeffs],
        m_plus_one=[int(c) for c in hi.coeffs],
        product=[int(c) for c in product.coeffs],
        product_is_zero=product.is_zero(),
        norm_m_minus_one=lo.norm(),
        norm_m_plus_one=hi.norm(),
    )
    residual = clifford.norm_multiplicativity_residual(lo, hi)
    assoc = clifford.associativity_check(samples=samples, seed=seed)
    root_two = math.sqrt(2.0)
    passed = (
        m_squared_is_one
        and witness.product_is_zero
        and witness.norm_m_minus_one == root_two
        and witness.norm_m_plus_one == root_two
        and residual == -2.0
        and assoc.basis_max_residual == 0.0
        and assoc.random_max_relative_residual <= ALGEBRA_RANDOM_TOLERANCE
    )
    return AlgebraCheckResponse(
        schema_version=SCHEMA_VERSION,
        basis_names=list(clifford.BASIS_NAMES),
        table=clifford.TABLE.as_rows(),
        m_squared=[int(c) for c in m_squared.coeffs],
        m_squared_is_one=m_squared_is_one,
        witness=witness,
        norm_multiplicativity_residual=residual,
        associativity=AssociativityBlock(
            basis_max_residual=assoc.basis_max_residual,
            random_max_relative_residual=assoc.random_max_relative_residual,
            samples=assoc.samples,
            seed=assoc.seed,
        ),
        passed=passed,
    )


def handle_qm_curve(request: QmCurveRequest) -> QmCurveResponse:
    if not request.angles_deg:
        raise ValueError("angle grid is empty")
    rows = [
        QmCurveRow(angle_degrees=theta, qm_correlation=value)
        for theta, value in correlation_curve(list(request.angles_deg))
    ]
    return QmCurveResponse(schema_version=SCHEMA_VERSION, rows=rows)


def handle_sweep(request: SweepRequest) -> SweepResponse:
    rows = correlation_sweep(
        strategy=request.strategy,
        angles_deg=list(request.angles_deg),
        n_per_point=request.n_per_point,
        seed=request.seed,
        params=dict(request.params),
        regime=MemoryMode(request.regime),
        diagnosis_mode=request.diagnosis_mode,
    )
    return SweepResponse(
        schema_version=SCHEMA_VERSION,
        strategy=request.strategy,
        seed=request.seed,
        n_per_point=request.n_per_point,
        rows=[
            SweepRowModel(
                angle_degrees=row.theta_deg,
                lhv_correlation=row.lhv,
                qm_correlation=row.qm,
                reported_correlation=row.reported,
            )
            for row in rows
        ],
    )


def handle_audit(request: AuditRequest) -> AuditResponse:
    run = run_experiment(request.to_spec())
    locality = replay_locality_audit(run)
    listed = [
        ViolationModel(n=v.n, station=v.station, recorded=v.recorded, replayed=v.replayed)
        for v in locality.violations[:MAX_LISTED_VIOLATIONS]
    ]
    locality_block = LocalityBlock(
        n_trials=locality.n_trials,
        violation_count=len(locality.violations),
        violations=listed,
        truncated=len(locality.violations) > MAX_LISTED_VIOLATIONS,
        passed=locality.passed,
    )
    shuffle_block = None
    passed = locality.passed
    if run.spec.regime is MemoryMode.MEMORYLESS:
        shuffle = memoryless_shuffle_audit(run)
        shuffle_block = ShuffleBlock(
            n_trials=shuffle.n_trials,
            mismatches=shuffle.mismatches,
            passed=shuffle.passed,
        )
        passed = passed and shuffle.passed
    return AuditResponse(
        schema_version=SCHEMA_VERSION,
        strategy=run.spec.strategy,
        seed=run.spec.seed,
        N=len(run.log),
        locality=locality_block,
        shuffle=shuffle_block,
        passed=passed,
    )
