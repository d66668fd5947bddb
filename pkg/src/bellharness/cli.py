"""Command-line interface: one binary, subcommand style.

Every data command executes in process by default; with --server URL it
posts the same request to a running service and writes the artifacts it
gets back, byte-identical to the in-process files.  Artifacts land in
BELLHARNESS_OUTPUT_DIR (or the working directory) unless --out says
otherwise.  Exit codes: 0 success, 1 failed invariant check, 2 config
or IO problem.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

import httpx
from pydantic import ValidationError

from .serialize import SCHEMA_VERSION, write_json, write_trial_log_csv, read_trial_log_csv
from .service import handlers
from .service.schemas import (
    AuditRequest,
    CertificateModel,
    CertifyRequest,
    QmCurveRequest,
    RunRequest,
    SweepRequest,
)

ENV_OUTPUT_DIR = "BELLHARNESS_OUTPUT_DIR"

HTTP_TIMEOUT_S = 600.0


class CliError(Exception):
    """Usage or input problem; exits with status 2."""


class InvariantFailure(Exception):
    """A checked scientific invariant does not hold; exits with status 1."""


def _resolve_out(args, default_name: str) -> Path:
    if args.out:
        path = Path(args.out)
    else:
        path = Path(os.environ.get(ENV_OUTPUT_DIR, ".")) / default_name
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(path_str: str) -> dict:
    path = Path(path_str)
    if not path.is_file():
        raise CliError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CliError(f"config {path} must be a JSON object")
    version = obj.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise CliError(f"config {path} has schema_version {version!r}, expected {SCHEMA_VERSION!r}")
    return obj


def _validate_request(model_cls, obj: dict, source: str):
    try:
        return model_cls.model_validate(obj)
    except ValidationError as exc:
        raise CliError(f"invalid config {source}: {exc}") from exc


def _payload(model) -> dict:
    return model.model_dump(mode="json", exclude_none=True)


def _parse_angles(text: str) -> list:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise CliError(f"cannot parse angle list {text!r}") from exc
    if not values:
        raise CliError("angle list is empty")
    return values


def _check_response(resp: httpx.Response, path: str) -> dict:
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except (json.JSONDecodeError, ValueError):
            detail = resp.text
        raise CliError(f"server rejected {path} (status {resp.status_code}): {detail}")
    return resp.json()


def _get_remote(server: str, path: str, params: Optional[dict] = None) -> dict:
    with httpx.Client(base_url=server, timeout=HTTP_TIMEOUT_S) as client:
        resp = client.get(path, params=params)
    return _check_response(resp, path)


def _post_remote(server: str, path: str, body: dict) -> dict:
    with httpx.Client(base_url=server, timeout=HTTP_TIMEOUT_S) as client:
        resp = client.post(path, json=body)
    return _check_response(resp, path)


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _fmt(value) -> str:
    return repr(float(value))


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.trials is not None:
        cfg["N"] = args.trials
    request = _validate_request(RunRequest, cfg, args.config)
    if args.server:
        if args.log_csv:
            raise CliError("--log-csv needs the in-process mode; drop --server")
        payload = _post_remote(args.server, "/run", request.model_dump(mode="json"))
    else:
        response, run = handlers.run_with_records(request)
        payload = _payload(response)
        if args.log_csv:
            log_path = Path(args.log_csv)
            if log_path.parent != Path(""):
                log_path.parent.mkdir(parents=True, exist_ok=True)
            write_trial_log_csv(log_path, run.log)
            print(f"wrote {log_path}")
    out = _resolve_out(args, "run.json")
    write_json(out, payload)
    print(
        f"strategy={payload['strategy']} N={payload['N']} seed={payload['seed']} "
        f"engine={payload['engine']} S={payload['S']:+.6f}"
    )
    print(f"epsilon={payload['epsilon']:.6f} tail_bound={payload['tail_bound']:.6g}")
    if payload.get("reported") is not None:
        print(f"reported S={payload['reported']['S']:+.6f} (override channel)")
    print(f"wrote {out}")
    return 0


def _cmd_certify(args) -> int:
    log_path = Path(args.log)
    if not log_path.is_file():
        raise CliError(f"trial log not found: {log_path}")
    log = read_trial_log_csv(log_path)
    if args.server:
        body = CertifyRequest(
            i=log.i.tolist(),
            j=log.j.tolist(),
            x=log.x.tolist(),
            y=log.y.tolist(),
            seed=args.seed,
            strategy=args.strategy,
        )
        payload = _post_remote(args.server, "/certify", body.model_dump(mode="json"))
    else:
        from .certify import make_certificate

        cert = make_certificate(log, args.seed, args.strategy)
        payload = _payload(CertificateModel(**cert.to_json_dict()))
    out = _resolve_out(args, "certificate.json")
    write_json(out, payload)
    print(
        f"N={payload['N']} S={payload['S']:+.6f} epsilon={payload['epsilon']:.6f} "
        f"tail_bound={payload['tail_bound']:.6g} (C={payload['bound_constant']:g})"
    )
    print(f"wrote {out}")
    return 0


def _cmd_enumerate(args) -> int:
    if args.server:
        payload = _get_remote(args.server, "/enumerate")
    else:
        payload = _payload(handlers.handle_enumerate())
    print(f"{'a1':>3} {'a2':>3} {'b1':>3} {'b2':>3} {'s':>3}")
    for row in payload["rows"]:
        print(f"{row['a1']:>3} {row['a2']:>3} {row['b1']:>3} {row['b2']:>3} {row['s']:>3}")
    print(f"max |s| = {payload['max_abs_s']}")
    out = _resolve_out(args, "enumerate.json")
    write_json(out, payload)
    print(f"wrote {out}")
    if payload["max_abs_s"] != 2:
        raise InvariantFailure(f"max |s| over deterministic assignments is {payload['max_abs_s']}, expected 2")
    return 0


def _cmd_algebra_check(args) -> int:
    if args.server:
        payload = _get_remote(
            args.server, "/algebra-check", params={"samples": args.samples, "seed": args.seed}
        )
    else:
        payload = _payload(handlers.handle_algebra_check(samples=args.samples, seed=args.seed))
    out = _resolve_out(args, "algebra-check.json")
    write_json(out, payload)
    sys.stdout.write(out.read_text(encoding="utf-8"))
    print(f"wrote {out}")
    if not payload["passed"]:
        raise InvariantFailure("an algebra identity check failed; see the JSON payload")
    return 0


def _cmd_qm_curve(args) -> int:
    request = QmCurveRequest() if args.angles is None else QmCurveRequest(angles_deg=_parse_angles(args.angles))
    if args.server:
        payload = _post_remote(args.server, "/qm-curve", request.model_dump(mode="json"))
    else:
        payload = _payload(handlers.handle_qm_curve(request))
    rows = [[_fmt(r["angle_degrees"]), _fmt(r["qm_correlation"])] for r in payload["rows"]]
    out = _resolve_out(args, "qm-curve.csv")
    _write_csv(out, ["angle_degrees", "qm_correlation"], rows)
    print(f"{len(rows)} grid points, correlation -cos(theta)")
    print(f"wrote {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    if args.strategy is not None:
        cfg["strategy"] = args.strategy
    if args.angles is not None:
        cfg["angles_deg"] = _parse_angles(args.angles)
    if args.trials is not None:
        cfg["n_per_point"] = args.trials
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.diagnosis:
        cfg["diagnosis_mode"] = True
    request = _validate_request(SweepRequest, cfg, args.config or "<flags>")
    if args.server:
        payload = _post_remote(args.server, "/sweep", request.model_dump(mode="json"))
    else:
        payload = _payload(handlers.handle_sweep(request))
    with_reported = any("reported_correlation" in r for r in payload["rows"])
    header = ["angle_degrees", "lhv_correlation", "qm_correlation"]
    if with_reported:
        header.append("reported_correlation")
    rows = []
    for r in payload["rows"]:
        row = [_fmt(r["angle_degrees"]), _fmt(r["lhv_correlation"]), _fmt(r["qm_correlation"])]
        if with_reported:
            row.append(_fmt(r["reported_correlation"]) if "reported_correlation" in r else "")
        rows.append(row)
    out = _resolve_out(args, "sweep.csv")
    _write_csv(out, header, rows)
    print(
        f"strategy={payload['strategy']} points={len(rows)} n_per_point={payload['n_per_point']} "
        f"seed={payload['seed']}"
    )
    print(f"wrote {out}")
    return 0


def _cmd_audit(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.trials is not None:
        cfg["N"] = args.trials
    request = _validate_request(AuditRequest, cfg, args.config)
    if args.server:
        payload = _post_remote(args.server, "/audit", request.model_dump(mode="json"))
    else:
        payload = _payload(handlers.handle_audit(request))
    out = _resolve_out(args, "audit.json")
    write_json(out, payload)
    loc = payload["locality"]
    print(f"strategy={payload['strategy']} N={payload['N']} seed={payload['seed']}")
    print(f"locality: {loc['violation_count']} violation(s) in {loc['n_trials']} trials")
    if payload.get("shuffle") is not None:
        shuffle = payload["shuffle"]
        print(f"shuffle: {shuffle['mismatches']} mismatch(es) in {shuffle['n_trials']} trials")
    print(f"wrote {out}")
    if not payload["passed"]:
        lines = []
        if loc["violation_count"]:
            noted = "" if not loc["truncated"] else f" (first {len(loc['violations'])} listed)"
            lines.append(f"locality audit found {loc['violation_count']} violation(s){noted}:")
            for v in loc["violations"][:10]:
                lines.append(
                    f"  trial {v['n']} station {v['station']}: recorded {v['recorded']}, replayed {v['replayed']}"
                )
        shuffle = payload.get("shuffle")
        if shuffle is not None and not shuffle["passed"]:
            lines.append(f"shuffle audit found {shuffle['mismatches']} mismatch(es)")
        raise InvariantFailure("\n".join(lines) or "audit failed")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _add_common(sub: argparse.ArgumentParser, default_name: str) -> None:
    sub.add_argument("--out", default=None, help=f"artifact path (default: {default_name} in the output directory)")
    sub.add_argument("--server", default=None, metavar="URL", help="post the request to a running service instead")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellharness",
        description=(
            "CHSH experiment harness: exact algebra checks, finitary enumeration, "
            "LHV strategy runs against a quantum singlet oracle, locality audits, "
            "and martingale tail-bound certificates."
        ),
        epilog=f"Artifacts default into ${ENV_OUTPUT_DIR} (or the working directory).",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    p = sub.add_parser("run", help="execute an experiment config; writes run.json")
    p.add_argument("config", help="experiment config JSON path")
    _add_common(p, "run.json")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--trials", type=int, default=None, help="override the config trial count N")
    p.add_argument("--log-csv", default=None, help="also write the trial log CSV (in-process mode only)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("certify", help="read a trial-log CSV; writes certificate.json")
    p.add_argument("--log", required=True, help="trial-log CSV path (header n,i,j,x,y)")
    p.add_argument("--seed", type=int, default=0, help="seed recorded in the certificate (provenance)")
    p.add_argument("--strategy", default="unspecified", help="strategy name recorded in the certificate")
    _add_common(p, "certificate.json")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("enumerate", help="print all 16 deterministic assignments; writes enumerate.json")
    _add_common(p, "enumerate.json")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("algebra-check", help="verify the exact algebra identities; writes algebra-check.json")
    p.add_argument("--samples", type=int, default=200, help="random triples for the associativity check")
    p.add_argument("--seed", type=int, default=20240901, help="seed for the random associativity triples")
    _add_common(p, "algebra-check.json")
    p.set_defaults(func=_cmd_algebra_check)

    p = sub.add_parser("qm-curve", help="singlet correlation -cos(theta) over a grid; writes qm-curve.csv")
    p.add_argument("--angles", default=None, help="comma-separated degrees (default 0..180 step 15)")
    _add_common(p, "qm-curve.csv")
    p.set_defaults(func=_cmd_qm_curve)

    p = sub.add_parser("sweep", help="empirical correlation vs angle for a strategy; writes sweep.csv")
    p.add_argument("config", nargs="?", default=None, help="sweep config JSON path (optional)")
    p.add_argument("--strategy", default=None, help="strategy name (default sign)")
    p.add_argument("--angles", default=None, help="comma-separated degrees (default 0..180 step 15)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--trials", type=int, default=None, help="override trials per grid point")
    p.add_argument("--diagnosis", action="store_true", help="enable diagnosis mode (permits the override channel)")
    _add_common(p, "sweep.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("audit", help="replay locality and shuffle audits for a config; writes audit.json")
    p.add_argument("config", help="experiment config JSON path")
    _add_common(p, "audit.json")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--trials", type=int, default=None, help="override the config trial count N")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8715)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"server error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
