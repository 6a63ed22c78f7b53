"""Command-line surface.

Exit codes: 0 analysis completed (race or not), 2 input or usage error,
3 search budget exhausted, 4 certificate or witness rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

from . import hb, lockcover, lockset
from .gadgets import (
    HsInstance,
    OvInstance,
    gen_hs_to_lockset,
    gen_ov3_to_syncp,
    gen_ov_to_hb,
    gen_ov_to_lockcover,
    gen_random_hs_instance,
    gen_random_ov_instance,
    gen_random_trace,
    parse_instance,
    write_instance,
)
from .syncp import BudgetExceeded, Reordering, detect_syncp_race_oracle, verify_witness
from .trace import Trace, parse_trace, write_trace

ALGOS = (
    "hb-lockstamp",
    "hb-djit",
    "hb-graph",
    "hb-auto",
    "lockset",
    "lockcover",
    "syncp-oracle",
)

GEN_KINDS = ("ov-hb", "ov3-syncp", "ov-lockcover", "hs-lockset", "random")


def _read_trace(path: str) -> Trace:
    with open(path, "rb") as fh:
        return parse_trace(fh.read())


def _run_detector(trace: Trace, algo: str, budget: int):
    if algo == "hb-lockstamp":
        return hb.detect_hb_race_lockstamp(trace)
    if algo == "hb-djit":
        return hb.detect_hb_race_djit(trace)
    if algo == "hb-graph":
        return hb.detect_hb_race_graph(trace)
    if algo == "hb-auto":
        return hb.detect_hb_race_auto(trace)
    if algo == "lockset":
        return lockset.detect_lockset_race(trace)
    if algo == "lockcover":
        return lockcover.detect_lockcover_race(trace)
    return detect_syncp_race_oracle(trace, budget=budget)


def cmd_validate(args) -> int:
    _read_trace(args.file)
    print("ok")
    return 0


def cmd_detect(args) -> int:
    trace = _read_trace(args.file)
    if args.report_all and args.algo != "hb-djit":
        print("error: --report-all needs --algo hb-djit", file=sys.stderr)
        return 2
    racy_events = None
    start = time.perf_counter()
    if args.report_all:
        racy_events = hb.detect_hb_race_djit(trace, report_all=True)
        millis = (time.perf_counter() - start) * 1000.0
        rep = hb.detect_hb_race_djit(trace)
    else:
        rep = _run_detector(trace, args.algo, args.budget)
        millis = (time.perf_counter() - start) * 1000.0
    out: dict = {"race": rep is not None}
    if rep is not None:
        out["kind"] = rep.kind
        out["e1"] = rep.e1
        out["e2"] = rep.e2
        out["var"] = rep.var
        if rep.witness is not None:
            out["witness"] = list(rep.witness)
    if racy_events is not None:
        out["racy_events"] = racy_events
    out["algo"] = args.algo
    out["millis"] = millis
    n, t, l, v = trace.stats()
    out.update(N=n, T=t, L=l, V=v)
    print(json.dumps(out))
    return 0


def _instance_for(kind: str, args) -> OvInstance | HsInstance:
    if args.instance is not None and args.n is not None:
        raise ValueError("--instance and --n are mutually exclusive")
    if args.instance is not None:
        with open(args.instance, "rb") as fh:
            return parse_instance(fh.read())
    if args.n is None:
        raise ValueError(f"gen {kind} needs --instance or --n")
    if kind == "hs-lockset":
        return gen_random_hs_instance(args.n, args.d, seed=args.seed)
    ov_kind = "ov3" if kind == "ov3-syncp" else "ov2"
    return gen_random_ov_instance(ov_kind, args.n, args.d, seed=args.seed)


def cmd_gen(args) -> int:
    if args.kind == "random":
        if args.events is None:
            raise ValueError("gen random needs --events")
        trace = gen_random_trace(
            args.events, args.threads, args.locks, args.vars, seed=args.seed
        )
    else:
        inst = _instance_for(args.kind, args)
        if args.kind == "hs-lockset":
            if not isinstance(inst, HsInstance):
                raise ValueError(f"gen {args.kind} needs an hs instance")
            trace = gen_hs_to_lockset(inst)
        else:
            want = "ov3" if args.kind == "ov3-syncp" else "ov2"
            if not isinstance(inst, OvInstance) or inst.kind != want:
                raise ValueError(f"gen {args.kind} needs an {want} instance")
            if args.kind == "ov-hb":
                trace = gen_ov_to_hb(inst)
            elif args.kind == "ov-lockcover":
                trace = gen_ov_to_lockcover(inst)
            else:
                trace = gen_ov3_to_syncp(inst)
    with open(args.out, "wb") as fh:
        fh.write(write_trace(trace))
    return 0


def cmd_export_ov(args) -> int:
    trace = _read_trace(args.file)
    inst = lockcover.export_singlevar_to_ov(trace)
    with open(args.out, "wb") as fh:
        fh.write(write_instance(inst))
    return 0


def cmd_certify(args) -> int:
    trace = _read_trace(args.trace)
    if args.mode == "emit":
        cert = lockset.emit_certificate(trace)
        print(json.dumps(cert.to_json_obj()))
        return 0
    if args.cert is None:
        raise ValueError("certify check needs a certificate file")
    with open(args.cert, "rb") as fh:
        try:
            obj = json.loads(fh.read().decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad certificate JSON: {exc}") from None
    cert = lockset.Certificate.from_json_obj(obj)
    res = lockset.verify_certificate(trace, cert)
    if res.ok:
        print("ok")
        return 0
    detail = [res.reason]
    if res.var is not None:
        detail.append(f"var={res.var}")
    if res.event is not None:
        detail.append(f"event={res.event}")
    if res.pair is not None:
        detail.append(f"pair={res.pair[0]},{res.pair[1]}")
    print(" ".join(detail), file=sys.stderr)
    return 4


def cmd_verify_witness(args) -> int:
    trace = _read_trace(args.trace)
    with open(args.witness, "rb") as fh:
        try:
            obj = json.loads(fh.read().decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad witness JSON: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("events"), list):
        raise ValueError("witness must be a JSON object with an events list")
    witness = Reordering(
        events=tuple(obj["events"]), e1=obj.get("e1"), e2=obj.get("e2")
    )
    verdict = verify_witness(trace, witness)
    if verdict is not None:
        print(verdict, file=sys.stderr)
        return 4
    print("ok")
    return 0


def _parse_gen_spec(spec: str) -> tuple[str, dict[str, int]]:
    kind, _, rest = spec.partition(":")
    if kind not in GEN_KINDS:
        raise ValueError(f"unknown generator kind {kind!r}")
    params: dict[str, int] = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if key not in ("threads", "locks", "vars", "d", "budget"):
                raise ValueError(f"unknown generator parameter {key!r}")
            params[key] = int(val)
    return kind, params


def _bench_trace(kind: str, params: dict[str, int], size: int, seed: int) -> Trace:
    if kind == "random":
        return gen_random_trace(
            size,
            params.get("threads", 8),
            params.get("locks", 8),
            params.get("vars", 8),
            seed=seed,
        )
    d = params.get("d", 8)
    if kind == "hs-lockset":
        return gen_hs_to_lockset(gen_random_hs_instance(size, d, seed=seed))
    if kind == "ov3-syncp":
        return gen_ov3_to_syncp(gen_random_ov_instance("ov3", size, d, seed=seed))
    inst = gen_random_ov_instance("ov2", size, d, seed=seed)
    if kind == "ov-hb":
        return gen_ov_to_hb(inst)
    return gen_ov_to_lockcover(inst)


def cmd_bench(args) -> int:
    algos = [a for a in args.algos.split(",") if a]
    for a in algos:
        if a not in ALGOS:
            raise ValueError(f"unknown algorithm {a!r}")
    if not algos:
        raise ValueError("--algos must name at least one algorithm")
    kind, params = _parse_gen_spec(args.gen)
    sweep = [int(x) for x in args.sweep.split(",") if x]
    budget = params.get("budget", 10_000_000)
    rows: list[dict] = []
    for size in sweep:
        for rep in range(args.reps):
            trace = _bench_trace(kind, params, size, seed=rep)
            n, t, l, v = trace.stats()
            for algo in algos:
                start = time.perf_counter()
                try:
                    found = _run_detector(trace, algo, budget) is not None
                    race = "1" if found else "0"
                except BudgetExceeded:
                    race = "NA"
                millis = (time.perf_counter() - start) * 1000.0
                rows.append(
                    {
                        "algo": algo,
                        "N": n,
                        "T": t,
                        "L": l,
                        "V": v,
                        "rep": rep,
                        "millis": f"{millis:.3f}",
                        "race": race,
                    }
                )
    fields = ["algo", "N", "T", "L", "V", "rep", "millis", "race"]
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    if rows and not args.no_plot:
        from .plot import render_bench_png

        render_bench_png(rows, os.path.splitext(args.out)[0] + ".png")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="racekit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="parse a trace file and check well-formedness")
    sp.add_argument("file")
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("detect", help="run one race detector on a trace file")
    sp.add_argument("--algo", required=True, choices=ALGOS)
    sp.add_argument(
        "--report-all",
        action="store_true",
        help="list every racy event (hb-djit only)",
    )
    sp.add_argument(
        "--budget",
        type=int,
        default=10_000_000,
        help="search node budget for syncp-oracle",
    )
    sp.add_argument("file")
    sp.set_defaults(fn=cmd_detect)

    sp = sub.add_parser("gen", help="generate a benchmark trace")
    sp.add_argument("kind", choices=GEN_KINDS)
    sp.add_argument("--instance", help="instance file for the reduction kinds")
    sp.add_argument("--n", type=int, help="random instance size for the reduction kinds")
    sp.add_argument("--d", type=int, default=8, help="vector dimension")
    sp.add_argument("--events", type=int, help="trace length for kind random")
    sp.add_argument("--threads", type=int, default=8)
    sp.add_argument("--locks", type=int, default=8)
    sp.add_argument("--vars", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", dest="out", required=True, help="output trace file")
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser(
        "export-ov", help="export a single-variable trace as an orthogonality instance"
    )
    sp.add_argument("file")
    sp.add_argument("-o", dest="out", required=True, help="output instance file")
    sp.set_defaults(fn=cmd_export_ov)

    sp = sub.add_parser("certify", help="emit or check a per-variable lock certificate")
    sp.add_argument("mode", choices=("emit", "check"))
    sp.add_argument("trace")
    sp.add_argument("cert", nargs="?")
    sp.set_defaults(fn=cmd_certify)

    sp = sub.add_parser(
        "verify-witness", help="check a reordering witness against a trace"
    )
    sp.add_argument("trace")
    sp.add_argument("witness")
    sp.set_defaults(fn=cmd_verify_witness)

    sp = sub.add_parser("bench", help="time detectors over generated traces")
    sp.add_argument("--algos", required=True, help="comma-separated algorithm list")
    sp.add_argument("--gen", required=True, help="generator spec, kind[:key=value,...]")
    sp.add_argument("--sweep", required=True, help="comma-separated sizes")
    sp.add_argument("--reps", type=int, default=3)
    sp.add_argument("-o", dest="out", required=True, help="output CSV file")
    sp.add_argument("--no-plot", action="store_true", help="skip the PNG next to the CSV")
    sp.set_defaults(fn=cmd_bench)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
