"""Command surface: every run emits one replayable JSON envelope.

The envelope carries the tool version, the command, a config echo with
all inputs embedded (never paths, so certificates stay self-contained),
the seed, a timestamp and the result.  Re-running the echoed config
reproduces the result byte for byte; `folglue verify` does exactly
that against a saved envelope.

Exit codes: 0 when a verdict or result was reached, 2 when the outcome
is inconclusive (a tripped decision budget, an exhausted hardening
stage), 3 on input errors, 4 when a hard feasibility guard refused the
request.  verify exits 1 on a reproduction mismatch.
"""

import argparse
import json
import sys
from datetime import datetime, timezone

from . import __version__
from .certify import dim_fol_jets, estimate_n1, rank_growth_check
from .compat import truncated_E
from .harden import HardenExhausted, harden
from .jsonio import (
    SchemaError,
    dump_certificate,
    dump_diffeo,
    dump_form,
    dump_harden_result,
    dump_residual,
    parse_diffeo,
    parse_form,
    parse_harden_request,
)
from .prolong import DecidePolicy, GuardExceeded, brute_force_oracle, decide_type
from .rings import FpRing, ring_from_name
from .series import OrderError
from .util import parallel_map


# ---------------------------------------------------------------------------
# command handlers: config dict in, (result dict, exit code) out


def cmd_eval_e(config: dict):
    ring = ring_from_name(config["ring"])
    transition = parse_diffeo(ring, config["transition"])
    w1 = parse_form(ring, config["w1"], "w1")
    w2 = parse_form(ring, config["w2"], "w2")
    res = truncated_E(transition, w1, w2, config["level"])
    return dump_residual(res), 0


def cmd_dims(config: dict):
    k, nu, top = config["k"], config["nu"], config["max"]
    if k < 0 or nu < 0 or top < 0:
        raise ValueError("k, nu and max must be nonnegative")
    dims = [dim_fol_jets(k, nu, M) for M in range(top + 1)]
    rows = [
        {"M": M, "dim": dims[M], "delta": None if M == 0 else dims[M] - dims[M - 1]}
        for M in range(top + 1)
    ]
    stable_from = max(k, nu)
    ok = all(r["delta"] == 4 * k + 4 for r in rows if r["M"] > stable_from)
    return {
        "kind": "dims",
        "k": k,
        "nu": nu,
        "max": top,
        "rows": rows,
        "increment": 4 * k + 4,
        "stable_from": stable_from,
        "ok": ok,
    }, 0


def _rank_growth_unit(task):
    k, nu, N, samples, seed, strategy = task
    return rank_growth_check(k, nu, N, samples, seed, strategy=strategy)


def cmd_rank_growth(config: dict, jobs: int | None = None):
    tasks = [
        (
            config["k"],
            config["nu"],
            N,
            config["samples"],
            config["seed"],
            config["strategy"],
        )
        for N in range(config["n_min"], config["n_max"] + 1)
    ]
    per_N = parallel_map(_rank_growth_unit, tasks, jobs)
    verdict = "confirmed" if all(r["verdict"] == "confirmed" for r in per_N) else "failed"
    return {
        "kind": "rank_growth",
        "k": config["k"],
        "nu": config["nu"],
        "N_range": [config["n_min"], config["n_max"]],
        "seed": config["seed"],
        "per_N": per_N,
        "verdict": verdict,
    }, 0


def cmd_estimate_n1(config: dict):
    report = estimate_n1(
        config["k"], config["nu"], config["max_n"], config["samples"], config["seed"]
    )
    return report, 0


def cmd_decide(config: dict):
    ring = ring_from_name(config["ring"])
    transition = parse_diffeo(ring, config["transition"])
    policy = DecidePolicy(
        seed=config["seed"],
        replicas=config["replicas"],
        param_cap=config["param_cap"],
        node_guard=config["node_guard"],
        max_states=config["max_states"],
    )
    cert = decide_type(
        transition, config["k"], config["nu"], config["working_order"], policy
    )
    return dump_certificate(cert), 2 if cert.verdict == "inconclusive" else 0


def cmd_oracle(config: dict):
    ring = ring_from_name(config["ring"])
    if not isinstance(ring, FpRing):
        raise ValueError("the oracle runs over a prime field; use --ring fp:<p>")
    transition = parse_diffeo(ring, config["transition"])
    cert = brute_force_oracle(
        transition, config["k"], config["nu"], config["working_order"]
    )
    return dump_certificate(cert), 0


def cmd_harden(config: dict):
    request = parse_harden_request(config["request"])
    try:
        result = harden(request)
    except HardenExhausted as exc:
        return {
            "kind": "harden_failure",
            "report": exc.report,
            "attempts": list(exc.attempts),
        }, 2
    return dump_harden_result(result), 0


HANDLERS = {
    "eval-e": cmd_eval_e,
    "dims": cmd_dims,
    "rank-growth": cmd_rank_growth,
    "estimate-n1": cmd_estimate_n1,
    "decide": cmd_decide,
    "oracle": cmd_oracle,
    "harden": cmd_harden,
}


def cmd_verify(args):
    """Replay a saved envelope's config and compare everything but time."""
    envelope = _load_json(args.envelope)
    for key in ("version", "command", "config", "result"):
        if key not in envelope:
            raise SchemaError("envelope", f"missing key {key!r}")
    command = envelope["command"]
    if command not in HANDLERS:
        raise SchemaError("envelope.command", f"unknown command {command!r}")
    result, _ = HANDLERS[command](envelope["config"])
    checks = {
        "command": command,
        "version_recorded": envelope["version"],
        "version_running": __version__,
        "reproduced": result == envelope["result"],
    }
    _emit(checks, args.out)
    return 0 if checks["reproduced"] else 1


# ---------------------------------------------------------------------------
# wiring


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(3)


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            path, f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _envelope(command: str, config: dict, seed: int, result: dict) -> dict:
    return {
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "result": result,
    }


def build_parser() -> _Parser:
    parser = _Parser(prog="folglue", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"folglue {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=True, jobs=False):
        p.add_argument("--out", help="write the JSON envelope here instead of stdout")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if jobs:
            p.add_argument("--jobs", type=int, default=None,
                           help="worker processes (result is jobs-independent)")

    p = sub.add_parser("eval-e", help="residual of a form pair under a transition")
    p.add_argument("--phi", required=True, help="transition JSON file")
    p.add_argument("--w1", required=True, help="chart-1 form JSON file")
    p.add_argument("--w2", required=True, help="chart-2 form JSON file")
    p.add_argument("--level", type=int, required=True,
                   help="certify the residual through degree level + 2 nu")
    p.add_argument("--ring", default="q")
    common(p, seed=False)

    p = sub.add_parser("dims", help="foliation jet space dimensions by order")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--max", type=int, required=True)
    common(p, seed=False)

    p = sub.add_parser("rank-growth", help="sampled Jacobian rank growth certificate")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--strategy", choices=("modular", "exact"), default="modular")
    common(p, jobs=True)

    p = sub.add_parser("estimate-n1", help="first order with generic obstructions")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--max-n", type=int, default=10)
    p.add_argument("--samples", type=int, default=3)
    common(p)

    p = sub.add_parser("decide", help="does the gluing carry a type-(k, nu) foliation")
    p.add_argument("--phi", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--working-order", type=int, required=True)
    p.add_argument("--ring", default="q")
    p.add_argument("--replicas", type=int, default=DecidePolicy.replicas)
    p.add_argument("--param-cap", type=int, default=DecidePolicy.param_cap)
    p.add_argument("--node-guard", type=int, default=DecidePolicy.node_guard)
    p.add_argument("--max-states", type=int, default=DecidePolicy.max_states)
    common(p)

    p = sub.add_parser("oracle", help="prime-field ground truth by exhaustion")
    p.add_argument("--phi", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--working-order", type=int, required=True)
    p.add_argument("--ring", default="fp:3")
    common(p, seed=False)

    p = sub.add_parser("harden", help="perturb above a protected jet until types die")
    p.add_argument("--request", required=True, help="HardenRequest JSON file")
    common(p, seed=False)

    p = sub.add_parser("verify", help="replay a saved envelope and compare")
    p.add_argument("envelope", help="envelope JSON file produced by this tool")
    p.add_argument("--out", help="write the verification report here")

    return parser


def _config_from_args(args) -> tuple[dict, int]:
    """Build the self-contained config echo; returns (config, seed)."""
    cmd = args.command
    if cmd == "eval-e":
        return {
            "ring": args.ring,
            "transition": _load_json(args.phi),
            "w1": _load_json(args.w1),
            "w2": _load_json(args.w2),
            "level": args.level,
        }, 0
    if cmd == "dims":
        return {"k": args.k, "nu": args.nu, "max": args.max}, 0
    if cmd == "rank-growth":
        return {
            "k": args.k,
            "nu": args.nu,
            "n_min": args.n_min,
            "n_max": args.n_max,
            "samples": args.samples,
            "strategy": args.strategy,
            "seed": args.seed,
        }, args.seed
    if cmd == "estimate-n1":
        return {
            "k": args.k,
            "nu": args.nu,
            "max_n": args.max_n,
            "samples": args.samples,
            "seed": args.seed,
        }, args.seed
    if cmd == "decide":
        return {
            "ring": args.ring,
            "transition": _load_json(args.phi),
            "k": args.k,
            "nu": args.nu,
            "working_order": args.working_order,
            "seed": args.seed,
            "replicas": args.replicas,
            "param_cap": args.param_cap,
            "node_guard": args.node_guard,
            "max_states": args.max_states,
        }, args.seed
    if cmd == "oracle":
        return {
            "ring": args.ring,
            "transition": _load_json(args.phi),
            "k": args.k,
            "nu": args.nu,
            "working_order": args.working_order,
        }, 0
    if cmd == "harden":
        request = _load_json(args.request)
        seed = request.get("seed", 0) if isinstance(request, dict) else 0
        return {"request": request}, seed if isinstance(seed, int) else 0
    raise AssertionError(f"unhandled command {cmd}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        config, seed = _config_from_args(args)
        if args.command == "rank-growth":
            result, code = cmd_rank_growth(config, args.jobs)
        else:
            result, code = HANDLERS[args.command](config)
        _emit(_envelope(args.command, config, seed, result), args.out)
        return code
    except SchemaError as exc:
        print(f"folglue: input error: {exc}", file=sys.stderr)
        return 3
    except GuardExceeded as exc:
        print(f"folglue: guard: {exc}", file=sys.stderr)
        return 4
    except (OrderError, ValueError) as exc:
        print(f"folglue: input error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"folglue: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
