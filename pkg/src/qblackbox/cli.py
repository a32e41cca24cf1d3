"""Command-line front end: run deciders, protocols and rank computations as sweeps.

Examples::

    qblackbox --algo dj --n 3 --gen all-zero
    qblackbox --algo sigma2 --n 2 4 6 --gen random --seed 7 --format csv
    qblackbox --protocol eqprime --n 3 --gen random --gen-h copy
    qblackbox --rank disjointness --n 1 2 3

Exit codes: 0 success, 2 invalid configuration, 3 resource cap exceeded,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .algorithms import deutsch_jozsa, or_decider
from .baselines import MATRIX_PREDICATES, build_comm_matrix, exact_rank
from .nested import ApproxParams, double_exp_params, even_widths, sigma2_eval, sigma_d_eval
from .oracle import COMBINERS, OracleTable
from .protocol import ProtocolError, ac0_protocol, disj_protocol, eqprime_protocol
from .statevector import ResourceError, set_qubit_cap

ALGOS = ("dj", "or", "sigma2", "sigma_d", "pi_d")
PROTOCOLS = ("disj", "eqprime", "eqprime2", "ac0")
GENERATORS = "all-zero | all-one | single-one:X | random | balanced | bits:B | copy (h only)"

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_INVARIANT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class InvariantError(RuntimeError):
    pass


@dataclass
class RunConfig:
    mode: str
    target: str
    ns: list[int]
    m: int | None = None
    widths: list[int] | None = None
    ks: list[int] | None = None
    epsilon: float | None = None
    delta: float | None = None
    d: int | None = None
    combiner: str = "AND"
    oracle: list[str] = field(default_factory=list)
    gen: str = "random"
    gen_h: str | None = None
    instances: int = 1
    seed: int = 0
    out: str | None = None
    fmt: str = "json"
    cap: int | None = None
    wall_time: bool = True
    allow_large: bool = False


# ---------------------------------------------------------------------------
# oracle generators

def generate(spec: str, n: int, rng: np.random.Generator) -> OracleTable:
    kind, _, arg = spec.partition(":")
    if kind == "all-zero":
        return OracleTable.constant(n, 0)
    if kind == "all-one":
        return OracleTable.constant(n, 1)
    if kind == "single-one":
        x = int(arg or 0)
        if not 0 <= x < 1 << n:
            raise ConfigError(f"--gen single-one:{x} out of range for n={n}")
        return OracleTable.single_one(n, x)
    if kind == "random":
        return OracleTable.random(n, rng)
    if kind == "balanced":
        if n == 0:
            raise ConfigError("--gen balanced needs n >= 1")
        return OracleTable.random_balanced(n, rng)
    if kind == "bits":
        table = OracleTable.from_string(arg)
        if table.n != n:
            raise ConfigError(f"--gen bits:{arg} has arity {table.n}, but --n is {n}")
        return table
    raise ConfigError(f"unknown generator {spec!r}; use {GENERATORS}")


def _instances(cfg: RunConfig, n: int, pair: bool):
    """Yield ``(index, g)`` or ``(index, g, h)`` deterministically from the seed."""
    if cfg.oracle:
        tables = [OracleTable.load(p) for p in cfg.oracle]
        for t in tables:
            if t.n != n:
                raise ConfigError(f"--oracle file has arity {t.n}, but --n is {n}")
        if pair:
            if len(tables) != 2:
                raise ConfigError("protocols need exactly two --oracle files (g then h)")
            yield (0, tables[0], tables[1])
        else:
            for i, t in enumerate(tables):
                yield (i, t)
        return
    for i in range(cfg.instances):
        rng = np.random.default_rng([cfg.seed, n, i])
        g = generate(cfg.gen, n, rng)
        if not pair:
            yield (i, g)
            continue
        spec_h = cfg.gen_h or cfg.gen
        h = g if spec_h == "copy" else generate(spec_h, n, rng)
        yield (i, g, h)


# ---------------------------------------------------------------------------
# commands

def _k(cfg: RunConfig, default: int) -> int:
    return cfg.ks[0] if cfg.ks else default


def _params(cfg: RunConfig, n: int) -> ApproxParams:
    if cfg.delta is not None:
        d = cfg.d or (len(cfg.widths) if cfg.widths else 2)
        return double_exp_params(n, d, cfg.delta, cfg.widths)
    widths = cfg.widths or list(even_widths(n, cfg.d or 2))
    if sum(widths) != n:
        raise ConfigError(f"--widths {widths} must sum to --n {n}")
    if cfg.ks:
        if len(cfg.ks) != len(widths):
            raise ConfigError(f"--k needs {len(widths)} values for widths {widths}, got {cfg.ks}")
        return ApproxParams(n, tuple(widths), tuple(cfg.ks))
    return ApproxParams.default(n, widths)


def cmd_algo(cfg: RunConfig) -> list[dict]:
    rows = []
    for n in cfg.ns:
        for i, f in _instances(cfg, n, pair=False):
            start = time.perf_counter()
            row = {"algo": cfg.target, "n": n, "instance": i, "oracle": f.to_string()}
            if cfg.target == "dj":
                res = deutsch_jozsa(f)
            elif cfg.target == "or":
                k = _k(cfg, 3)
                res = or_decider(f, k=k)
                row["k"] = k
            elif cfg.target == "sigma2":
                m = cfg.m if cfg.m is not None else n // 2
                if not 0 <= m <= n:
                    raise ConfigError(f"--m {m} outside [0, {n}]")
                eps = cfg.epsilon if cfg.epsilon is not None else 1 / 12
                res = sigma2_eval(f, m, eps)
                row.update(m=m, epsilon=eps, k=res.details["inner_k"])
            else:
                params = _params(cfg, n)
                res = sigma_d_eval(f, params, predicate="SIGMA" if cfg.target == "sigma_d" else "PI")
                row.update(widths=list(params.widths), ks=list(params.ks))
                if params.delta is not None:
                    row.update(delta=params.delta, target_error=params.target_error)
            row.update(answer=res.answer, truth=res.truth, queries=res.queries,
                       success_prob=res.success_probability, p_one=res.p_one)
            if cfg.wall_time:
                row["wall_time"] = round(time.perf_counter() - start, 6)
            rows.append(row)
    return rows


def cmd_protocol(cfg: RunConfig) -> list[dict]:
    rows = []
    for n in cfg.ns:
        for i, g, h in _instances(cfg, n, pair=True):
            start = time.perf_counter()
            if cfg.target == "disj":
                res = disj_protocol(g, h, k=_k(cfg, 3))
            elif cfg.target == "eqprime":
                res = eqprime_protocol(g, h, one_way=True)
            elif cfg.target == "eqprime2":
                res = eqprime_protocol(g, h, one_way=False)
            else:
                widths = cfg.widths or [n]
                if sum(widths) != n:
                    raise ConfigError(f"--widths {widths} must sum to --n {n}")
                if cfg.ks and len(cfg.ks) != len(widths):
                    raise ConfigError(f"--k needs {len(widths)} values, got {cfg.ks}")
                res = ac0_protocol(widths, COMBINERS[cfg.combiner], g, h, ks=cfg.ks)
            row = {"protocol": cfg.target, "instance": i, "g": g.to_string(), "h": h.to_string()}
            row.update(res.as_row())
            row.update(answer=res.answer, p_one=res.p_one)
            if not res.one_way and res.comm_qubits != res.t * (2 * n + 4):
                raise InvariantError(f"comm_qubits {res.comm_qubits} != t(2n+4) = {res.t * (2 * n + 4)}")
            if cfg.wall_time:
                row["wall_time"] = round(time.perf_counter() - start, 6)
            rows.append(row)
    return rows


def cmd_rank(cfg: RunConfig) -> list[dict]:
    rows = []
    for n in cfg.ns:
        start = time.perf_counter()
        matrix = build_comm_matrix(cfg.target, n, allow_large=cfg.allow_large)
        row = {"predicate": cfg.target, "n": n, "side": matrix.side, "rank": exact_rank(matrix)}
        if cfg.wall_time:
            row["wall_time"] = round(time.perf_counter() - start, 6)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# encoding

def _cell(v) -> str:
    if isinstance(v, (list, tuple)):
        return json.dumps(list(v))
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def encode(rows: list[dict], cfg: RunConfig, fmt: str) -> str:
    if fmt == "json":
        meta = {
            "version": __version__,
            "seed": cfg.seed,
            "date": _dt.date.today().isoformat(),
            "mode": cfg.mode,
            "target": cfg.target,
        }
        return json.dumps({"metadata": meta, "rows": rows}, indent=2, sort_keys=False) + "\n"
    columns: list[str] = []
    for row in rows:
        columns += [c for c in row if c not in columns]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qblackbox", description="Exact simulation of black-box quantum algorithms and protocols.")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--algo", choices=ALGOS)
    mode.add_argument("--protocol", choices=PROTOCOLS)
    mode.add_argument("--rank", type=str.upper, choices=MATRIX_PREDICATES)
    p.add_argument("--n", type=int, nargs="+", required=True, help="input arity; several values make a sweep")
    p.add_argument("--m", type=int, help="inner width for sigma2 (default n // 2)")
    p.add_argument("--widths", type=int, nargs="+", help="quantifier widths, outermost first")
    p.add_argument("--k", type=int, nargs="+", help="repetition count(s); one per level for sigma_d/pi_d/ac0")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, help="double-exponential variant: every k = ceil(2^(n/(delta d)))")
    p.add_argument("--d", type=int, help="depth when --widths is omitted")
    p.add_argument("--combiner", type=str.upper, default="AND", choices=sorted(COMBINERS))
    p.add_argument("--oracle", action="append", default=[], help="oracle JSON file; repeat for g then h")
    p.add_argument("--gen", default="random", help=GENERATORS)
    p.add_argument("--gen-h", help="generator for Bob's input (default: same as --gen)")
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("--cap", type=int, help="register cap in qubits")
    p.add_argument("--allow-large", action="store_true", help="permit the n = 4 rank matrix (65536 x 65536)")
    p.add_argument("--no-wall-time", dest="wall_time", action="store_false", help="omit timing for byte-stable output")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.algo:
        mode, target = "algo", args.algo
    elif args.protocol:
        mode, target = "protocol", args.protocol
    else:
        mode, target = "rank", args.rank
    cfg = RunConfig(mode, target, args.n, args.m, args.widths, args.k, args.epsilon, args.delta, args.d,
                    args.combiner, args.oracle, args.gen, args.gen_h, args.instances, args.seed,
                    args.out, args.fmt, args.cap, args.wall_time, args.allow_large)
    if any(n < 0 for n in cfg.ns):
        raise ConfigError("--n must be non-negative")
    if cfg.instances < 1:
        raise ConfigError("--instances must be >= 1")
    if cfg.ks and any(k < 1 for k in cfg.ks):
        raise ConfigError("--k values must be >= 1")
    if cfg.epsilon is not None and not 0 < cfg.epsilon < 1:
        raise ConfigError("--epsilon must lie in (0, 1)")
    if cfg.delta is not None and cfg.delta <= 0:
        raise ConfigError("--delta must be positive")
    if cfg.cap is not None and cfg.cap < 1:
        raise ConfigError("--cap must be positive")
    if cfg.mode == "algo" and cfg.target == "dj" and cfg.gen not in ("all-zero", "balanced") and not cfg.gen.startswith("bits:") and not cfg.oracle:
        raise ConfigError("--algo dj needs a promise oracle: --gen all-zero, balanced, bits:... or --oracle")
    return cfg


def run(cfg: RunConfig) -> str:
    if cfg.cap is not None:
        set_qubit_cap(cfg.cap)
    rows = {"algo": cmd_algo, "protocol": cmd_protocol, "rank": cmd_rank}[cfg.mode](cfg)
    return encode(rows, cfg, cfg.fmt)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        text = run(cfg)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvariantError, ProtocolError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
