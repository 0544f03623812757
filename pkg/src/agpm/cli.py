"""Command-line interface: ``agpm <subcommand> [options]``.

Exit codes: 0 success, 1 bad parameter or unsupported combination, 2 I/O or
graph-format error (and argparse usage errors), 3 invalid pattern,
4 sampling stopped at the sample cap before converging (the partial report is
still printed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, is_dataclass
from pathlib import Path

from .cost import (Decision, calibrate_hardware, fast_profile, run_loose)
from .errors import (AgpmError, GraphFormatError, OracleRefusal, ParameterError,
                     PatternLookupError, UnsupportedError)
from .exact import default_threads, exact_count
from .graph import CsrGraph, load_graph, save_binary, write_edge_list
from .gs import (GAMMA_PROBES, GAMMA_SAFETY, ReadKBoundInputs, SparsifyParams,
                 choose_keep_probability, estimate_gamma, gs_estimate, sparsify)
from .pattern import Induced, VerifyMode, compile_plan, parse_pattern
from .sampling import DEFAULT_MAX_SAMPLES, run_ns_online

EXIT_OK = 0
EXIT_PARAMETER = 1
EXIT_IO = 2
EXIT_PATTERN = 3
EXIT_NOT_CONVERGED = 4

BENCH_COLUMNS = ("graph", "pattern", "scheme", "verify", "repeat", "estimate", "true_count",
                 "actual_error", "predicted_error", "samples", "hit_rate", "seconds", "status")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ helpers


def resolve_threads(requested: int | None) -> int:
    """``AGPM_THREADS`` wins over ``--threads``; the machine's core count is the default."""
    env = os.environ.get("AGPM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise CliError(f"AGPM_THREADS must be an integer, got {env!r}", EXIT_PARAMETER) from None
    elif requested is not None:
        n = requested
    else:
        n = default_threads()
    if n < 1:
        raise CliError(f"thread count must be >= 1, got {n}", EXIT_PARAMETER)
    return n


def _load(path: str | None) -> CsrGraph:
    if not path:
        raise CliError("--graph is required", EXIT_PARAMETER)
    try:
        return load_graph(path)
    except (OSError, GraphFormatError) as exc:
        raise CliError(f"cannot read graph {path}: {exc}", EXIT_IO) from None


def _plan(spec: str | None, induced: str | None, verify: str = "eager"):
    if not spec:
        raise CliError("--pattern is required", EXIT_PARAMETER)
    try:
        pattern = parse_pattern(spec, induced)
        return compile_plan(pattern, VerifyMode(verify))
    except (PatternLookupError, ParameterError, UnsupportedError, ValueError) as exc:
        raise CliError(f"invalid pattern: {exc}", EXIT_PATTERN) from None


def _delta(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise CliError(f"confidence must lie in (0, 1), got {confidence}", EXIT_PARAMETER)
    return 1.0 - confidence


def _check_error(error: float) -> None:
    if not 0.0 < error < 1.0:
        raise CliError(f"error must lie in (0, 1), got {error}", EXIT_PARAMETER)


def _plain(obj):
    """JSON-safe copy: dataclasses become dicts, non-finite floats become null."""
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def render(report: dict, fmt: str) -> str:
    data = _plain(report)
    if fmt == "csv":
        flat = _flatten(data)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
        w.writeheader()
        w.writerow(flat)
        return buf.getvalue()
    return json.dumps(data, sort_keys=True) + "\n"


def _strip_timing(report: dict) -> dict:
    out = {}
    for k, v in report.items():
        if k == "timing" or k == "seconds" or k.endswith("_seconds"):
            continue
        out[k] = _strip_timing(v) if isinstance(v, dict) else v
    return out


# ------------------------------------------------------------------ count


def _ns_report(rep, verify: str, confidence: float) -> dict:
    return {
        "scheme": "ns",
        "estimate": rep.mu,
        "predicted_error": rep.epsilon_hat,
        "confidence": confidence,
        "samples": rep.n,
        "hit_rate": rep.hit_rate,
        "converged": rep.converged,
        "windows": rep.windows,
        "verify": verify,
    }


def _gs_report(est) -> dict:
    return {
        "scheme": "gs",
        "estimate": est.estimate,
        "scale": est.scale,
        "raw_count": est.raw_count,
        "params": est.params.to_dict(),
        "preprocess_seconds": est.preprocess_seconds,
        "search_seconds": est.search_seconds,
    }


def _gs_params(args, g, plan, epsilon, delta) -> tuple[SparsifyParams, dict]:
    if args.colors is not None and args.keep_prob is not None:
        raise CliError("--colors and --keep-prob are mutually exclusive", EXIT_PARAMETER)
    if args.colors is not None:
        return SparsifyParams.color(args.colors, args.seed), {}
    if args.keep_prob is not None:
        return SparsifyParams.bernoulli(args.keep_prob, args.seed), {}
    # neither given: size the color count from a quick count estimate and gamma
    prof = fast_profile(g, plan, args.fraction, args.seed, epsilon)
    gamma = GAMMA_SAFETY * estimate_gamma(g, plan, GAMMA_PROBES, args.seed)
    choice = choose_keep_probability(
        ReadKBoundInputs(epsilon, delta, max(prof.scaled_count, 0.0), max(gamma, 1.0)))
    trail = {"count_estimate": prof.scaled_count, "gamma": gamma,
             "keep_probability": choice.p}
    return SparsifyParams.color(choice.color_count, args.seed), trail


def cmd_count(args) -> tuple[dict, int]:
    _check_error(args.error)
    delta = _delta(args.confidence)
    g = _load(args.graph)
    plan = _plan(args.pattern, args.induced, args.verify)
    threads = resolve_threads(args.threads)
    t0 = time.perf_counter()
    code = EXIT_OK
    timing = {}
    if args.mode == "loose" and args.scheme == "auto":
        run = run_loose(g, plan, args.error, delta, args.seed, threads,
                        calibrate_hardware(), args.fraction, args.max_samples)
        if run.decision is Decision.GS:
            report = _gs_report(run.result)
            timing = {"preprocess": run.result.preprocess_seconds,
                      "search": run.result.search_seconds}
        else:
            report = _ns_report(run.result, args.verify, args.confidence)
            timing = {"sampling": run.run_seconds}
            if not run.result.converged:
                code = EXIT_NOT_CONVERGED
        timing["profile"] = run.profile_seconds
        report.update(decision=run.decision.value, cone=run.cone, gs_model=run.gs_model,
                      profile=run.profile.to_dict(), color_count=run.color_count,
                      gamma=run.gamma)
    elif args.scheme == "gs":
        params, trail = _gs_params(args, g, plan, args.error, delta)
        est = gs_estimate(g, plan, params, args.repeats, threads)
        report = _gs_report(est)
        if trail:
            report["sizing"] = trail
        timing = {"preprocess": est.preprocess_seconds, "search": est.search_seconds}
    else:
        rep = run_ns_online(g, plan, args.error, delta, seed=args.seed, workers=threads,
                            max_samples=args.max_samples)
        report = _ns_report(rep, args.verify, args.confidence)
        timing = {"sampling": time.perf_counter() - t0}
        if not rep.converged:
            code = EXIT_NOT_CONVERGED
    report["seconds"] = time.perf_counter() - t0
    report["timing"] = timing
    report["seed"] = args.seed
    report["config"] = {
        "graph": args.graph, "pattern": args.pattern, "induced": plan.pattern.induced.value,
        "error": args.error, "confidence": args.confidence, "mode": args.mode,
        "scheme": args.scheme, "verify": args.verify, "threads": threads,
    }
    if args.no_timing:
        report = _strip_timing(report)
    return report, code


# ------------------------------------------------------------------ others


def cmd_exact(args) -> tuple[dict, int]:
    g = _load(args.graph)
    plan = _plan(args.pattern, args.induced)
    t0 = time.perf_counter()
    res = exact_count(g, plan, resolve_threads(args.threads))
    report = {"count": res.count, "work_units": res.work_units,
              "seconds": time.perf_counter() - t0}
    return (_strip_timing(report) if args.no_timing else report), EXIT_OK


def cmd_profile(args) -> tuple[dict, int]:
    _check_error(args.error)
    g = _load(args.graph)
    plan = _plan(args.pattern, args.induced, args.verify)
    if not 0.0 < args.fraction < 1.0:
        raise CliError(f"--fraction must lie in (0, 1), got {args.fraction}", EXIT_PARAMETER)
    return fast_profile(g, plan, args.fraction, args.seed, args.error).to_dict(), EXIT_OK


def cmd_sparsify(args) -> tuple[dict, int]:
    g = _load(args.graph)
    if not args.output:
        raise CliError("--output is required", EXIT_PARAMETER)
    if args.colors is not None and args.keep_prob is not None:
        raise CliError("--colors and --keep-prob are mutually exclusive", EXIT_PARAMETER)
    if args.colors is not None:
        params = SparsifyParams.color(args.colors, args.seed)
    elif args.keep_prob is not None:
        params = SparsifyParams.bernoulli(args.keep_prob, args.seed)
    else:
        raise CliError("one of --colors or --keep-prob is required", EXIT_PARAMETER)
    h = sparsify(g, params)
    try:
        save_binary(h, args.output)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from None
    return {"output": args.output, "vertices": h.vertex_count, "edges": h.edge_count,
            "params": params.to_dict()}, EXIT_OK


def _is_binary_target(path: str, to: str | None) -> bool:
    if to:
        return to == "binary"
    return Path(path).suffix.lower() in (".agpm", ".bin", ".csr")


def cmd_convert(args) -> tuple[dict, int]:
    g = _load(args.graph)
    if not args.output:
        raise CliError("--output is required", EXIT_PARAMETER)
    binary = _is_binary_target(args.output, args.to)
    try:
        if binary:
            save_binary(g, args.output)
        else:
            write_edge_list(g, args.output)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from None
    return {"output": args.output, "format": "binary" if binary else "text",
            "vertices": g.vertex_count, "edges": g.edge_count}, EXIT_OK


# ------------------------------------------------------------------ bench


def _bench_cell(g, graph_name, pattern_spec, induced, scheme, verify, repeat, cell, truth,
                threads) -> dict:
    row = dict.fromkeys(BENCH_COLUMNS, "")
    row.update(graph=graph_name, pattern=pattern_spec, scheme=scheme, repeat=repeat,
               true_count="" if truth is None else truth)
    eps = float(cell.get("error", 0.1))
    delta = 1.0 - float(cell.get("confidence", 0.95))
    seed = int(cell.get("seed", 0)) + repeat
    t0 = time.perf_counter()
    if scheme == "ns":
        row["verify"] = verify
        plan = _plan(pattern_spec, induced, verify)
        rep = run_ns_online(g, plan, eps, delta, seed=seed, workers=threads,
                            max_samples=int(cell.get("max_samples", DEFAULT_MAX_SAMPLES)))
        row.update(estimate=rep.mu, predicted_error=rep.epsilon_hat, samples=rep.n,
                   hit_rate=rep.hit_rate, status="ok" if rep.converged else "not_converged")
    elif scheme == "gs":
        plan = _plan(pattern_spec, induced)
        if "keep_prob" in cell:
            params = SparsifyParams.bernoulli(float(cell["keep_prob"]), seed)
        else:
            params = SparsifyParams.color(int(cell.get("colors", 2)), seed)
        est = gs_estimate(g, plan, params, threads=threads)
        row.update(estimate=est.estimate, status="ok")
    else:
        raise ParameterError(f"unknown scheme {scheme!r}")
    row["seconds"] = time.perf_counter() - t0
    if truth:
        row["actual_error"] = abs(row["estimate"] - truth) / truth
    return row


def run_bench(corpus: dict, threads: int = 1, base: Path | None = None) -> list[dict]:
    """Run every cell of a corpus description; failures become status rows."""
    rows = []
    defaults = corpus.get("defaults", {})
    for entry in corpus.get("cells", []):
        cell = {**defaults, **entry}
        graphs = cell["graph"] if isinstance(cell["graph"], list) else [cell["graph"]]
        patterns = cell["pattern"] if isinstance(cell["pattern"], list) else [cell["pattern"]]
        schemes = cell.get("schemes", ["ns"])
        verifies = cell.get("verify", ["eager"])
        verifies = verifies if isinstance(verifies, list) else [verifies]
        repeats = int(cell.get("repeats", 1))
        induced = cell.get("induced")
        for graph_name in graphs:
            path = Path(graph_name)
            if base is not None and not path.is_absolute():
                path = base / path
            try:
                g = load_graph(path)
                load_error = None
            except (OSError, GraphFormatError) as exc:
                g, load_error = None, f"io_error: {exc}"
            for pattern_spec in patterns:
                truth = None
                if g is not None and cell.get("exact", True):
                    try:
                        truth = exact_count(g, _plan(pattern_spec, induced), threads).count
                    except (CliError, AgpmError):
                        truth = None
                for scheme in schemes:
                    for verify in (verifies if scheme == "ns" else [""]):
                        for r in range(repeats):
                            if load_error:
                                row = dict.fromkeys(BENCH_COLUMNS, "")
                                row.update(graph=graph_name, pattern=pattern_spec,
                                           scheme=scheme, verify=verify, repeat=r,
                                           status=load_error)
                            else:
                                try:
                                    row = _bench_cell(g, graph_name, pattern_spec, induced,
                                                      scheme, verify, r, cell, truth, threads)
                                except (CliError, AgpmError, ValueError, KeyError) as exc:
                                    row = dict.fromkeys(BENCH_COLUMNS, "")
                                    row.update(graph=graph_name, pattern=pattern_spec,
                                               scheme=scheme, verify=verify, repeat=r,
                                               status=f"error: {exc}")
                            rows.append(row)
    return rows


def bench_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row.get(k, "") for k in BENCH_COLUMNS})
    return buf.getvalue()


def cmd_bench(args) -> tuple[str, int]:
    if not args.corpus:
        raise CliError("--corpus is required", EXIT_PARAMETER)
    try:
        corpus = json.loads(Path(args.corpus).read_text())
    except OSError as exc:
        raise CliError(f"cannot read corpus {args.corpus}: {exc}", EXIT_IO) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"corpus is not valid JSON: {exc}", EXIT_IO) from None
    rows = run_bench(corpus, resolve_threads(args.threads), Path(args.corpus).parent)
    return bench_csv(rows), EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="edge-list or binary CSR file")
    common.add_argument("--pattern", help="builtin name or custom:k:a-b,...")
    common.add_argument("--induced", choices=[i.value for i in Induced])
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, help="worker cap (AGPM_THREADS overrides)")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock fields so output is reproducible byte for byte")

    parser = argparse.ArgumentParser(prog="agpm", description="Approximate graph pattern counting.")
    sub = parser.add_subparsers(dest="command", required=True)

    count = sub.add_parser("count", parents=[common], help="estimate a pattern count")
    count.add_argument("--mode", choices=["strict", "loose"], default="strict")
    count.add_argument("--scheme", choices=["auto", "ns", "gs"], default="auto")
    count.add_argument("--verify", choices=["eager", "lazy"], default="eager")
    count.add_argument("--error", type=float, default=0.1, help="target relative error")
    count.add_argument("--confidence", type=float, default=0.99, help="1 - delta")
    count.add_argument("--colors", type=int)
    count.add_argument("--keep-prob", type=float)
    count.add_argument("--repeats", type=int, default=1)
    count.add_argument("--fraction", type=float, default=0.1, help="profiler keep probability")
    count.add_argument("--max-samples", type=int, default=DEFAULT_MAX_SAMPLES)
    count.set_defaults(func=cmd_count)

    exact = sub.add_parser("exact", parents=[common], help="exact pattern count")
    exact.set_defaults(func=cmd_exact)

    prof = sub.add_parser("profile", parents=[common], help="predict the NS sample count")
    prof.add_argument("--fraction", type=float, default=0.1)
    prof.add_argument("--error", type=float, default=0.1)
    prof.add_argument("--verify", choices=["eager", "lazy"], default="eager")
    prof.set_defaults(func=cmd_profile)

    sp = sub.add_parser("sparsify", parents=[common], help="write a sparsified graph")
    sp.add_argument("--colors", type=int)
    sp.add_argument("--keep-prob", type=float)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_sparsify)

    conv = sub.add_parser("convert", parents=[common], help="text edge list <-> binary CSR")
    conv.add_argument("--output", "-o")
    conv.add_argument("--to", choices=["binary", "text"])
    conv.set_defaults(func=cmd_convert)

    bench = sub.add_parser("bench", parents=[common], help="run a JSON corpus, emit CSV")
    bench.add_argument("--corpus")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out, code = args.func(args)
    except CliError as exc:
        print(f"agpm: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, GraphFormatError) as exc:
        print(f"agpm: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParameterError, UnsupportedError, OracleRefusal) as exc:
        print(f"agpm: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    sys.stdout.write(out if isinstance(out, str) else render(out, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
