"""Command-line batch runner.

    nonconvlab run --config cfg.yaml [--out DIR] [--seeds a..b] [--threads k]
    nonconvlab slln-run --config cfg.yaml ...      (experiment kind forced)
    nonconvlab replay REPORT [--threads k]         (or: run --replay REPORT)

Outputs go to <out>/<config hash>/: one CSV per seed (or result.csv for
seed-free experiments) and report.json.  Exit codes: 0 success, 1 config
parse error, 2 validation error, 3 resource cap, 4 replay mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    EXPERIMENTS,
    ConfigError,
    RunConfig,
    build_model,
    build_observable,
    build_schedule,
    load_config,
    model_stream,
    parse_seeds,
)
from .digitkit import DigitStream
from .errors import ResourceCapError, ScheduleError, StreamExhaustedError
from .fractal import (
    cf_bound_certificate,
    construct_gzb,
    construct_up_point,
    hd_bernoulli,
    hd_markov,
    local_dimension_trace,
)
from .measures import BernoulliLaw, FiniteMarkovChain, InvalidLawError, MarkovLaw
from .mixing import centering_decay, mixing_report, mixingale_decay
from .nonconv import (
    FrequencySpec,
    check_membership,
    count_frequencies,
    count_pair_frequencies,
    run_slln,
)
from .observables import decompose
from .schedules import validate

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_CAP, EXIT_MISMATCH = 0, 1, 2, 3, 4


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    return str(v)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def _marginal(model):
    if isinstance(model, (MarkovLaw, FiniteMarkovChain)):
        return model.mean_digit_law()
    return model


# ---------------------------------------------------------------------------
# per-experiment runners: (cfg, seed) -> (csv text, summary dict)
# ---------------------------------------------------------------------------


def _slln(cfg: RunConfig, model, seed: int):
    schedule = build_schedule(cfg.schedule)
    stream = model_stream(model, seed)
    F = build_observable(cfg.F, stream.alphabet)
    law = None if isinstance(model, DigitStream) else model
    target = cfg.param("target")
    dec = decompose(F, law) if cfg.param("components") and law is not None else None
    trace = run_slln(stream, schedule, F, law, cfg.N, cfg.checkpoints, target=target,
                     decomposition=dec, provenance={"config_hash": cfg.hash, "seed": seed},
                     check_schedule=False)
    summary = {"final_average": trace.final_average, "target": trace.target_value,
               "deviation": trace.final_deviation}
    if dec is not None:
        summary["components"] = [c[-1] for c in trace.component_averages]
    return trace.to_csv(), summary


def _freq(cfg: RunConfig, model, seed: int, pairs: bool):
    schedule = build_schedule(cfg.schedule)
    stream = model_stream(model, seed)
    if pairs:
        counts = count_pair_frequencies(stream, schedule, None, cfg.N, check_schedule=False)
        rows = [(a, b, c, c / counts.N) for (a, b), c in sorted(counts.counts.items())]
        return _csv(["alpha", "beta", "count", "frequency"], rows), {"N": counts.N,
                                                                      "distinct": len(rows)}
    counts = count_frequencies(stream, schedule, None, cfg.N, check_schedule=False)
    marg = None if isinstance(model, DigitStream) else _marginal(model)
    summary = {"N": counts.N}
    if marg is not None and hasattr(marg, "weight"):
        spec = FrequencySpec.product(marg, schedule.ell)
        rep = check_membership(counts, spec, cfg.param("tolerance"))
        rows = [(w, counts[w], counts[w] / counts.N, float(spec.p(w)), rep.deviations[w])
                for w in sorted(rep.deviations)]
        summary["sup_deviation"] = rep.sup_deviation
        return _csv(["word", "count", "frequency", "target", "deviation"], rows), summary
    rows = [(w, c, c / counts.N) for w, c in sorted(counts.counts.items())]
    return _csv(["word", "count", "frequency"], rows), summary


def _dim_formula(cfg: RunConfig):
    spec = cfg.model
    if spec.get("kind") == "bernoulli":
        res = hd_bernoulli([Fraction(str(v)) for v in spec["weights"]], cfg.param("m"))
    elif spec.get("kind") == "markov":
        res = hd_markov([[Fraction(str(v)) for v in row] for row in spec["R"]])
    else:
        raise ConfigError("dim-formula needs a bernoulli or markov model")
    return _csv(["formula", "value"], [(res.formula, res.value)]), res.to_json()


def _dim_estimate(cfg: RunConfig, model, seed: int):
    stream = model_stream(model, seed)
    grid = cfg.checkpoints or [int(n) for n in cfg.param("n_grid", [10, 100, 1000, 10000])]
    tr = local_dimension_trace(model, stream, grid)
    target = (hd_markov(model.R) if isinstance(model, MarkovLaw) else hd_bernoulli(model.weights)).value
    return _csv(["n", "value"], zip(tr.n, tr.values)), {"endpoint": tr.endpoint,
                                                        "target": target, "null_at": tr.null_at}


def _mixing(cfg: RunConfig, model):
    if not isinstance(model, FiniteMarkovChain):
        raise ConfigError("mixing experiments need a finite_chain model")
    grid = [int(n) for n in cfg.param("n_grid", list(range(1, 11)))]
    rep = mixing_report(model, grid)
    fits = {k: {"slope": f.slope, "r2": f.r2} for k, f in rep.fits.items()}
    return rep.to_csv(), {"fits": fits}


def _mixingale(cfg: RunConfig, model):
    if not isinstance(model, FiniteMarkovChain):
        raise ConfigError("mixing experiments need a finite_chain model")
    schedule = build_schedule(cfg.schedule)
    F = build_observable(cfg.F, model.alphabet)
    i = int(cfg.param("i", F.ell))
    m_grid = [int(m) for m in cfg.param("m_grid", list(range(2, 33)))]
    n_grid = [int(n) for n in cfg.param("n_grid", [64])]
    table = mixingale_decay(model, F, schedule, i, m_grid, n_grid)
    cent = centering_decay(model, F, schedule, i, [int(n) for n in cfg.param("centering_grid",
                                                                             list(range(1, 33)))])
    summary = {"centering": {"slope": cent.fit.slope, "r2": cent.fit.r2}}
    if table.fit is not None:
        summary["mixingale"] = {"slope": table.fit.slope, "r2": table.fit.r2}
    return table.to_csv(), summary


def _construct(cfg: RunConfig, seed: int):
    spec = cfg.model
    count = int(cfg.param("count", 1000))
    weights = [Fraction(str(v)) for v in spec.get("weights", spec.get("rbar", []))]
    mode = cfg.param("mode", "iid")
    stream = construct_up_point(weights, mode, seed, count)
    summary = {"mode": mode, "count": count}
    if cfg.param("gzb"):
        g = cfg.param("gzb")
        built = construct_gzb(stream, Fraction(str(g.get("b", 2))), build_schedule(cfg.schedule),
                              int(g.get("k_max", 0)))
        stream = built.stream
        summary["insertions"] = [[i, str(d)] for i, d in built.insertions]
    digits = [int(d) for d in stream.prefix(count)]
    return _csv(["index", "digit"], enumerate(digits)), summary


def _cf_bound(cfg: RunConfig, seeds: list):
    spec = cfg.model
    law = BernoulliLaw([Fraction(str(v)) for v in spec["weights"]], offset=1)
    cert = cf_bound_certificate(law, seeds, int(cfg.param("n", 10_000)))
    rows = list(zip(cert.seeds, cert.estimates))
    return _csv(["seed", "lyapunov"], rows), cert.as_dimension().to_json()


def _per_seed(cfg: RunConfig, model, seed: int):
    kind = cfg.experiment
    if kind == "slln-run":
        return _slln(cfg, model, seed)
    if kind == "freq-count":
        return _freq(cfg, model, seed, pairs=False)
    if kind == "pair-count":
        return _freq(cfg, model, seed, pairs=True)
    if kind == "dim-estimate":
        return _dim_estimate(cfg, model, seed)
    if kind == "construct-point":
        return _construct(cfg, seed)
    raise AssertionError(kind)


def _aggregate(summaries: dict) -> dict:
    devs = [s["deviation"] for s in summaries.values() if "deviation" in s]
    devs += [s["sup_deviation"] for s in summaries.values() if "sup_deviation" in s]
    devs = [d for d in devs if np.isfinite(d)]
    if not devs:
        return {}
    return {"mean_deviation": float(np.mean(devs)), "max_deviation": float(np.max(devs))}


def execute(cfg: RunConfig, out_dir: Path, threads: int = 1) -> Path:
    """Run a config and write its outputs; returns the report path."""
    needs_model = cfg.experiment not in ("dim-formula", "construct-point", "cf-bound")
    model = build_model(cfg.model) if needs_model else None
    if cfg.schedule is not None and cfg.N is not None:
        report = validate(build_schedule(cfg.schedule), cfg.N)
        if not report.ok:
            raise ScheduleError(report)
    target = out_dir / cfg.hash
    target.mkdir(parents=True, exist_ok=True)
    files: dict = {}
    summaries: dict = {}
    kind = cfg.experiment
    if kind == "dim-formula":
        files["result.csv"], summaries["result"] = _dim_formula(cfg)
    elif kind == "mixing-report":
        files["result.csv"], summaries["result"] = _mixing(cfg, model)
    elif kind == "mixingale-decay":
        files["result.csv"], summaries["result"] = _mixingale(cfg, model)
    elif kind == "cf-bound":
        files["result.csv"], summaries["result"] = _cf_bound(cfg, cfg.seeds)
    else:
        seeds = sorted(cfg.seeds)

        def job(seed):
            return seed, _per_seed(cfg, model, seed)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(job, seeds))
        else:
            results = [job(s) for s in seeds]
        for seed, (text, summary) in sorted(results, key=lambda r: r[0]):
            files[f"{seed}.csv"] = text
            summaries[str(seed)] = summary
    for name, text in files.items():
        (target / name).write_text(text, encoding="utf-8", newline="")
    report = {
        "config": cfg.content(),
        "config_hash": cfg.hash,
        "experiment": kind,
        "seeds": sorted(cfg.seeds),
        "version": __version__,
        "files": {name: hashlib.sha256(text.encode("utf-8")).hexdigest()
                  for name, text in sorted(files.items())},
        "results": _jsonable(summaries),
        "aggregate": _aggregate(summaries),
    }
    path = target / "report.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path


def replay(report_path: Path, threads: int = 1, stream=None) -> int:
    """Re-run a stamped report and byte-compare its CSV files."""
    stream = sys.stdout if stream is None else stream
    report_path = Path(report_path)
    report = json.loads(report_path.read_text(encoding="utf-8"))
    if report.get("version") != __version__:
        print(f"warning: report written by version {report.get('version')}, "
              f"replaying with {__version__}", file=sys.stderr)
    cfg = RunConfig.from_dict(report["config"])
    if cfg.hash != report.get("config_hash"):
        print(f"warning: config hash {cfg.hash} differs from stamp {report.get('config_hash')}",
              file=sys.stderr)
    base = report_path.parent
    with tempfile.TemporaryDirectory() as tmp:
        fresh = execute(cfg, Path(tmp), threads).parent
        for name in sorted(report["files"]):
            old = (base / name).read_text(encoding="utf-8").splitlines()
            new = (fresh / name).read_text(encoding="utf-8").splitlines()
            for row, (a, b) in enumerate(zip(old, new), start=1):
                if a != b:
                    print(f"mismatch in {name} at row {row}:\n  stored:   {a}\n  replayed: {b}",
                          file=stream)
                    return EXIT_MISMATCH
            if len(old) != len(new):
                row = min(len(old), len(new)) + 1
                print(f"mismatch in {name} at row {row}: lengths {len(old)} vs {len(new)}",
                      file=stream)
                return EXIT_MISMATCH
            if (base / name).read_bytes() != (fresh / name).read_bytes():
                print(f"mismatch in {name}: byte content differs (line endings)", file=stream)
                return EXIT_MISMATCH
    print(f"replay ok: {len(report['files'])} file(s) identical", file=stream)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonconvlab", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=("run", "replay") + EXPERIMENTS)
    p.add_argument("report", nargs="?", help="report.json to replay")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--seeds")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--replay", dest="replay_path")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        if args.command == "replay" or args.replay_path:
            path = args.replay_path or args.report
            if not path:
                print("error: replay needs a report path", file=sys.stderr)
                return EXIT_PARSE
            return replay(Path(path), max(1, args.threads))
        if not args.config:
            print("error: --config is required", file=sys.stderr)
            return EXIT_PARSE
        cfg = load_config(args.config)
        if args.command != "run" and args.command != cfg.experiment:
            cfg.experiment = args.command
        if args.seeds:
            cfg.seeds = parse_seeds(args.seeds)
        out = Path(args.out or cfg.out or "runs")
        path = execute(cfg, out, max(1, args.threads))
        print(path)
        return EXIT_OK
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScheduleError as exc:
        print(f"validation error: schedule {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InvalidLawError, StreamExhaustedError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
