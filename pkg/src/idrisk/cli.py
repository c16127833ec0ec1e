"""Command-line interface.

Six subcommands: evaluate, synthesize, sweep, scenarios, mstudy, generate.
Every flag can also be supplied through a JSON config file (--config);
explicit flags win over config values, and the config may even name the
subcommand when none is given on the command line.  Result files land in a
fixed layout under the output directory: risk/ and utility/ for evaluate,
synthetic/ for synthesize, experiments/ for the three studies.

Validation failures exit nonzero after printing a one-line diagnostic that
names the offending field.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import experiments, figures
from .cart import SynthesisPlan, synthesize
from .dataset import Dataset, load_csv, schema_from_json_dict, write_csv
from .propensity import propensity_utility
from .risk import RiskConfig, evaluate_fast

_COMMANDS = ("evaluate", "synthesize", "sweep", "scenarios", "mstudy", "generate")


@dataclass
class RunConfig:
    """Fully merged options for one invocation (flags over config file)."""

    command: str
    orig: str | None = None
    syn: str | None = None
    out: str = "out"
    schema: str | None = None
    categorical: tuple[str, ...] = ()
    known: tuple[str, ...] | None = None
    synvars: tuple[str, ...] | None = None
    r: float | dict[str, float] | None = None
    percentage: bool = True
    euclidean: bool = False
    m: int = 20
    seed: int | None = None
    repetitions: int = 200
    scenario: str = "S1"
    scenarios: tuple[str, ...] = ("S1", "S2", "S3", "S4")
    radii: tuple[float, ...] = experiments.DEFAULT_RADII
    radius: float = 0.1
    radius_policy: str | float = "maximizing"
    known_radius: float | None = 0.1
    m_values: tuple[int, ...] = (1, 10, 20)
    min_bucket: int = 5
    min_split: int = 10
    complexity: float = 1e-8
    n: int | None = None
    figures: bool = False
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)


def _names(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        return tuple(s.strip() for s in value.split(",") if s.strip())
    return tuple(str(v) for v in value)


def _floats(value: Any) -> tuple[float, ...]:
    if isinstance(value, str):
        return tuple(float(s) for s in value.split(",") if s.strip())
    return tuple(float(v) for v in value)


def _ints(value: Any) -> tuple[int, ...]:
    if isinstance(value, str):
        return tuple(int(s) for s in value.split(",") if s.strip())
    return tuple(int(v) for v in value)


def _radius_map(value: Any) -> dict[str, float]:
    if isinstance(value, Mapping):
        return {str(k): float(v) for k, v in value.items()}
    out: dict[str, float] = {}
    for part in str(value).split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"r: malformed map entry {part!r}, expected NAME=VALUE")
        name, _, val = part.partition("=")
        out[name.strip()] = float(val)
    return out


def _known_radius(value: Any) -> float | None:
    if value is None or (isinstance(value, str) and value.lower() in ("sweep", "follow")):
        return None
    return float(value)


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="idrisk", description=__doc__.splitlines()[0])
    top.add_argument("--config", help="JSON config file; flags override its values")
    sub = top.add_subparsers(dest="command")

    def common(p: argparse.ArgumentParser, *, data: bool = True) -> None:
        p.add_argument("--config", help=argparse.SUPPRESS)
        p.add_argument("--out", help="output directory (default out/)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
        if data:
            p.add_argument("--orig", help="original data CSV")
            p.add_argument("--schema", help="JSON schema file for the CSVs")
            p.add_argument("--categorical", help="comma-separated names to force categorical")

    p = sub.add_parser("evaluate", help="identification risk + utility of existing synthetic files")
    common(p)
    p.add_argument("--syn", help="synthetic CSV path, glob, or directory")
    p.add_argument("--known", help="comma-separated intruder-known variables")
    p.add_argument("--synvars", help="comma-separated synthesized variables")
    p.add_argument("--r", type=float, help="one radius for every continuous variable")
    p.add_argument("--r-map", dest="r_map", help="per-variable radii NAME=V,NAME=V")
    p.add_argument("--percentage", action=argparse.BooleanOptionalAction)
    p.add_argument("--euclidean", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("synthesize", help="write m partially synthetic replicates")
    common(p)
    p.add_argument("--synvars", help="visit sequence, comma separated")
    p.add_argument("--m", type=int)
    p.add_argument("--min-bucket", dest="min_bucket", type=int)
    p.add_argument("--min-split", dest="min_split", type=int)
    p.add_argument("--complexity", type=float)

    p = sub.add_parser("sweep", help="file risk across a radius grid for one scenario")
    common(p)
    p.add_argument("--scenario", help="S1, S2, S3, or S4")
    p.add_argument("--radii", help="comma-separated radius grid")
    p.add_argument("--m", type=int)
    p.add_argument("--known", help="comma-separated intruder-known variables")
    p.add_argument("--known-radius", dest="known_radius",
                   help="fixed radius for known continuous variables, or 'sweep' to follow the grid")
    p.add_argument("--percentage", action=argparse.BooleanOptionalAction)
    p.add_argument("--euclidean", action=argparse.BooleanOptionalAction)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("scenarios", help="risk-utility comparison of scenarios at maximizing radii")
    common(p)
    p.add_argument("--scenarios", help="comma-separated scenario ids")
    p.add_argument("--radii", help="comma-separated radius grid")
    p.add_argument("--radius-policy", dest="radius_policy", help="'maximizing' or a fixed radius")
    p.add_argument("--m", type=int)
    p.add_argument("--known", help="comma-separated intruder-known variables")
    p.add_argument("--known-radius", dest="known_radius")
    p.add_argument("--percentage", action=argparse.BooleanOptionalAction)
    p.add_argument("--euclidean", action=argparse.BooleanOptionalAction)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("mstudy", help="risk/utility spread across repetitions for several m")
    common(p)
    p.add_argument("--scenario", help="S1, S2, S3, or S4")
    p.add_argument("--m-values", dest="m_values", help="comma-separated m values")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--radius", type=float, help="fixed matching radius")
    p.add_argument("--known", help="comma-separated intruder-known variables")
    p.add_argument("--known-radius", dest="known_radius")
    p.add_argument("--percentage", action=argparse.BooleanOptionalAction)
    p.add_argument("--euclidean", action=argparse.BooleanOptionalAction)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("generate", help="write a consumer-expenditure-style CSV")
    common(p, data=False)
    p.add_argument("--n", type=int, help="number of rows")

    return top


def _config_from_argv(argv: Sequence[str]) -> dict:
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return {}
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(cfg, dict):
        raise ValueError("config: top level must be a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, cfg: Mapping[str, Any]) -> RunConfig:
    def pick(key: str, default: Any) -> Any:
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        if key in cfg and cfg[key] is not None:
            return cfg[key]
        return default

    base = RunConfig(command=args.command)
    r_flag = getattr(args, "r", None)
    r_map_flag = getattr(args, "r_map", None)
    if r_flag is not None and r_map_flag is not None:
        raise ValueError("r: give either a single radius (--r) or a per-variable map (--r-map), not both")
    r: float | dict[str, float] | None = base.r
    if r_flag is not None:
        r = float(r_flag)
    elif r_map_flag is not None:
        r = _radius_map(r_map_flag)
    elif cfg.get("r") is not None:
        raw = cfg["r"]
        r = _radius_map(raw) if isinstance(raw, Mapping) else float(raw)

    known = pick("known", None)
    synvars = pick("synvars", None)
    return RunConfig(
        command=args.command,
        orig=pick("orig", base.orig),
        syn=pick("syn", base.syn),
        out=str(pick("out", base.out)),
        schema=pick("schema", base.schema),
        categorical=_names(pick("categorical", ())),
        known=None if known is None else _names(known),
        synvars=None if synvars is None else _names(synvars),
        r=r,
        percentage=bool(pick("percentage", base.percentage)),
        euclidean=bool(pick("euclidean", base.euclidean)),
        m=int(pick("m", base.m)),
        seed=pick("seed", base.seed),
        repetitions=int(pick("repetitions", base.repetitions)),
        scenario=str(pick("scenario", base.scenario)),
        scenarios=_names(pick("scenarios", base.scenarios)),
        radii=_floats(pick("radii", base.radii)),
        radius=float(pick("radius", base.radius)),
        radius_policy=pick("radius_policy", base.radius_policy),
        known_radius=_known_radius(pick("known_radius", base.known_radius)),
        m_values=_ints(pick("m_values", base.m_values)),
        min_bucket=int(pick("min_bucket", base.min_bucket)),
        min_split=int(pick("min_split", base.min_split)),
        complexity=float(pick("complexity", base.complexity)),
        n=pick("n", base.n),
        figures=bool(pick("figures", False)),
        threads=int(pick("threads", base.threads)),
    )


def _require(rc: RunConfig, field_name: str) -> Any:
    value = getattr(rc, field_name)
    if value is None:
        raise ValueError(f"{field_name}: required for the {rc.command} command")
    return value


def _load_orig(rc: RunConfig) -> Dataset:
    path = _require(rc, "orig")
    schema = None
    if rc.schema:
        schema = schema_from_json_dict(json.loads(Path(rc.schema).read_text(encoding="utf-8")))
    return load_csv(path, schema_hint=schema, categorical=rc.categorical)


def _load_syn(rc: RunConfig, orig: Dataset) -> list[Dataset]:
    pattern = _require(rc, "syn")
    if Path(pattern).is_dir():
        paths = sorted(Path(pattern).glob("*.csv"))
    else:
        paths = [Path(p) for p in sorted(globmod.glob(pattern))]
        if not paths and Path(pattern).exists():
            paths = [Path(pattern)]
    if not paths:
        raise ValueError(f"syn: no CSV files match {pattern!r}")
    return [load_csv(p, schema_hint=orig.schema) for p in paths]


def _resolve_radii_map(rc: RunConfig, orig: Dataset, known: Sequence[str], synvars: Sequence[str]) -> dict[str, float]:
    continuous = [v for v in (*known, *synvars) if orig.schema.var(v).is_continuous]
    if rc.r is None:
        raise ValueError("r: required for the evaluate command")
    if isinstance(rc.r, dict):
        return dict(rc.r)
    return {v: float(rc.r) for v in continuous}


def _print_series(label: str, values: np.ndarray, limit: int = 8) -> None:
    shown = ", ".join(f"{v:.6g}" for v in values[:limit])
    more = f", ... ({values.size} total)" if values.size > limit else ""
    print(f"  {label}: {shown}{more}")


def _cmd_evaluate(rc: RunConfig) -> int:
    orig = _load_orig(rc)
    syn = _load_syn(rc, orig)
    known = _require(rc, "known")
    synvars = _require(rc, "synvars")
    cfg = RiskConfig(known=known, synthesized=synvars,
                     radii=_resolve_radii_map(rc, orig, known, synvars),
                     percentage=rc.percentage, euclidean=rc.euclidean)
    result = evaluate_fast(orig, syn, cfg, threads=rc.threads)
    util = propensity_utility(orig, syn, threads=rc.threads)
    risk_dir = Path(rc.out) / "risk"
    util_dir = Path(rc.out) / "utility"
    risk_dir.mkdir(parents=True, exist_ok=True)
    util_dir.mkdir(parents=True, exist_ok=True)
    result.write_csvs(risk_dir)
    result.write_json(risk_dir / "risk.json")
    util.write_csv(util_dir / "u_p.csv")
    util.write_json(util_dir / "utility.json")
    print(f"evaluated {len(syn)} synthetic dataset(s) of {orig.n_rows} records")
    _print_series("file risk", result.file_risk)
    _print_series("true match rate", result.true_match_rate)
    _print_series("false match rate", result.false_match_rate)
    _print_series("U_p", util.per_dataset)
    print(f"  mean file risk {result.file_risk.mean():.6g}, mean U_p {util.u_p:.6g}")
    print(f"wrote {risk_dir}/ and {util_dir}/")
    return 0


def _cmd_synthesize(rc: RunConfig) -> int:
    orig = _load_orig(rc)
    synvars = _require(rc, "synvars")
    plan = SynthesisPlan(synvars, m=rc.m, min_bucket=rc.min_bucket, min_split=rc.min_split,
                         complexity_threshold=rc.complexity, seed=rc.seed)
    reps = synthesize(orig, plan, threads=rc.threads)
    out_dir = Path(rc.out) / "synthetic"
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, rep in enumerate(reps):
        write_csv(rep, out_dir / f"syn_{k + 1:03d}.csv")
    print(f"wrote {len(reps)} replicate(s) to {out_dir}/ (synthesized: {', '.join(synvars)})")
    return 0


def _experiments_dir(rc: RunConfig) -> Path:
    d = Path(rc.out) / "experiments"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _cmd_sweep(rc: RunConfig) -> int:
    orig = _load_orig(rc)
    known = rc.known if rc.known is not None else experiments.KNOWN_VARS
    res = experiments.radius_sweep(orig, rc.scenario, rc.radii, m=rc.m, seed=rc.seed,
                                   known=known, known_radius=rc.known_radius,
                                   percentage=rc.percentage, euclidean=rc.euclidean, threads=rc.threads)
    out = _experiments_dir(rc)
    res.write_json(out / f"sweep_{res.scenario.id}.json")
    res.write_csv(out / f"sweep_{res.scenario.id}.csv")
    print(f"scenario {res.scenario.id}, m = {rc.m}")
    for r, mean, s in zip(res.radii, res.mean_risks(), res.summaries):
        print(f"  r = {r:<6g} mean file risk {mean:9.4f}   [min {s.min:.4f}, q1 {s.q1:.4f}, "
              f"median {s.median:.4f}, q3 {s.q3:.4f}, max {s.max:.4f}]")
    print(f"maximizing radius: {res.maximizing_radius:g}")
    if rc.figures:
        print("figure:", figures.sweep_figure(res, out / f"sweep_{res.scenario.id}.svg"))
    print(f"wrote {out}/")
    return 0


def _cmd_scenarios(rc: RunConfig) -> int:
    orig = _load_orig(rc)
    known = rc.known if rc.known is not None else experiments.KNOWN_VARS
    policy = rc.radius_policy if rc.radius_policy == "maximizing" else float(rc.radius_policy)
    res = experiments.scenario_study(orig, rc.scenarios, m=rc.m, radii=rc.radii, radius_policy=policy,
                                     seed=rc.seed, known=known, known_radius=rc.known_radius,
                                     percentage=rc.percentage, euclidean=rc.euclidean, threads=rc.threads)
    out = _experiments_dir(rc)
    res.write_json(out / "scenarios.json")
    res.write_csv(out / "scenarios.csv")
    for o in res.outcomes:
        print(f"  {o.scenario.id}: r = {o.radius:<6g} mean file risk {o.file_risks.mean():9.4f}  "
              f"mean U_p {o.u_p.mean():.6f}")
    if rc.figures:
        print("figure:", figures.scenario_figure(res, out / "scenarios.svg"))
    print(f"wrote {out}/")
    return 0


def _cmd_mstudy(rc: RunConfig) -> int:
    orig = _load_orig(rc)
    known = rc.known if rc.known is not None else experiments.KNOWN_VARS
    res = experiments.m_study(orig, rc.scenario, rc.m_values, rc.repetitions, radius=rc.radius,
                              seed=rc.seed, known=known, known_radius=rc.known_radius,
                              percentage=rc.percentage, euclidean=rc.euclidean, threads=rc.threads)
    out = _experiments_dir(rc)
    res.write_json(out / "mstudy.json")
    res.write_csv(out / "mstudy.csv")
    print(f"scenario {res.scenario.id} at r = {res.radius:g}, {rc.repetitions} repetitions")
    for i, m in enumerate(res.m_values):
        b = res.boxes[i].risk
        print(f"  m = {m:<3d} mean risk median {b.median:9.4f}  IQR {b.q3 - b.q1:9.4f}  "
              f"range [{b.min:.4f}, {b.max:.4f}]")
    if rc.figures:
        print("figure:", figures.mstudy_figure(res, out / "mstudy.svg"))
    print(f"wrote {out}/")
    return 0


def _cmd_generate(rc: RunConfig) -> int:
    n = _require(rc, "n")
    ds = experiments.generate_ce_like(int(n), seed=rc.seed)
    out = Path(rc.out)
    if out.suffix.lower() != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "ce_like.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out)
    print(f"wrote {ds.n_rows} rows to {out}")
    return 0


_HANDLERS = {
    "evaluate": _cmd_evaluate,
    "synthesize": _cmd_synthesize,
    "sweep": _cmd_sweep,
    "scenarios": _cmd_scenarios,
    "mstudy": _cmd_mstudy,
    "generate": _cmd_generate,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = _config_from_argv(argv)
        if cfg.get("command") and not any(tok in _COMMANDS for tok in argv):
            argv.insert(0, str(cfg["command"]))
        parser = _build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a command is required (or put \"command\" in the config file)")
        rc = _resolve(args, cfg)
        return _HANDLERS[rc.command](rc)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
