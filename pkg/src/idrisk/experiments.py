"""The three built-in studies plus a consumer-expenditure-style generator.

radius_sweep measures file-level risk across a grid of matching radii for
one synthesis scenario.  scenario_study compares the four standard
scenarios at each one's maximizing radius, pairing risk with propensity
utility.  m_study repeats synthesis many times to show how the spread of
repetition-averaged risk and utility shrinks as the number of released
replicates m grows.

The bundled generator stands in for the (non-public) survey sample the
studies were designed around: seven variables with the same roles, i.e.
intruder-known Age/Urban/Marital, synthesizable Tenure/Expenditure/Income,
and Educ as a model predictor only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import truncnorm

from ._parallel import pmap
from .cart import SynthesisPlan, synthesize
from .dataset import Dataset, Schema, VariableSpec, VarKind
from .propensity import propensity_utility
from .risk import RiskConfig, evaluate_fast

KNOWN_VARS = ("Age", "Urban", "Marital")
DEFAULT_RADII = (0.01, 0.025, 0.05, 0.1, 0.2, 0.3)


@dataclass(frozen=True)
class Scenario:
    id: str
    visit_sequence: tuple[str, ...]


SCENARIOS = (
    Scenario("S1", ("Income",)),
    Scenario("S2", ("Tenure", "Income")),
    Scenario("S3", ("Expenditure", "Income")),
    Scenario("S4", ("Tenure", "Expenditure", "Income")),
)


def get_scenario(sid: str | Scenario) -> Scenario:
    if isinstance(sid, Scenario):
        return sid
    for sc in SCENARIOS:
        if sc.id == sid:
            return sc
    raise ValueError(f"unknown scenario {sid!r}; expected one of {[s.id for s in SCENARIOS]}")


@dataclass(frozen=True)
class BoxSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def __post_init__(self) -> None:
        if not (self.min <= self.q1 <= self.median <= self.q3 <= self.max):
            raise ValueError("box summary quantiles out of order")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "BoxSummary":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise ValueError("cannot summarize an empty sample")
        return cls(float(v.min()), float(np.percentile(v, 25)), float(np.median(v)),
                   float(np.percentile(v, 75)), float(v.max()))

    def to_json_dict(self) -> dict:
        return {"min": self.min, "q1": self.q1, "median": self.median, "q3": self.q3, "max": self.max}


@dataclass(frozen=True)
class Box2D:
    risk: BoxSummary
    utility: BoxSummary

    def to_json_dict(self) -> dict:
        return {"risk": self.risk.to_json_dict(), "utility": self.utility.to_json_dict()}


_URBAN = ("Urban area", "Rural area")
_TENURE = ("Owner with mortgage", "Owner outright", "Renter", "Rent free", "Student housing", "Other tenure")
_EDUC = ("No diploma", "High school", "Some college", "Associate degree", "Bachelor degree",
         "Master degree", "Professional degree", "Doctorate")
_MARITAL = ("Married", "Widowed", "Divorced", "Separated", "Never married")

CE_SCHEMA = Schema((
    VariableSpec("Age", VarKind.CONTINUOUS),
    VariableSpec("Urban", VarKind.CATEGORICAL, _URBAN),
    VariableSpec("Tenure", VarKind.CATEGORICAL, _TENURE),
    VariableSpec("Educ", VarKind.CATEGORICAL, _EDUC),
    VariableSpec("Expenditure", VarKind.CONTINUOUS),
    VariableSpec("Income", VarKind.CONTINUOUS),
    VariableSpec("Marital", VarKind.CATEGORICAL, _MARITAL),
))


def generate_ce_like(n: int, seed: int | None = None) -> Dataset:
    """A consumer-expenditure-style sample of n households.

    Age is truncated normal on [20, 80] in whole years; Income and
    Expenditure are log-normal, positively correlated with each other
    (through a shared latent factor) and with Age; the categorical
    variables follow fixed marginal frequencies.  Deterministic for a
    fixed seed.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    lo, hi = (20.0 - 45.0) / 15.0, (80.0 - 45.0) / 15.0
    age = np.round(truncnorm.rvs(lo, hi, loc=45.0, scale=15.0, size=n, random_state=rng))
    urban = rng.choice(len(_URBAN), size=n, p=(0.93, 0.07))
    tenure = rng.choice(len(_TENURE), size=n, p=(0.38, 0.26, 0.30, 0.03, 0.02, 0.01))
    educ = rng.choice(len(_EDUC), size=n, p=(0.10, 0.26, 0.21, 0.10, 0.20, 0.09, 0.02, 0.02))
    marital = rng.choice(len(_MARITAL), size=n, p=(0.52, 0.07, 0.15, 0.03, 0.23))
    a = (age - 46.8) / 13.4
    z = rng.standard_normal(n)
    log_income = 10.2 + 0.25 * a + 0.55 * z + 0.45 * rng.standard_normal(n)
    log_expend = 9.6 + 0.20 * a + 0.50 * z + 0.40 * rng.standard_normal(n)
    income = np.round(np.exp(log_income), 2)
    expend = np.round(np.exp(log_expend), 2)
    return Dataset(CE_SCHEMA, {
        "Age": age, "Urban": urban, "Tenure": tenure, "Educ": educ,
        "Expenditure": expend, "Income": income, "Marital": marital,
    })


def _risk_config(orig: Dataset, scenario: Scenario, r: float, known: tuple[str, ...],
                 known_radius: float | None, percentage: bool, euclidean: bool) -> RiskConfig:
    radii: dict[str, float] = {}
    for name in (*known, *scenario.visit_sequence):
        if orig.schema.var(name).is_continuous:
            radii[name] = known_radius if (name in known and known_radius is not None) else r
    return RiskConfig(known=known, synthesized=scenario.visit_sequence, radii=radii,
                      percentage=percentage, euclidean=euclidean)


@dataclass
class SweepResult:
    scenario: Scenario
    radii: tuple[float, ...]
    file_risks: np.ndarray  # shape (len(radii), m)
    summaries: tuple[BoxSummary, ...]
    maximizing_radius: float

    def mean_risks(self) -> np.ndarray:
        return self.file_risks.mean(axis=1)

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario.id,
            "radii": list(self.radii),
            "file_risks": self.file_risks.tolist(),
            "mean_file_risks": self.mean_risks().tolist(),
            "summaries": [s.to_json_dict() for s in self.summaries],
            "maximizing_radius": self.maximizing_radius,
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1), encoding="utf-8")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("scenario,radius,replicate,file_risk\n")
            for i, r in enumerate(self.radii):
                for j in range(self.file_risks.shape[1]):
                    fh.write(f"{self.scenario.id},{r!r},{j + 1},{float(self.file_risks[i, j])!r}\n")


def radius_sweep(
    orig: Dataset,
    scenario: Scenario | str,
    radii: Sequence[float] = DEFAULT_RADII,
    m: int = 20,
    seed: int | None = None,
    known: Sequence[str] = KNOWN_VARS,
    known_radius: float | None = None,
    percentage: bool = True,
    euclidean: bool = False,
    threads: int = 1,
    replicates: Sequence[Dataset] | None = None,
) -> SweepResult:
    """File risk of one scenario across a radius grid.

    Synthesis happens once; every radius is evaluated against the same m
    replicates.  known_radius pins the known continuous variables to a
    fixed radius (None lets them follow the swept value).  Pre-built
    replicates can be passed to skip synthesis.  The maximizing radius is
    the grid value with the largest mean file risk, ties going to the
    smaller radius.
    """
    scenario = get_scenario(scenario)
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise ValueError("radii must be nonempty")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if replicates is None:
        replicates = synthesize(orig, SynthesisPlan(scenario.visit_sequence, m=m, seed=seed), threads=threads)
    risks = np.empty((len(radii), len(replicates)))
    for i, r in enumerate(radii):
        cfg = _risk_config(orig, scenario, r, tuple(known), known_radius, percentage, euclidean)
        risks[i] = evaluate_fast(orig, replicates, cfg, threads=threads).file_risk
    means = risks.mean(axis=1)
    best = min((-means[i], r) for i, r in enumerate(radii))[1]
    return SweepResult(scenario, radii, risks, tuple(BoxSummary.from_values(row) for row in risks), best)


@dataclass
class ScenarioOutcome:
    scenario: Scenario
    radius: float
    file_risks: np.ndarray  # m values at the chosen radius
    u_p: np.ndarray  # m values
    box: Box2D
    sweep: SweepResult

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario.id,
            "radius": self.radius,
            "file_risks": self.file_risks.tolist(),
            "u_p": self.u_p.tolist(),
            "box": self.box.to_json_dict(),
            "sweep": self.sweep.to_json_dict(),
        }


@dataclass
class ScenarioStudyResult:
    outcomes: tuple[ScenarioOutcome, ...]

    def outcome(self, sid: str) -> ScenarioOutcome:
        for o in self.outcomes:
            if o.scenario.id == sid:
                return o
        raise KeyError(sid)

    def to_json_dict(self) -> dict:
        return {"scenarios": [o.to_json_dict() for o in self.outcomes]}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1), encoding="utf-8")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("scenario,radius,replicate,file_risk,u_p\n")
            for o in self.outcomes:
                for j in range(o.file_risks.size):
                    fh.write(f"{o.scenario.id},{o.radius!r},{j + 1},{float(o.file_risks[j])!r},{float(o.u_p[j])!r}\n")


def scenario_study(
    orig: Dataset,
    scenarios: Sequence[Scenario | str] = SCENARIOS,
    m: int = 20,
    radii: Sequence[float] = DEFAULT_RADII,
    radius_policy: str | float = "maximizing",
    seed: int | None = None,
    known: Sequence[str] = KNOWN_VARS,
    known_radius: float | None = None,
    percentage: bool = True,
    euclidean: bool = False,
    threads: int = 1,
) -> ScenarioStudyResult:
    """Risk-utility comparison of several scenarios.

    Each scenario is synthesized once (m replicates, its own seed stream),
    swept over the radius grid, and reported at its maximizing radius; a
    numeric radius_policy skips the sweep and fixes that radius for every
    scenario.  Utility is one propensity score per replicate.
    """
    chosen = tuple(get_scenario(s) for s in scenarios)
    if not chosen:
        raise ValueError("scenarios must be nonempty")
    if radius_policy != "maximizing":
        radii = (float(radius_policy),)
    seeds = np.random.SeedSequence(seed).generate_state(len(chosen))
    outcomes = []
    for sc, sc_seed in zip(chosen, seeds):
        reps = synthesize(orig, SynthesisPlan(sc.visit_sequence, m=m, seed=int(sc_seed)), threads=threads)
        sweep = radius_sweep(orig, sc, radii, known=tuple(known), known_radius=known_radius,
                             percentage=percentage, euclidean=euclidean, threads=threads, replicates=reps)
        at = sweep.radii.index(sweep.maximizing_radius)
        u = propensity_utility(orig, reps, threads=threads).per_dataset
        box = Box2D(BoxSummary.from_values(sweep.file_risks[at]), BoxSummary.from_values(u))
        outcomes.append(ScenarioOutcome(sc, sweep.maximizing_radius, sweep.file_risks[at], u, box, sweep))
    return ScenarioStudyResult(tuple(outcomes))


@dataclass
class MStudyResult:
    scenario: Scenario
    radius: float
    m_values: tuple[int, ...]
    mean_risks: np.ndarray  # shape (len(m_values), repetitions)
    mean_utils: np.ndarray
    boxes: tuple[Box2D, ...]

    def risk_iqr(self, m: int) -> float:
        row = self.mean_risks[self.m_values.index(m)]
        return float(np.percentile(row, 75) - np.percentile(row, 25))

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario.id,
            "radius": self.radius,
            "m_values": list(self.m_values),
            "mean_file_risks": self.mean_risks.tolist(),
            "mean_u_p": self.mean_utils.tolist(),
            "boxes": [b.to_json_dict() for b in self.boxes],
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1), encoding="utf-8")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("scenario,m,repetition,mean_file_risk,mean_u_p\n")
            for i, m in enumerate(self.m_values):
                for j in range(self.mean_risks.shape[1]):
                    fh.write(f"{self.scenario.id},{m},{j + 1},{float(self.mean_risks[i, j])!r},{float(self.mean_utils[i, j])!r}\n")


def m_study(
    orig: Dataset,
    scenario: Scenario | str = "S1",
    m_values: Sequence[int] = (1, 10, 20),
    repetitions: int = 200,
    radius: float = 0.1,
    seed: int | None = None,
    known: Sequence[str] = KNOWN_VARS,
    known_radius: float | None = None,
    percentage: bool = True,
    euclidean: bool = False,
    threads: int = 1,
) -> MStudyResult:
    """Spread of repetition-averaged risk and utility as m varies.

    Every (m, repetition) cell synthesizes a fresh set of m replicates from
    its own pre-derived seed, evaluates risk at one fixed radius, and stores
    the mean file risk and mean propensity utility across the m replicates.
    Per-m distributions over repetitions come back as 2D box summaries
    (whisker convention: median out to min and max).
    """
    scenario = get_scenario(scenario)
    m_values = tuple(int(m) for m in m_values)
    if repetitions < 2:
        raise ValueError("repetitions must be at least 2")
    if any(m < 1 for m in m_values):
        raise ValueError("m values must be at least 1")
    cfg = _risk_config(orig, scenario, float(radius), tuple(known), known_radius, percentage, euclidean)
    seeds = np.random.SeedSequence(seed).generate_state(len(m_values) * repetitions, dtype=np.uint64)

    def one(job: tuple[int, int]) -> tuple[float, float]:
        m, cell_seed = job
        reps = synthesize(orig, SynthesisPlan(scenario.visit_sequence, m=m, seed=cell_seed))
        risk = evaluate_fast(orig, reps, cfg)
        util = propensity_utility(orig, reps)
        return float(risk.file_risk.mean()), util.u_p

    jobs = [(m, int(seeds[i * repetitions + j])) for i, m in enumerate(m_values) for j in range(repetitions)]
    flat = pmap(one, jobs, threads)
    mean_risks = np.array([r for r, _ in flat]).reshape(len(m_values), repetitions)
    mean_utils = np.array([u for _, u in flat]).reshape(len(m_values), repetitions)
    boxes = tuple(Box2D(BoxSummary.from_values(mean_risks[i]), BoxSummary.from_values(mean_utils[i]))
                  for i in range(len(m_values)))
    return MStudyResult(scenario, float(radius), m_values, mean_risks, mean_utils, boxes)
