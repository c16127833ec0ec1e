"""Record-level identification risk of partially synthetic data.

An intruder who knows a target's unsynthesized variables and the true
confidential values of the synthesized ones searches each released synthetic
dataset for candidate records.  Categorical variables must match exactly;
continuous variables match within a radius around the true value.  A target's
risk is t/c where c is the number of candidates and t indicates whether the
target's own synthetic record is among them; c = 0 gives risk 0.

Matching modes per continuous synthesized variable:
  rectangle (default) -- every variable must fall inside its own interval;
  ellipse             -- the interval half-widths normalize a Euclidean
                         distance instead, and candidates must fall inside
                         the unit ball (zero half-width collapses that axis
                         to exact equality).

Known variables are compared against the released datasets' values; since
known variables are left unsynthesized these coincide with the confidential
values, so the distinction is moot here (documented, not configurable).

Two evaluators are provided: :func:`evaluate` is the exhaustive all-pairs
reference, :func:`evaluate_fast` groups synthetic rows by categorical key and
binary-searches sorted continuous columns.  They produce identical results on
every input; the test suite holds them to bit-exact agreement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from ._parallel import pmap
from .dataset import Dataset, Schema, aligned_codes, check_compatible

# Relative widening for the ball-dimension search window: the binary search
# must never exclude a row the exact criterion accepts, so the window is a
# hair wider than the ball's bounding box and the scan makes the call.
_BALL_WIDEN = 1.0 + 1e-13

_KEY_CAP = 2**62


@dataclass(frozen=True)
class Range:
    """Closed matching interval around a true value."""

    center: float
    lo: float
    hi: float


def make_range(x: float, r: float, percentage: bool = True) -> Range:
    """Interval of half-width r (absolute) or r*|x| (percentage) around x.

    The |x| convention keeps percentage intervals valid for negative values
    and collapses x = 0 to an exact-match point.
    """
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    w = r * abs(x) if percentage else r
    return Range(x, x - w, x + w)


@dataclass(frozen=True)
class RiskConfig:
    """Variable roles and radii for one evaluation.

    known
        Names the intruder observes directly (unsynthesized).
    synthesized
        Names replaced by synthetic values.
    radii
        One nonnegative radius per continuous variable appearing in
        known+synthesized; presence of a radius is what marks a variable
        as continuous for matching.
    """

    known: tuple[str, ...]
    synthesized: tuple[str, ...]
    radii: Mapping[str, float]
    percentage: bool = True
    euclidean: bool = False

    def __post_init__(self):
        object.__setattr__(self, "known", tuple(self.known))
        object.__setattr__(self, "synthesized", tuple(self.synthesized))
        object.__setattr__(self, "radii", dict(self.radii))
        overlap = set(self.known) & set(self.synthesized)
        if overlap:
            raise ValueError(f"variables cannot be both known and synthesized: {sorted(overlap)}")
        for name, r in self.radii.items():
            if r < 0:
                raise ValueError(f"radius for {name!r} must be nonnegative, got {r}")

    def validate_against(self, schema: Schema) -> None:
        used = self.known + self.synthesized
        for name in used:
            spec = schema.var(name)  # raises KeyError on unknown names
            if spec.is_continuous and name not in self.radii:
                raise ValueError(f"continuous variable {name!r} needs a radius")
            if not spec.is_continuous and name in self.radii:
                raise ValueError(f"categorical variable {name!r} must not have a radius")
        extra = set(self.radii) - set(used)
        if extra:
            raise ValueError(f"radii given for variables outside known/synthesized: {sorted(extra)}")

    def _continuous(self, names: Sequence[str]) -> list[str]:
        return [n for n in names if n in self.radii]

    def _categorical(self, names: Sequence[str]) -> list[str]:
        return [n for n in names if n not in self.radii]


@dataclass(frozen=True)
class RecordRisk:
    c: int
    t: int
    ir: float


@dataclass
class RiskResult:
    """Per-record matrices (records x synthetic datasets) plus file summaries."""

    c_matrix: np.ndarray
    t_matrix: np.ndarray
    ir_matrix: np.ndarray
    file_risk: np.ndarray
    true_match_rate: np.ndarray
    false_match_rate: np.ndarray

    @property
    def n_records(self) -> int:
        return self.c_matrix.shape[0]

    @property
    def n_datasets(self) -> int:
        return self.c_matrix.shape[1]

    def to_json_dict(self) -> dict:
        return {
            "c": self.c_matrix.tolist(),
            "t": self.t_matrix.tolist(),
            "ir": self.ir_matrix.tolist(),
            "file_risk": self.file_risk.tolist(),
            "true_match_rate": self.true_match_rate.tolist(),
            "false_match_rate": self.false_match_rate.tolist(),
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1), encoding="utf-8")

    def write_csvs(self, directory: str | Path) -> list[Path]:
        """c.csv / t.csv / ir.csv: one row per record, one column per dataset."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        header = ",".join(f"syn_{k + 1:03d}" for k in range(self.n_datasets))
        written = []
        for stem, mat, fmt in (
            ("c", self.c_matrix, "%d"),
            ("t", self.t_matrix, "%d"),
            ("ir", self.ir_matrix, "%r"),
        ):
            path = directory / f"{stem}.csv"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(header + "\n")
                for row in mat:
                    if fmt == "%r":
                        fh.write(",".join(repr(float(v)) for v in row) + "\n")
                    else:
                        fh.write(",".join(str(int(v)) for v in row) + "\n")
            written.append(path)
        return written


def known_match(target_row: Mapping, candidate_row: Mapping, cfg: RiskConfig) -> int:
    """1 iff the candidate agrees with the target on every known variable.

    Categorical knowns compare exactly; continuous knowns fall within their
    radius interval around the target's value.
    """
    for name in cfg.known:
        tv = target_row[name]
        cv = candidate_row[name]
        if name in cfg.radii:
            rng = make_range(tv, cfg.radii[name], cfg.percentage)
            if not (rng.lo <= cv <= rng.hi):
                return 0
        elif tv != cv:
            return 0
    return 1


def syn_match(target_row: Mapping, candidate_row: Mapping, cfg: RiskConfig) -> int:
    """1 iff the candidate's synthesized values match the target's true values.

    Categorical synthesized variables compare exactly.  Continuous ones use
    per-variable intervals (rectangle mode) or the half-width-normalized unit
    ball (ellipse mode); a zero half-width axis demands exact equality.
    """
    for name in cfg._categorical(cfg.synthesized):
        if target_row[name] != candidate_row[name]:
            return 0
    cont = cfg._continuous(cfg.synthesized)
    if cfg.euclidean:
        s = 0.0
        for name in cont:
            tv = target_row[name]
            cv = candidate_row[name]
            w = cfg.radii[name] * abs(tv) if cfg.percentage else cfg.radii[name]
            if w == 0.0:
                if cv != tv:
                    return 0
            else:
                z = (cv - tv) / w
                s += z * z
        return 1 if s <= 1.0 else 0
    for name in cont:
        rng = make_range(target_row[name], cfg.radii[name], cfg.percentage)
        if not (rng.lo <= candidate_row[name] <= rng.hi):
            return 0
    return 1


def record_risk(i: int, orig: Dataset, syn: Dataset, cfg: RiskConfig) -> RecordRisk:
    """Risk of record i against one synthetic dataset, by direct enumeration."""
    check_compatible(orig, syn)
    cfg.validate_against(orig.schema)
    target = orig.row(i)
    c = 0
    t = 0
    for j in range(syn.n_rows):
        cand = syn.row(j)
        if known_match(target, cand, cfg) and syn_match(target, cand, cfg):
            c += 1
            if j == i:
                t = 1
    return RecordRisk(c, t, t / c if c > 0 else 0.0)


def evaluate(orig: Dataset, syn_list: Sequence[Dataset], cfg: RiskConfig, threads: int = 1) -> RiskResult:
    """All-pairs reference evaluation over a list of synthetic datasets.

    Exhaustively tests every (target, candidate) pair; kept free of grouping
    or search tricks so it can serve as the oracle for :func:`evaluate_fast`.
    Pairs are processed in vectorized row blocks for throughput.
    """
    prep = _prepare(orig, syn_list, cfg)
    cols = pmap(lambda syn: _brute_column(prep, syn), syn_list, threads)
    return _assemble(cols, orig.n_rows)


def evaluate_fast(orig: Dataset, syn_list: Sequence[Dataset], cfg: RiskConfig, threads: int = 1) -> RiskResult:
    """Grouped evaluation; identical output to :func:`evaluate`.

    Synthetic rows are grouped on the categorical key (known + synthesized
    categorical variables), each group is sorted on the first continuous
    column, and per-target candidates are located by binary search before a
    short scan settles the remaining dimensions.
    """
    prep = _prepare(orig, syn_list, cfg)
    cols = pmap(lambda syn: _grouped_column(prep, syn), syn_list, threads)
    return _assemble(cols, orig.n_rows)


# ---------------------------------------------------------------------------
# shared preparation


class _Prepared:
    """Target-side arrays shared across synthetic datasets."""

    def __init__(self, orig: Dataset, cfg: RiskConfig):
        self.orig = orig
        self.cfg = cfg
        self.cat_names = cfg._categorical(cfg.known) + cfg._categorical(cfg.synthesized)
        known_cont = cfg._continuous(cfg.known)
        syn_cont = cfg._continuous(cfg.synthesized)
        if cfg.euclidean:
            self.int_names = known_cont
            self.ball_names = syn_cont
        else:
            self.int_names = known_cont + syn_cont
            self.ball_names = []

        n = orig.n_rows
        self.radices = [len(orig.schema.var(name).levels) for name in self.cat_names]
        self.t_codes = np.column_stack([orig.column(m) for m in self.cat_names]).astype(np.int64) if self.cat_names else np.zeros((n, 0), np.int64)

        self.ilo = np.empty((n, len(self.int_names)))
        self.ihi = np.empty((n, len(self.int_names)))
        for d, name in enumerate(self.int_names):
            center = orig.column(name)
            w = cfg.radii[name] * np.abs(center) if cfg.percentage else np.full(n, cfg.radii[name])
            self.ilo[:, d] = center - w
            self.ihi[:, d] = center + w

        self.bc = np.empty((n, len(self.ball_names)))
        self.bw = np.empty((n, len(self.ball_names)))
        for d, name in enumerate(self.ball_names):
            center = orig.column(name)
            self.bc[:, d] = center
            self.bw[:, d] = cfg.radii[name] * np.abs(center) if cfg.percentage else np.full(n, cfg.radii[name])

        if self.int_names:
            self.s_lo = np.ascontiguousarray(self.ilo[:, 0])
            self.s_hi = np.ascontiguousarray(self.ihi[:, 0])
        elif self.ball_names:
            self.s_lo = self.bc[:, 0] - self.bw[:, 0] * _BALL_WIDEN
            self.s_hi = self.bc[:, 0] + self.bw[:, 0] * _BALL_WIDEN
        else:
            self.s_lo = np.zeros(n)
            self.s_hi = np.zeros(n)

    def syn_arrays(self, syn: Dataset) -> tuple[np.ndarray, np.ndarray]:
        """Candidate-side codes (aligned to the original's levels) and values."""
        n = syn.n_rows
        cat = np.column_stack([aligned_codes(self.orig, syn, m) for m in self.cat_names]).astype(np.int64) if self.cat_names else np.zeros((n, 0), np.int64)
        names = self.int_names + self.ball_names
        cont = np.column_stack([syn.column(m) for m in names]) if names else np.zeros((n, 0))
        return cat, cont


def _prepare(orig: Dataset, syn_list: Sequence[Dataset], cfg: RiskConfig) -> _Prepared:
    if not syn_list:
        raise ValueError("syn_list must contain at least one synthetic dataset")
    cfg.validate_against(orig.schema)
    for syn in syn_list:
        check_compatible(orig, syn)
    return _Prepared(orig, cfg)


def _combine_keys(t_codes: np.ndarray, s_codes: np.ndarray, radices: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Mixed-radix key per row; densely re-encoded if the product would overflow."""
    tk = np.zeros(t_codes.shape[0], np.int64)
    sk = np.zeros(s_codes.shape[0], np.int64)
    bound = 1
    for k, radix in enumerate(radices):
        if bound * radix >= _KEY_CAP:
            both = np.concatenate([tk, sk])
            uniq, inv = np.unique(both, return_inverse=True)
            tk, sk = inv[: tk.size].astype(np.int64), inv[tk.size :].astype(np.int64)
            bound = uniq.size
        tk = tk * radix + t_codes[:, k]
        sk = sk * radix + s_codes[:, k]
        bound *= radix
    return tk, sk


def _grouped_column(prep: _Prepared, syn: Dataset) -> tuple[np.ndarray, np.ndarray]:
    s_codes, s_cont = prep.syn_arrays(syn)
    tkey, skey = _combine_keys(prep.t_codes, s_codes, prep.radices)
    d_total = s_cont.shape[1]
    if d_total > 0:
        order = np.lexsort((s_cont[:, 0], skey))
    else:
        order = np.argsort(skey, kind="stable")
    c, t = _kernels.grouped_counts(
        tkey,
        prep.s_lo,
        prep.s_hi,
        np.ascontiguousarray(prep.ilo),
        np.ascontiguousarray(prep.ihi),
        np.ascontiguousarray(prep.bc),
        np.ascontiguousarray(prep.bw),
        np.ascontiguousarray(skey[order]),
        np.ascontiguousarray(s_cont[order]),
        np.ascontiguousarray(order.astype(np.int64)),
    )
    return c, t


def _brute_column(prep: _Prepared, syn: Dataset, block: int = 512) -> tuple[np.ndarray, np.ndarray]:
    s_codes, s_cont = prep.syn_arrays(syn)
    n_t = prep.t_codes.shape[0]
    n_s = s_codes.shape[0]
    n_int = len(prep.int_names)
    n_ball = len(prep.ball_names)
    c = np.zeros(n_t, np.int64)
    t = np.zeros(n_t, np.int64)
    for start in range(0, n_t, block):
        end = min(start + block, n_t)
        match = np.ones((end - start, n_s), dtype=bool)
        for k in range(prep.t_codes.shape[1]):
            match &= prep.t_codes[start:end, k, None] == s_codes[None, :, k]
        for d in range(n_int):
            v = s_cont[None, :, d]
            match &= (v >= prep.ilo[start:end, d, None]) & (v <= prep.ihi[start:end, d, None])
        if n_ball:
            s = np.zeros((end - start, n_s))
            for d in range(n_ball):
                v = s_cont[:, n_int + d]
                w = prep.bw[start:end, d]
                ctr = prep.bc[start:end, d]
                zero = w == 0.0
                if zero.any():
                    match[zero] &= v[None, :] == ctr[zero, None]
                nz = ~zero
                if nz.any():
                    z = (v[None, :] - ctr[nz, None]) / w[nz, None]
                    s[nz] += z * z
            match &= s <= 1.0
        c[start:end] = match.sum(axis=1)
        diag = np.arange(start, end)
        t[start:end] = match[diag - start, diag]
    return c, t


def _assemble(cols: Sequence[tuple[np.ndarray, np.ndarray]], n: int) -> RiskResult:
    c_matrix = np.column_stack([c for c, _ in cols])
    t_matrix = np.column_stack([t for _, t in cols])
    with np.errstate(invalid="ignore"):
        ir_matrix = np.where(c_matrix > 0, t_matrix / np.maximum(c_matrix, 1), 0.0)
    file_risk = ir_matrix.sum(axis=0)
    unique = c_matrix == 1
    true_hits = (unique & (t_matrix == 1)).sum(axis=0)
    false_hits = (unique & (t_matrix == 0)).sum(axis=0)
    n_unique = unique.sum(axis=0)
    true_match_rate = true_hits / n
    false_match_rate = false_hits / np.maximum(1, n_unique)
    return RiskResult(c_matrix, t_matrix, ir_matrix, file_risk, true_match_rate, false_match_rate)
