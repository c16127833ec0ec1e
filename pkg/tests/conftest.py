"""Shared helpers for building datasets and random matching instances."""

from __future__ import annotations

import numpy as np

from idrisk.dataset import Dataset, Schema, VariableSpec, VarKind
from idrisk.risk import RiskConfig

_SCALES = (0.5, 3.0, 120.0, 9000.0)


def make_dataset(columns: dict[str, np.ndarray], levels: dict[str, tuple[str, ...]] | None = None) -> Dataset:
    """Dataset from raw arrays; names in `levels` become categorical."""
    levels = levels or {}
    specs = []
    for name in columns:
        if name in levels:
            specs.append(VariableSpec(name, VarKind.CATEGORICAL, levels[name]))
        else:
            specs.append(VariableSpec(name, VarKind.CONTINUOUS))
    return Dataset(Schema(tuple(specs)), columns)


def random_instance(rng: np.random.Generator, n_max: int = 200):
    """A random (orig, syn_list, cfg) matching problem.

    Shapes follow the oracle-equivalence brief: up to 3 continuous and 2
    categorical synthesized variables, optional known variables of both
    kinds, random radii including exact zeros, both percentage/absolute
    and rectangle/ellipse modes.  Values sit on coarse grids so ties and
    boundary hits actually occur.
    """
    n = int(rng.integers(1, n_max + 1))
    n_kc = int(rng.integers(0, 3))   # known continuous
    n_kg = int(rng.integers(0, 3))   # known categorical
    n_sc = int(rng.integers(1, 4))   # synthesized continuous
    n_sg = int(rng.integers(0, 3))   # synthesized categorical

    def cont_column() -> np.ndarray:
        scale = float(rng.choice(_SCALES))
        vals = np.round(rng.normal(0.0, scale, n), 1)
        if rng.random() < 0.5:
            vals = np.abs(vals)  # mostly positive, like money amounts
        if rng.random() < 0.3:
            vals[rng.random(n) < 0.2] = 0.0  # exact zeros hit the |x| rule
        return vals

    def cat_column(n_levels: int) -> np.ndarray:
        return rng.integers(0, n_levels, n)

    columns: dict[str, np.ndarray] = {}
    levels: dict[str, tuple[str, ...]] = {}
    known, synthesized, radii = [], [], {}
    for k in range(n_kc):
        name = f"kc{k}"
        columns[name] = cont_column()
        known.append(name)
        radii[name] = _random_radius(rng)
    for k in range(n_kg):
        name = f"kg{k}"
        n_levels = int(rng.integers(2, 5))
        levels[name] = tuple(f"L{j}" for j in range(n_levels))
        columns[name] = cat_column(n_levels)
        known.append(name)
    for k in range(n_sc):
        name = f"sc{k}"
        columns[name] = cont_column()
        synthesized.append(name)
        radii[name] = _random_radius(rng)
    for k in range(n_sg):
        name = f"sg{k}"
        n_levels = int(rng.integers(2, 5))
        levels[name] = tuple(f"M{j}" for j in range(n_levels))
        columns[name] = cat_column(n_levels)
        synthesized.append(name)

    orig = make_dataset(columns, levels)
    m = int(rng.integers(1, 4))
    syn_list = []
    for _ in range(m):
        syn_cols = dict(columns)
        for name in synthesized:
            if name in levels:
                syn_cols[name] = cat_column(len(levels[name]))
            else:
                # resample from the original pool so near-boundary ties occur
                syn_cols[name] = rng.choice(columns[name], size=n)
        syn_list.append(make_dataset(syn_cols, levels))

    cfg = RiskConfig(
        known=tuple(known),
        synthesized=tuple(synthesized),
        radii=radii,
        percentage=bool(rng.random() < 0.5),
        euclidean=bool(rng.random() < 0.5),
    )
    return orig, syn_list, cfg


def _random_radius(rng: np.random.Generator) -> float:
    if rng.random() < 0.15:
        return 0.0
    return float(np.round(rng.uniform(0.01, 0.5), 3))
