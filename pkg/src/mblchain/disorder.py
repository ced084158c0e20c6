"""Disorder distributions and seeded sampling of random field realizations.

A field realization is the vector (w_j) of on-site energies for one sample
of the disorder.  Sampling is a pure function of (spec, length, seed plan,
realization index): ensembles can be evaluated in any order, in parallel,
and always reproduce bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

KINDS = ("uniform", "constant", "table")


@dataclass(frozen=True)
class DisorderSpec:
    """Single-site disorder distribution, scaled by a coupling constant.

    kind:
        "uniform"  -- uniform density on [support_min, support_max]
        "constant" -- deterministic field, value support_min
        "table"    -- piecewise-constant density on equal-width bins over
                      [support_min, support_max] with the given bin masses
    coupling:
        nonnegative multiplier applied to every sampled value.
    """

    kind: str = "uniform"
    support_min: float = 0.0
    support_max: float = 1.0
    coupling: float = 1.0
    table: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown disorder kind {self.kind!r}")
        if self.coupling < 0:
            raise ConfigurationError("coupling must be nonnegative")
        if self.kind == "constant":
            if self.support_max != self.support_min:
                raise ConfigurationError(
                    "constant disorder requires support_min == support_max")
        else:
            if not self.support_max > self.support_min:
                raise ConfigurationError("empty support")
        if self.kind == "table":
            masses = np.asarray(self.table, dtype=float)
            if masses.size == 0:
                raise ConfigurationError("empty density table")
            if np.any(masses < 0):
                raise ConfigurationError("density table entries must be nonnegative")
            if abs(masses.sum() - 1.0) > 1e-12:
                raise ConfigurationError("density table masses must sum to 1")

    @property
    def mean(self) -> float:
        """Mean of the scaled distribution (closed form)."""
        if self.kind == "constant":
            return self.coupling * self.support_min
        if self.kind == "uniform":
            return self.coupling * 0.5 * (self.support_min + self.support_max)
        masses = np.asarray(self.table, dtype=float)
        edges = np.linspace(self.support_min, self.support_max, masses.size + 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        return self.coupling * float(masses @ centers)

    def require_nonnegative(self):
        """Raise unless the scaled support is contained in [0, inf)."""
        if self.support_min < 0:
            raise ConfigurationError(
                "this model requires a nonnegative random field")


@dataclass(frozen=True)
class SeedPlan:
    """Derivation of independent streams from one base seed.

    Stream seeds come from numpy's splittable SeedSequence: the stream for
    realization ``index`` is SeedSequence(base_seed, spawn_key=(index,)).
    Distinct indices give distinct streams with no shared state, so
    realizations can be sampled in any order.
    """

    base_seed: int

    def stream_seed(self, index: int, tag: int = 0) -> int:
        """Seed of the stream for one realization.  tag 0 is the field
        stream; other tags give further independent streams for the same
        realization (pattern sampling, probe placement, ...)."""
        if index < 0:
            raise ConfigurationError("realization index must be nonnegative")
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(index, tag))
        return int(seq.generate_state(1, np.uint64)[0])

    def generator(self, index: int, tag: int = 0) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=self.stream_seed(index, tag)))


@dataclass(frozen=True)
class FieldRealization:
    """One sampled disorder vector with its seed provenance."""

    values: np.ndarray
    seed: int
    realization_index: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self) -> int:
        return self.values.size


def constant_field(value: float, length: int) -> FieldRealization:
    """Deterministic field w_j = value, outside any seed plan."""
    return FieldRealization(np.full(length, float(value)), seed=0,
                            realization_index=0)


def sample_field(spec: DisorderSpec, length: int, plan: SeedPlan,
                 index: int) -> FieldRealization:
    """Sample one field realization; pure in (spec, length, plan, index)."""
    if length < 1:
        raise ConfigurationError("length must be >= 1")
    stream = plan.stream_seed(index)
    rng = np.random.Generator(np.random.Philox(key=stream))
    if spec.kind == "constant":
        values = np.full(length, spec.support_min)
    elif spec.kind == "uniform":
        values = rng.uniform(spec.support_min, spec.support_max, size=length)
    else:
        masses = np.asarray(spec.table, dtype=float)
        edges = np.linspace(spec.support_min, spec.support_max, masses.size + 1)
        bins = rng.choice(masses.size, size=length, p=masses / masses.sum())
        values = rng.uniform(edges[bins], edges[bins + 1])
    return FieldRealization(spec.coupling * values, seed=stream,
                            realization_index=index)
