"""Arrival timelines, gap extraction and superposed-stream simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from .distributions import HeadwayModel
from .errors import DataError, DomainError
from .superposition import SuperposedGapModel

__all__ = [
    "ArrivalTimeline",
    "GapSample",
    "gaps_from_arrivals",
    "simulate_component",
    "simulate_arrivals",
    "simulate_superposed",
]


@dataclass(frozen=True)
class ArrivalTimeline:
    """Crossing times at a road section, grouped by lane.

    A disorderly stream has no lanes; it is stored as a single group with
    ``merged=True`` and may contain simultaneous crossings.
    """

    lanes: Mapping[Hashable, np.ndarray]
    merged: bool = False

    def __post_init__(self):
        clean = {}
        for lane, times in self.lanes.items():
            arr = np.asarray(times, dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise DataError(f"lane {lane!r}: non-finite crossing time")
            d = np.diff(arr)
            bad = np.flatnonzero(d < 0 if self.merged else d <= 0)
            if bad.size:
                i = int(bad[0]) + 1
                raise DataError(
                    f"lane {lane!r}: crossing time at index {i} ({arr[i]!r}) does not "
                    f"follow {arr[i - 1]!r}"
                )
            clean[lane] = arr
        object.__setattr__(self, "lanes", clean)

    @classmethod
    def from_merged(cls, times) -> "ArrivalTimeline":
        return cls({None: times}, merged=True)

    @property
    def n_arrivals(self) -> int:
        return int(sum(t.size for t in self.lanes.values()))

    def merged_times(self) -> np.ndarray:
        if not self.lanes:
            return np.empty(0)
        return np.sort(np.concatenate(list(self.lanes.values())), kind="mergesort")

    def headways(self, lane) -> np.ndarray:
        """Within-lane headways; only meaningful for orderly streams."""
        if self.merged:
            raise DomainError("headways are undefined for a merged (disorderly) stream")
        return np.diff(self.lanes[lane])


@dataclass(frozen=True)
class GapSample:
    """Successive gaps of the merged stream plus where they came from."""

    gaps: np.ndarray
    site: str = ""
    duration: float = float("nan")
    n_arrivals: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_zero(self) -> int:
        return int(np.count_nonzero(self.gaps == 0))

    def positive(self) -> np.ndarray:
        return self.gaps[self.gaps > 0]

    def __len__(self):
        return self.gaps.size


def gaps_from_arrivals(timeline: ArrivalTimeline, site: str = "") -> GapSample:
    """Gaps as successive differences of the sorted, merged crossing times.

    Simultaneous crossings in different lanes give zero gaps; they are kept
    here and counted in :attr:`GapSample.n_zero`.
    """
    times = timeline.merged_times()
    if times.size < 2:
        raise DomainError("at least two arrivals are needed to form a gap")
    return GapSample(
        gaps=np.diff(times),
        site=site,
        duration=float(times[-1] - times[0]),
        n_arrivals=int(times.size),
    )


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_component(model: HeadwayModel, horizon: float, seed=None) -> np.ndarray:
    """Arrival times in ``(0, horizon]`` of a renewal process started at 0.

    Headways are drawn in blocks sized from the expected count, so the result
    for a given seed does not depend on anything but ``model`` and ``horizon``.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    rng = _generator(seed)
    tiny = np.finfo(float).tiny
    expected = horizon / model.mean
    block = int(min(max(expected * 1.05 + 10.0 * np.sqrt(expected) + 16, 16), 1 << 22))
    pieces = []
    t0 = 0.0
    while True:
        h = np.maximum(model._draw(rng, block), tiny)
        times = t0 + np.cumsum(h)
        pieces.append(times)
        if times[-1] > horizon:
            break
        t0 = times[-1]
    out = np.concatenate(pieces)
    out = out[: np.searchsorted(out, horizon, side="right")]
    return _strictly_increasing(out)


def _strictly_increasing(t: np.ndarray) -> np.ndarray:
    # a headway below one ulp of the absolute time vanishes in the cumulative
    # sum (shapes below 1 make this happen at large t); move such arrivals to
    # the next representable time instead of losing the vehicle
    bad = np.flatnonzero(np.diff(t) <= 0)
    while bad.size:
        for i in bad:
            if t[i + 1] <= t[i]:
                t[i + 1] = np.nextafter(t[i], np.inf)
        bad = np.flatnonzero(np.diff(t) <= 0)
    return t


def simulate_arrivals(
    model: SuperposedGapModel,
    horizon: float,
    seed=None,
    warmup: float | None = None,
    resolution: float | None = None,
) -> ArrivalTimeline:
    """Lane-wise arrivals of every component, with the warmup period removed.

    Components draw from independent child seeds of ``seed``. With
    ``resolution`` (for instance 1/25 s for video) times are rounded to that
    grid, which can produce simultaneous crossings.
    """
    if isinstance(model, HeadwayModel):
        model = SuperposedGapModel([model])
    if warmup is None:
        warmup = 50.0 * max(c.mean for c in model.components)
    if not horizon > warmup >= 0:
        raise DomainError(f"need horizon > warmup >= 0, got horizon={horizon}, warmup={warmup}")
    children = np.random.SeedSequence(seed).spawn(model.L) if not isinstance(seed, np.random.SeedSequence) else seed.spawn(model.L)
    lanes = {}
    for j, (comp, child) in enumerate(zip(model.components, children), start=1):
        t = simulate_component(comp, horizon, np.random.default_rng(child))
        t = t[t >= warmup]
        if resolution:
            t = np.round(t / resolution) * resolution
            # rounding can merge successive arrivals of one lane
            t = t[np.concatenate([[True], np.diff(t) > 0])] if t.size else t
        lanes[j] = t
    return ArrivalTimeline(lanes)


def simulate_superposed(
    model: SuperposedGapModel,
    horizon: float,
    seed=None,
    warmup: float | None = None,
    resolution: float | None = None,
) -> GapSample:
    """Monte Carlo gaps of the superposed stream observed over ``[warmup, horizon]``."""
    if isinstance(model, HeadwayModel):
        model = SuperposedGapModel([model])
    if warmup is None:
        warmup = 50.0 * max(c.mean for c in model.components)
    timeline = simulate_arrivals(model, horizon, seed, warmup, resolution)
    sample = gaps_from_arrivals(timeline, site="simulated")
    return GapSample(
        gaps=sample.gaps,
        site="simulated",
        duration=float(horizon - warmup),
        n_arrivals=sample.n_arrivals,
        meta={"warmup": float(warmup), "horizon": float(horizon), "seed": seed if isinstance(seed, (int, type(None))) else None},
    )
