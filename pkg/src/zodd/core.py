"""Foundations: decision vectors, splittable RNG streams, search directions,
and budgeted sampling oracles.

Everything downstream draws its randomness through :class:`RngStream`, a thin
wrapper over a counter-based bit generator.  A stream is identified by a
``(seed, stream)`` pair; deriving a child stream is a pure hash of the parent
identity and a label, so any draw in the library is a pure function of the
root seed and the chain of labels that leads to it.  Distinct stream ids give
statistically independent generators, which is what lets independent pieces
of work (directions of one estimate, seeds of one experiment) run in any
order, or concurrently, without changing results.

A :class:`SampleOracle` is the only way samples enter the library.  Every
draw is counted by a :class:`BudgetCounter`; when a hard budget is set, a
draw that would exceed it raises :class:`BudgetExhaustedError` before any
state is consumed.
"""

from __future__ import annotations

import hashlib
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

_MASK64 = (1 << 64) - 1


def as_point(x, dimension: int | None = None) -> Vector:
    """Validate and return ``x`` as a finite 1-d float64 vector.

    Raises ValueError on wrong rank, wrong length, or non-finite entries.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"point must be 1-d, got shape {arr.shape}")
    if dimension is not None and arr.shape[0] != dimension:
        raise ValueError(f"point has dimension {arr.shape[0]}, expected {dimension}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite entries")
    return arr


class DirectionKind(str, Enum):
    COORDINATE = "coordinate"
    SPHERE = "sphere"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Direction:
    """A probe direction together with the family it was drawn from.

    ``axis`` is the 0-based position of the nonzero entry and is only set for
    coordinate directions.
    """

    coords: Vector
    kind: DirectionKind
    axis: int | None = None

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 1 or coords.size == 0:
            raise ValueError("direction must be a nonempty 1-d vector")
        if not np.all(np.isfinite(coords)):
            raise ValueError("direction has non-finite entries")
        if self.kind is DirectionKind.COORDINATE:
            if self.axis is None or not (0 <= self.axis < coords.size):
                raise ValueError("coordinate direction needs a valid axis")
            expected = np.zeros(coords.size)
            expected[self.axis] = 1.0
            if not np.array_equal(coords, expected):
                raise ValueError("coordinate direction must be a standard basis vector")
        elif self.kind is DirectionKind.SPHERE:
            if abs(np.linalg.norm(coords) - 1.0) > 1e-12:
                raise ValueError("sphere direction must have unit norm")


@dataclass(frozen=True)
class RngStream:
    """A named, splittable source of randomness.

    ``generator()`` always returns a fresh generator positioned at the start
    of the stream, so repeated calls replay the same sequence.  ``child``
    derives a new independent stream from a sequence of labels; the
    derivation is a stable hash, independent of platform and process.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def generator(self) -> np.random.Generator:
        key = (self.stream << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *labels: int | str) -> "RngStream":
        h = hashlib.blake2b(digest_size=8)
        h.update(self.stream.to_bytes(8, "little"))
        for label in labels:
            if isinstance(label, int):
                h.update(b"i" + (label & _MASK64).to_bytes(8, "little"))
            else:
                h.update(b"s" + label.encode("utf-8"))
            h.update(b"/")
        return RngStream(self.seed, int.from_bytes(h.digest(), "little"))


def _as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def draw_coordinate(i: int, d: int) -> Direction:
    """The i-th standard basis direction, 1-based, in dimension d."""
    if not (1 <= i <= d):
        raise ValueError(f"coordinate index {i} out of range 1..{d}")
    coords = np.zeros(d)
    coords[i - 1] = 1.0
    return Direction(coords, DirectionKind.COORDINATE, axis=i - 1)


def draw_sphere(rng: RngStream | np.random.Generator, d: int) -> Direction:
    """One direction uniform on the unit sphere in dimension d."""
    gen = _as_generator(rng)
    return Direction(sphere_matrix(gen, d, 1)[0], DirectionKind.SPHERE)


def draw_gaussian(rng: RngStream | np.random.Generator, d: int) -> Direction:
    """One standard Gaussian direction in dimension d."""
    gen = _as_generator(rng)
    return Direction(gen.standard_normal(d), DirectionKind.GAUSSIAN)


def sphere_matrix(gen: np.random.Generator, d: int, n: int) -> Vector:
    """n unit-sphere directions as rows of an (n, d) array."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    u = gen.standard_normal((n, d))
    norms = np.linalg.norm(u, axis=1)
    # a zero draw has probability zero; redraw defensively rather than divide by it
    while np.any(norms == 0.0):
        bad = norms == 0.0
        u[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(u, axis=1)
    return u / norms[:, None]


def gaussian_matrix(gen: np.random.Generator, d: int, n: int) -> Vector:
    """n standard Gaussian directions as rows of an (n, d) array."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    return gen.standard_normal((n, d))


class BudgetExhaustedError(RuntimeError):
    """A draw was requested beyond the sampling budget.

    ``wasted`` counts draws that were consumed by the failed computation and
    then discarded; with batch-atomic charging it is zero.
    """

    def __init__(self, message: str, wasted: int = 0):
        super().__init__(message)
        self.wasted = wasted


class BudgetCounter:
    """Thread-safe counter of sample draws with an optional hard limit."""

    def __init__(self, limit: int | None = None):
        if limit is not None and limit < 0:
            raise ValueError("budget limit must be nonnegative")
        self._limit = limit
        self._consumed = 0
        self._lock = threading.Lock()

    @property
    def limit(self) -> int | None:
        return self._limit

    @property
    def consumed(self) -> int:
        return self._consumed

    @property
    def remaining(self) -> int | None:
        if self._limit is None:
            return None
        return self._limit - self._consumed

    def charge(self, k: int) -> None:
        """Atomically consume k draws, or raise without consuming any."""
        if k < 0:
            raise ValueError("cannot charge a negative number of draws")
        with self._lock:
            if self._limit is not None and self._consumed + k > self._limit:
                raise BudgetExhaustedError(
                    f"budget exhausted: {self._consumed} consumed of {self._limit}, "
                    f"requested {k} more"
                )
            self._consumed += k


class SampleOracle(ABC):
    """A source of scalar samples f(x, xi) with xi drawn from D(x).

    Subclasses implement ``_draw_at``; the base class owns budget
    accounting.  ``sample`` draws one value at one point; ``sample_at``
    draws ``replicates`` independent values at each of k points in one
    atomic charge of ``k * replicates`` draws.
    """

    def __init__(self, budget: int | None = None):
        self._budget = BudgetCounter(budget)

    @property
    def budget(self) -> BudgetCounter:
        return self._budget

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Dimension of the decision vector."""

    @abstractmethod
    def _draw_at(
        self, points: Vector, gen: np.random.Generator, replicates: int
    ) -> Vector:
        """Return a (replicates, k) array of draws for the (k, d) points."""

    def sample(self, x, rng: RngStream | np.random.Generator) -> float:
        """One draw of f(x, xi), xi ~ D(x).  Consumes one unit of budget."""
        x = as_point(x, self.dimension)
        self._budget.charge(1)
        return float(self._draw_at(x[None, :], _as_generator(rng), 1)[0, 0])

    def sample_at(
        self,
        points,
        rng: RngStream | np.random.Generator,
        replicates: int = 1,
    ) -> Vector:
        """Independent draws at many points: (replicates, k) array.

        All draws are independent across points and replicates; the budget
        is charged atomically, so either the whole batch is counted or a
        BudgetExhaustedError is raised with nothing consumed.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ValueError(f"points must be (k, {self.dimension}), got {pts.shape}")
        if replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points have non-finite entries")
        self._budget.charge(pts.shape[0] * replicates)
        return self._draw_at(pts, _as_generator(rng), replicates)
