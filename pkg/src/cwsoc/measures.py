"""Symmetric base measures with exact moments and i.i.d. sampling.

The sampler and the smoothing oracle both consume draws from a symmetric
measure rho; the verification suite needs sigma^2, mu_4 and E|x|^5 exactly,
so the supported family is a closed set of kinds with closed-form moments.
Symmetry is structural: only nonnegative atoms or scale parameters are
stored and the negative side is mirrored, so no runtime symmetry check is
needed or possible to get wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_KINDS = ("rademacher", "gaussian", "uniform", "twopoint", "discrete")

# E|Z|^5 for a standard normal: 8 * sqrt(2/pi).
_GAUSS_ABS_FIFTH = 8.0 * math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class BaseMeasure:
    """A symmetric probability measure on the real line.

    Fields:
        kind: one of rademacher | gaussian | uniform | twopoint | discrete.
        name: canonical spec string, e.g. "gaussian:2.0"; parse_measure(name)
            reconstructs the measure.
        scale: standard deviation (gaussian) or half-width (uniform) or atom
            position (twopoint); unused for the other kinds.
        atoms: for discrete, tuple of (value > 0, prob) pairs; each atom is
            mirrored to -value with the same prob and the remaining mass
            sits at 0.
    """

    kind: str
    name: str
    scale: float = 0.0
    atoms: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown measure kind: {self.kind!r}")
        if self.kind in ("gaussian", "uniform", "twopoint") and not self.scale > 0.0:
            raise ValueError(f"{self.kind} needs a positive scale parameter")
        if self.kind == "discrete":
            if not self.atoms:
                raise ValueError("discrete measure needs at least one atom")
            total = 0.0
            for value, prob in self.atoms:
                if not value > 0.0:
                    raise ValueError("discrete atom values must be positive")
                if prob < 0.0:
                    raise ValueError("discrete atom probs must be nonnegative")
                total += 2.0 * prob
            if total > 1.0 + 1e-12:
                raise ValueError("discrete atom mass exceeds 1")
            if self.variance() <= 0.0:
                raise ValueError("measure must not be the point mass at 0")

    # -- exact moments ---------------------------------------------------

    def variance(self) -> float:
        """Second moment sigma^2 (the mean is 0 by symmetry)."""
        return self._even_moment(2)

    def fourth_moment(self) -> float:
        """Fourth moment mu_4."""
        return self._even_moment(4)

    def abs_fifth_moment(self) -> float:
        """Absolute fifth moment E|x|^5."""
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "gaussian":
            return _GAUSS_ABS_FIFTH * self.scale**5
        if self.kind == "uniform":
            return self.scale**5 / 6.0
        if self.kind == "twopoint":
            return self.scale**5
        return sum(2.0 * p * v**5 for v, p in self.atoms)

    def _even_moment(self, k: int) -> float:
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "gaussian":
            # E z^2 = s^2, E z^4 = 3 s^4.
            return self.scale**2 if k == 2 else 3.0 * self.scale**4
        if self.kind == "uniform":
            return self.scale**k / (k + 1.0)
        if self.kind == "twopoint":
            return self.scale**k
        return sum(2.0 * p * v**k for v, p in self.atoms)

    def satisfies_star(self) -> bool:
        """Whether exp(v0 x^2) is integrable for some v0 > 0.

        True for every supported kind: bounded support trivially, gaussian
        for any v0 < 1/(2 scale^2). The flag gates the scaled-sum law,
        whose derivation needs this integrability.
        """
        return self.kind in _KINDS

    def is_finite_support(self) -> bool:
        return self.kind in ("rademacher", "twopoint", "discrete")

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Atoms and probabilities for finite-support kinds.

        Returns:
            (values, probs) sorted ascending, including a mass at 0 when the
            discrete atom probs sum below 1/2.
        """
        if self.kind == "rademacher":
            return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        if self.kind == "twopoint":
            a = self.scale
            return np.array([-a, a]), np.array([0.5, 0.5])
        if self.kind == "discrete":
            values = []
            probs = []
            zero_mass = 1.0 - sum(2.0 * p for _, p in self.atoms)
            for v, p in self.atoms:
                values.extend((v, -v))
                probs.extend((p, p))
            if zero_mass > 1e-12:
                values.append(0.0)
                probs.append(zero_mass)
            order = np.argsort(values)
            return np.asarray(values)[order], np.asarray(probs)[order]
        raise ValueError(f"{self.kind} does not have finite support")

    # -- sampling --------------------------------------------------------

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw count i.i.d. values; deterministic given the generator state."""
        if count < 1:
            raise ValueError("count must be >= 1")
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=count).astype(np.float64) * 2.0 - 1.0
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, size=count)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size=count)
        if self.kind == "twopoint":
            signs = rng.integers(0, 2, size=count).astype(np.float64) * 2.0 - 1.0
            return signs * self.scale
        values, probs = self.support()
        return rng.choice(values, size=count, p=probs)


def rademacher() -> BaseMeasure:
    """Fair coin on {-1, +1}."""
    return BaseMeasure(kind="rademacher", name="rademacher")


def gaussian(scale: float = 1.0) -> BaseMeasure:
    """Centered normal with standard deviation scale."""
    return BaseMeasure(kind="gaussian", name=f"gaussian:{float(scale)!r}", scale=float(scale))


def uniform(half_width: float = 1.0) -> BaseMeasure:
    """Uniform on [-half_width, half_width]."""
    return BaseMeasure(kind="uniform", name=f"uniform:{float(half_width)!r}", scale=float(half_width))


def two_point(atom: float = 1.0) -> BaseMeasure:
    """Fair coin on {-atom, +atom}."""
    return BaseMeasure(kind="twopoint", name=f"twopoint:{float(atom)!r}", scale=float(atom))


def symmetric_discrete(atoms: list[tuple[float, float]]) -> BaseMeasure:
    """Finite symmetric measure from (positive value, prob) pairs.

    Each pair (v, p) contributes mass p at +v and p at -v; leftover mass
    1 - 2*sum(p) sits at 0.
    """
    canonical = tuple(sorted((float(v), float(p)) for v, p in atoms))
    name = "discrete:" + ";".join(f"{v!r},{p!r}" for v, p in canonical)
    return BaseMeasure(kind="discrete", name=name, atoms=canonical)


def parse_measure(spec: str) -> BaseMeasure:
    """Parse a measure spec string.

    Formats: "rademacher", "gaussian:S", "uniform:A", "twopoint:X",
    "discrete:v1,p1;v2,p2". Raises ValueError with the offending token on
    malformed input.
    """
    text = spec.strip()
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "rademacher":
        if arg:
            raise ValueError("rademacher takes no parameter")
        return rademacher()
    if kind in ("gaussian", "uniform", "twopoint"):
        if not arg:
            raise ValueError(f"{kind} spec needs a parameter, e.g. {kind}:1.0")
        try:
            value = float(arg)
        except ValueError as exc:
            raise ValueError(f"bad {kind} parameter: {arg!r}") from exc
        maker = {"gaussian": gaussian, "uniform": uniform, "twopoint": two_point}[kind]
        return maker(value)
    if kind == "discrete":
        if not arg:
            raise ValueError("discrete spec needs atoms, e.g. discrete:1,0.25;2,0.1")
        pairs = []
        for chunk in arg.split(";"):
            parts = chunk.split(",")
            if len(parts) != 2:
                raise ValueError(f"bad discrete atom: {chunk!r}")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValueError(f"bad discrete atom: {chunk!r}") from exc
        return symmetric_discrete(pairs)
    raise ValueError(f"unknown measure spec: {spec!r}")
