"""Discrete blur-space coordinates: shake classes, exposure classes, pairings."""

from __future__ import annotations

import enum
from dataclasses import dataclass

#: Shake intensity ("anxiety") per class; lower values give straighter paths.
ANXIETY_VALUES = (0.005, 0.001, 0.00005)

#: Fraction of the simulated trajectory integrated into the kernel.
EXPOSURE_VALUES = (1 / 25, 1 / 10, 1 / 5, 1 / 2, 1.0)


class PClass(enum.IntEnum):
    """Camera-shake class. The int value is the 0-based index."""

    P1 = 0
    P2 = 1
    P3 = 2

    @property
    def anxiety(self) -> float:
        return ANXIETY_VALUES[self]

    @classmethod
    def from_number(cls, n: int) -> "PClass":
        """Parse a 1-based class number as used on the command line."""
        if not 1 <= n <= len(cls):
            raise ValueError(f"shake class number must be in 1..{len(cls)}, got {n}")
        return cls(n - 1)


class EClass(enum.IntEnum):
    """Exposure class. The int value is the 0-based index."""

    E1 = 0
    E2 = 1
    E3 = 2
    E4 = 3
    E5 = 4

    @property
    def exposure(self) -> float:
        return EXPOSURE_VALUES[self]

    @classmethod
    def from_number(cls, n: int) -> "EClass":
        if not 1 <= n <= len(cls):
            raise ValueError(f"exposure class number must be in 1..{len(cls)}, got {n}")
        return cls(n - 1)


#: All (P, E) pairings in fixed order: P-major, then E ascending.
ALL_PAIRS = tuple((p, e) for p in PClass for e in EClass)

#: Low-exposure subset used by the low-exposure training mix.
LOW_EXPOSURE_PAIRS = tuple((p, e) for p in PClass for e in (EClass.E1, EClass.E2, EClass.E3))

#: High-exposure classes handled by per-type specialists.
HIGH_EXPOSURES = (EClass.E4, EClass.E5)


@dataclass(frozen=True)
class BlurClass:
    """Either sharp (both fields None) or a (shake, exposure) class pairing."""

    p: PClass | None = None
    e: EClass | None = None

    def __post_init__(self) -> None:
        if (self.p is None) != (self.e is None):
            raise ValueError("blur class must set both of (p, e) or neither")

    @property
    def is_sharp(self) -> bool:
        return self.p is None

    @classmethod
    def sharp(cls) -> "BlurClass":
        return cls()

    @classmethod
    def blurred(cls, p: PClass | int, e: EClass | int) -> "BlurClass":
        return cls(PClass(p), EClass(e))

    def to_json(self):
        if self.is_sharp:
            return "sharp"
        return {"p": self.p.name, "e": self.e.name}

    @classmethod
    def from_json(cls, obj) -> "BlurClass":
        if obj == "sharp":
            return cls.sharp()
        return cls(PClass[obj["p"]], EClass[obj["e"]])
