"""Time signals: disturbance inputs ``w(t)`` and leader references ``r(t)`` with their rates."""

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

Signal = Callable[[float], np.ndarray]


class Waveform(str, enum.Enum):
    COS = "cos"
    SIN = "sin"


@dataclass(frozen=True)
class Sinusoid:
    """``offset + amplitude · cos|sin(ω t + phase)``."""

    kind: Waveform = Waveform.COS
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    def value(self, t: float) -> float:
        arg = self.omega * t + self.phase
        wave = np.cos(arg) if Waveform(self.kind) is Waveform.COS else np.sin(arg)
        return self.offset + self.amplitude * wave

    def rate(self, t: float) -> float:
        arg = self.omega * t + self.phase
        if Waveform(self.kind) is Waveform.COS:
            return -self.amplitude * self.omega * np.sin(arg)
        return self.amplitude * self.omega * np.cos(arg)


@dataclass(frozen=True)
class Reference:
    components: tuple[Sinusoid, ...]

    @property
    def dim(self) -> int:
        return len(self.components)

    def value(self, t: float) -> np.ndarray:
        return np.array([c.value(t) for c in self.components])

    def rate(self, t: float) -> np.ndarray:
        return np.array([c.rate(t) for c in self.components])


def zero_signal(dim: int) -> Signal:
    zeros = np.zeros(dim)
    return lambda t: zeros


def constant_signal(value, dim: int) -> Signal:
    vector = np.broadcast_to(np.asarray(value, dtype=float), (dim,)).copy()
    return lambda t: vector


def sinusoid_signal(sinusoid: Sinusoid, dim: int) -> Signal:
    ones = np.ones(dim)
    return lambda t: sinusoid.value(t) * ones
