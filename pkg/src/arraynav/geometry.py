"""Five-element L-shaped antenna array.

Antenna 1 sits at the body origin, antennas 2 and 3 lie along +x at ``d12``
and ``d12 + d23``, antennas 4 and 5 along +y at ``d14`` and ``d14 + d45``.
"""

from dataclasses import dataclass

import numpy as np

from arraynav.errors import ConfigError

GPS_L1_WAVELENGTH = 0.1905


@dataclass(frozen=True)
class ArrayGeometry:
    d12: float = 0.30
    d23: float = 0.39
    d14: float = 0.30
    d45: float = 0.39
    wavelength: float = GPS_L1_WAVELENGTH

    def __post_init__(self):
        lam = self.wavelength
        if lam <= 0:
            raise ConfigError("wavelength must be positive")
        for name in ("d12", "d23", "d14", "d45"):
            if getattr(self, name) <= lam / 2:
                raise ConfigError(f"{name} must exceed half a wavelength")
        for a, b in (("d12", "d23"), ("d14", "d45")):
            diff = abs(getattr(self, a) - getattr(self, b))
            if not 0 < diff <= lam / 2:
                raise ConfigError(f"|{a} - {b}| must lie in (0, wavelength/2]")

    @property
    def x_span(self):
        return self.d12 + self.d23

    @property
    def y_span(self):
        return self.d14 + self.d45

    @property
    def distances(self):
        """Distance from antenna 1 to each antenna, antenna 1 included."""
        return np.array([0.0, self.d12, self.x_span, self.d14, self.y_span])

    @property
    def body_offsets(self):
        return np.array(
            [
                [0.0, 0.0, 0.0],
                [self.d12, 0.0, 0.0],
                [self.x_span, 0.0, 0.0],
                [0.0, self.d14, 0.0],
                [0.0, self.y_span, 0.0],
            ]
        )

    def world_offsets(self, R):
        """(5, 3) antenna positions relative to antenna 1 in the world frame."""
        return self.body_offsets @ np.asarray(R).T
