"""Analog Butterworth band-pass weight synthesis."""

import numpy as np
import scipy.signal

from ..errors import InvalidBand
from ..statespace import StateSpace

__all__ = ["butterworth_bandpass"]


def butterworth_bandpass(half_order, omega_lo, omega_hi):
    """Analog Butterworth band-pass filter as a state-space system.

    A low-pass prototype of order ``half_order`` is frequency-transformed
    to the band [omega_lo, omega_hi] (rad/s), giving a realization of
    order ``2 * half_order`` with unit gain at the center frequency
    sqrt(omega_lo * omega_hi) and half-power gain at the band edges.
    """
    if not (isinstance(half_order, (int, np.integer)) and half_order >= 1):
        raise InvalidBand(f"half_order must be a positive integer, got {half_order}")
    if not (0 < omega_lo < omega_hi):
        raise InvalidBand(
            f"need 0 < omega_lo < omega_hi, got [{omega_lo}, {omega_hi}]"
        )
    A, B, C, D = scipy.signal.butter(
        half_order, [omega_lo, omega_hi], btype="bandpass", analog=True,
        output="ss",
    )
    return StateSpace(A, B, C, D)
