"""Grid, quadrature and histogram helpers on the half circle [0, pi).

All densities in this package live on the projective circle R/piZ. The
default grid has 512 uniform nodes; periodic integrals use the rectangle
(= periodic trapezoid) rule, which is exact for trigonometric polynomials
and spectrally accurate for smooth periodic integrands.
"""

import numpy as np

PERIOD = np.pi
NGRID = 512


def theta_grid(n=NGRID):
    """Uniform grid theta_j = j*pi/n, j = 0..n-1 (left endpoints)."""
    return np.arange(n) * (PERIOD / n)


def theta_midpoints(n):
    """Bin midpoints (j + 1/2)*pi/n, used for histogram/density matching."""
    return (np.arange(n) + 0.5) * (PERIOD / n)


def periodic_integral(values):
    """Integrate a pi-periodic grid function over one period."""
    values = np.asarray(values, dtype=float)
    return values.mean() * PERIOD


def spectral_derivative(values, order=1):
    """Differentiate a smooth pi-periodic grid function via FFT."""
    values = np.asarray(values, dtype=float)
    n = values.size
    freq = np.fft.rfftfreq(n, d=PERIOD / n)  # cycles per unit length
    mult = (2j * np.pi * freq) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0  # Nyquist mode has no well-defined odd derivative
    return np.fft.irfft(np.fft.rfft(values) * mult, n=n)


def wrap_angles(theta):
    """Reduce angles to [0, pi)."""
    return np.mod(theta, PERIOD)


def tv_distance(mass_a, mass_b):
    """Total-variation distance between two probability mass vectors."""
    return 0.5 * np.abs(np.asarray(mass_a) - np.asarray(mass_b)).sum()
