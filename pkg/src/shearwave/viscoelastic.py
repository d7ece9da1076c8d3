"""Kelvin-Voigt material response for shear waves.

The medium is characterized by shear modulus mu [Pa], density rho [kg/m^3]
and shear viscosity eta [Pa.s]. At angular frequency w the complex modulus
is mu* = mu + i*w*eta, giving a complex wavenumber k* = w*sqrt(rho/mu*).
With the phasor convention u(t) = Re{F exp(iwt)} a wave travelling a
distance s carries exp(-i k* s), so Re(k*) sets the phase speed and
-Im(k*) the attenuation per meter.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "complex_modulus",
    "complex_wavenumber",
    "shear_speed",
    "shear_attenuation",
    "young_from_speed",
]


def _check_domain(mu, rho, eta, f) -> None:
    if np.any(np.asarray(mu) <= 0):
        raise ValueError(f"shear modulus must be positive, got {mu}")
    if np.any(np.asarray(rho) <= 0):
        raise ValueError(f"density must be positive, got {rho}")
    if np.any(np.asarray(eta) < 0):
        raise ValueError(f"viscosity must be non-negative, got {eta}")
    if np.any(np.asarray(f) <= 0):
        raise ValueError(f"frequency must be positive, got {f}")


def complex_modulus(mu, eta, f):
    """Voigt complex shear modulus mu + i*w*eta at frequency f [Hz]."""
    w = 2.0 * np.pi * np.asarray(f, dtype=float)
    return np.asarray(mu, dtype=float) + 1j * w * np.asarray(eta, dtype=float)


def complex_wavenumber(mu, rho, eta, f):
    """Complex shear wavenumber k* = w*sqrt(rho/mu*) [rad/m].

    Re(k*) > 0 and Im(k*) <= 0, so exp(-i k* s) decays for s > 0.
    """
    _check_domain(mu, rho, eta, f)
    w = 2.0 * np.pi * np.asarray(f, dtype=float)
    return w * np.sqrt(np.asarray(rho, dtype=float) / complex_modulus(mu, eta, f))


def shear_speed(mu, rho, eta, f):
    """Voigt phase speed [m/s] of a shear wave at frequency f [Hz].

    For eta = 0 this reduces to sqrt(mu/rho); for eta > 0 it is
    sqrt(2(mu^2 + w^2 eta^2) / (rho (mu + sqrt(mu^2 + w^2 eta^2)))),
    which is non-decreasing in f.
    """
    _check_domain(mu, rho, eta, f)
    mu = np.asarray(mu, dtype=float)
    rho = np.asarray(rho, dtype=float)
    eta = np.asarray(eta, dtype=float)
    w = 2.0 * np.pi * np.asarray(f, dtype=float)
    mag = np.sqrt(mu**2 + (w * eta) ** 2)
    return np.sqrt(2.0 * mag**2 / (rho * (mu + mag)))


def shear_attenuation(mu, rho, eta, f):
    """Amplitude attenuation coefficient [Np/m]; zero for eta = 0."""
    return -np.imag(complex_wavenumber(mu, rho, eta, f))


def young_from_speed(c, rho):
    """Young's modulus [Pa] of an incompressible medium: E = 3*rho*c^2."""
    if np.any(np.asarray(c) <= 0):
        raise ValueError(f"shear wave speed must be positive, got {c}")
    if np.any(np.asarray(rho) <= 0):
        raise ValueError(f"density must be positive, got {rho}")
    return 3.0 * np.asarray(rho, dtype=float) * np.asarray(c, dtype=float) ** 2
