"""Independent reference computations used by the tests.

Nothing here imports hetcal: each oracle re-derives its value from first
principles (closed forms, numerical quadrature or Monte Carlo).
"""
import math

import numpy as np
from scipy import integrate

PLANCK_H = 6.62607015e-34  # J s, exact SI
LIGHT_C = 299792458.0


def photon_energy(wavelength_m):
    return PLANCK_H * LIGHT_C / wavelength_m


def lumped(delta_tau, tau_alpha, eta1, eta2, eta_mm):
    return (1 - 4 * delta_tau**2) * tau_alpha * (eta1 + eta2) / 2 * eta_mm


def overlap_numeric(w1, w2, offset, n=801):
    """|<u1|u2>|^2 of two normalized Gaussian field modes on a 2-D grid."""
    half = 6 * max(w1, w2) + offset
    x = np.linspace(-half, half, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")

    def mode(w, dx):
        return math.sqrt(2 / math.pi) / w * np.exp(-((xx - dx) ** 2 + yy**2) / w**2)

    gamma = integrate.simpson(integrate.simpson(mode(w1, 0) * mode(w2, offset), x=x), x=x)
    return gamma**2


def enbw_numeric(power_response, rbw_hz):
    """ENBW of a normalized power response by adaptive quadrature."""
    val, _ = integrate.quad(power_response, -20 * rbw_hz, 20 * rbw_hz, points=[-rbw_hz / 2, 0, rbw_hz / 2], limit=400)
    return val


def gaussian_enbw(rbw_hz):
    return rbw_hz * math.sqrt(math.pi / (4 * math.log(2)))


def quadrature(*rel):
    return math.sqrt(math.fsum(r * r for r in rel))


def normalized_error(a, ua, b, ub):
    return abs(a - b) / math.hypot(ua, ub)


def loss_chain_monte_carlo(factors, delta_tau, n=1_000_000, seed=12345):
    """Mean and std of (1-4 dtau^2) * prod(factors) under Gaussian inputs."""
    rng = np.random.default_rng(seed)
    value = np.ones(n)
    for mean, u in factors:
        value *= rng.normal(mean, u, n)
    dt = rng.normal(delta_tau[0], delta_tau[1], n)
    value *= 1 - 4 * dt**2
    return float(value.mean()), float(value.std())
