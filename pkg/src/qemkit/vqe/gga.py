"""Greedy gradient-free adaptive VQE (GGA-VQE).

For a generator with ``G**3 = -s**2 G`` the energy along one new angle is
``E(t) = a0 + a1 cos(s t) + b1 sin(s t) + a2 cos(2 s t) + b2 sin(2 s t)``,
fixed exactly by five samples on the period.  Each iteration fits every
candidate, keeps the one with the lowest minimum and freezes its angle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adapt import IterationRecord, VqeResult, backend_metadata, cnot_summary
from .ansatz import AnsatzCircuit
from .pools import cube_scale

N_POINTS = 5


@dataclass
class GgaOptions:
    """Settings for :func:`gga_vqe`.

    Attributes
    ----------
    max_iter : int
    energy_tol : float
        Stop once the best candidate lowers the energy by less than this.
    """

    max_iter: int = 50
    energy_tol: float = 1e-10


def check_gga_pool(pool):
    """Per-generator ``s`` with ``G**3 = -s**2 G``; raise if any fails."""
    scales = []
    for lab, g in zip(pool.labels, pool.generators):
        s2 = cube_scale(g)
        if s2 is None:
            raise ValueError(f"generator {lab} does not satisfy G^3 = -s^2 G")
        scales.append(math.sqrt(s2))
    return np.array(scales)


def abscissae(s):
    """The five sample angles ``2 pi j / (5 s)`` for each scale in ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return 2.0 * math.pi * np.arange(N_POINTS)[None, :] / (N_POINTS * s[:, None])


def fit_coefficients(samples):
    """``(a0, a1, b1, a2, b2)`` from energies at ``u_j = 2 pi j / 5``.

    Exact discrete Fourier inversion: five equispaced samples determine a
    trigonometric polynomial of degree two.
    """
    f = np.fft.rfft(np.asarray(samples, dtype=float), axis=-1) / N_POINTS
    a0 = f[..., 0].real
    a1, b1 = 2 * f[..., 1].real, -2 * f[..., 1].imag
    a2, b2 = 2 * f[..., 2].real, -2 * f[..., 2].imag
    return np.stack([a0, a1, b1, a2, b2], axis=-1)


def trig_value(c, u):
    a0, a1, b1, a2, b2 = c
    return a0 + a1 * np.cos(u) + b1 * np.sin(u) + a2 * np.cos(2 * u) + b2 * np.sin(2 * u)


def _trig_deriv(c, u):
    _, a1, b1, a2, b2 = c
    return -a1 * np.sin(u) + b1 * np.cos(u) - 2 * a2 * np.sin(2 * u) + 2 * b2 * np.cos(2 * u)


def _trig_second(c, u):
    _, a1, b1, a2, b2 = c
    return -a1 * np.cos(u) - b1 * np.sin(u) - 4 * a2 * np.cos(2 * u) - 4 * b2 * np.sin(2 * u)


def trig_minimum(c):
    """Global minimizer ``u`` in ``[0, 2 pi)`` of the fitted polynomial.

    Stationary points are the unit-circle roots of the derivative written
    as a quartic in ``z = exp(i u)``; each is polished by Newton steps.
    """
    _, a1, b1, a2, b2 = c
    # z^2 E'(u) = sum_k p_k z^k with E' = sum_m (m b_m cos mu - m a_m sin mu)
    alpha1, alpha2 = complex(b1, a1) / 2, complex(2 * b2, 2 * a2) / 2
    poly = [alpha2, alpha1, 0.0, np.conj(alpha1), np.conj(alpha2)]
    cands = [0.0]
    if np.max(np.abs(poly)) > 0:
        lead = next(i for i, p in enumerate(poly) if abs(p) > 1e-300)
        roots = np.roots(poly[lead:]) if len(poly) - lead > 1 else []
        cands += [float(np.angle(r)) for r in roots]
    cands += list(np.linspace(0, 2 * math.pi, 16, endpoint=False))
    best_u, best_e = 0.0, math.inf
    for u in cands:
        for _ in range(50):
            d2 = _trig_second(c, u)
            if d2 <= 0:
                break
            step = _trig_deriv(c, u) / d2
            u -= step
            if abs(step) < 1e-15:
                break
        e = trig_value(c, u)
        if e < best_e:
            best_u, best_e = u, e
    return float(best_u % (2 * math.pi)), float(best_e)


def greedy_angles(backend, state, h, generators, scales):
    """Best angle and energy per candidate from five line samples each."""
    thetas = abscissae(scales)
    samples = backend.line_energies(state, h, generators, thetas)
    coeffs = fit_coefficients(samples)
    out_t = np.empty(len(generators))
    out_e = np.empty(len(generators))
    for k, c in enumerate(coeffs):
        u, e = trig_minimum(c)
        t = u / scales[k]
        # report the representative closest to zero
        period = 2 * math.pi / scales[k]
        if t > period / 2:
            t -= period
        out_t[k], out_e[k] = t, e
    return out_t, out_e


def gga_vqe(h, pool, backend, opts=None, reference=0):
    """Greedy, gradient-free ansatz growth with frozen angles.

    Returns
    -------
    VqeResult
        Trace entries record the chosen operator and its energy after each
        greedy step.
    """
    opts = opts or GgaOptions()
    if not h.is_hermitian():
        raise ValueError("Hamiltonian must be Hermitian")
    scales = check_gga_pool(pool)
    ansatz = AnsatzCircuit(reference, pool)
    state = ansatz.prepare(backend)
    energy = float(backend.expectation(state, h))
    trace = [IterationRecord(0, energy, float("nan"), [], [], 0, 0)]
    n_evals = 0
    status = "max_iter"
    for it in range(1, opts.max_iter + 1):
        ts, es = greedy_angles(backend, state, h, pool.generators, scales)
        n_evals += N_POINTS * len(pool)
        k = int(np.lexsort((np.arange(es.size), es))[0])
        if energy - es[k] < opts.energy_tol:
            status = "converged"
            break
        ansatz.append(k, ts[k])
        state = backend.apply_generator(state, pool.generators[k], ts[k])
        energy = float(backend.expectation(state, h))
        trace.append(IterationRecord(it, energy, float("nan"), [k], [pool.labels[k]],
                                     ansatz.n_params, n_evals, ""))
    return VqeResult("gga", energy, ansatz.thetas, trace, cnot_summary(ansatz),
                     backend_metadata(backend), status, n_evals, ansatz)
