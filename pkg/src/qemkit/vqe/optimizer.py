"""Gradient-based optimization of ansatz angles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .pools import square_scale

GRADIENT_METHODS = ("auto", "adjoint", "shift", "fd")


@dataclass
class OptimizerOptions:
    """Settings for :func:`optimize_parameters`.

    Attributes
    ----------
    gtol : float
        Stop when the gradient infinity-norm falls below this value.
    max_evals : int
        Budget on energy evaluations (a gradient counts as one evaluation
        for the adjoint method and two per parameter otherwise).
    gradient : str
        ``auto`` (adjoint where the backend supports it, else parameter
        shift / finite differences per generator), ``adjoint``, ``shift``
        or ``fd``.
    fd_step : float
        Central finite-difference step.
    """

    gtol: float = 1e-6
    max_evals: int = 20_000
    gradient: str = "auto"
    fd_step: float = 1e-5


@dataclass
class OptimizeResult:
    thetas: np.ndarray
    energy: float
    n_evals: int
    status: str = "converged"
    message: str = ""
    history: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == "converged"


class _BudgetExhausted(Exception):
    pass


def adjoint_gradient(ansatz, h, backend, thetas, target=None):
    """Reverse-mode gradient of the energy (or of a target overlap).

    For ``U = U_K ... U_1`` with ``U_k = exp(theta_k G_k)`` the derivative is
    ``2 Re <lambda_k | G_k psi_k>``, with ``psi_k = U_k ... U_1 |ref>`` and
    ``lambda_k = U_{k+1}^dag ... U_K^dag H psi``; both are walked backwards
    one factor at a time.  With ``target`` given, ``lambda`` starts from the
    target state and the result is the gradient of ``|<target|psi>|**2``.

    Returns
    -------
    value : float
        Energy, or overlap probability when ``target`` is given.
    grad : ndarray
    """
    gens = ansatz.generators
    psi = ansatz.prepare(backend, thetas)
    if target is None:
        lam = backend.apply_pauli_sum(psi, h)
        value = float(backend.inner(psi, lam).real)
        weight = 1.0
    else:
        lam = target
        ov = backend.inner(target, psi)
        value = float(abs(ov) ** 2)
        weight = np.conj(ov)
    grad = np.zeros(len(gens))
    for k in range(len(gens) - 1, -1, -1):
        gpsi = backend.apply_pauli_sum(psi, gens[k])
        grad[k] = 2.0 * float((weight * backend.inner(lam, gpsi)).real)
        if k:
            psi = backend.apply_generator(psi, gens[k], -thetas[k])
            lam = backend.apply_generator(lam, gens[k], -thetas[k])
    return value, grad


def _shift_scales(ansatz):
    out = []
    for g in ansatz.generators:
        s2 = square_scale(g)
        out.append(None if s2 is None else math.sqrt(s2))
    return out


def optimize_parameters(ansatz, h, backend, opts=None, thetas0=None):
    """Minimize ``<psi(theta)|H|psi(theta)>`` with BFGS from a given start.

    Gradients come from the adjoint method when the backend supports it.
    Otherwise each parameter uses the two-point shift
    ``dE/dtheta = s [E(theta + pi/4s) - E(theta - pi/4s)]`` when its
    generator satisfies ``G**2 = -s**2 I`` and central differences when it
    does not.  Exhausting the evaluation budget returns the best point seen
    with status ``budget``.

    Returns
    -------
    OptimizeResult
    """
    opts = opts or OptimizerOptions()
    if opts.gradient not in GRADIENT_METHODS:
        raise ValueError(f"unknown gradient method {opts.gradient!r}")
    x0 = ansatz.thetas if thetas0 is None else np.asarray(thetas0, dtype=float)
    method = opts.gradient
    if method == "auto":
        method = "adjoint" if backend.supports_adjoint else "shift"
    if method == "adjoint" and not backend.supports_adjoint:
        raise ValueError(f"backend {backend.name!r} has no adjoint gradient")
    scales = _shift_scales(ansatz) if method == "shift" else None

    evals = [0]
    best = [np.inf, x0.copy()]

    def count(n=1):
        evals[0] += n
        if evals[0] > opts.max_evals:
            raise _BudgetExhausted

    def record(x, e):
        if e < best[0]:
            best[0], best[1] = e, np.array(x, dtype=float)

    def energy(x):
        count()
        e = float(backend.expectation(ansatz.prepare(backend, x), h))
        record(x, e)
        return e

    cache = {}

    def fun_and_grad(x):
        key = x.tobytes()
        if key in cache:
            return cache[key]
        if method == "adjoint":
            count()
            e, g = adjoint_gradient(ansatz, h, backend, x)
            record(x, e)
        else:
            e = energy(x)
            g = np.empty(x.size)
            for k in range(x.size):
                s = scales[k] if scales is not None else None
                step = math.pi / (4.0 * s) if s else opts.fd_step
                xp, xm = x.copy(), x.copy()
                xp[k] += step
                xm[k] -= step
                diff = energy(xp) - energy(xm)
                g[k] = s * diff if s else diff / (2.0 * step)
        cache.clear()
        cache[key] = (e, g)
        return e, g

    if x0.size == 0:
        e = energy(x0)
        return OptimizeResult(x0, e, evals[0])
    try:
        e0, g0 = fun_and_grad(x0)
        if np.max(np.abs(g0)) < opts.gtol:
            return OptimizeResult(x0.copy(), e0, evals[0])
        res = scipy.optimize.minimize(
            lambda x: fun_and_grad(x)[0], x0, jac=lambda x: fun_and_grad(x)[1],
            method="BFGS", options={"gtol": opts.gtol, "norm": np.inf, "maxiter": 10_000},
        )
    except _BudgetExhausted:
        return OptimizeResult(best[1], best[0], evals[0], "budget", "evaluation budget exhausted")
    status = "converged" if res.success else "stalled"
    # the line search can end on a slightly worse point than one it probed
    return OptimizeResult(best[1], best[0], evals[0], status, str(res.message))
