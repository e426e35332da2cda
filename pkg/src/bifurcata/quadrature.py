"""Phase integrals over cos-orbits with peaked integrands.

Both integrands ``G'(beta cos tau)`` and ``G''(beta cos tau) cos tau`` are
pi-periodic and symmetric about pi/2, so every integral over [0, phi] reduces
to whole periods plus one integral over a sub-interval of [0, pi/2].  On that
sub-interval the only trouble spot is tau = 0, where ``|beta cos tau|`` comes
closest to beta0.  The nearest complex singularity sits at ``tau = i*eps`` with
``eps = acosh(beta0/|beta|)``, so the substitution ``tau = eps*sinh(t)``
moves it to ``t = i*pi/2`` for every beta.  Composite Gauss-Legendre panels
of unit width in t then converge geometrically, uniformly up to beta0.

Everything here is vectorized over beta and phi.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ToleranceNotMet
from .nonlinearity import GKernel

_EPS_CAP = 10.0
_HALF_PI = 0.5 * np.pi


@lru_cache(maxsize=None)
def _gauss(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _eps(gk: GKernel, beta: np.ndarray) -> np.ndarray:
    ab = np.abs(beta)
    with np.errstate(divide="ignore"):
        ratio = np.where(ab > 0, gk.beta0 / np.where(ab > 0, ab, 1.0), np.inf)
    return np.minimum(np.arccosh(np.minimum(ratio, 1e300)), _EPS_CAP)


class PhaseIntegrator:
    """Integrals of ``G'(beta cos tau)`` and ``G''(beta cos tau) cos tau``.

    ``rel_tol`` bounds the estimated relative error of every returned value,
    with ``abs_tol`` as a floor.  ``max_subdivisions`` caps the number of
    panels per half-period.
    """

    def __init__(
        self,
        gk: GKernel,
        rel_tol: float = 1e-11,
        abs_tol: float = 1e-14,
        max_subdivisions: int = 256,
        order: int = 20,
        panel_width: float = 1.0,
    ):
        self.gk = gk
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_subdivisions = max_subdivisions
        self.order = order
        self.panel_width = panel_width

    # ----------------------------------------------------------- integrands
    def _integrand(self, beta, tau, which: str):
        c = np.cos(tau)
        ab = np.abs(beta)
        # beta0 - |beta cos tau|, exact enough to resolve gaps near 1e-12
        gap = (self.gk.beta0 - ab) + 2.0 * ab * np.sin(0.5 * tau) ** 2
        if which == "theta":
            return self.gk.G1(beta * c, gap)
        return self.gk.dG(beta * c, gap)[1] * c

    # ------------------------------------------------------------ half core
    def _half(self, beta: np.ndarray, psi: np.ndarray, which: str) -> np.ndarray:
        """Integral over [0, psi] with 0 <= psi <= pi/2, elementwise."""
        beta, psi = np.broadcast_arrays(np.asarray(beta, float), np.asarray(psi, float))
        shape = beta.shape
        b = beta.ravel()
        p = psi.ravel()
        if b.size == 0:
            return np.zeros(shape)
        eps = _eps(self.gk, b)
        t_end = np.arcsinh(p / eps)
        n_p = max(1, int(np.ceil(np.max(t_end) / self.panel_width)))
        m_hi, m_lo = self.order, (2 * self.order) // 3
        while True:
            q_hi = self._panels(b, eps, t_end, n_p, m_hi, which)
            q_lo = self._panels(b, eps, t_end, n_p, m_lo, which)
            err = np.abs(q_hi - q_lo)
            bound = np.maximum(self.abs_tol, self.rel_tol * np.abs(q_hi))
            if np.all(err <= bound):
                return q_hi.reshape(shape)
            if 2 * n_p > self.max_subdivisions:
                raise ToleranceNotMet(
                    f"phase integral did not converge: error {np.max(err - bound):.3e} over bound"
                )
            n_p *= 2

    def _panels(self, b, eps, t_end, n_p, m, which):
        x, w = _gauss(m)
        # nodes: (N, n_p, m)
        h = (t_end / n_p)[:, None, None]
        left = h * np.arange(n_p)[None, :, None]
        t = left + h * x[None, None, :]
        e = eps[:, None, None]
        tau = e * np.sinh(t)
        jac = e * np.cosh(t) * h
        vals = self._integrand(b[:, None, None], tau, which) * jac
        return np.einsum("ipm,m->i", vals, w)

    # ------------------------------------------------------------ periodic
    def full(self, beta, which: str = "theta"):
        """Integral over one full period [0, pi]."""
        beta = np.asarray(beta, dtype=float)
        return 2.0 * self._half(beta, np.full(beta.shape, _HALF_PI), which)

    def _integral(self, beta, phi, which: str):
        beta, phi = np.broadcast_arrays(np.asarray(beta, float), np.asarray(phi, float))
        if np.any(phi < 0):
            raise ValueError("phi must be non-negative")
        m = np.floor(phi / np.pi)
        psi = phi - m * np.pi
        upper = psi > _HALF_PI
        red = np.where(upper, np.pi - psi, psi)
        red = np.clip(red, 0.0, _HALF_PI)
        # one batched call for the partial pieces and one for the periods
        both = self._half(
            np.concatenate([beta.ravel(), beta.ravel()]),
            np.concatenate([red.ravel(), np.full(beta.size, _HALF_PI)]),
            which,
        )
        part = both[: beta.size].reshape(beta.shape)
        full = 2.0 * both[beta.size :].reshape(beta.shape)
        out = np.where(upper, (m + 1.0) * full - part, m * full + part)
        return out[()] if out.ndim == 0 else out

    def theta_integral(self, beta, phi):
        """``int_0^phi G'(beta cos tau) dtau``."""
        return self._integral(beta, phi, "theta")

    def curvature_integral(self, beta, phi):
        """``int_0^phi G''(beta cos tau) cos tau dtau``."""
        return self._integral(beta, phi, "curv")

    # ------------------------------------------------------------- inverse
    def solve_Theta(self, y, beta):
        """The unique Theta >= 0 with ``theta_integral(beta, Theta) == y``."""
        y, beta = np.broadcast_arrays(np.asarray(y, float), np.asarray(beta, float))
        if np.any(y < 0):
            raise ValueError("y must be non-negative")
        shape = y.shape
        yy = y.ravel()
        bb = beta.ravel()
        full = self.full(bb)
        m = np.floor(yy / full)
        r = yy - m * full
        upper = r > 0.5 * full
        target = np.where(upper, full - r, r)
        psi = self._invert_half(bb, np.clip(target, 0.0, 0.5 * full), 0.5 * full)
        theta = m * np.pi + np.where(upper, np.pi - psi, psi)
        out = theta.reshape(shape)
        return out[()] if out.ndim == 0 else out

    def _invert_half(self, b, target, half_full):
        """Solve ``half(b, psi) = target`` for psi in [0, pi/2].

        Newton in the stretched variable t (where the map is smooth), with a
        bisection safeguard on the bracket [0, t_max].
        """
        eps = _eps(self.gk, b)
        t_max = np.arcsinh(_HALF_PI / eps)
        lo = np.zeros_like(b)
        hi = t_max.copy()
        t = t_max * np.where(half_full > 0, target / half_full, 0.0)
        done = target <= 0.0
        t = np.where(done, 0.0, t)
        for _ in range(60):
            psi = eps * np.sinh(t)
            val = self._half(b, np.minimum(psi, _HALF_PI), "theta")
            res = val - target
            lo = np.where(res < 0, t, lo)
            hi = np.where(res > 0, t, hi)
            slope = self.gk.G1(b * np.cos(psi)) * eps * np.cosh(t)
            newton = t - res / slope
            inside = (newton > lo) & (newton < hi)
            t_new = np.where(inside, newton, 0.5 * (lo + hi))
            conv = (np.abs(res) <= 4e-16 * np.maximum(1.0, np.abs(target))) | (
                np.abs(t_new - t) <= 1e-15 * np.maximum(1.0, t)
            )
            done = done | conv
            t = np.where(done, t, t_new)
            if np.all(done):
                break
        else:
            raise ToleranceNotMet("Theta inversion did not converge")
        return np.minimum(eps * np.sinh(t), _HALF_PI)


def theta_integral(pi: PhaseIntegrator, beta, phi):
    return pi.theta_integral(beta, phi)


def curvature_integral(pi: PhaseIntegrator, beta, phi):
    return pi.curvature_integral(beta, phi)


def solve_Theta(pi: PhaseIntegrator, y, beta):
    return pi.solve_Theta(y, beta)
