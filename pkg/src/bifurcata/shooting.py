"""Finite-dimensional reduction of the matching problem.

A left solution starting at x = -1 from rest at ``u = G(beta)`` is
``u = G(beta cos Theta)``.  At the interface it has phase
``theta(lam, beta)``, defined by ``int_0^theta G'(beta cos) = sqrt(lam)``, and
the matching system reads ``(P, Q)(lam, beta1) = (P, -Q)(lam, beta2)`` with

    P = G(beta cos theta) - a sqrt(lam) beta sin theta,    Q = -beta sin theta.

Odd solutions (beta2 = -beta1) reduce to ``g(beta, phi) = 0`` with phi the
interface phase; the k-th root is phi_k(beta) and ``lam = (int_0^phi_k G')**2``.
Even solutions have ``sin theta = 0``, i.e. ``lam = (k * int_0^pi G')**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketError, DomainError
from .nonlinearity import GKernel
from .quadrature import PhaseIntegrator, _gauss

# below this fraction of beta0, G(beta cos phi)/beta is evaluated as an average of G'
SMALL_BETA = 1e-6


@dataclass(frozen=True)
class ModeRoot:
    k: int
    beta: float
    phi: float


@dataclass(frozen=True)
class Shot:
    """Everything known about the left solution at the interface for one (lam, beta)."""

    lam: float
    beta: float
    theta: float
    G1: float  # G'(beta cos theta)
    S2: float  # int_0^theta G''(beta cos) cos
    P: float
    Q: float
    P_beta: float
    Q_beta: float
    P_lam: float
    Q_lam: float


class ShootingContext:
    def __init__(self, gk: GKernel, pi: PhaseIntegrator | None = None, a: float = 1.0):
        if not a > 0:
            raise DomainError("interaction strength a must be positive")
        self.gk = gk
        self.pi = pi if pi is not None else PhaseIntegrator(gk)
        self.a = float(a)
        self.beta0 = gk.beta0

    @property
    def nl(self):
        return self.gk.nl

    def _check(self, beta) -> None:
        if np.any(~(np.abs(beta) < self.beta0)):
            raise DomainError(f"|beta| must be < beta0 = {self.beta0!r}")

    # -------------------------------------------------------------------- g
    def _G_over_beta(self, beta, phi):
        """``G(beta cos phi) / beta``, with a cancellation-free form for small beta."""
        beta, phi = np.broadcast_arrays(np.asarray(beta, float), np.asarray(phi, float))
        c = np.cos(phi)
        small = np.abs(beta) < SMALL_BETA * self.beta0
        out = np.empty(beta.shape)
        if np.any(small):
            x, w = _gauss(8)
            v = beta[small][..., None] * c[small][..., None] * x
            out[small] = c[small] * (self.gk.G1(v) @ w)
        big = ~small
        if np.any(big):
            out[big] = self.gk.G(beta[big] * c[big]) / beta[big]
        return out

    def eval_g(self, beta, phi):
        """``G(beta cos phi)/beta - a sin phi int_0^phi G'(beta cos)``."""
        self._check(beta)
        I1 = self.pi.theta_integral(beta, phi)
        out = self._G_over_beta(beta, phi) - self.a * np.sin(phi) * I1
        return out[()] if np.ndim(out) == 0 else out

    def _g_and_slope(self, beta, phi):
        I1 = self.pi.theta_integral(beta, phi)
        s, c = np.sin(phi), np.cos(phi)
        g = self._G_over_beta(beta, phi) - self.a * s * I1
        gp = -(1.0 + self.a) * self.gk.G1(beta * c) * s - self.a * c * I1
        return g, gp

    # ---------------------------------------------------------------- phi_k
    def solve_phi(self, beta, k: int):
        """phi_k(beta) for an array of beta (safeguarded Newton on the bracket)."""
        if k < 1:
            raise ValueError("k must be >= 1")
        beta = np.asarray(beta, dtype=float)
        self._check(beta)
        shape = beta.shape
        b = beta.ravel()
        lo = np.full(b.shape, (k - 1) * np.pi)
        hi = np.full(b.shape, (k - 0.5) * np.pi)
        sgn = 1.0 if k % 2 == 1 else -1.0
        g_lo, _ = self._g_and_slope(b, lo)
        g_hi, _ = self._g_and_slope(b, hi)
        if np.any(sgn * g_lo <= 0) or np.any(sgn * g_hi >= 0):
            raise BracketError(f"g has no sign change on the mode-{k} bracket")
        # orient so that the function is decreasing in phi: s*g
        phi = lo + (hi - lo) * g_lo / (g_lo - g_hi)
        done = np.zeros(b.shape, dtype=bool)
        for _ in range(100):
            g, gp = self._g_and_slope(b, phi)
            sg = sgn * g
            lo = np.where(sg > 0, phi, lo)
            hi = np.where(sg < 0, phi, hi)
            tol = np.maximum(1e-12, 4.0 * np.spacing(phi) * np.abs(gp))
            conv = (np.abs(g) < tol) | (hi - lo < 1e-13)
            done |= conv
            if np.all(done):
                break
            newton = phi - g / gp
            inside = (newton > lo) & (newton < hi)
            phi = np.where(done, phi, np.where(inside, newton, 0.5 * (lo + hi)))
        else:
            raise BracketError(f"phi_{k} iteration did not converge")
        out = phi.reshape(shape)
        return out[()] if out.ndim == 0 else out

    def solve_phi_k(self, beta: float, k: int) -> ModeRoot:
        return ModeRoot(k, float(beta), float(self.solve_phi(float(beta), k)))

    # --------------------------------------------------------------- lambda
    def lambda_branch(self, beta, k: int, parity: str):
        """``lam_k^o(beta)`` or ``lam_k^e(beta)``."""
        beta = np.asarray(beta, dtype=float)
        self._check(beta)
        if parity == "odd":
            phi = self.solve_phi(beta, k)
            out = self.pi.theta_integral(beta, phi) ** 2
        elif parity == "even":
            out = (k * self.pi.full(beta)) ** 2
        else:
            raise ValueError("parity must be 'odd' or 'even'")
        return out[()] if np.ndim(out) == 0 else out

    # ----------------------------------------------------------- P, Q, ...
    def shoot(self, lam, beta):
        """Interface data for arrays of (lam, beta); returns a dict of arrays."""
        lam, beta = np.broadcast_arrays(np.asarray(lam, float), np.asarray(beta, float))
        if np.any(lam <= 0):
            raise DomainError("lambda must be positive")
        self._check(beta)
        sl = np.sqrt(lam)
        theta = self.pi.solve_Theta(sl, beta)
        S2 = self.pi.curvature_integral(beta, theta)
        s, c = np.sin(theta), np.cos(theta)
        v = beta * c
        Gv = self.gk.G(v)
        G1 = self.gk.G1(v)
        a = self.a
        P = Gv - a * sl * beta * s
        Q = -beta * s
        Q_b = -s + beta * c / G1 * S2
        P_b = G1 * c - a * s * sl + (beta * s + a * beta * c / G1 * sl) * S2
        th_l = 1.0 / (2.0 * sl * G1)
        P_l = -G1 * beta * s * th_l - a * beta * s / (2.0 * sl) - a * sl * beta * c * th_l
        Q_l = -beta * c * th_l
        return {
            "lam": lam, "beta": beta, "theta": theta, "G1": G1, "S2": S2,
            "P": P, "Q": Q, "P_beta": P_b, "Q_beta": Q_b, "P_lam": P_l, "Q_lam": Q_l,
        }

    def shot(self, lam: float, beta: float) -> Shot:
        d = self.shoot(lam, beta)
        return Shot(**{k: float(v) for k, v in d.items()})

    def eval_PQ(self, lam, beta):
        d = self.shoot(lam, beta)
        return _scalar(d["P"]), _scalar(d["Q"])

    def eval_PQ_beta(self, lam, beta):
        d = self.shoot(lam, beta)
        return _scalar(d["P_beta"]), _scalar(d["Q_beta"])

    def eval_D(self, lam, beta1, beta2):
        """``P_b(b1) Q_b(b2) + Q_b(b1) P_b(b2)``; zero exactly at degenerate solutions."""
        lam, b1, b2 = np.broadcast_arrays(*(np.asarray(x, float) for x in (lam, beta1, beta2)))
        d = self.shoot(np.concatenate([lam.ravel(), lam.ravel()]), np.concatenate([b1.ravel(), b2.ravel()]))
        n = lam.size
        Pb, Qb = d["P_beta"], d["Q_beta"]
        out = (Pb[:n] * Qb[n:] + Qb[:n] * Pb[n:]).reshape(lam.shape)
        return _scalar(out)

    # ------------------------------------------------------------ R, I, J
    def eval_RIJ(self, beta: float, phi: float):
        """``(R, I, J, dphi, at_limit)`` at (beta, phi).

        ``dphi = J/I`` is the slope of phi_k when phi = phi_k(beta).  At
        beta = 0 both I and J vanish; the limit slope 0 (phi_k is even) is
        returned with ``at_limit=True``.
        """
        beta = float(beta)
        phi = float(phi)
        self._check(beta)
        s, c = np.sin(phi), np.cos(phi)
        S1 = float(self.pi.theta_integral(beta, phi))
        S2 = float(self.pi.curvature_integral(beta, phi))
        G1 = float(self.gk.G1(beta * c))
        R = -s + beta * c / G1 * S2
        if beta == 0.0:
            return R, 0.0, 0.0, 0.0, True
        # phi = m pi and pi/2 + m pi are not representable; compare with rounding
        if abs(s) <= 4.0 * np.spacing(max(phi, 1.0)):
            raise DomainError("I is undefined where sin(phi) = 0")
        Gv = float(self.gk.G(beta * c))
        if abs(c) <= 4.0 * np.spacing(max(phi, 1.0)):
            raise DomainError("I and J are undefined where cos(phi) = 0")
        I = beta * ((G1 * beta * s / Gv + c / s) * S1 + G1)
        J = (G1 * beta * c / Gv - 1.0) * S1 - beta * S2
        return R, I, J, J / I, False


def _scalar(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def branch_R(sc: ShootingContext, beta, k: int):
    """``R(beta, phi_k(beta))`` for an array of beta, with phi_k and lam_k^o.

    On the odd branch this equals ``Q_beta(lam_k^o(beta), beta)``; its zero
    marks the secondary bifurcation point.
    """
    beta = np.asarray(beta, dtype=float)
    phi = sc.solve_phi(beta, k)
    S1 = sc.pi.theta_integral(beta, phi)
    S2 = sc.pi.curvature_integral(beta, phi)
    c = np.cos(phi)
    R = -np.sin(phi) + beta * c / sc.gk.G1(beta * c) * S2
    return _scalar(R), _scalar(phi), _scalar(S1**2)
