"""Linearized spectrum, Morse index and nondegeneracy.

The eigenproblem ``phi'' + lam f'(u) phi = mu phi`` on (-1, 0) and (0, 1)
with the same interface conditions as u is equivalent to a Neumann problem on
[-1-a, 1+a] whose weight and potential vanish on [-a, a].  There the
eigenfunction is linear, so the middle segment is eliminated exactly: it only
contributes the interface slope ``(R_0 - L_n) / (2a)``.  What remains is a
symmetric tridiagonal matrix on the two outer grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .branches import SolutionProfile, profile_values
from .errors import DiscretizationFailure, IndexUncertain, RankMismatch
from .shooting import ShootingContext


@dataclass
class ExtendedProblem:
    """Potential samples on the outer grids of the extended interval.

    Outer node j of the left grid sits at extended coordinate
    ``-1 - a + j/n`` (original x = -1 + j/n); right node j at ``a + j/n``.
    ``ubar_mid`` samples the linear bridge on [-a, a].
    """

    a: float
    n: int
    lam: float
    x_left: np.ndarray
    x_right: np.ndarray
    q_left: np.ndarray
    q_right: np.ndarray
    ubar_left: np.ndarray
    ubar_right: np.ndarray
    x_mid: np.ndarray
    ubar_mid: np.ndarray
    slope_mid: float

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def weight(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) > self.a, 1.0, 0.0)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray  # descending
    morse_index: int
    degenerate: bool
    zero_tolerance: float
    error_estimate: np.ndarray = field(default_factory=lambda: np.zeros(0))
    certified: bool = True
    n: int = 0

    def as_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "morse_index": int(self.morse_index),
            "degenerate": bool(self.degenerate),
            "zero_tolerance": float(self.zero_tolerance),
            "error_estimate": [float(x) for x in self.error_estimate],
            "certified": bool(self.certified),
            "n": int(self.n),
        }


# ------------------------------------------------------------- assembly


def _outer_u(sc: ShootingContext, lam: float, beta: float, n: int) -> np.ndarray:
    """u at distance j/n from the outer end, j = 0..n (j = n is the interface limit)."""
    if beta == 0.0:
        return np.zeros(n + 1)
    return profile_values(sc, lam, beta, np.arange(n + 1) / n)


def build_extended(profile: SolutionProfile, sc: ShootingContext, n: int = 2000, _uL=None, _uR=None) -> ExtendedProblem:
    if n < 4:
        raise DiscretizationFailure("need at least 4 intervals per half")
    lam, a = profile.lam, sc.a
    uL = _outer_u(sc, lam, profile.beta1, n) if _uL is None else _uL
    uR_out = _outer_u(sc, lam, profile.beta2, n) if _uR is None else _uR
    uR = uR_out[::-1]  # now ordered from the interface to x = 1
    fp = sc.nl.f
    s = np.arange(n + 1) / n
    slope = 0.5 * (profile.ux_minus + profile.ux_plus)
    mid_val = 0.5 * (profile.u_minus + profile.u_plus)
    x_mid = np.linspace(-a, a, max(3, int(np.ceil(2 * a * n)) + 1))
    return ExtendedProblem(
        a=a, n=n, lam=lam,
        x_left=-1.0 - a + s, x_right=a + s,
        q_left=lam * fp(uL, 1), q_right=lam * fp(uR, 1),
        ubar_left=uL, ubar_right=uR,
        x_mid=x_mid, ubar_mid=mid_val + slope * x_mid, slope_mid=slope,
    )


def _tridiagonal(ep: ExtendedProblem):
    n, h, a = ep.n, ep.h, ep.a
    N = 2 * (n + 1)
    d = np.full(N, -2.0 / h**2)
    d[n] = d[n + 1] = -(2.0 + h / a) / h**2
    d[: n + 1] += ep.q_left
    d[n + 1 :] += ep.q_right
    e = np.full(N - 1, 1.0 / h**2)
    r2 = np.sqrt(2.0) / h**2
    e[0] = e[n - 1] = r2  # L0-L1, L(n-1)-Ln
    e[n] = 1.0 / (a * h)  # Ln-R0 through the linear bridge
    e[n + 1] = e[N - 2] = r2  # R0-R1, R(n-1)-Rn
    return d, e


def _top(ep: ExtendedProblem, m: int) -> np.ndarray:
    d, e = _tridiagonal(ep)
    N = d.size
    m = min(m, N)
    try:
        w = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(N - m, N - 1))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DiscretizationFailure(str(exc)) from exc
    return w[::-1].copy()


def eigenvalues_top(ep: ExtendedProblem, m: int, zero_tolerance: float = 1e-8) -> Spectrum:
    """Top m eigenvalues on one grid (no convergence certification)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    mu = _top(ep, m)
    if np.any(np.diff(mu) >= 0):
        raise DiscretizationFailure("eigenvalues are not strictly ordered")
    pos = int(np.count_nonzero(mu > zero_tolerance))
    deg = bool(np.any(np.abs(mu) <= zero_tolerance))
    return Spectrum(mu, pos, deg, zero_tolerance, np.zeros_like(mu), True, ep.n)


# ----------------------------------------------------------- Morse index


def _model_error(mu: np.ndarray, qmax: float, n: int) -> np.ndarray:
    # leading truncation error of the 3-point Laplacian: omega^4 h^2 / 12
    return (np.abs(mu) + qmax) ** 2 / (12.0 * n * n)


def _zero_band(mu: np.ndarray, diff: np.ndarray) -> float:
    # 50x the fine-grid error estimate of the two eigenvalues closest to zero
    near = np.argsort(np.abs(mu))[:2]
    return max(50.0 * float(np.max(diff[near])) / 3.0, 1e-10)


def morse_index(profile: SolutionProfile, sc: ShootingContext, n: int = 2000, m: int | None = None,
                strict: bool = True) -> Spectrum:
    """Morse index from grids n and 2n with Richardson extrapolation.

    The zero band is 50 times the fine-grid error estimate
    ``|mu_i(2n) - mu_i(n)| / 3`` of the two eigenvalues nearest zero,
    floored at 1e-10.  The index is
    certified when every grid discrepancy is below ten times the model
    error.  With ``strict`` an eigenvalue inside the band raises
    IndexUncertain; otherwise it sets ``degenerate``.
    """
    if m is None:
        m = profile.zero_count() + 6
    lam = profile.lam
    uL2 = _outer_u(sc, lam, profile.beta1, 2 * n)
    uR2 = _outer_u(sc, lam, profile.beta2, 2 * n)
    ep1 = build_extended(profile, sc, n, uL2[::2], uR2[::2])
    ep2 = build_extended(profile, sc, 2 * n, uL2, uR2)
    qmax = float(max(np.max(np.abs(ep2.q_left)), np.max(np.abs(ep2.q_right))))
    while True:
        mu1 = _top(ep1, m)
        mu2 = _top(ep2, m)
        diff = np.abs(mu1 - mu2)
        zero_tol = _zero_band(mu2, diff)
        if mu2[-1] < -zero_tol or m >= 2 * (n + 1):
            break
        m *= 2
    mu = (4.0 * mu2 - mu1) / 3.0
    err = diff / 3.0
    certified = bool(np.all(diff < 10.0 * _model_error(mu2, qmax, n)))
    if np.any(np.diff(mu) >= 0):
        raise DiscretizationFailure("extrapolated eigenvalues are not strictly ordered")
    deg = bool(np.any(np.abs(mu) <= zero_tol))
    idx = int(np.count_nonzero(mu > zero_tol))
    if strict and deg:
        raise IndexUncertain(f"an eigenvalue lies within {zero_tol:.2e} of zero")
    if strict and not certified:
        raise IndexUncertain("grid refinement is not consistent with second order")
    return Spectrum(mu, idx, deg, zero_tol, err, certified, n)


# ---------------------------------------------------- shooting cross-check


@dataclass
class ShootingEigen:
    mu: float
    zeros: int
    end_sign: int  # sign of phi(-1-a) * phi(1+a)
    bridge_zero: bool


def _shoot_batch(q: np.ndarray, mu: np.ndarray, a: float, count: bool = False):
    """RK4 for ``phi'' = (mu - q) phi`` from both outer ends, batched over mu.

    ``q`` has shape (2, 2M+1): samples at half steps of distance from the
    outer end of the left and right half.  Returns interface data and, with
    ``count``, the sign-change counts of phi on each half.
    """
    M = (q.shape[1] - 1) // 2
    h = 1.0 / M
    nmu = mu.size
    y = np.ones((2, nmu))
    p = np.zeros((2, nmu))
    zeros = np.zeros((2, nmu), dtype=int)
    mu = mu[None, :]
    for i in range(M):
        q0 = mu - q[:, 2 * i, None]
        qh = mu - q[:, 2 * i + 1, None]
        q1 = mu - q[:, 2 * i + 2, None]
        k1y, k1p = p, q0 * y
        y2 = y + 0.5 * h * k1y
        k2y, k2p = p + 0.5 * h * k1p, qh * y2
        y3 = y + 0.5 * h * k2y
        k3y, k3p = p + 0.5 * h * k2p, qh * y3
        y4 = y + h * k3y
        k4y, k4p = p + h * k3p, q1 * y4
        yn = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if count:
            zeros += (np.sign(yn) * np.sign(y) < 0).astype(int)
        y = yn
    phi1, phi1x = y[0], p[0]
    phi2, phi2x = y[1], -p[1]  # right half is integrated in the reflected variable
    A1, A2 = phi1 + a * phi1x, phi2 - a * phi2x
    det = A2 * phi1x - A1 * phi2x
    return det, (phi1, phi1x, phi2, phi2x), zeros


def shooting_eigenvalues(profile: SolutionProfile, sc: ShootingContext, guesses: np.ndarray,
                         widths: np.ndarray, steps: int = 2000) -> list[ShootingEigen]:
    """Refine each guess to a zero of the interface determinant and count zeros."""
    lam, a = profile.lam, sc.a
    dist = np.arange(2 * steps + 1) / (2 * steps)
    q = np.vstack([
        lam * sc.nl.f(_outer_u(sc, lam, profile.beta1, 2 * steps), 1),
        lam * sc.nl.f(_outer_u(sc, lam, profile.beta2, 2 * steps), 1),
    ])
    assert q.shape[1] == dist.size
    guesses = np.asarray(guesses, dtype=float)
    lo = guesses - widths
    hi = guesses + widths
    f_lo = _shoot_batch(q, lo, a)[0]
    f_hi = _shoot_batch(q, hi, a)[0]
    for _ in range(40):
        bad = f_lo * f_hi > 0
        if not np.any(bad):
            break
        w = hi - lo
        lo = np.where(bad, lo - w, lo)
        hi = np.where(bad, hi + w, hi)
        f_lo = np.where(bad, _shoot_batch(q, lo, a)[0], f_lo)
        f_hi = np.where(bad, _shoot_batch(q, hi, a)[0], f_hi)
    else:
        raise RankMismatch("no sign change of the interface determinant near an eigenvalue")
    # Illinois iteration, batched
    side = np.zeros(guesses.shape)
    for _ in range(100):
        x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        fx = _shoot_batch(q, x, a)[0]
        left = fx * f_lo > 0
        lo = np.where(left, x, lo)
        f_lo = np.where(left, fx, f_lo)
        hi = np.where(left, hi, x)
        f_hi = np.where(left, f_hi, fx)
        f_hi = np.where(left & (side > 0), 0.5 * f_hi, f_hi)
        f_lo = np.where(~left & (side < 0), 0.5 * f_lo, f_lo)
        side = np.where(left, 1.0, -1.0)
        if np.all(np.abs(hi - lo) <= 1e-13 * np.maximum(1.0, np.abs(x))):
            break
    mu = 0.5 * (lo + hi)
    _, (phi1, phi1x, phi2, phi2x), zeros = _shoot_batch(q, mu, a, count=True)
    out = []
    for i in range(mu.size):
        # scale of the right piece from whichever interface condition is better conditioned
        A1, A2 = phi1[i] + a * phi1x[i], phi2[i] - a * phi2x[i]
        alpha2 = phi1x[i] / phi2x[i] if abs(phi2x[i]) > abs(A2) else A1 / A2
        bridge = phi1[i] * alpha2 * phi2[i] < 0
        z = int(zeros[0, i] + zeros[1, i] + (1 if bridge else 0))
        out.append(ShootingEigen(float(mu[i]), z, int(np.sign(alpha2)), bool(bridge)))
    return out


def eigen_cross_check(profile: SolutionProfile, sc: ShootingContext, m: int = 5, n: int = 2000,
                      steps: int = 2000, spectrum: Spectrum | None = None) -> list[float]:
    """Top m eigenvalues recomputed by shooting; raises RankMismatch on a zero-count error."""
    res = cross_check_details(profile, sc, m, n, steps, spectrum)
    return [r.mu for r in res]


def cross_check_details(profile, sc, m=5, n=2000, steps=2000, spectrum=None) -> list[ShootingEigen]:
    if spectrum is None:
        spectrum = morse_index(profile, sc, n, max(m, profile.zero_count() + 6), strict=False)
    mu = spectrum.eigenvalues[:m]
    floor = 1e-9 * np.maximum(1.0, np.abs(mu))
    widths = 10.0 * spectrum.error_estimate[:m] + floor
    res = shooting_eigenvalues(profile, sc, mu, widths, steps)
    for rank, r in enumerate(res):
        if r.zeros != rank:
            raise RankMismatch(f"eigenfunction {rank} has {r.zeros} zeros")
        if r.end_sign != (-1) ** rank:
            raise RankMismatch(f"eigenfunction {rank} violates the end-sign rule")
    return res


# -------------------------------------------------------- nondegeneracy


@dataclass(frozen=True)
class NondegeneracyReport:
    D: float
    D_nonzero: bool
    spectral_degenerate: bool
    agree: bool

    def as_dict(self) -> dict:
        return {"D": self.D, "D_nonzero": self.D_nonzero,
                "spectral_degenerate": self.spectral_degenerate, "agree": self.agree}


def nondegeneracy_verdict(sc: ShootingContext, lam, beta1, beta2, spectrum: Spectrum,
                          d_tol: float = 1e-6) -> NondegeneracyReport:
    D = float(sc.eval_D(lam, beta1, beta2))
    nz = abs(D) > d_tol
    return NondegeneracyReport(D, nz, spectrum.degenerate, nz != spectrum.degenerate)


def trivial_eigenvalues(nl, a: float, lam: float, m: int) -> np.ndarray:
    """Closed-form top m eigenvalues at u = 0, descending."""
    from .branches import z_roots

    kk = m // 2 + 2
    z = z_roots(a, kk)
    vals = []
    for k in range(1, kk + 1):
        vals.append(lam * nl.f_prime_0 - ((k - 1) * np.pi) ** 2)
        vals.append(lam * nl.f_prime_0 - z[k - 1] ** 2)
    return np.sort(np.array(vals))[::-1][:m]
