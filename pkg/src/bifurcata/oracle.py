"""Brute-force reference computations.

Nothing here touches the kernel G, the phase integrals or the shooting
reduction.  The IVP is integrated directly with classical RK4 from the
outer ends, initial values come from a plain bisection on F, and reference
integrals use scipy's adaptive quadrature on the raw variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import EnergyDrift, NoSignChange
from .nonlinearity import Nonlinearity


# ------------------------------------------------------------- scalar roots


def _ztan(a: float = 1.0):
    return lambda z: a * z * np.tan(z) - 1.0


NAMED = {
    "ztan": _ztan(1.0),
    "sin": np.sin,
}


def root_oracle(expr, bracket, tol: float = 1e-14, **params) -> float:
    """Bisection root of a named expression or callable; no derivatives.

    ``"ztan"`` is ``a z tan z - 1`` (pass ``a=...`` to change a).
    """
    if isinstance(expr, str):
        fn = _ztan(params.get("a", 1.0)) if expr == "ztan" else NAMED[expr]
    else:
        fn = expr
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def z_oracle(k: int, a: float = 1.0) -> float:
    """k-th root of ``a z tan z = 1`` by bisection on ((k-1)pi, (k-1/2)pi)."""
    lo = (k - 1) * np.pi
    hi = (k - 0.5) * np.pi
    # stay off the pole of tan at the right end
    return root_oracle("ztan", (lo, np.nextafter(hi, lo)), a=a)


def lambda_oracle(nl: Nonlinearity, a: float, n: int) -> float:
    """lam_n from the bisection roots: z_k**2/f'(0) for odd n, (k pi)**2/f'(0) for even n."""
    k = (n + 1) // 2
    fp0 = float(nl.f(0.0, 1))
    if n % 2 == 1:
        return z_oracle(k, a) ** 2 / fp0
    return (k * np.pi) ** 2 / fp0


def inverse_energy(nl: Nonlinearity, v):
    """u with ``F(u) = v**2``, ``sgn u = sgn v``, by bisection to relative width 1e-15."""
    v = np.asarray(v, dtype=float)
    av = np.abs(v)
    target = av * av
    lo = np.zeros_like(av)
    hi = np.ones_like(av)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = nl.F(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    out = np.sign(v) * 0.5 * (lo + hi)
    return out[()] if out.ndim == 0 else out


# ------------------------------------------------------------------- IVPs


@dataclass
class IVPResult:
    """Samples of u and u_x on a half-interval, ordered by x."""

    x: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    n_steps: int
    drift: float


def _rk4(nl: Nonlinearity, lam: float, u0: np.ndarray, n_steps: int, keep: bool):
    """RK4 for ``w'' = -lam f(w)``, ``w(0) = u0``, ``w'(0) = 0`` on s in [0, 1]."""
    h = 1.0 / n_steps
    w = np.array(u0, dtype=float)
    p = np.zeros_like(w)
    e0 = lam * nl.F(w)
    drift = np.zeros_like(w)
    ws, ps = ([w.copy()], [p.copy()]) if keep else (None, None)
    f = nl.f
    for _ in range(n_steps):
        k1w, k1p = p, -lam * f(w)
        k2w, k2p = p + 0.5 * h * k1p, -lam * f(w + 0.5 * h * k1w)
        k3w, k3p = p + 0.5 * h * k2p, -lam * f(w + 0.5 * h * k2w)
        k4w, k4p = p + h * k3p, -lam * f(w + h * k3w)
        w = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        drift = np.maximum(drift, np.abs(p * p + lam * nl.F(w) - e0))
        if keep:
            ws.append(w.copy())
            ps.append(p.copy())
    if keep:
        return np.array(ws), np.array(ps), drift
    return w, p, drift


def integrate_ivp(
    nl: Nonlinearity,
    lam: float,
    beta: float,
    direction: str = "left",
    n_steps: int | None = None,
    drift_tol: float = 1e-10,
    max_steps: int = 1 << 18,
    base_steps: int = 256,
) -> IVPResult:
    """Integrate ``u'' + lam f(u) = 0`` from an outer end at rest.

    ``direction="left"`` starts at x = -1 with ``u = G(beta)``; ``"right"``
    starts at x = 1.  Without ``n_steps`` the step count doubles from
    ``base_steps`` until the energy ``u_x**2 + lam F(u)`` drifts by less than
    ``drift_tol``.
    """
    if direction not in ("left", "right"):
        raise ValueError("direction must be 'left' or 'right'")
    u0 = inverse_energy(nl, beta)
    steps = base_steps if n_steps is None else int(n_steps)
    while True:
        w, p, drift = _rk4(nl, lam, np.array([u0]), steps, keep=True)
        d = float(drift[0])
        if d < drift_tol:
            break
        if n_steps is not None or steps * 2 > max_steps:
            raise EnergyDrift(f"energy drift {d:.2e} with {steps} steps")
        steps *= 2
    s = np.linspace(0.0, 1.0, steps + 1)
    w, p = w[:, 0], p[:, 0]
    if direction == "left":
        return IVPResult(-1.0 + s, w, p, steps, d)
    return IVPResult((1.0 - s)[::-1], w[::-1], -p[::-1], steps, d)


def interface_values(nl: Nonlinearity, lam: float, betas, drift_tol: float = 1e-10, max_steps: int = 1 << 18):
    """``(w(1), w'(1))`` of the rest-start IVP for each beta, batched.

    Returns ``(w, wp, steps)``; the step count doubles until every member
    meets the drift bound.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    u0 = inverse_energy(nl, betas)
    steps = 256
    while True:
        w, p, drift = _rk4(nl, lam, u0, steps, keep=False)
        if np.all(drift < drift_tol):
            return w, p, steps
        if steps * 2 > max_steps:
            raise EnergyDrift(f"energy drift {np.max(drift):.2e} with {steps} steps")
        steps *= 2


def matching_residual(nl: Nonlinearity, a: float, lam: float, beta1: float, beta2: float) -> np.ndarray:
    """Both interface conditions evaluated on oracle IVP end values."""
    w, p, _ = interface_values(nl, lam, [beta1, beta2])
    u1, u1x = w[0], p[0]
    u2, u2x = w[1], -p[1]
    return np.array([u1 + a * u1x - (u2 - a * u2x), u1x - u2x])


def profile_discrepancy(nl: Nonlinearity, profile) -> float:
    """Max |u - u_ivp| over the profile nodes and the two interface limits."""
    worst = 0.0
    n_grid = int(np.count_nonzero(profile.x < 0))
    base = n_grid * max(1, int(np.ceil(256 / n_grid)))
    for direction, beta, lim in (("left", profile.beta1, profile.u_minus), ("right", profile.beta2, profile.u_plus)):
        r = integrate_ivp(nl, profile.lam, beta, direction, base_steps=base)
        mask = profile.x < 0 if direction == "left" else profile.x > 0
        # the step count is a multiple of n_grid, so every node is an RK4 node
        stride = r.n_steps // n_grid
        ivp = r.u[:-1:stride] if direction == "left" else r.u[stride::stride]
        worst = max(worst, float(np.max(np.abs(ivp - profile.u[mask]), initial=0.0)))
        end = r.u[-1] if direction == "left" else r.u[0]
        worst = max(worst, abs(end - lim))
    return worst


def audit_profiles(nl: Nonlinearity, a: float, profiles, drift_tol: float = 1e-10, max_steps: int = 1 << 16):
    """Batched oracle audit of many profiles sharing one node layout.

    Returns ``(discrepancy, residual)``: per profile, the max |u - u_ivp| over
    nodes and interface limits, and the max-norm of both matching conditions
    evaluated on the IVP end values.
    """
    if not profiles:
        return np.zeros(0), np.zeros(0)
    n_grid = int(np.count_nonzero(profiles[0].x < 0))
    lam = np.array([p.lam for p in profiles] * 2)
    betas = np.array([p.beta1 for p in profiles] + [p.beta2 for p in profiles])
    u0 = inverse_energy(nl, betas)
    steps = n_grid * max(1, int(np.ceil(256 / n_grid)))
    while True:
        w, pw, drift = _rk4(nl, lam, u0, steps, keep=True)
        if np.all(drift < drift_tol):
            break
        if steps * 2 > max_steps:
            raise EnergyDrift(f"energy drift {np.max(drift):.2e} with {steps} steps")
        steps *= 2
    m = len(profiles)
    stride = steps // n_grid
    disc = np.zeros(m)
    res = np.zeros(m)
    for i, p in enumerate(profiles):
        left = p.x < 0
        wl, wr = w[:, i], w[:, m + i]
        # left nodes sit at distance j/n_grid from x = -1; right nodes are their mirrors
        d_left = np.abs(wl[:-1:stride] - p.u[left])
        d_right = np.abs(wr[:-1:stride][::-1] - p.u[~left])
        disc[i] = max(d_left.max(), d_right.max(), abs(wl[-1] - p.u_minus), abs(wr[-1] - p.u_plus))
        u1, u1x = wl[-1], pw[-1, i]
        u2, u2x = wr[-1], -pw[-1, m + i]
        res[i] = max(abs(u1 + a * u1x - (u2 - a * u2x)), abs(u1x - u2x))
    return disc, res


def ode_residual(nl: Nonlinearity, profile) -> float:
    """Max |u_xx + lam f(u)| at interior nodes, with a 4th-order 5-point stencil."""
    worst = 0.0
    for mask in (profile.x < 0, profile.x > 0):
        x, u = profile.x[mask], profile.u[mask]
        if len(x) < 5:
            continue
        h = x[1] - x[0]
        uxx = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (12 * h * h)
        r = uxx + profile.lam * nl.f(u[2:-2])
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


# ------------------------------------------------------------- 2-D scan


@dataclass
class ScanReport:
    lam: float
    grid: np.ndarray
    cells: list[tuple[int, int]]
    accounted: list[tuple[int, int]] = field(default_factory=list)
    unaccounted: list[tuple[float, float]] = field(default_factory=list)
    empty: list[tuple[int, int]] = field(default_factory=list)
    symmetric: bool = True

    @property
    def ok(self) -> bool:
        return not self.unaccounted and self.symmetric

    def centers(self) -> np.ndarray:
        g = self.grid
        return np.array([(0.5 * (g[i] + g[i + 1]), 0.5 * (g[j] + g[j + 1])) for i, j in self.cells]).reshape(-1, 2)


def _scan_map(nl, a, lam, betas):
    w, p, _ = interface_values(nl, lam, betas)
    A = w + a * p  # u(0-) + a u_x(0-) of a left solution
    B = p
    return A, B


def _oracle_newton(nl, a, lam, x0, beta0, tol=1e-11, max_iter=30):
    x = np.array(x0, dtype=float)
    h = 1e-7
    for _ in range(max_iter):
        if np.any(np.abs(x) >= beta0 * (1 - 1e-9)):
            return None
        bs = np.array([x[0], x[1], x[0] + h, x[1] + h, x[0] - h, x[1] - h])
        bs = np.clip(bs, -beta0 * (1 - 1e-12), beta0 * (1 - 1e-12))
        A, B = _scan_map(nl, a, lam, bs)
        F = np.array([A[0] - A[1], B[0] + B[1]])
        dA = (A[2:4] - A[4:6]) / (2 * h)
        dB = (B[2:4] - B[4:6]) / (2 * h)
        J = np.array([[dA[0], -dA[1]], [dB[0], dB[1]]])
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if np.linalg.norm(dx) < tol:
            return x
    return None


def scan_solution_set(
    nl: Nonlinearity,
    a: float,
    lam: float,
    grid: int = 400,
    known=None,
    radius: float = 2.0,
) -> ScanReport:
    """Cells of a symmetric grid where both matching residuals change sign.

    Grid points are ``sgn(u) sqrt(F(u))`` for ``u = (2i + 1 - grid) / grid``:
    uniform in the boundary value u(+-1), symmetric, and avoiding 0 and
    +-beta0.  Uniform spacing in u resolves the solutions with |u(+-1)|
    close to 1 that a grid uniform in beta would miss.

    A candidate cell is accounted for when a known solution lies within
    ``radius`` cell widths of its center.  Otherwise Newton is run
    from the center on the oracle map: if it lands on a solution that is not
    known, the solution is reported as unaccounted; if it finds nothing, the
    cell is recorded as empty (two zero curves crossing the cell without
    meeting).
    """
    if grid < 100:
        raise ValueError("grid must be at least 100")
    beta0 = float(np.sqrt(nl.F(1.0)))
    ug = (2.0 * np.arange(grid) + 1.0 - grid) / grid
    g = np.sign(ug) * np.sqrt(nl.F(ug))
    A, B = _scan_map(nl, a, lam, g)
    F1 = A[:, None] - A[None, :]
    F2 = B[:, None] + B[None, :]

    def changes(F):
        c = np.stack([F[:-1, :-1], F[1:, :-1], F[:-1, 1:], F[1:, 1:]])
        return (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)

    mask = changes(F1) & changes(F2)
    cells = [tuple(map(int, ij)) for ij in np.argwhere(mask)]
    symmetric = bool(np.array_equal(mask, mask[::-1, ::-1]))
    rep = ScanReport(lam, g, cells, symmetric=symmetric)
    known = np.zeros((0, 2)) if known is None or len(known) == 0 else np.asarray(known, dtype=float).reshape(-1, 2)
    found: list[np.ndarray] = []
    for i, j in cells:
        c = np.array([0.5 * (g[i] + g[i + 1]), 0.5 * (g[j] + g[j + 1])])
        width = max(g[i + 1] - g[i], g[j + 1] - g[j], g[min(i + 2, grid - 1)] - g[i + 1], g[min(j + 2, grid - 1)] - g[j + 1])
        if len(known) and np.min(np.max(np.abs(known - c), axis=1)) <= radius * width:
            rep.accounted.append((i, j))
            continue
        root = _oracle_newton(nl, a, lam, c, beta0)
        if root is None or np.max(np.abs(root - c)) > radius * width:
            rep.empty.append((i, j))
            continue
        if len(known) and np.min(np.max(np.abs(known - root), axis=1)) <= 1e-6:
            rep.accounted.append((i, j))
            continue
        if not any(np.max(np.abs(root - r)) < 1e-6 for r in found):
            found.append(root)
            rep.unaccounted.append((float(root[0]), float(root[1])))
    return rep


# ------------------------------------------------------------ integrals


def oracle_G1(nl: Nonlinearity, v):
    """G'(v) = v / f(G(v)) with G from the bisection inverse; 1/sqrt(f'(0)) at 0."""
    v = np.asarray(v, dtype=float)
    u = inverse_energy(nl, v)
    fu = nl.f(u)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(v == 0, 1.0 / np.sqrt(nl.f(0.0, 1)), v / np.where(fu == 0, 1.0, fu))
    return out[()] if out.ndim == 0 else out


def oracle_G2(nl: Nonlinearity, v):
    """G''(v) = (1 - f'(u) F(u) / f(u)**2) / f(u); -f''(0)/(3 f'(0)**2) at 0."""
    v = np.asarray(v, dtype=float)
    u = inverse_energy(nl, v)
    fu = nl.f(u)
    safe = np.where(fu == 0, 1.0, fu)
    out = np.where(v == 0, -nl.f(0.0, 2) / (3 * nl.f(0.0, 1) ** 2),
                   (1.0 - nl.f(u, 1) * nl.F(u) / safe**2) / safe)
    return out[()] if out.ndim == 0 else out


def reference_integral(nl: Nonlinearity, beta: float, phi: float, which: str = "theta",
                       epsrel: float = 1e-13) -> float:
    """Adaptive QUADPACK integral on the raw variable, split at multiples of pi."""
    if which == "theta":
        fn = lambda t: float(oracle_G1(nl, beta * np.cos(t)))  # noqa: E731
    else:
        fn = lambda t: float(oracle_G2(nl, beta * np.cos(t))) * np.cos(t)  # noqa: E731
    cuts = [0.0] + [m * np.pi for m in range(1, int(phi / np.pi) + 1) if m * np.pi < phi] + [phi]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        # the integrand peaks at the ends of each period; split there as well
        val, _ = quad(fn, lo, hi, epsabs=0.0, epsrel=epsrel, limit=1000,
                      points=[x for x in (lo + 0.5 * np.pi,) if lo < x < hi] or None)
        total += val
    return total


def central_difference(fn: Callable[[float], float], x: float, h: float = 1e-5) -> float:
    return (fn(x + h) - fn(x - h)) / (2.0 * h)
