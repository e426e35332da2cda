"""Nonlinearities f, their energies F, and the inverse kernel G.

G is the inverse of ``u -> sgn(u) * sqrt(F(u))`` on (-1, 1), where
``F(u) = 2 * int_0^u f``.  It turns the phase-plane orbits of
``w'' + f(w) = 0`` into circles, so that every solution of the half-interval
problem is ``u = G(beta * cos Theta)``.

The cubic ``u - u**3`` and the sine ``sin(pi*u)`` have closed forms for G and
its derivatives.  Custom polynomials go through a bracketed inversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError

_KINDS = ("cubic", "sine", "custom")

# below this fraction of beta0 the generic kernel switches to its Taylor series
SERIES_SWITCH = 1e-4


def _bisect_sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class Nonlinearity:
    """A nonlinearity of the bistable odd class on [-1, 1].

    ``coefficients`` are ascending power coefficients and are only used for
    ``kind="custom"``, e.g. ``[0, 1, 0, -1]`` is ``u - u**3``.
    """

    kind: str = "cubic"
    coefficients: tuple[float, ...] = ()
    _poly: Polynomial | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "custom":
            c = tuple(float(x) for x in self.coefficients)
            if len(c) < 2:
                raise DomainError("custom nonlinearity needs at least two coefficients")
            object.__setattr__(self, "coefficients", c)
            object.__setattr__(self, "_poly", Polynomial(c))
            self._validate_custom()
        else:
            object.__setattr__(self, "coefficients", ())

    @classmethod
    def custom(cls, coefficients: Sequence[float]) -> "Nonlinearity":
        return cls("custom", tuple(coefficients))

    def _validate_custom(self) -> None:
        p = self._poly
        if not p.coef[1] > 0:
            raise DomainError("custom nonlinearity needs f'(0) > 0")
        if abs(p(1.0)) > 1e-12 or abs(p(0.0)) > 1e-12:
            raise DomainError("custom nonlinearity needs f(0) = f(1) = 0")
        u = np.linspace(0.0, 1.0, 4001)[1:-1]
        dp = p.deriv()(u)
        if _bisect_sign_changes(dp) != 1:
            raise DomainError("f' must change sign exactly once on (0, 1)")

    # ------------------------------------------------------------------ f, F
    def f(self, u, order: int = 0):
        """f, f' or f'' at ``u`` (scalar or array)."""
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        u = np.asarray(u, dtype=float)
        if self.kind == "cubic":
            # products rather than powers: numpy's vectorized pow is not exactly odd
            out = (u - u * u * u, 1.0 - 3.0 * u * u, -6.0 * u)[order]
        elif self.kind == "sine":
            pu = np.pi * u
            out = (np.sin(pu), np.pi * np.cos(pu), -np.pi**2 * np.sin(pu))[order]
        else:
            q = self._poly if order == 0 else self._poly.deriv(order)
            out = q(u)
        return out[()] if isinstance(out, np.ndarray) else out

    def F(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "cubic":
            u2 = u * u
            out = u2 - 0.5 * u2 * u2
        elif self.kind == "sine":
            # (2/pi)(1 - cos(pi u)) written without cancellation
            out = (4.0 / np.pi) * np.sin(0.5 * np.pi * u) ** 2
        else:
            out = 2.0 * self._poly.integ(lbnd=0.0)(u)
        return out[()] if isinstance(out, np.ndarray) else out

    @property
    def f_prime_0(self) -> float:
        return float(self.f(0.0, 1))

    @property
    def beta0(self) -> float:
        return float(np.sqrt(self.F(1.0)))

    @property
    def u0(self) -> float:
        """The positive zero of f' in (0, 1)."""
        if self.kind == "cubic":
            return 1.0 / np.sqrt(3.0)
        if self.kind == "sine":
            return 0.5
        dp = self._poly.deriv()
        roots = dp.roots()
        real = [r.real for r in roots if abs(r.imag) < 1e-12 and 0.0 < r.real < 1.0]
        if len(real) != 1:
            raise DomainError("f' has no unique zero in (0, 1)")
        return float(real[0])

    @property
    def is_odd(self) -> bool:
        if self.kind != "custom":
            return True
        even = np.asarray(self.coefficients[0::2])
        return bool(np.all(np.abs(even) <= 1e-14))

    def label(self) -> str:
        if self.kind == "custom":
            return "custom(" + ",".join(repr(c) for c in self.coefficients) + ")"
        return self.kind


def eval_f(nl: Nonlinearity, u, order: int = 0):
    return nl.f(u, order)


def eval_F(nl: Nonlinearity, u):
    return nl.F(u)


class GKernel:
    """Inverse of ``u -> sgn(u) sqrt(F(u))`` with first and second derivatives.

    All methods are vectorized.  ``generic=True`` forces the bracketed
    inversion even for the built-in nonlinearities, which is how the closed
    forms are cross-checked.
    """

    def __init__(self, nl: Nonlinearity, tol: float = 1e-14, generic: bool = False):
        if not nl.is_odd:
            raise DomainError("G is only defined here for odd nonlinearities")
        self.nl = nl
        self.tol = tol
        self.beta0 = nl.beta0
        self._mode = "generic" if (generic or nl.kind == "custom") else nl.kind
        self._c1 = nl.f_prime_0
        # cubic Taylor coefficient of f, f'''(0)/6
        self._c3 = self._taylor_c3()
        self.v0 = float(np.sqrt(nl.F(nl.u0)))
        if nl.kind == "custom":
            # f and beta0**2 - F in powers of w = 1 - u: relative accuracy next to beta0
            fs = nl._poly(Polynomial([1.0, -1.0]))
            self._fs = (fs, fs.deriv())
            self._E = 2.0 * fs.integ(lbnd=0.0)

    def _taylor_c3(self) -> float:
        nl = self.nl
        if nl.kind == "cubic":
            return -1.0
        if nl.kind == "sine":
            return -(np.pi**3) / 6.0
        c = nl.coefficients
        return float(c[3]) if len(c) > 3 else 0.0

    # ---------------------------------------------------------------- checks
    def _check(self, v: np.ndarray) -> None:
        if np.any(~(np.abs(v) < self.beta0)):
            raise DomainError(f"|v| must be < beta0 = {self.beta0!r}")

    # -------------------------------------------------------------------- G
    def G(self, v):
        v = np.asarray(v, dtype=float)
        self._check(v)
        if self._mode == "cubic":
            r = np.sqrt(1.0 - 2.0 * v * v)
            out = v * np.sqrt(2.0 / (1.0 + r))
        elif self._mode == "sine":
            s = v * (0.5 * np.sqrt(np.pi))
            out = (2.0 / np.pi) * np.arcsin(s)
        else:
            out = self._generic_G(v)
        return out[()] if out.ndim == 0 else out

    def _generic_G(self, v: np.ndarray) -> np.ndarray:
        nl = self.nl
        av = np.abs(v).ravel()
        u = np.empty_like(av)
        small = av < SERIES_SWITCH * self.beta0
        c1, c3 = self._c1, self._c3
        u[small] = av[small] / np.sqrt(c1) - c3 * av[small] ** 3 / (4.0 * c1**2.5)
        # above v0 the energy is flat in u, so the outer part is solved in w = 1 - u
        outer = (av > self.v0) if self.nl.kind == "custom" else np.zeros(av.shape, bool)
        if np.any(outer):
            u[outer] = 1.0 - self._solve_w(av[outer])
        big = ~small & ~outer
        if np.any(big):
            target = av[big] ** 2
            lo = np.zeros_like(target)
            hi = np.ones_like(target)
            while True:
                mid = 0.5 * (lo + hi)
                below = nl.F(mid) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
                if np.max(hi - lo) < 1e-14:
                    break
            x = 0.5 * (lo + hi)
            # two Newton steps on sqrt(F(x)) = |v|, kept inside the final bracket
            for _ in range(2):
                fx = nl.f(x)
                sF = np.sqrt(nl.F(x))
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = (sF - av[big]) * sF / fx
                cand = x - step
                ok = np.isfinite(cand) & (cand >= lo - 1e-14) & (cand <= hi + 1e-14)
                x = np.where(ok, cand, x)
            u[big] = x
        return (np.sign(v).ravel() * u).reshape(v.shape)

    def _solve_w(self, av, gap=None):
        """w = 1 - G(|v|) from beta0**2 - F(1 - w) = beta0**2 - v**2."""
        if gap is None:
            gap = self.beta0 - av
        target = gap * (self.beta0 + av)
        E = self._E
        fs = self._fs[0]
        lo = np.zeros_like(target)
        hi = np.ones_like(target)
        # E is increasing on [0, 1]; bisect in relative terms, then polish
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = E(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-3 * hi):
                break
        w = 0.5 * (lo + hi)
        for _ in range(6):
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = w - (E(w) - target) / (2.0 * fs(w))
            w = np.where(np.isfinite(cand) & (cand >= lo) & (cand <= hi), cand, w)
        return w

    # ------------------------------------------------------------ derivatives
    def _one_minus(self, v, gap):
        # 1 - v**2/beta0**2 without cancellation when gap = beta0 - |v| is known
        if gap is None:
            return 1.0 - v * v / self.beta0**2
        return gap * (self.beta0 + np.abs(v)) / self.beta0**2

    def dG(self, v, gap=None):
        """Return ``(G', G'')`` at v.

        ``gap``, if given, is ``beta0 - |v|`` computed accurately by the caller;
        the closed forms use it to avoid cancellation next to beta0.
        """
        v = np.asarray(v, dtype=float)
        self._check(v)
        if self._mode == "cubic":
            r = np.sqrt(self._one_minus(v, gap))
            u = v * np.sqrt(2.0 / (1.0 + r))
            g1 = np.sqrt(0.5 * (1.0 + r)) / r
            g2 = u * (2.0 + r) / (2.0 * r**3)
        elif self._mode == "sine":
            s = v * (0.5 * np.sqrt(np.pi))
            c = self._one_minus(v, gap)
            g1 = 1.0 / (np.sqrt(np.pi) * np.sqrt(c))
            g2 = s / (2.0 * c**1.5)
        else:
            g1, g2 = self._generic_dG(v, gap)
        if g1.ndim == 0:
            return g1[()], g2[()]
        return g1, g2

    def G1(self, v, gap=None):
        """G' alone (cheaper on the quadrature hot path)."""
        v = np.asarray(v, dtype=float)
        if self._mode == "cubic":
            self._check(v)
            r = np.sqrt(self._one_minus(v, gap))
            out = np.sqrt(0.5 * (1.0 + r)) / r
        elif self._mode == "sine":
            self._check(v)
            out = 1.0 / (np.sqrt(np.pi) * np.sqrt(self._one_minus(v, gap)))
        else:
            out = np.asarray(self.dG(v, gap)[0])
        return out[()] if out.ndim == 0 else out

    def _generic_dG(self, v: np.ndarray, gap=None):
        nl = self.nl
        c1, c3 = self._c1, self._c3
        shape = v.shape
        vv = v.ravel()
        g1 = np.empty_like(vv)
        g2 = np.empty_like(vv)
        small = np.abs(vv) < SERIES_SWITCH * self.beta0
        vs = vv[small]
        g1[small] = 1.0 / np.sqrt(c1) - 3.0 * c3 * vs**2 / (4.0 * c1**2.5)
        g2[small] = -3.0 * c3 * vs / (2.0 * c1**2.5)
        outer = (np.abs(vv) > self.v0) if self.nl.kind == "custom" else np.zeros(vv.shape, bool)
        if np.any(outer):
            vo = vv[outer]
            go = None if gap is None else np.broadcast_to(gap, shape).ravel()[outer]
            w = self._solve_w(np.abs(vo), go)
            fs, dfs = self._fs
            # f(1 - w) carries the sign of u, which is the sign of v
            fu = np.sign(vo) * fs(w)
            g1[outer] = vo / fu
            # F(u) = v**2 exactly on the inverse
            g2[outer] = (1.0 + dfs(w) * vo * vo / fu**2) / fu
        big = ~small & ~outer
        if np.any(big):
            vb = vv[big]
            u = self._generic_G(vb)
            fu = nl.f(u)
            g1[big] = vb / fu
            g2[big] = (1.0 - nl.f(u, 1) * nl.F(u) / fu**2) / fu
        return g1.reshape(shape), g2.reshape(shape)

    # ------------------------------------------------------------------ h, H
    def h_H(self, v):
        """``h = 1 - G'' v / G'`` and ``H = v**2 - G v / G'``.

        Computed through the equivalent forms ``f'F/f**2`` and ``F - f u``.
        """
        v = np.asarray(v, dtype=float)
        self._check(v)
        nl = self.nl
        if self._mode == "cubic":
            r = np.sqrt(1.0 - 2.0 * v * v)
            u = v * np.sqrt(2.0 / (1.0 + r))
            h = (3.0 * r - 2.0) * (1.0 + r) / (2.0 * r * r)
            H = 0.5 * u**4
        elif self._mode == "sine":
            s = v * (0.5 * np.sqrt(np.pi))
            c = 1.0 - s * s
            h = (1.0 - 2.0 * s * s) / c
            H = (4.0 / np.pi) * (s * s - s * np.sqrt(c) * np.arcsin(s))
        else:
            u = self._generic_G(v)
            vv = v.ravel()
            uu = u.ravel()
            h = np.empty_like(vv)
            small = np.abs(vv) < SERIES_SWITCH * self.beta0
            c1, c3 = self._c1, self._c3
            h[small] = 1.0 + 3.0 * c3 * vv[small] ** 2 / (2.0 * c1**2)
            ub = uu[~small]
            fb = nl.f(ub)
            h[~small] = nl.f(ub, 1) * nl.F(ub) / fb**2
            h = h.reshape(v.shape)
            H = self._poly_H(u) if nl.kind == "custom" else nl.F(u) - nl.f(u) * u
        if np.ndim(h) == 0:
            return float(h), float(H)
        return h, H

    def _poly_H(self, u: np.ndarray) -> np.ndarray:
        # F - f u with the linear term cancelled exactly
        c = self.nl.coefficients
        out = np.zeros_like(u)
        for j, cj in enumerate(c):
            if j >= 2 and cj != 0.0:
                out = out + cj * u ** (j + 1) * (2.0 / (j + 1) - 1.0)
        return out

    def h_from_derivatives(self, v):
        """h evaluated literally as ``1 - G'' v / G'`` (used as a cross-check)."""
        g1, g2 = self.dG(v)
        return 1.0 - g2 * np.asarray(v) / g1


def eval_G(gk: GKernel, v):
    return gk.G(v)


def eval_G_derivs(gk: GKernel, v):
    return gk.dG(v)


def eval_h_H(gk: GKernel, v):
    return gk.h_H(v)


# --------------------------------------------------------------- conditions


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the sampled structural checks on f.

    Each ``margins`` entry is the worst sampled value of the quantity whose
    sign decides the condition, oriented so that a positive margin means the
    condition holds with room to spare.

    bistable      f odd, sgn(u) f(u) > 0 on (-1, 1) minus 0, f'(0) > 0 > f'(1)
    strong_slope  f' > 0 on (0, u0) and f' < 0 on (u0, 1)
    strong_ratio  f'F/f**2 strictly decreasing on (0, u0)
    strong_outer  f' F**1.5 / f**3 non-increasing on (u0, 1)
    weak          f'(u) u / f(u) < 1 on (0, 1)
    """

    bistable: bool
    strong_slope: bool
    strong_ratio: bool
    strong_outer: bool
    weak: bool
    margins: dict
    n_samples: int
    notes: tuple[str, ...] = ()

    @property
    def strong(self) -> bool:
        return self.strong_slope and self.strong_ratio and self.strong_outer

    @property
    def all_ok(self) -> bool:
        return self.bistable and self.strong and self.weak

    @property
    def secondary_unique(self) -> bool:
        """Whether uniqueness of the secondary bifurcation point is guaranteed."""
        return self.bistable and self.strong

    def as_dict(self) -> dict:
        return {
            "bistable": self.bistable,
            "strong_slope": self.strong_slope,
            "strong_ratio": self.strong_ratio,
            "strong_outer": self.strong_outer,
            "weak": self.weak,
            "margins": dict(self.margins),
            "n_samples": self.n_samples,
            "notes": list(self.notes),
        }


def check_conditions(nl: Nonlinearity, n_samples: int = 2000) -> ConditionReport:
    """Check the structural hypotheses on f by dense sampling."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    notes: list[str] = []
    margins: dict[str, float] = {}
    eps = 1.0 / (4 * n_samples)

    # basic shape: zeros, signs, slopes, oddness
    u = np.linspace(-1.0, 1.0, 2 * n_samples + 1)
    u = u[(np.abs(u) > 1e-12) & (np.abs(u) < 1.0)]
    fu = nl.f(u)
    m_sign = float(np.min(np.sign(u) * fu))
    m_odd = float(np.max(np.abs(fu + nl.f(-u))))
    zeros = max(abs(float(nl.f(0.0))), abs(float(nl.f(1.0))), abs(float(nl.f(-1.0))))
    slopes = min(float(nl.f(0.0, 1)), -float(nl.f(1.0, 1)), -float(nl.f(-1.0, 1)))
    margins["bistable_sign"] = m_sign
    margins["bistable_odd"] = -m_odd
    margins["bistable_zeros"] = -zeros
    margins["bistable_slopes"] = slopes
    bistable = m_sign > 0 and m_odd <= 1e-12 and zeros <= 1e-12 and slopes > 0
    if m_odd > 1e-12:
        notes.append("f is not odd")

    try:
        u0 = nl.u0
    except DomainError:
        notes.append("f' has no unique zero in (0, 1)")
        return ConditionReport(bistable, False, False, False, False, margins, n_samples, tuple(notes))

    # f' > 0 on (0, u0), < 0 on (u0, 1); by oddness f' is even
    left = np.linspace(0.0, u0, n_samples + 1)[:-1]
    right = np.linspace(u0, 1.0, n_samples + 1)[1:]
    m0 = min(float(np.min(nl.f(left, 1))), float(np.min(-nl.f(right, 1))))
    margins["strong_slope"] = m0
    strong_slope = m0 > 0

    # f'F/f^2 strictly decreasing on (0, u0)
    ul = np.linspace(0.0, u0, n_samples + 1)[1:-1]
    hq = nl.f(ul, 1) * nl.F(ul) / nl.f(ul) ** 2
    m1 = float(np.min(-np.diff(hq)))
    margins["strong_ratio"] = m1
    strong_ratio = m1 > 0

    # d/du (f' F^{3/2} / f^3) <= 0 on (u0, 1); sign is that of the bracket
    ur = np.linspace(u0, 1.0, n_samples + 1)[1:-1]
    fr, f1, f2, Fr = nl.f(ur), nl.f(ur, 1), nl.f(ur, 2), nl.F(ur)
    bracket = f2 * Fr + 3.0 * f1 * fr - 3.0 * f1**2 * Fr / fr
    deriv = np.sqrt(Fr) / fr**3 * bracket
    m2 = float(np.min(-deriv))
    margins["strong_outer"] = m2
    strong_outer = m2 >= -1e-12 * max(1.0, float(np.max(np.abs(deriv))))

    # f'(u) u / f(u) < 1 on (0, 1), even in u
    uw = np.linspace(0.0, 1.0, 2 * n_samples + 1)[1:-1]
    uw = uw[uw > eps]
    mw = float(np.min(1.0 - nl.f(uw, 1) * uw / nl.f(uw)))
    margins["weak"] = mw
    weak = mw > 0

    if bistable and not (strong_slope and strong_ratio and strong_outer):
        notes.append("secondary bifurcation point need not be unique for this f")
    return ConditionReport(bistable, strong_slope, strong_ratio, strong_outer, weak, margins, n_samples, tuple(notes))
