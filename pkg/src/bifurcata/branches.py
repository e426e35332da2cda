"""Primary branches, solution profiles, secondary bifurcations and continuation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import CorrectorDiverged, DomainError, MonotonicityViolation, NoRootFound
from .shooting import ShootingContext, branch_R


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class BranchPoint:
    lam: float
    beta1: float
    beta2: float
    k: int
    parity: str  # "odd", "even", "secondary" or "trivial"
    D: float = float("nan")
    morse: int | None = None


@dataclass
class Branch:
    branch_id: str
    k: int
    parity: str
    sign: str
    points: list[BranchPoint] = field(default_factory=list)

    def lam(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    def betas(self) -> np.ndarray:
        return np.array([[p.beta1, p.beta2] for p in self.points]).reshape(-1, 2)


@dataclass(frozen=True)
class BifurcationPoint:
    k: int
    beta_star: float
    phi_star: float
    lam_star: float
    sign: str
    unique: bool = True


@dataclass
class SecondaryBranch:
    origin: BifurcationPoint
    forward: list[BranchPoint] = field(default_factory=list)
    backward: list[BranchPoint] = field(default_factory=list)
    stop_reasons: tuple[str, str] = ("", "")

    @property
    def points(self) -> list[BranchPoint]:
        """Both directions joined through the origin, ordered along the curve."""
        o = self.origin
        beta2 = -o.beta_star
        mid = BranchPoint(o.lam_star, o.beta_star, beta2, o.k, "secondary", 0.0)
        return list(reversed(self.backward)) + [mid] + list(self.forward)


class PrimaryBifurcation(NamedTuple):
    n: int
    lam: float


@dataclass
class SolutionProfile:
    """A solution sampled on mirrored nodes of [-1, 0) and (0, 1].

    ``x`` is ordered from -1 to 1; ``u_minus`` etc. are the one-sided
    limits at the interface.
    """

    x: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    u_minus: float
    u_plus: float
    ux_minus: float
    ux_plus: float
    lam: float
    beta1: float
    beta2: float
    a: float
    theta1: float = float("nan")
    theta2: float = float("nan")

    @property
    def grid(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.u.tolist()))

    def matching_residual(self) -> np.ndarray:
        a = self.a
        return np.array(
            [
                self.u_minus + a * self.ux_minus - (self.u_plus - a * self.ux_plus),
                self.ux_minus - self.ux_plus,
            ]
        )

    def energy_drift(self, nl) -> float:
        """Worst relative deviation of ``u_x**2 + lam F(u)`` from its value at the outer end."""
        left = self.x < 0
        worst = 0.0
        for mask, beta in ((left, self.beta1), (~left, self.beta2)):
            e = self.ux[mask] ** 2 + self.lam * nl.F(self.u[mask])
            e0 = self.lam * beta * beta
            worst = max(worst, float(np.max(np.abs(e - e0))) / max(e0, 1e-300))
        return worst

    def zero_count(self) -> int:
        """Zeros in (-1, 1) minus {0}, from sign changes on each side."""
        left = self.x < 0
        n = 0
        for mask, end in ((left, self.u_minus), (~left, self.u_plus)):
            vals = self.u[mask]
            vals = np.append(vals, end) if mask is left else np.insert(vals, 0, end)
            s = np.sign(vals)
            s = s[s != 0]
            n += int(np.count_nonzero(s[1:] != s[:-1]))
        return n


# ---------------------------------------------------------------- grids


def clustered_grid(beta0: float, n: int = 200, q_first: float = 0.99, q_last: float = 1e-6) -> np.ndarray:
    """``beta0 * (1 - q)`` with q geometric from ``q_first`` down to ``q_last``.

    The last point sits ``q_last * beta0`` below beta0, where lambda grows
    without bound.
    """
    q = np.geomspace(q_first, q_last, n)
    return beta0 * (1.0 - q)


def scan_grid(beta0: float, n: int) -> np.ndarray:
    """Half uniform on (0, beta0), half geometric toward beta0."""
    n_uni = n // 2
    uni = np.linspace(0.0, beta0 * (1.0 - 1e-3), n_uni + 1)[1:]
    geo = beta0 * (1.0 - np.geomspace(1e-3, 1e-7, n - n_uni))
    return np.unique(np.concatenate([uni, geo]))


# ---------------------------------------------------------------- primaries


def trace_primary(
    sc: ShootingContext,
    k: int,
    parity: str,
    sign: str = "+",
    beta_grid=None,
    mirror: bool = True,
    with_D: bool = True,
) -> list[BranchPoint]:
    """Points of the odd or even branch of mode k on a beta grid.

    With ``sign="-"`` and ``mirror=True`` the points are the exact images
    ``(beta1, beta2) -> (-beta1, -beta2)`` of the ``+`` trace.
    """
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    grid = clustered_grid(sc.beta0) if beta_grid is None else np.asarray(beta_grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid >= sc.beta0):
        raise DomainError("beta grid must lie in (0, beta0)")
    if sign == "-" and mirror:
        pts = trace_primary(sc, k, parity, "+", grid, with_D=with_D)
        return [replace(p, beta1=-p.beta1, beta2=-p.beta2) for p in pts]
    b = grid if sign == "+" else -grid
    lam = np.atleast_1d(sc.lambda_branch(b, k, parity))
    if np.any(np.diff(lam) <= 0):
        i = int(np.argmin(np.diff(lam)))
        raise MonotonicityViolation(
            f"lambda not increasing on {parity} branch k={k} near beta={b[i]!r}"
        )
    b2 = -b if parity == "odd" else b
    D = np.atleast_1d(sc.eval_D(lam, b, b2)) if with_D else np.full(lam.shape, np.nan)
    return [
        BranchPoint(float(l), float(x), float(y), k, parity, float(d))
        for l, x, y, d in zip(lam, b, b2, D)
    ]


def beta_for_lambda(sc: ShootingContext, k: int, parity: str, lam: float) -> float:
    """The positive beta with ``lam_k(beta) = lam`` on the given branch, or nan if none."""
    lo = 0.0
    lam_lo = float(sc.lambda_branch(lo, k, parity))
    if lam <= lam_lo:
        return float("nan")
    hi = sc.beta0 * (1.0 - 1e-3)
    while float(sc.lambda_branch(hi, k, parity)) < lam:
        hi = sc.beta0 - 0.1 * (sc.beta0 - hi)
        if sc.beta0 - hi < 1e-13 * sc.beta0:
            return float("nan")
    return brentq(lambda b: float(sc.lambda_branch(b, k, parity)) - lam, lo, hi, xtol=1e-15, rtol=8.9e-16)


# --------------------------------------------------------------- profiles


def reconstruct_solution(sc: ShootingContext, lam: float, beta1: float, beta2: float, n_grid: int = 200) -> SolutionProfile:
    """Sample ``u = G(beta cos Theta(sqrt(lam) * dist))`` on both halves.

    Nodes are ``-1 + j/n_grid`` on the left and their mirrors on the right,
    so odd and even symmetry can be compared node by node.
    """
    if not lam > 0:
        raise DomainError("lambda must be positive")
    sl = np.sqrt(lam)
    dist = np.arange(n_grid) / n_grid  # distance from the outer end
    gk, pi = sc.gk, sc.pi
    out = {}
    for side, beta in (("L", beta1), ("R", beta2)):
        y = np.append(sl * dist, sl)
        Th = np.asarray(pi.solve_Theta(y, np.full(y.shape, beta)))
        u = np.asarray(gk.G(beta * np.cos(Th)))
        V = -beta * np.sin(Th)
        out[side] = (u, sl * V, float(Th[-1]))
    uL, dL, thL = out["L"]
    uR, dR, thR = out["R"]
    x = np.concatenate([-1.0 + dist, (1.0 - dist)[::-1]])
    u = np.concatenate([uL[:-1], uR[:-1][::-1]])
    # right half runs in the reflected variable, so its slope flips sign
    ux = np.concatenate([dL[:-1], -dR[:-1][::-1]])
    return SolutionProfile(
        x=x, u=u, ux=ux,
        u_minus=float(uL[-1]), u_plus=float(uR[-1]),
        ux_minus=float(dL[-1]), ux_plus=float(-dR[-1]),
        lam=float(lam), beta1=float(beta1), beta2=float(beta2), a=sc.a,
        theta1=thL, theta2=thR,
    )


def profile_values(sc: ShootingContext, lam: float, beta: float, dist) -> np.ndarray:
    """u at distances ``dist`` (in x) from the outer end of a half-interval."""
    y = np.sqrt(lam) * np.asarray(dist, dtype=float)
    Th = sc.pi.solve_Theta(y, np.full(y.shape, beta))
    return np.asarray(sc.gk.G(beta * np.cos(Th)))


# ---------------------------------------------------- primary bifurcations


def z_roots(a: float, kmax: int) -> np.ndarray:
    """Roots z_k of ``a z tan z = 1`` in ((k-1)pi, (k-1/2)pi), k = 1..kmax."""
    fn = lambda z: a * z * np.sin(z) - np.cos(z)  # noqa: E731
    out = []
    for k in range(1, kmax + 1):
        lo, hi = (k - 1) * np.pi, (k - 0.5) * np.pi
        out.append(brentq(fn, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200))
    return np.array(out)


def find_primary_bifurcations(sc: ShootingContext, lam_max: float, verify: bool = True) -> list[PrimaryBifurcation]:
    """All lam_n <= lam_max, checked against sign changes of D(lam, 0, 0)."""
    fp0 = sc.nl.f_prime_0
    kmax = int(np.sqrt(fp0 * lam_max) / np.pi) + 2
    z = z_roots(sc.a, kmax)
    out = []
    for k in range(1, kmax + 1):
        for n, lam in ((2 * k - 1, z[k - 1] ** 2 / fp0), (2 * k, (k * np.pi) ** 2 / fp0)):
            if lam <= lam_max:
                out.append(PrimaryBifurcation(n, float(lam)))
    out.sort(key=lambda p: p.lam)
    if verify:
        for p in out:
            d = 1e-6 * p.lam
            lo = float(sc.eval_D(p.lam - d, 0.0, 0.0))
            hi = float(sc.eval_D(p.lam + d, 0.0, 0.0))
            want = 1.0 if p.n % 2 == 1 else -1.0
            if not (np.sign(hi - lo) == want and lo * hi < 0):
                raise NoRootFound(f"D(lam, 0, 0) does not change sign as expected at lam_{p.n}")
    return out


def D_trivial_slope(sc: ShootingContext, lam: float, h: float = 1e-6) -> float:
    """Central-difference slope of ``lam -> D(lam, 0, 0)``."""
    d = h * lam
    return (float(sc.eval_D(lam + d, 0.0, 0.0)) - float(sc.eval_D(lam - d, 0.0, 0.0))) / (2 * d)


# -------------------------------------------------- secondary bifurcations


def find_secondary_bifurcations(
    sc: ShootingContext, k: int, n_scan: int = 400, mirror: bool = True
) -> list[BifurcationPoint]:
    """Zeros of ``beta -> Q_beta(lam_k^o(beta), beta)`` on (0, beta0).

    Each sign change on the scan grid is refined by bracketing to 1e-12;
    with ``mirror`` the point at -beta* is appended for every root.
    """
    grid = scan_grid(sc.beta0, n_scan)
    R, _, _ = branch_R(sc, grid, k)
    s = np.sign(R)
    idx = np.nonzero(s[:-1] * s[1:] <= 0)[0]
    if idx.size == 0:
        raise NoRootFound(f"Q_beta never changes sign along the odd branch k={k}")
    roots = []
    for i in idx:
        if R[i] == 0.0:
            roots.append(float(grid[i]))
            continue
        f = lambda b: float(branch_R(sc, b, k)[0])  # noqa: E731
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16))
    roots = sorted(set(roots))
    unique = len(roots) == 1
    if not unique:
        warnings.warn(f"{len(roots)} secondary bifurcation points found for k={k}", RuntimeWarning)
    out = []
    for b in roots:
        phi = float(sc.solve_phi(b, k))
        lam = float(sc.pi.theta_integral(b, phi)) ** 2
        out.append(BifurcationPoint(k, b, phi, lam, "+", unique))
        if mirror:
            out.append(BifurcationPoint(k, -b, phi, lam, "-", unique))
    return out


def q_beta_residual(sc: ShootingContext, beta: float, phi: float) -> float:
    """``beta cos phi / G'(beta cos phi) * int_0^phi G''(beta cos) cos - sin phi``."""
    c = np.cos(phi)
    S2 = float(sc.pi.curvature_integral(beta, phi))
    return float(beta * c / sc.gk.G1(beta * c) * S2 - np.sin(phi))


# ------------------------------------------------------------ continuation


def matching_system(sc: ShootingContext, X):
    """Residual and 2x3 Jacobian of the matching system at ``X = (lam, b1, b2)``."""
    lam, b1, b2 = (float(v) for v in X)
    d = sc.shoot([lam, lam], [b1, b2])
    F = np.array([d["P"][0] - d["P"][1], d["Q"][0] + d["Q"][1]])
    J = np.array(
        [
            [d["P_lam"][0] - d["P_lam"][1], d["P_beta"][0], -d["P_beta"][1]],
            [d["Q_lam"][0] + d["Q_lam"][1], d["Q_beta"][0], d["Q_beta"][1]],
        ]
    )
    return F, J


def _null_tangent(J: np.ndarray) -> np.ndarray:
    t = np.cross(J[0], J[1])
    return t / np.linalg.norm(t)


def _to_beta(sc: ShootingContext, Y):
    """``(lam, xi1, xi2) -> (lam, beta1, beta2)`` with ``beta = beta0 tanh(xi/beta0)``."""
    b0 = sc.beta0
    return np.array([Y[0], b0 * np.tanh(Y[1] / b0), b0 * np.tanh(Y[2] / b0)])


def _stretched_system(sc: ShootingContext, Y):
    """Matching system in the stretched coordinates of :func:`_to_beta`.

    lambda grows like a logarithm of beta0 - |beta| near the edge, so in xi
    the branches stay smooth where they would pile up in beta.
    """
    X = _to_beta(sc, Y)
    F, J = matching_system(sc, X)
    J = J.copy()
    J[:, 1] *= 1.0 / np.cosh(Y[1] / sc.beta0) ** 2
    J[:, 2] *= 1.0 / np.cosh(Y[2] / sc.beta0) ** 2
    return F, J


def _correct(sc, Yp, T, beta_cap, tol=1e-12, max_iter=25, floor=1e-10):
    """Damped Newton on ``F(Y) = 0, T.(Y - Yp) = 0`` in stretched coordinates.

    Close to the edge the residual carries rounding noise that grows like
    1/(beta0 - |beta|); an iterate that stalls below ``floor`` is accepted.
    """
    Y = Yp.copy()
    F, J = _stretched_system(sc, Y)
    r = np.concatenate([F, [0.0]])
    for _ in range(max_iter):
        A = np.vstack([J, T])
        dY = np.linalg.solve(A, -r)
        step = 1.0
        while True:
            Z = Y + step * dY
            if np.all(np.abs(_to_beta(sc, Z)[1:]) < beta_cap) and Z[0] > 0:
                Fz, Jz = _stretched_system(sc, Z)
                rz = np.concatenate([Fz, [T @ (Z - Yp)]])
                if np.linalg.norm(rz) <= np.linalg.norm(r) or step < 1e-3:
                    break
            step *= 0.5
            if step < 1e-3:
                if np.linalg.norm(r) < floor:
                    return Y, F, J
                raise CorrectorDiverged("damping failed")
        Y, F, J, r = Z, Fz, Jz, rz
        if np.linalg.norm(F) < tol and np.linalg.norm(step * dY) < 1e-10:
            return Y, F, J
    if np.linalg.norm(r) < floor:
        return Y, F, J
    raise CorrectorDiverged("corrector did not converge")


def trace_secondary(
    sc: ShootingContext,
    origin: BifurcationPoint,
    step: float | None = None,
    n_steps: int = 200,
    lam_max: float = np.inf,
    max_step: float = 0.25,
    edge: float = 1e-12,
) -> SecondaryBranch:
    """Pseudo-arclength continuation of the non-symmetric branch through ``origin``.

    The start tangent is ``(0, 1, 1)/sqrt(2)``: the matching Jacobian at the
    origin has rank one with row ``[2 P_lam, P_beta, -P_beta]``, and this
    vector spans its kernel orthogonally to the odd branch tangent.  Arclength
    is measured in ``(lam, xi1, xi2)`` with ``xi = beta0 atanh(beta/beta0)``.
    """
    b0 = sc.beta0
    ds0 = 1e-3 * b0 if step is None else step
    Y0 = np.array([origin.lam_star, b0 * np.arctanh(origin.beta_star / b0), -b0 * np.arctanh(origin.beta_star / b0)])
    beta_cap = b0 * (1.0 - edge)
    _, J0 = _stretched_system(sc, Y0)
    prim = np.array([-J0[0, 1] / J0[0, 0], 1.0, -1.0])
    t0 = np.array([0.0, 1.0, 1.0])
    t0 = t0 - (t0 @ prim) / (prim @ prim) * prim
    t0 /= np.linalg.norm(t0)
    result = SecondaryBranch(origin)
    reasons = []
    for direction, store in ((1.0, result.forward), (-1.0, result.backward)):
        Y, T, ds = Y0.copy(), direction * t0, ds0
        clean = 0
        reason = "n_steps"
        while len(store) < n_steps:
            for _ in range(12):
                try:
                    Yn, F, J = _correct(sc, Y + ds * T, T, beta_cap)
                    break
                except (CorrectorDiverged, DomainError, np.linalg.LinAlgError):
                    ds *= 0.5
                    clean = 0
            else:
                reason = "corrector"
                break
            Tn = _null_tangent(J)
            if Tn @ T < 0:
                Tn = -Tn
            Y, T = Yn, Tn
            X = _to_beta(sc, Y)
            if X[0] > lam_max:
                reason = "lam_max"
                break
            D = float(sc.eval_D(X[0], X[1], X[2]))
            store.append(BranchPoint(float(X[0]), float(X[1]), float(X[2]), origin.k, "secondary", D))
            clean += 1
            if clean >= 4:
                ds = min(2.0 * ds, max_step)
                clean = 0
            if max(abs(X[1]), abs(X[2])) > b0 * (1.0 - 10 * edge):
                reason = "domain"
                break
        reasons.append(reason)
    result.stop_reasons = tuple(reasons)
    return result


def mirror_secondary(branch: SecondaryBranch) -> SecondaryBranch:
    """Image of a secondary branch under u -> -u."""
    o = branch.origin
    flip = lambda pts: [replace(p, beta1=-p.beta1, beta2=-p.beta2) for p in pts]  # noqa: E731
    origin = replace(o, beta_star=-o.beta_star, sign="-" if o.sign == "+" else "+")
    return SecondaryBranch(origin, flip(branch.forward), flip(branch.backward), branch.stop_reasons)


# ------------------------------------------------------------------ diagram


@dataclass
class Diagram:
    nonlinearity: str
    a: float
    k_max: int
    lam_max: float
    primary_points: list[PrimaryBifurcation]
    branches: list[Branch]
    secondary_points: list[BifurcationPoint]
    secondary: list[SecondaryBranch]

    def rows(self, gk):
        """Rows ``(branch_id, lam, beta1, beta2, u1, D, morse)`` in a fixed order."""
        rows = [("trivial", 0.0, 0.0, 0.0, 0.0, float("nan"), None),
                ("trivial", self.lam_max, 0.0, 0.0, 0.0, float("nan"), None)]
        for br in self.branches:
            for p in br.points:
                rows.append((br.branch_id, p.lam, p.beta1, p.beta2, float(gk.G(p.beta2)), p.D, p.morse))
        for i, sb in enumerate(self.secondary):
            bid = f"sec_k{sb.origin.k}{sb.origin.sign}"
            for p in sb.points:
                rows.append((bid, p.lam, p.beta1, p.beta2, float(gk.G(p.beta2)), p.D, p.morse))
        for p in self.primary_points:
            rows.append((f"bif_n{p.n}", p.lam, 0.0, 0.0, 0.0, float("nan"), None))
        for b in self.secondary_points:
            rows.append((f"bif_k{b.k}{b.sign}", b.lam_star, b.beta_star, -b.beta_star,
                         float(gk.G(-b.beta_star)), 0.0, None))
        return rows


def assemble_diagram(
    sc: ShootingContext,
    k_max: int,
    lam_max: float,
    n_grid: int = 200,
    secondary_steps: int = 400,
    morse_every: int = 0,
    morse_n: int = 400,
    workers: int = 1,
) -> Diagram:
    """Everything with lambda <= lam_max for modes 1..k_max.

    Every primary branch of mode <= k_max is listed, empty when it starts
    beyond lam_max.  ``morse_every > 0`` attaches a Morse index to every
    that-many-th point (computed on ``morse_n`` nodes per half-interval),
    spread over ``workers`` threads; results keep their order.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    prim = [p for p in find_primary_bifurcations(sc, lam_max) if p.n <= 2 * k_max]
    grid = clustered_grid(sc.beta0, n_grid)
    branches = []
    sec_points, secondary = [], []
    for k in range(1, k_max + 1):
        for parity in ("odd", "even"):
            plus = trace_primary(sc, k, parity, "+", grid)
            plus = [p for p in plus if p.lam <= lam_max]
            minus = [replace(p, beta1=-p.beta1, beta2=-p.beta2) for p in plus]
            for sign, pts in (("+", plus), ("-", minus)):
                branches.append(Branch(f"{parity}_k{k}{sign}", k, parity, sign, pts))
        for bp in find_secondary_bifurcations(sc, k):
            if bp.lam_star <= lam_max and bp.sign == "+":
                sec_points.append(bp)
                sec_points.append(replace(bp, beta_star=-bp.beta_star, sign="-"))
                sb = trace_secondary(sc, bp, n_steps=secondary_steps, lam_max=lam_max)
                secondary.extend([sb, mirror_secondary(sb)])
    if morse_every > 0:
        from concurrent.futures import ThreadPoolExecutor

        from .spectrum import morse_index

        def index_at(p):
            prof = reconstruct_solution(sc, p.lam, p.beta1, p.beta2, 8)
            spec = morse_index(prof, sc, morse_n, strict=False)
            return replace(p, morse=spec.morse_index if spec.certified and not spec.degenerate else None)

        lists = [br.points for br in branches] + [sb.forward for sb in secondary] + [sb.backward for sb in secondary]
        todo = [(i, j) for i, pts in enumerate(lists) for j in range(0, len(pts), morse_every)]
        with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
            done = list(ex.map(lambda ij: index_at(lists[ij[0]][ij[1]]), todo))
        for (i, j), p in zip(todo, done):
            lists[i][j] = p
    return Diagram(sc.nl.label(), sc.a, k_max, lam_max, prim, branches, sec_points, secondary)


# ------------------------------------------------------- fixed-lambda sets


def correct_at_lambda(sc: ShootingContext, lam: float, beta1: float, beta2: float, tol: float = 1e-12, max_iter: int = 40, floor: float = 1e-10):
    """Newton on the matching system in (beta1, beta2) with lambda held fixed.

    Iterates in the stretched coordinates of the continuation; a stalled
    iterate is accepted once its residual is below ``floor``.
    """
    b0 = sc.beta0
    Y = np.array([lam, b0 * np.arctanh(beta1 / b0), b0 * np.arctanh(beta2 / b0)])
    F, J = _stretched_system(sc, Y)
    for _ in range(max_iter):
        if np.linalg.norm(F) < tol:
            break
        d = np.linalg.solve(J[:, 1:], -F)
        step = 1.0
        while True:
            Z = Y.copy()
            Z[1:] += step * d
            try:
                Fz, Jz = _stretched_system(sc, Z)
                if np.linalg.norm(Fz) < np.linalg.norm(F):
                    break
            except DomainError:
                pass
            step *= 0.5
            if step < 1e-4:
                break
        if step < 1e-4:
            break
        Y, F, J = Z, Fz, Jz
    if np.linalg.norm(F) < floor:
        X = _to_beta(sc, Y)
        return float(X[1]), float(X[2])
    raise CorrectorDiverged("fixed-lambda Newton did not converge")


def known_solutions(sc: ShootingContext, lam: float, k_max: int, secondary_steps: int = 400) -> np.ndarray:
    """Every (beta1, beta2) the branch machinery predicts at this lambda.

    The trivial point, the odd and even primaries of modes 1..k_max, and the
    points where the secondary branches (and their images) cross ``lam``.
    """
    pts = [(0.0, 0.0)]
    for k in range(1, k_max + 1):
        for parity in ("odd", "even"):
            b = beta_for_lambda(sc, k, parity, lam)
            if np.isfinite(b):
                other = -b if parity == "odd" else b
                pts += [(b, other), (-b, -other)]
        for bp in find_secondary_bifurcations(sc, k):
            if bp.sign != "+" or bp.lam_star >= lam:
                continue
            sb = trace_secondary(sc, bp, n_steps=secondary_steps, lam_max=lam * 1.1)
            for branch in (sb, mirror_secondary(sb)):
                P = branch.points
                for p, q in zip(P[:-1], P[1:]):
                    if (p.lam - lam) * (q.lam - lam) > 0 or p.lam == q.lam:
                        continue
                    w = (lam - p.lam) / (q.lam - p.lam)
                    guess = (p.beta1 + w * (q.beta1 - p.beta1), p.beta2 + w * (q.beta2 - p.beta2))
                    pts.append(correct_at_lambda(sc, lam, *guess))
    out = []
    for p in pts:
        if not any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) < 1e-9 for q in out):
            out.append(p)
    return np.array(out)
