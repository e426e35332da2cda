import warnings

import numpy as np
import pytest

from bifurcata.branches import (
    D_trivial_slope,
    assemble_diagram,
    beta_for_lambda,
    clustered_grid,
    correct_at_lambda,
    find_primary_bifurcations,
    find_secondary_bifurcations,
    known_solutions,
    matching_system,
    mirror_secondary,
    q_beta_residual,
    reconstruct_solution,
    scan_grid,
    trace_primary,
    trace_secondary,
    z_roots,
)
from bifurcata.errors import DomainError
from bifurcata.oracle import inverse_energy, lambda_oracle, matching_residual, ode_residual, profile_discrepancy

from conftest import Z1, Z2

BETA_STAR = 0.57549872769969634
LAM_STAR = 1.140187164891765


@pytest.fixture(scope="module")
def sec1(sc):
    (bp,) = [b for b in find_secondary_bifurcations(sc, 1) if b.sign == "+"]
    return bp, trace_secondary(sc, bp, n_steps=60)


def test_grids(gk):
    g = clustered_grid(gk.beta0, 200)
    assert g.size == 200 and np.all(np.diff(g) > 0)
    assert gk.beta0 - g[-1] == pytest.approx(1e-6 * gk.beta0, rel=1e-9)
    s = scan_grid(gk.beta0, 400)
    assert np.all((s > 0) & (s < gk.beta0)) and np.all(np.diff(s) > 0)


def test_z_roots():
    z = z_roots(1.0, 2)
    assert z[0] == pytest.approx(Z1, abs=1e-15)
    assert z[1] == pytest.approx(Z2, abs=1e-14)


def test_primary_points(sc):
    pts = find_primary_bifurcations(sc, 40.0)
    assert [p.n for p in pts] == [1, 2, 3, 4]
    expect = [Z1**2, np.pi**2, Z2**2, 4 * np.pi**2]
    for p, e in zip(pts, expect):
        assert p.lam == pytest.approx(e, rel=1e-14)
        assert abs(p.lam - lambda_oracle(sc.nl, 1.0, p.n)) < 1e-10
    assert pts[2].lam == pytest.approx(11.7349, abs=1e-4)
    assert all(a.lam < b.lam for a, b in zip(pts[:-1], pts[1:]))
    assert find_primary_bifurcations(sc, 0.5) == []


def test_trivial_determinant_slopes(sc):
    for p in find_primary_bifurcations(sc, 40.0):
        slope = D_trivial_slope(sc, p.lam)
        assert slope > 0 if p.n % 2 == 1 else slope < 0


def test_trace_primary(sc):
    pts = trace_primary(sc, 1, "odd", "+")
    lam = np.array([p.lam for p in pts])
    assert np.all(np.diff(lam) > 0)
    assert lam[0] == pytest.approx(Z1**2, rel=1e-3)
    assert all(p.beta2 == -p.beta1 for p in pts)
    minus = trace_primary(sc, 1, "odd", "-")
    assert all(m.lam == p.lam and m.beta1 == -p.beta1 and m.beta2 == -p.beta2 for m, p in zip(minus, pts))
    unmirrored = trace_primary(sc, 1, "odd", "-", mirror=False)
    assert max(abs(m.lam - p.lam) for m, p in zip(unmirrored, pts)) < 1e-12 * lam[-1]
    even = trace_primary(sc, 1, "even", "+")
    assert all(p.beta2 == p.beta1 and p.D > 0 for p in even)
    with pytest.raises(DomainError):
        trace_primary(sc, 1, "odd", "+", beta_grid=[0.1, sc.beta0])
    with pytest.raises(ValueError):
        trace_primary(sc, 1, "mixed")


def test_beta_for_lambda(sc):
    b = beta_for_lambda(sc, 1, "odd", 5.0)
    assert sc.lambda_branch(b, 1, "odd") == pytest.approx(5.0, rel=1e-13)
    assert np.isnan(beta_for_lambda(sc, 1, "odd", 0.5))
    assert np.isnan(beta_for_lambda(sc, 1, "even", 5.0))


def test_matching_on_branch_points(sc):
    for k, parity in ((1, "odd"), (1, "even"), (2, "odd")):
        for p in trace_primary(sc, k, parity, "+", beta_grid=[0.2, 0.5, 0.69]):
            F, _ = matching_system(sc, (p.lam, p.beta1, p.beta2))
            assert np.max(np.abs(F)) < 1e-9


def test_reconstruct_profile(sc, cubic):
    lam = 2.0
    b = beta_for_lambda(sc, 1, "odd", lam)
    prof = reconstruct_solution(sc, lam, b, -b, 100)
    assert prof.u[0] == pytest.approx(sc.gk.G(b), abs=1e-15)
    assert prof.ux[0] == 0.0
    left = prof.x < 0
    assert np.max(np.abs(prof.u[left] + prof.u[~left][::-1])) < 1e-10
    assert np.all(np.abs(prof.u) < 1)
    assert np.max(np.abs(prof.matching_residual())) < 1e-8
    assert prof.energy_drift(cubic) < 1e-8
    assert prof.zero_count() == 0 and prof.u_minus * prof.u_plus < 0
    assert profile_discrepancy(cubic, prof) < 1e-8
    assert ode_residual(cubic, prof) < 1e-6
    assert len(prof.grid) == 200
    with pytest.raises(DomainError):
        reconstruct_solution(sc, 0.0, 0.1, 0.1)


@pytest.mark.parametrize("k,parity,zeros", [(1, "odd", 0), (1, "even", 2), (2, "odd", 2), (2, "even", 4)])
def test_zero_count_law(sc, k, parity, zeros):
    b = 0.5
    lam = float(sc.lambda_branch(b, k, parity))
    prof = reconstruct_solution(sc, lam, b, -b if parity == "odd" else b, 400)
    assert prof.zero_count() == zeros
    assert (prof.u_minus * prof.u_plus < 0) == (parity == "odd")


def test_profile_boundary_inverse(sc, cubic, rng):
    # G^{-1}(u(-1)) and G^{-1}(u(1)) recover (beta1, beta2)
    for b in rng.uniform(-0.7, 0.7, 20):
        lam = float(sc.lambda_branch(b, 1, "odd"))
        prof = reconstruct_solution(sc, lam, b, -b, 8)
        assert np.sqrt(cubic.F(prof.u[0])) * np.sign(prof.u[0]) == pytest.approx(b, abs=1e-10)
        assert inverse_energy(cubic, b) == pytest.approx(prof.u[0], abs=1e-14)


def test_secondary_point(sc):
    pts = find_secondary_bifurcations(sc, 1)
    assert [p.sign for p in pts] == ["+", "-"]
    bp = pts[0]
    assert bp.unique
    assert bp.beta_star == pytest.approx(BETA_STAR, abs=1e-12)
    assert bp.lam_star == pytest.approx(LAM_STAR, rel=1e-11)
    assert pts[1].beta_star == -bp.beta_star
    assert abs(q_beta_residual(sc, bp.beta_star, bp.phi_star)) < 1e-9
    lam = sc.lambda_branch(bp.beta_star, 1, "odd")
    assert abs(sc.eval_PQ_beta(lam, bp.beta_star)[1]) < 1e-10
    assert sc.gk.h_H(bp.beta_star * np.cos(bp.phi_star))[0] > 0
    two = find_secondary_bifurcations(sc, 2, mirror=False)
    assert len(two) == 1 and two[0].k == 2


def test_multiple_roots_warn(sc, monkeypatch):
    import bifurcata.branches as br

    real = br.branch_R

    def wiggly(sc_, beta, k):
        R, phi, lam = real(sc_, beta, k)
        b = np.asarray(beta)
        return R * np.where(np.abs(b - 0.3) < 0.05, -1.0, 1.0), phi, lam

    monkeypatch.setattr(br, "branch_R", wiggly)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        pts = br.find_secondary_bifurcations(sc, 1, mirror=False)
    assert len(pts) == 3 and not any(p.unique for p in pts)
    assert any(issubclass(x.category, RuntimeWarning) for x in w)


def test_trace_secondary(sc, sec1, cubic):
    bp, sb = sec1
    assert len(sb.forward) == 60 and len(sb.backward) == 60
    assert sb.stop_reasons == ("n_steps", "n_steps")
    for p in sb.points:
        F, _ = matching_system(sc, (p.lam, p.beta1, p.beta2))
        assert np.max(np.abs(F)) < 1e-9
    assert abs(sb.forward[0].beta1 + sb.forward[0].beta2) > 0
    asym = [abs(p.beta1 + p.beta2) for p in sb.forward[:10]]
    assert np.all(np.diff(asym) > 0)
    p = sb.forward[20]
    assert np.max(np.abs(matching_residual(cubic, 1.0, p.lam, p.beta1, p.beta2))) < 1e-7
    prof = reconstruct_solution(sc, p.lam, p.beta1, p.beta2, 50)
    assert abs(prof.u[0] - prof.u[-1]) > 1e-3 and abs(prof.u[0] + prof.u[-1]) > 1e-3


def test_secondary_lam_max_stop(sc, sec1):
    bp, _ = sec1
    sb = trace_secondary(sc, bp, n_steps=500, lam_max=2.0)
    assert sb.stop_reasons == ("lam_max", "lam_max")
    assert max(p.lam for p in sb.points) <= 2.0


def test_mirror_secondary(sc, sec1):
    _, sb = sec1
    m = mirror_secondary(sb)
    assert m.origin.sign == "-" and m.origin.beta_star == -sb.origin.beta_star
    for p, q in zip(sb.points, m.points):
        assert (q.lam, q.beta1, q.beta2) == (p.lam, -p.beta1, -p.beta2)
        F, _ = matching_system(sc, (q.lam, q.beta1, q.beta2))
        assert np.max(np.abs(F)) < 1e-9


def test_correct_at_lambda(sc):
    b = beta_for_lambda(sc, 1, "odd", 3.0)
    b1, b2 = correct_at_lambda(sc, 3.0, b + 1e-3, -b + 2e-3)
    assert b1 == pytest.approx(b, abs=1e-10) and b2 == pytest.approx(-b, abs=1e-10)


def test_known_solutions(sc):
    assert known_solutions(sc, 0.5, 2).tolist() == [[0.0, 0.0]]
    pts = known_solutions(sc, 5.0, 2)
    # trivial, odd k=1 pair, secondary k=1 branch crossing and its images
    assert len(pts) == 7
    for b1, b2 in pts:
        F, _ = matching_system(sc, (5.0, b1, b2))
        assert np.max(np.abs(F)) < 1e-9


def test_assemble_diagram(sc):
    dg = assemble_diagram(sc, 2, 15.0, n_grid=60, secondary_steps=40)
    assert [p.n for p in dg.primary_points] == [1, 2, 3]
    ids = [b.branch_id for b in dg.branches]
    assert ids == ["odd_k1+", "odd_k1-", "even_k1+", "even_k1-", "odd_k2+", "odd_k2-", "even_k2+", "even_k2-"]
    assert dg.branches[-1].points == []  # lambda_4 = 4 pi^2 > 15
    assert [(b.k, b.sign) for b in dg.secondary_points] == [(1, "+"), (1, "-"), (2, "+"), (2, "-")]
    rows = dg.rows(sc.gk)
    assert rows[0][0] == "trivial"
    assert all(r[1] <= 15.0 for r in rows)
    assert {r[0] for r in rows} >= {"bif_n1", "bif_n2", "bif_n3", "bif_k1+", "sec_k1+", "sec_k2-"}
    with pytest.raises(ValueError):
        assemble_diagram(sc, 0, 15.0)


def test_diagram_morse_is_thread_independent(sc):
    one = assemble_diagram(sc, 1, 3.0, n_grid=20, secondary_steps=10, morse_every=5, morse_n=200, workers=1)
    four = assemble_diagram(sc, 1, 3.0, n_grid=20, secondary_steps=10, morse_every=5, morse_n=200, workers=4)
    # rows hold nan, which never compares equal, so compare their text
    assert repr(one.rows(sc.gk)) == repr(four.rows(sc.gk))
    morse = [p.morse for p in one.branches[0].points[::5]]
    assert set(morse) <= {0, 1, None} and 1 in morse
