import numpy as np
import pytest

from bifurcata.branches import beta_for_lambda, known_solutions, reconstruct_solution
from bifurcata.errors import EnergyDrift, NoSignChange
from bifurcata.oracle import (
    audit_profiles,
    integrate_ivp,
    inverse_energy,
    lambda_oracle,
    matching_residual,
    oracle_G1,
    oracle_G2,
    profile_discrepancy,
    root_oracle,
    scan_solution_set,
    z_oracle,
)

from conftest import Z1, Z2


def test_root_oracle():
    assert root_oracle("ztan", (0.0, np.nextafter(np.pi / 2, 0))) == pytest.approx(Z1, abs=2e-14)
    assert z_oracle(1) == pytest.approx(0.8603335890, abs=1e-10)
    assert z_oracle(2) == pytest.approx(Z2, abs=2e-14)
    assert root_oracle("sin", (3.0, 4.0)) == pytest.approx(np.pi, abs=1e-14)
    assert root_oracle(lambda x: x - 0.25, (0.0, 1.0)) == pytest.approx(0.25, abs=1e-14)
    with pytest.raises(NoSignChange):
        root_oracle("sin", (0.5, 1.0))


def test_lambda_oracle(cubic, sine):
    assert lambda_oracle(cubic, 1.0, 1) == pytest.approx(Z1**2, abs=1e-13)
    assert lambda_oracle(cubic, 1.0, 2) == pytest.approx(np.pi**2, rel=1e-15)
    assert lambda_oracle(cubic, 1.0, 4) == pytest.approx(4 * np.pi**2, rel=1e-15)
    assert lambda_oracle(sine, 1.0, 1) == pytest.approx(Z1**2 / np.pi, abs=1e-13)


def test_inverse_energy(cubic):
    v = np.linspace(-0.7, 0.7, 15)
    u = inverse_energy(cubic, v)
    assert np.allclose(cubic.F(u), v * v, atol=1e-14)
    assert np.all(np.sign(u) == np.sign(v))


def test_oracle_kernel_derivatives(cubic, gk):
    v = np.array([0.0, 0.1, -0.4, 0.65])
    g1, g2 = gk.dG(v)
    assert np.allclose(oracle_G1(cubic, v), g1, rtol=1e-12)
    assert np.allclose(oracle_G2(cubic, v), g2, rtol=1e-9, atol=1e-12)


def test_ivp_zero_and_energy(cubic, gk):
    r = integrate_ivp(cubic, 2.0, 0.0)
    assert np.all(r.u == 0) and np.all(r.ux == 0)
    r = integrate_ivp(cubic, 2.0, 0.4)
    e = r.ux**2 + 2.0 * cubic.F(r.u)
    assert np.max(np.abs(e - 2.0 * 0.16)) < 1e-10
    assert r.u[0] == pytest.approx(gk.G(0.4), abs=1e-15)
    right = integrate_ivp(cubic, 2.0, 0.4, "right")
    assert right.x[-1] == 1.0 and right.u[-1] == pytest.approx(gk.G(0.4), abs=1e-15)
    with pytest.raises(ValueError):
        integrate_ivp(cubic, 2.0, 0.4, "up")
    with pytest.raises(EnergyDrift):
        integrate_ivp(cubic, 50.0, 0.7, n_steps=4)


def test_ivp_against_reconstruction(sc, cubic):
    prof = reconstruct_solution(sc, 2.0, 0.4, 0.4, 50)
    assert profile_discrepancy(cubic, prof) < 1e-8


def test_matching_residual(sc, cubic):
    lam = float(sc.lambda_branch(0.4, 1, "odd"))
    assert np.max(np.abs(matching_residual(cubic, 1.0, lam, 0.4, -0.4))) < 1e-7
    assert np.max(np.abs(matching_residual(cubic, 1.0, 2.0, 0.2, 0.5))) > 1e-2


def test_audit_profiles(sc, cubic):
    profs = []
    for lam in (1.5, 4.0):
        b = beta_for_lambda(sc, 1, "odd", lam)
        profs.append(reconstruct_solution(sc, lam, b, -b, 40))
    disc, res = audit_profiles(cubic, 1.0, profs)
    assert np.all(disc < 1e-8) and np.all(res < 1e-8)
    bad = reconstruct_solution(sc, 2.0, 0.2, 0.5, 40)
    _, res = audit_profiles(cubic, 1.0, [bad])
    assert res[0] > 1e-2
    assert audit_profiles(cubic, 1.0, [])[0].size == 0


def test_scan_below_first_bifurcation(cubic, sc):
    rep = scan_solution_set(cubic, 1.0, 0.5, 200, known=[(0.0, 0.0)])
    assert rep.ok and rep.symmetric
    assert len(rep.centers()) == len(rep.cells) and len(rep.accounted) == len(rep.cells)
    assert np.max(np.abs(rep.centers())) < 0.05


def test_scan_at_lambda_5(cubic, sc):
    b = beta_for_lambda(sc, 1, "odd", 5.0)
    rep = scan_solution_set(cubic, 1.0, 5.0, 200, known=[(0.0, 0.0), (b, -b), (-b, b)])
    # the secondary crossings are missing from this list, so they must be flagged
    assert not rep.ok
    found = np.array(rep.unaccounted)
    full = scan_solution_set(cubic, 1.0, 5.0, 200, known=known_solutions(sc, 5.0, 1))
    assert full.ok
    assert len(found) == len(known_solutions(sc, 5.0, 1)) - 3
    c = full.centers()
    assert np.any(np.max(np.abs(c - [b, -b]), axis=1) < 0.05)
    assert np.any(np.max(np.abs(c - [-b, b]), axis=1) < 0.05)


def test_scan_grid_size(cubic):
    with pytest.raises(ValueError):
        scan_solution_set(cubic, 1.0, 1.0, 50)
