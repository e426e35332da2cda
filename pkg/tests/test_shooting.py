import numpy as np
import pytest

from bifurcata.errors import BracketError, DomainError
from bifurcata.nonlinearity import GKernel, Nonlinearity
from bifurcata.oracle import central_difference, z_oracle
from bifurcata.shooting import ShootingContext, branch_R

from conftest import Z1, Z2


def test_a_must_be_positive(gk):
    for a in (0.0, -1.0):
        with pytest.raises(DomainError):
            ShootingContext(gk, a=a)


def test_g_at_zero_beta(sc):
    for k, z in ((1, Z1), (2, Z2)):
        assert abs(sc.eval_g(0.0, z)) < 1e-13
        assert sc.eval_g(0.0, (k - 1) * np.pi) == pytest.approx((-1) ** (k - 1), rel=1e-14)
    assert sc.eval_g(0.3, 1.0) == pytest.approx(sc.eval_g(-0.3, 1.0), rel=1e-14)


def test_g_small_beta_switch_is_continuous(sc):
    b = 1e-6 * sc.beta0
    for phi in (0.3, 1.0, 4.0):
        below = sc.eval_g(b * (1 - 1e-9), phi)
        above = sc.eval_g(b * (1 + 1e-9), phi)
        assert below == pytest.approx(above, rel=1e-12)


def test_phi_k(sc):
    assert sc.solve_phi_k(0.0, 1).phi == pytest.approx(Z1, abs=1e-13)
    assert sc.solve_phi_k(0.0, 2).phi == pytest.approx(Z2, abs=1e-13)
    assert sc.solve_phi(0.4, 1) == sc.solve_phi(-0.4, 1)
    for k in (1, 2, 3):
        for b in (0.1, 0.5, 0.7):
            r = sc.solve_phi_k(b, k)
            assert (k - 1) * np.pi < r.phi < (k - 0.5) * np.pi
            assert abs(sc.eval_g(b, r.phi)) < 1e-12
    with pytest.raises(ValueError):
        sc.solve_phi(0.2, 0)


def test_phi_k_tends_to_lower_bracket(sc):
    b = np.array([0.99, 0.999, 0.9999]) * sc.beta0
    phi = sc.solve_phi(b, 1)
    assert np.all(np.diff(phi) < 0)
    assert phi[-1] < phi[0] < Z1


def test_lambda_branch_values(sc, sc_sine):
    assert sc.lambda_branch(0.0, 1, "odd") == pytest.approx(Z1**2, rel=1e-13)
    assert sc.lambda_branch(0.0, 1, "odd") == pytest.approx(0.7401739, abs=1e-7)
    assert sc.lambda_branch(0.0, 1, "even") == pytest.approx(np.pi**2, rel=1e-14)
    assert sc_sine.lambda_branch(0.0, 1, "odd") == pytest.approx(Z1**2 / np.pi, rel=1e-13)
    lam = sc.lambda_branch(np.linspace(0.1, 0.6, 6), 1, "odd")
    assert np.all(np.diff(lam) > 0)
    with pytest.raises(ValueError):
        sc.lambda_branch(0.2, 1, "both")


def test_PQ_symmetry_and_zeros(sc):
    P1, Q1 = sc.eval_PQ(2.0, 0.3)
    P2, Q2 = sc.eval_PQ(2.0, -0.3)
    assert abs(P1 + P2) < 1e-12 and abs(Q1 + Q2) < 1e-12
    lam_o = sc.lambda_branch(0.4, 1, "odd")
    assert abs(sc.eval_PQ(lam_o, 0.4)[0]) < 1e-12
    lam_e = sc.lambda_branch(0.4, 1, "even")
    assert abs(sc.eval_PQ(lam_e, 0.4)[1]) < 1e-12


def test_PQ_beta_at_zero(sc):
    for lam in (0.5, 2.0, 7.0):
        th = np.sqrt(lam)
        Pb, Qb = sc.eval_PQ_beta(lam, 0.0)
        assert Qb == pytest.approx(-np.sin(th), abs=1e-14)
        assert Pb == pytest.approx(np.cos(th) - sc.a * th * np.sin(th), abs=1e-13)


@pytest.mark.parametrize("lam,beta", [(2.0, 0.3), (5.0, -0.6), (12.0, 0.69)])
def test_derivatives_against_central_differences(sc, lam, beta):
    d = sc.shoot(lam, beta)
    h = 1e-5
    for name, col in (("P", "P_beta"), ("Q", "Q_beta")):
        fd = central_difference(lambda b: float(sc.shoot(lam, b)[name]), beta, h)
        assert fd == pytest.approx(float(d[col]), rel=1e-6, abs=1e-9)
    for name, col in (("P", "P_lam"), ("Q", "Q_lam")):
        fd = central_difference(lambda l: float(sc.shoot(l, beta)[name]), lam, h)
        assert fd == pytest.approx(float(d[col]), rel=1e-6, abs=1e-9)


def test_D(sc):
    lam = 2.0
    Pb, Qb = sc.eval_PQ_beta(lam, 0.0)
    assert sc.eval_D(lam, 0.0, 0.0) == pytest.approx(2 * Pb * Qb, rel=1e-14)
    assert abs(sc.eval_D(np.pi**2, 0.0, 0.0)) < 1e-12
    assert abs(sc.eval_D(Z1**2, 0.0, 0.0)) < 1e-12
    assert sc.eval_D(lam, 0.2, 0.5) == pytest.approx(sc.eval_D(lam, 0.5, 0.2), rel=1e-15)
    vec = sc.eval_D([2.0, 3.0], [0.1, 0.2], [0.3, -0.4])
    assert vec[1] == pytest.approx(sc.eval_D(3.0, 0.2, -0.4), rel=1e-14)


def test_R_I_J(sc):
    phi = sc.solve_phi(0.4, 1)
    lam = sc.lambda_branch(0.4, 1, "odd")
    R, I, J, dphi, lim = sc.eval_RIJ(0.4, phi)
    assert not lim
    assert R == pytest.approx(sc.eval_PQ_beta(lam, 0.4)[1], abs=1e-10)
    R0 = sc.eval_RIJ(0.0, Z1)
    assert R0[0] == pytest.approx(-np.sin(Z1), abs=1e-14) and R0[4]
    fd = central_difference(lambda b: float(sc.solve_phi(b, 1)), 0.3, 1e-5)
    assert sc.eval_RIJ(0.3, sc.solve_phi(0.3, 1))[3] == pytest.approx(fd, rel=1e-6)
    with pytest.raises(DomainError):
        sc.eval_RIJ(0.3, np.pi)
    with pytest.raises(DomainError):
        sc.eval_RIJ(0.3, 0.5 * np.pi)


def test_branch_R_matches_Q_beta(sc):
    b = np.array([0.2, 0.5, 0.65])
    R, phi, lam = branch_R(sc, b, 1)
    for i in range(3):
        assert R[i] == pytest.approx(sc.eval_PQ_beta(lam[i], b[i])[1], abs=1e-10)


def test_domain_errors(sc):
    with pytest.raises(DomainError):
        sc.eval_PQ(1.0, sc.beta0)
    with pytest.raises(DomainError):
        sc.eval_PQ(-1.0, 0.2)


def test_bracket_error_reported(gk):
    # the constructor rejects a <= 0, so break the bracket signs afterwards
    sc = ShootingContext(gk, a=1.0)
    sc.a = -5.0
    with pytest.raises(BracketError):
        sc.solve_phi(0.3, 1)


def test_other_a_values(gk):
    for a in (0.3, 2.5):
        sc = ShootingContext(gk, a=a)
        assert sc.lambda_branch(0.0, 1, "odd") == pytest.approx(z_oracle(1, a) ** 2, rel=1e-12)


def test_custom_odd_matches_cubic(sc):
    custom = ShootingContext(GKernel(Nonlinearity.custom([0, 1, 0, -1])))
    assert custom.lambda_branch(0.5, 1, "odd") == pytest.approx(sc.lambda_branch(0.5, 1, "odd"), rel=1e-9)
