import numpy as np
import pytest

from bifurcata.branches import beta_for_lambda, find_secondary_bifurcations, reconstruct_solution
from bifurcata.errors import DiscretizationFailure, IndexUncertain
from bifurcata.spectrum import (
    build_extended,
    cross_check_details,
    eigen_cross_check,
    eigenvalues_top,
    morse_index,
    nondegeneracy_verdict,
    trivial_eigenvalues,
)

from conftest import Z1


def trivial(sc, lam, n_grid=8):
    return reconstruct_solution(sc, lam, 0.0, 0.0, n_grid)


def odd_point(sc, beta, k=1):
    lam = float(sc.lambda_branch(beta, k, "odd"))
    return reconstruct_solution(sc, lam, beta, -beta, 8)


def test_extended_problem_trivial(sc):
    ep = build_extended(trivial(sc, 3.0), sc, 100)
    assert np.all(ep.q_left == 3.0) and np.all(ep.q_right == 3.0)
    assert np.all(ep.ubar_mid == 0.0)
    assert np.array_equal(ep.weight([-1.5, 0.0, 1.5]), [1.0, 0.0, 1.0])
    assert ep.h == 0.01
    with pytest.raises(DiscretizationFailure):
        build_extended(trivial(sc, 3.0), sc, 2)


def test_extended_bridge(sc):
    prof = odd_point(sc, 0.4)
    ep = build_extended(prof, sc, 200)
    # the linear bridge meets the outer pieces and has the interface slope
    assert abs(ep.ubar_mid[0] - prof.u_minus) < 1e-10
    assert abs(ep.ubar_mid[-1] - prof.u_plus) < 1e-10
    assert ep.slope_mid == pytest.approx(prof.ux_minus, abs=1e-10)
    assert ep.slope_mid == pytest.approx(prof.ux_plus, abs=1e-10)
    assert ep.ubar_left[-1] == pytest.approx(prof.u_minus, abs=1e-14)


def test_trivial_closed_form(sc, cubic):
    lam = 5.0
    exact = trivial_eigenvalues(cubic, 1.0, lam, 6)
    assert exact[0] == lam and exact[1] == pytest.approx(lam - Z1**2)
    spec = morse_index(trivial(sc, lam), sc, 500, 6)
    assert np.max(np.abs(spec.eigenvalues - exact)) < 1e-6
    assert spec.morse_index == int(np.count_nonzero(exact > 0))
    assert spec.certified and not spec.degenerate


def test_second_order_convergence(sc, cubic):
    lam = 2.0
    exact = trivial_eigenvalues(cubic, 1.0, lam, 6)
    errs = [np.abs(eigenvalues_top(build_extended(trivial(sc, lam), sc, n), 6).eigenvalues - exact)
            for n in (100, 200, 400)]
    # skip the constant mode, which the scheme reproduces exactly
    for coarse, fine in zip(errs[:-1], errs[1:]):
        ratio = coarse[1:] / fine[1:]
        assert np.all((ratio > 3.5) & (ratio < 4.5))


def test_trivial_at_lambda1(sc):
    spec = eigenvalues_top(build_extended(trivial(sc, Z1**2), sc, 1000), 3)
    assert abs(spec.eigenvalues[1]) < 1e-5
    with pytest.raises(IndexUncertain):
        morse_index(trivial(sc, Z1**2), sc, 400, 4)
    relaxed = morse_index(trivial(sc, Z1**2), sc, 400, 4, strict=False)
    assert relaxed.degenerate
    above = morse_index(trivial(sc, Z1**2 * 1.05), sc, 400, 4)
    assert above.morse_index == 2


def test_eigenvalues_top_validation(sc):
    ep = build_extended(trivial(sc, 2.0), sc, 50)
    with pytest.raises(ValueError):
        eigenvalues_top(ep, 0)
    spec = eigenvalues_top(ep, 4)
    assert np.all(np.diff(spec.eigenvalues) < 0)
    assert set(spec.as_dict()) >= {"eigenvalues", "morse_index", "degenerate", "zero_tolerance"}


@pytest.mark.parametrize("beta,index", [(0.3, 1), (0.5, 1), (0.65, 0)])
def test_odd_branch_index(sc, beta, index):
    spec = morse_index(odd_point(sc, beta), sc, 1000)
    assert spec.morse_index == index
    assert spec.eigenvalues[1] < 0


def test_even_branch_index(sc):
    for beta in (0.2, 0.6):
        lam = float(sc.lambda_branch(beta, 1, "even"))
        prof = reconstruct_solution(sc, lam, beta, beta, 8)
        spec = morse_index(prof, sc, 1000)
        assert spec.morse_index == 2 and not spec.degenerate
        assert spec.eigenvalues[2] < 0
        rep = nondegeneracy_verdict(sc, lam, beta, beta, spec)
        assert rep.D > 0 and rep.D_nonzero and rep.agree


def test_degenerate_at_secondary_point(sc):
    bp = find_secondary_bifurcations(sc, 1, mirror=False)[0]
    prof = reconstruct_solution(sc, bp.lam_star, bp.beta_star, -bp.beta_star, 8)
    spec = morse_index(prof, sc, 1000, strict=False)
    assert spec.degenerate
    assert abs(spec.eigenvalues[0]) <= spec.zero_tolerance
    rep = nondegeneracy_verdict(sc, bp.lam_star, bp.beta_star, -bp.beta_star, spec)
    assert not rep.D_nonzero and rep.agree


def test_trivial_generic_lambda_nondegenerate(sc):
    spec = morse_index(trivial(sc, 5.0), sc, 400)
    rep = nondegeneracy_verdict(sc, 5.0, 0.0, 0.0, spec)
    assert rep.D_nonzero and not rep.spectral_degenerate and rep.agree


def test_cross_check(sc):
    prof = odd_point(sc, 0.4)
    spec = morse_index(prof, sc, 2000, 6, strict=False)
    mu = eigen_cross_check(prof, sc, 5, 2000, 2000, spec)
    assert np.all(np.abs(np.array(mu) - spec.eigenvalues[:5]) < 1e-4 * np.maximum(1, np.abs(spec.eigenvalues[:5])))
    det = cross_check_details(prof, sc, 5, 2000, 2000, spec)
    assert [d.zeros for d in det] == [0, 1, 2, 3, 4]
    assert [d.end_sign for d in det] == [1, -1, 1, -1, 1]


def test_eigen_crossing_direction(sc):
    # mu_0 on the odd k=1 branch goes from positive to negative through lambda*
    bp = find_secondary_bifurcations(sc, 1, mirror=False)[0]
    mus = []
    for lam in (bp.lam_star * 0.99, bp.lam_star * 1.01):
        b = beta_for_lambda(sc, 1, "odd", lam)
        mus.append(morse_index(reconstruct_solution(sc, lam, b, -b, 8), sc, 500, strict=False).eigenvalues[0])
    assert mus[0] > 0 > mus[1]
