import numpy as np
import pytest
from scipy import integrate

from sqlab import counterexamples as cx
from sqlab.errors import RefinementError


@pytest.fixture(scope="module")
def first():
    return cx.first_example_bundle(32)


def test_a2_inverse_form_closed_form(first):
    # <A2^{-1} e1, e1> with e1 = sqrt2 sin(pi x): solve -u'' = e1, u(0) = u'(1) = 0 and integrate u e1
    u = lambda x: np.sqrt(2) / np.pi**2 * (np.sin(np.pi * x) + np.pi * x)  # noqa: E731
    ref, _ = integrate.quad(lambda x: u(x) * np.sqrt(2) * np.sin(np.pi * x), 0, 1)
    assert ref == pytest.approx(3 / np.pi**2, rel=1e-12)
    assert first.a2_inverse_form(first.basis_a1.unit(1)) == pytest.approx(3 / np.pi**2, abs=1e-9)


def test_overlap_entries_against_quad(first):
    for n, m in [(1, 1), (2, 3), (5, 4)]:
        ref, _ = integrate.quad(
            lambda x: 2 * np.sin(n * np.pi * x) * np.sin((m - 0.5) * np.pi * x), 0, 1, limit=200
        )
        assert first.overlap[n - 1, m - 1] == pytest.approx(ref, abs=1e-12)
    assert first.overlap[0, 0] == pytest.approx(8 / (3 * np.pi), abs=1e-13)
    assert np.all(first.completeness_deficit() < 1e-3)


def test_shift_coefficients():
    for n in range(1, 7):
        ref, _ = integrate.quad(lambda x: np.sqrt(2) * np.sin(n * np.pi * x), 0, 1)
        assert cx.dirichlet_shift_coefficient(n) == pytest.approx(ref, abs=1e-14)


def test_phase_defect():
    b = cx.second_example_bundle(32)
    assert cx.phase_defect(b, 1, np.inf) == pytest.approx(-2 * np.sqrt(2) / np.pi, abs=1e-14)
    assert cx.phase_defect(b, 1, 0.0) == 0.0
    assert cx.phase_defect(b, 1, 1.0) == pytest.approx(-2 * np.sqrt(2) / np.pi * (1 - np.exp(-np.pi**2)))
    for t in (0.0, 0.3, np.inf):
        assert cx.phase_defect(b, 4, t) == 0.0


def test_first_example_gap(rng):
    rep = cx.run_first_example(32, 0.1, 1, n_mc=50_000, n_residual=20_000, rng=rng)
    lam1 = np.pi**2
    form = 3 / np.pi**2
    lhs = np.exp(-form / 4)
    q = (1 - np.exp(-2 * lam1 * 0.1)) / (2 * lam1)
    rhs = np.exp(-np.exp(-2 * lam1 * 0.1) * rep["a2_inverse_form"] / 4 - q / 2)
    # only mode 1 of A1 is involved; e^{-tA1} e1 = e^{-lam1 t} e1
    assert rep["analytic_lhs"] == pytest.approx(lhs, rel=1e-8)
    assert rep["analytic_rhs"] == pytest.approx(rhs, rel=1e-8)
    assert rep["gap"] > 0.04
    assert rep["mc_z_score"] < 4
    assert rep["control"]["z_score"] < 4
    assert len(rep["residuals"]) == 2 * len(cx.interior_suite())


def test_first_example_refinement_error(rng):
    with pytest.raises(RefinementError):
        cx.run_first_example(4, 0.1, 4, n_mc=10, n_residual=10, rng=rng)


def test_second_example_small(rng):
    rep = cx.run_second_example(16, 1.0, 1, n_mc=50_000, n_residual=20_000, rng=rng)
    assert rep["delta_limit"] == pytest.approx(-2 * np.sqrt(2) / np.pi, abs=1e-12)
    assert rep["gap"] > 0.5
    assert rep["mc_z_score"] < 4
    with pytest.raises(ValueError):
        cx.run_second_example(16, -1.0, 1, rng=rng)


def test_generator_agreement():
    rep = cx.generator_agreement_check((16, 32))
    assert rep["bump_monotone"]
    assert rep["eigenmode_min"] > 1.0
    assert rep["zero_state_max"] == 0.0
