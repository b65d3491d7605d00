import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orthocal.calibration import (
    build_design_matrix,
    identify_offsets,
    predict_improvement,
    rms,
    solve_normal_equations,
    validate,
)
from orthocal.errors import DegenerateGeometry, EmptyInput, FormMismatch
from orthocal.kinematics import Geometry, JointOffsets
from orthocal.measurement import (
    DeviationSet,
    Form,
    NoiseModel,
    deviations_from_table,
    exact_deviations,
    session_to_deviations,
    simulate_session,
)
from orthocal.sensitivity import deviation_coeffs

from conftest import L, random_offsets

TABLE = {
    "exp1": [0.52, 1.58, 2.37, -0.25, -0.57, -0.04],
    "exp2": [-0.43, -0.37, 0.42, -0.18, -1.14, -0.70],
    "exp3": [-0.23, 0.27, 0.34, -0.10, -0.09, 0.11],
}


def test_design_matrix_rows(geom):
    A = build_design_matrix(geom, Form.FULL12).matrix
    b1, c1 = deviation_coeffs(geom.alpha_max).b, deviation_coeffs(geom.alpha_max).c
    b2, c2 = deviation_coeffs(geom.alpha_min).b, deviation_coeffs(geom.alpha_min).c
    expected = np.array(
        [
            [b1, c1, 0], [c1, b1, 0], [b2, c2, 0], [c2, b2, 0],
            [0, b1, c1], [0, c1, b1], [0, b2, c2], [0, c2, b2],
            [b1, 0, c1], [c1, 0, b1], [b2, 0, c2], [c2, 0, b2],
        ]
    )
    assert np.array_equal(A, expected)
    assert np.array_equal(A[1], [c1, b1, 0])
    assert np.array_equal(A[9], [c1, 0, b1])
    R = build_design_matrix(geom, Form.REDUCED6).matrix
    assert R[1] == pytest.approx([c1 - c2, b1 - b2, 0])
    rows = np.vstack([A[4 * k + e] - A[4 * k + 2 + e] for k in range(3) for e in range(2)])
    assert R == pytest.approx(rows)


def test_design_matrix_matches_linear_model(geom):
    """Each column is the linearised deviation of a unit offset."""
    for form in Form:
        A = build_design_matrix(geom, form).matrix
        for j in range(3):
            unit = np.zeros(3)
            unit[j] = 1.0
            d = exact_deviations(geom, JointOffsets.from_array(unit * 1e-4), form).values / 1e-4
            assert A[:, j] == pytest.approx(d, abs=1e-3)


@pytest.mark.parametrize("form", list(Form))
def test_degenerate_geometry(form):
    with pytest.raises(DegenerateGeometry):
        build_design_matrix(Geometry(L, 0.4, 0.4), form)


def test_reduced_degenerate_when_b_and_c_cancel():
    # b1-b2 == -(c1-c2) makes the three reduced columns sum to zero
    from scipy.optimize import brentq

    a1 = 0.5
    f = lambda a2: (math.sin(a1) - math.sin(a2)) + (deviation_coeffs(a1).c - deviation_coeffs(a2).c)
    grid = np.linspace(-1.5, 0.49, 2000)
    vals = [f(a) for a in grid]
    roots = [brentq(f, grid[i], grid[i + 1]) for i in range(len(grid) - 1) if vals[i] * vals[i + 1] < 0]
    if not roots:
        pytest.skip("no cancelling angle below alpha_max")
    with pytest.raises(DegenerateGeometry):
        build_design_matrix(Geometry(L, a1, roots[0]), Form.REDUCED6)


def test_rms():
    assert rms(TABLE["exp3"]) == pytest.approx(0.21, abs=0.005)
    assert rms(TABLE["exp2"]) == pytest.approx(0.62, abs=0.005)
    assert rms([0, 0, 0]) == 0.0
    with pytest.raises(EmptyInput):
        rms([])


@pytest.mark.parametrize("form", list(Form))
def test_consistent_system(geom, form):
    A = build_design_matrix(geom, form).matrix
    d = DeviationSet(A @ [1.0, 2.0, 3.0], form)
    r = identify_offsets(d, geom)
    assert r.offsets.as_array() == pytest.approx([1, 2, 3], abs=1e-12)
    assert np.abs(r.residuals).max() <= 1e-12
    assert r.sigma_hat <= 1e-12
    assert r.dof == (9 if form is Form.FULL12 else 3)
    assert np.abs(predict_improvement(d, r).values).max() <= 1e-12


def test_normal_equations_agree_with_lstsq(geom, rng):
    for form in Form:
        A = build_design_matrix(geom, form).matrix
        for _ in range(50):
            d = rng.normal(size=A.shape[0])
            ref = np.linalg.lstsq(A, d, rcond=None)[0]
            assert solve_normal_equations(A, d) == pytest.approx(ref, abs=1e-12)


def test_experiment2_rms_before(geom):
    d = deviations_from_table(TABLE["exp2"])
    r = identify_offsets(d, geom)
    assert r.rms_before == pytest.approx(0.62, abs=0.005)
    assert r.rms_predicted <= r.rms_before
    pred = predict_improvement(d, r)
    assert rms(pred.values) == pytest.approx(r.rms_predicted)
    assert np.abs(pred.values).max() <= np.abs(d.values).max()


@settings(max_examples=200, deadline=None)
@given(arrays(float, 6, elements=st.floats(-3, 3).map(lambda v: round(v, 6))), st.sampled_from([(0.5, -0.3), (0.33, -0.33), (0.6, 0.1)]))
def test_least_squares_properties(values, alphas):
    g = Geometry(L, *alphas)
    d = DeviationSet(values, Form.REDUCED6)
    r = identify_offsets(d, g)
    A = r.design
    assert r.rms_predicted <= r.rms_before + 1e-15
    assert np.abs(A.T @ r.residuals).max() <= 1e-9 * np.linalg.norm(values)
    base = np.linalg.norm(r.residuals)
    rng = np.random.default_rng(0)
    for _ in range(100):
        delta = rng.normal(scale=0.1, size=3)
        assert np.linalg.norm(A @ (r.offsets.as_array() + delta) - values) >= base - 1e-12


@pytest.mark.parametrize("form", list(Form))
def test_noiseless_recovery(geom, rng, form):
    worst = 0.0
    for _ in range(100):
        true = random_offsets(rng, 1e-3)
        d = session_to_deviations(simulate_session(geom, true, repeats=1), form)
        est = identify_offsets(d, geom).offsets
        worst = max(worst, np.abs(est.as_array() - true.as_array()).max())
    assert worst <= 1e-6 * L


def test_full_and_reduced_agree_on_consistent_data(geom):
    x = np.array([0.2, -0.4, 0.15])
    full = DeviationSet(build_design_matrix(geom, Form.FULL12).matrix @ x, Form.FULL12)
    a = identify_offsets(full, geom).offsets.as_array()
    b = identify_offsets(full.reduced(), geom).offsets.as_array()
    assert a == pytest.approx(b, abs=1e-13)


def test_form_mismatch(geom):
    d = DeviationSet(np.ones(6), Form.REDUCED6)
    r = identify_offsets(d, geom)
    with pytest.raises(FormMismatch):
        predict_improvement(DeviationSet(np.ones(12), Form.FULL12), r)
    with pytest.raises(FormMismatch):
        validate(DeviationSet(np.ones(12), Form.FULL12), d)


def test_validate_identical():
    d = deviations_from_table(TABLE["exp3"])
    v = validate(d, d, rms_before=0.62)
    assert np.array_equal(v.errors, np.zeros(6))
    assert v.rms_ratio == pytest.approx(0.62 / rms(d.values))


def test_validate_table_rows():
    measured = deviations_from_table(TABLE["exp3"])
    expected = deviations_from_table([-0.29, 0.23, 0.25, -0.17, -0.10, 0.08])
    v = validate(measured, expected, rms_before=rms(TABLE["exp2"]))
    assert abs(v.rms_measured - v.rms_predicted) <= 0.015
    assert f"{v.rms_measured:.2f}" == "0.21"
    assert f"{v.rms_predicted:.2f}" == "0.20"
    assert v.rms_ratio == pytest.approx(2.92, abs=0.01)


@pytest.mark.parametrize("form", list(Form))
def test_end_to_end_validation(geom, rng, form):
    """A second session run after compensation matches the predicted deviations."""
    noise = NoiseModel(sigma=0.01, resolution=0.01)
    true = JointOffsets(0.8, -0.5, 0.3)
    d = session_to_deviations(simulate_session(geom, true, 3, noise, rng=rng), form)
    r = identify_offsets(d, geom)
    pred = predict_improvement(d, r)
    post = session_to_deviations(simulate_session(geom, true - r.offsets, 3, noise, rng=rng), form)
    v = validate(post, pred, r.rms_before)
    # both sides carry independent gauge noise: std of a difference of averages
    # is about 0.01 * sqrt(2/3) per deviation, plus quantisation
    assert v.max_abs_error <= 0.05
    assert v.rms_ratio > 5


def test_sigma_hat_tracks_noise(geom):
    rng = np.random.default_rng(5)
    A = build_design_matrix(geom, Form.FULL12).matrix
    x = np.array([0.3, -0.2, 0.1])
    est = [identify_offsets(DeviationSet(A @ x + rng.normal(0, 0.05, 12), Form.FULL12), geom).sigma_hat for _ in range(2000)]
    # unbiased variance estimate
    assert np.mean(np.square(est)) == pytest.approx(0.05**2, rel=0.05)
