from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from strategies import lagrangian_shapes, orthogonal, seeds, shapes

from chen_invariants.bounds import (
    LAGRANGIAN_ORDER_N,
    REAL_FORM,
    TOTALLY_REAL,
    bound_for,
    bound_lagrangian,
    bound_real,
    bound_totally_real,
    coefficient_comparison,
    equality_case_generate,
    equality_shape_detect,
    verdict_to_document,
    verify,
)
from chen_invariants.errors import InconsistentKindError
from chen_invariants.shapes import (
    AmbientForm,
    LagrangianShape,
    ShapeOperatorSet,
    mean_curvature,
    random_lagrangian_shape,
    random_shape,
    rotate_tangent_frame,
)


def _real_formula(n, c, H):
    # written from the statement: (n-2)/2 {n^2/(n-1) |H|^2 + (n+1) c}
    return Fraction(n - 2, 2) * (Fraction(n * n, n - 1) * H + (n + 1) * c)


def _lagrangian_formula(n, c, H):
    return Fraction((n + 1) * (n - 2), 8) * c + Fraction((3 * n - 1) * (n - 2) * n * n, 2 * (3 * n + 5) * (n - 1)) * H


# ---------------------------------------------------------------- bound values


def test_bound_real_examples():
    assert bound_real(3, 1.0, 0.0) == 2.0
    assert bound_real(3, 0.0, 4 / 9) == pytest.approx(1.0, abs=1e-15)
    for n in (3, 7, 20):
        assert bound_real(n, 0.0, 0.0) == 0.0


def test_bound_totally_real_examples():
    assert bound_totally_real(3, 4.0, 0.0) == 2.0
    assert bound_totally_real(3, 0.0, 4 / 9) == pytest.approx(1.0, abs=1e-15)
    assert bound_totally_real(5, 0.0, 0.3) == bound_real(5, 0.0, 0.3)


def test_bound_lagrangian_examples():
    assert bound_lagrangian(3, 0.0, 1.0) == pytest.approx(9 / 7, abs=1e-15)
    # (n+1)(n-2)/8 * c = 4/8 * 8
    assert bound_lagrangian(3, 8.0, 0.0) == pytest.approx(4.0, abs=1e-15)
    assert bound_lagrangian(6, 0.0, 0.0) == 0.0


@pytest.mark.parametrize("fn", [bound_real, bound_totally_real, bound_lagrangian])
def test_bounds_reject_small_n(fn):
    with pytest.raises(ValueError):
        fn(2, 1.0, 1.0)


@given(st.integers(3, 40), st.fractions(-5, 5, max_denominator=50), st.fractions(0, 5, max_denominator=50))
def test_bounds_match_exact_formulas(n, c, H):
    assert bound_real(n, float(c), float(H)) == pytest.approx(float(_real_formula(n, c, H)), rel=1e-13, abs=1e-13)
    assert bound_totally_real(n, float(c), float(H)) == pytest.approx(
        float(_real_formula(n, c / 4, H)), rel=1e-13, abs=1e-13
    )
    assert bound_lagrangian(n, float(c), float(H)) == pytest.approx(
        float(_lagrangian_formula(n, c, H)), rel=1e-13, abs=1e-13
    )


@given(st.integers(3, 200), st.floats(0, 10), st.floats(0, 10))
def test_lagrangian_bound_improves_totally_real(n, c, H):
    assert bound_lagrangian(n, c, H) <= bound_totally_real(n, c, H) + 1e-12 * (1 + c + H) * n * n


def test_bound_for_dispatch():
    assert bound_for(REAL_FORM, 4, 1.0, 0.5) == bound_real(4, 1.0, 0.5)
    assert bound_for(TOTALLY_REAL, 4, 1.0, 0.5) == bound_totally_real(4, 1.0, 0.5)
    assert bound_for(LAGRANGIAN_ORDER_N, 4, 1.0, 0.5) == bound_lagrangian(4, 1.0, 0.5)
    with pytest.raises(ValueError):
        bound_for("Other", 4, 1.0, 0.5)


def test_coefficient_comparison_examples():
    # n = 3: 1/4 <= 2/7; n = 4: 2/5 <= 22/51
    assert Fraction(1, 4) <= Fraction(8 * 1, 14 * 2) == Fraction(2, 7)
    assert Fraction(2, 5) <= Fraction(11 * 2, 17 * 3) == Fraction(22, 51)
    assert coefficient_comparison(3) and coefficient_comparison(4) and coefficient_comparison(100)
    with pytest.raises(ValueError):
        coefficient_comparison(2)


# ---------------------------------------------------------------- verify


def test_verify_totally_geodesic(geodesic3):
    v = verify(*geodesic3, 3)
    assert v.delta == pytest.approx(2.0, abs=1e-15) and v.bound == 2.0
    assert v.holds and v.equality and v.kind == REAL_FORM


def test_verify_example_b(example_b):
    v = verify(*example_b, 3)
    assert v.delta == pytest.approx(1.0, abs=1e-14) and v.bound == pytest.approx(1.0, abs=1e-14)
    assert v.holds and v.equality and abs(v.slack) <= 1e-12


def test_verify_random_n4_holds(rng):
    s = random_shape(rng, 4, 2)
    v = verify(s, AmbientForm.real(0.0, 6), 3)
    assert v.holds and v.slack >= -1e-7


@given(shapes(), st.floats(-1, 1), st.integers(3, 5))
@settings(max_examples=25)
def test_real_form_bound_holds(s, c, k):
    k = min(k, s.n)
    v = verify(s, AmbientForm.real(c), k)
    assert v.holds and v.slack >= -1e-7
    assert v.slack == pytest.approx(v.bound - v.delta, abs=0)
    assert not v.equality or v.holds


@given(shapes(n=st.integers(3, 4), p=st.integers(3, 5)), st.floats(-2, 2))
@settings(max_examples=15)
def test_totally_real_bound_holds(s, c):
    v = verify(s, AmbientForm.complex(c), s.n, TOTALLY_REAL)
    assert v.holds


@given(lagrangian_shapes(), st.floats(-2, 2))
@settings(max_examples=25)
def test_lagrangian_bound_holds(s, c):
    v = verify(s, AmbientForm.complex(c, 2 * s.n), s.n, LAGRANGIAN_ORDER_N)
    assert v.holds and not v.equality_characterized


def test_verify_inconsistent_pairings(rng):
    s = random_shape(rng, 3, 1)
    lag = random_lagrangian_shape(rng, 3)
    with pytest.raises(InconsistentKindError):
        verify(s, AmbientForm.complex(1.0), 3, REAL_FORM)
    with pytest.raises(InconsistentKindError):
        verify(s, AmbientForm.real(1.0), 3, TOTALLY_REAL)
    with pytest.raises(InconsistentKindError):
        verify(s, AmbientForm.complex(1.0), 3, LAGRANGIAN_ORDER_N)
    with pytest.raises(InconsistentKindError):
        verify(random_lagrangian_shape(rng, 4), AmbientForm.complex(1.0), 3, LAGRANGIAN_ORDER_N)
    with pytest.raises(InconsistentKindError):
        verify(lag, AmbientForm.complex(1.0, 8), 3, LAGRANGIAN_ORDER_N)
    with pytest.raises(InconsistentKindError):
        verify(s, AmbientForm.complex(1.0, 4), 3, TOTALLY_REAL)
    with pytest.raises(InconsistentKindError):
        verify(s, AmbientForm.real(1.0), 3, "Unknown")
    with pytest.raises(InconsistentKindError):
        verify(s, AmbientForm.real(1.0), 4)
    assert verify(lag, AmbientForm.complex(1.0, 6), 3, LAGRANGIAN_ORDER_N).holds


def test_verdict_document_keys(example_b):
    doc = verdict_to_document(verify(*example_b, 3))
    for key in ("kind", "k", "delta", "bound", "slack", "holds", "equality", "argmin_X"):
        assert key in doc
    assert isinstance(doc["argmin_X"], list)


@given(shapes(), st.floats(-1, 1))
@settings(max_examples=10)
def test_delta_two_dominates_in_verdicts(s, c):
    amb = AmbientForm.real(c)
    d2 = verify(s, amb, 2).delta
    for k in range(3, s.n + 1):
        assert verify(s, amb, k).delta <= d2 + 1e-9


# ---------------------------------------------------------------- equality case


def test_equality_generate_examples(example_b):
    assert equality_case_generate(4, 2, [0.0, 0.0]) == ShapeOperatorSet(np.zeros((2, 4, 4)))
    assert equality_case_generate(3, 1, [1.0]) == example_b[0]
    s = equality_case_generate(4, 2, [1.0, 2.0])
    np.testing.assert_array_equal(s.h[1], np.diag([0.0, 2.0, 2.0, 2.0]))
    v = verify(s, AmbientForm.real(0.0, 6), 3)
    assert abs(v.slack) <= 1e-9 and v.equality


def test_equality_generate_rejects_bad_input():
    with pytest.raises(ValueError):
        equality_case_generate(3, 2, [1.0])
    with pytest.raises(ValueError):
        equality_case_generate(2, 1, [1.0])


@given(st.integers(3, 5), st.integers(1, 3), seeds, st.floats(-1, 1))
@settings(max_examples=20)
def test_equality_round_trip(n, p, seed, c):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-2, 2, size=p)
    s = equality_case_generate(n, p, a)
    amb = AmbientForm.real(c, n + p)
    for k in range(3, n + 1):
        v = verify(s, amb, k)
        assert abs(v.slack) <= 1e-8 and v.equality
    # both the Real and the totally real kinds share the same extremal form
    v = verify(s, AmbientForm.complex(4 * c), n, TOTALLY_REAL)
    assert abs(v.slack) <= 1e-8
    det = equality_shape_detect(s)
    assert det.found
    np.testing.assert_allclose(np.abs(det.direction), np.eye(n)[0], atol=1e-10)
    np.testing.assert_allclose(det.a, a, atol=1e-12)
    Q = orthogonal(n, seed)
    det = equality_shape_detect(rotate_tangent_frame(s, Q))
    assert det.found and abs(abs(det.direction @ (Q.T @ np.eye(n)[0])) - 1) <= 1e-8
    assert mean_curvature(s).norm_sq == pytest.approx(float(a @ a) * (n - 1) ** 2 / n**2)


def test_equality_detect_negative_cases(rng):
    assert not equality_shape_detect(ShapeOperatorSet(np.diag([1.0, 2.0, 3.0])[None])).found
    assert not equality_shape_detect(random_shape(rng, 4, 2)).found
    # common kernel vector but unequal remaining eigenvalues
    assert not equality_shape_detect(ShapeOperatorSet(np.diag([0.0, 1.0, 2.0])[None])).found


def test_equality_detect_totally_geodesic():
    det = equality_shape_detect(ShapeOperatorSet(np.zeros((2, 3, 3))))
    assert det.found and np.all(det.a == 0)


def test_lagrangian_shape_type_accepted(rng):
    s = random_lagrangian_shape(rng, 3)
    assert isinstance(s, LagrangianShape)
    v = verify(s, AmbientForm.complex(0.0, 6), 3, TOTALLY_REAL)
    assert v.holds
