"""Quadratic forms maximised on the trace hyperplane ``sum_i x_i = t``.

Three solution routes are provided and cross-checked: the closed-form
critical points, a generic KKT solve with a second-order certificate, and a
derivative-free multi-start oracle. A QP is stored as a symmetric matrix ``M``
with ``value(x) = x^T M x``; its Hessian is ``2 M``.

The certificate follows the minimisation form of the optimality conditions
applied to ``-f``: a critical point of ``f`` restricted to the hyperplane is the
global maximum when the Hessian projected onto ``{sum_i X_i = 0}`` is negative
definite. The hyperplane is totally geodesic, so no curvature correction enters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .curvature import complement_basis, ric_L, scalar_curvature
from .errors import DegenerateQP, ShapeValidationError
from .shapes import AmbientForm, ShapeOperatorSet

__all__ = [
    "FR_REAL",
    "F1_LAGRANGIAN",
    "FR_LAGRANGIAN",
    "GENERIC",
    "CLOSED_FORM",
    "KKT",
    "NUMERIC_ORACLE",
    "TraceConstrainedQP",
    "QPSolution",
    "build_fr_real",
    "build_f1_lagrangian",
    "build_fr_lagrangian",
    "build_qp",
    "hyperplane_basis",
    "restricted_hessian",
    "solve_closed_form",
    "solve_kkt",
    "numeric_max_oracle",
    "alpha_identity_check",
    "factorization_check",
    "gauss_decomposition_residual",
    "lagrangian_decomposition_residual",
    "qp_from_document",
    "qp_to_document",
    "solution_to_document",
]

FR_REAL = "fr_real"
F1_LAGRANGIAN = "f1_lagrangian"
FR_LAGRANGIAN = "fr_lagrangian"
GENERIC = "generic"

CLOSED_FORM = "ClosedForm"
KKT = "KKT"
NUMERIC_ORACLE = "NumericOracle"


@dataclass(frozen=True)
class TraceConstrainedQP:
    """``max x^T M x`` subject to ``sum_i x_i = trace_value``.

    ``k_order`` is set for ``fr_real`` and ``r`` (1-based) for ``fr_lagrangian``.
    """

    M: np.ndarray
    trace_value: float
    label: str = GENERIC
    k_order: int | None = None
    r: int | None = None

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"M must be square, got shape {M.shape}")
        if not np.allclose(M, M.T, rtol=0, atol=1e-14):
            raise ValueError("M must be symmetric")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "trace_value", float(self.trace_value))

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def hessian(self) -> np.ndarray:
        return 2.0 * self.M

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.M @ x)

    def grad(self, x) -> np.ndarray:
        return 2.0 * self.M @ np.asarray(x, dtype=float)

    def with_trace(self, t) -> TraceConstrainedQP:
        return TraceConstrainedQP(self.M, t, self.label, self.k_order, self.r)


def _pair_products(n):
    """Matrix of ``sum_{i<j} x_i x_j``."""
    return 0.5 * (np.ones((n, n)) - np.eye(n))


def _check_n(n):
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")


def build_fr_real(n: int, k_order: int, trace_value: float = 0.0) -> TraceConstrainedQP:
    """``sum_{i<j} x_i x_j - x_1 (x_2 + ... + x_k) / (k - 1)``."""
    _check_n(n)
    if not 3 <= k_order <= n:
        raise ValueError(f"k_order must lie in [3, {n}], got {k_order}")
    M = _pair_products(n)
    w = 0.5 / (k_order - 1)
    M[0, 1:k_order] -= w
    M[1:k_order, 0] -= w
    return TraceConstrainedQP(M, trace_value, FR_REAL, k_order=k_order)


def build_f1_lagrangian(n: int, trace_value: float = 0.0) -> TraceConstrainedQP:
    """``sum_{i<j} x_i x_j - x_1 sum_{j>=2} x_j/(n-1) - (1 - 1/(n-1)) sum_{j>=2} x_j^2``."""
    _check_n(n)
    M = _pair_products(n)
    w = 0.5 / (n - 1)
    M[0, 1:] -= w
    M[1:, 0] -= w
    idx = np.arange(1, n)
    M[idx, idx] = -1.0 + 1.0 / (n - 1)
    return TraceConstrainedQP(M, trace_value, F1_LAGRANGIAN)


def build_fr_lagrangian(n: int, r: int, trace_value: float = 0.0) -> TraceConstrainedQP:
    """Form attached to the normal direction ``J e_r``, ``2 <= r <= n``.

    ``sum_{i<j} x_i x_j - x_1 sum_{j>=2} x_j/(n-1) - sum_{j != r} x_j^2 + x_1^2/(n-1)``.
    """
    _check_n(n)
    if not 2 <= r <= n:
        raise ValueError(f"r must lie in [2, {n}], got {r}")
    M = _pair_products(n)
    w = 0.5 / (n - 1)
    M[0, 1:] -= w
    M[1:, 0] -= w
    d = np.full(n, -1.0)
    d[0] += 1.0 / (n - 1)
    d[r - 1] = 0.0
    M[np.arange(n), np.arange(n)] = d
    return TraceConstrainedQP(M, trace_value, FR_LAGRANGIAN, r=r)


def build_qp(label, n, trace_value=0.0, k_order=None, r=None) -> TraceConstrainedQP:
    if label == FR_REAL:
        if k_order is None:
            raise ValueError("fr_real needs k_order")
        return build_fr_real(n, k_order, trace_value)
    if label == F1_LAGRANGIAN:
        return build_f1_lagrangian(n, trace_value)
    if label == FR_LAGRANGIAN:
        if r is None:
            raise ValueError("fr_lagrangian needs r")
        return build_fr_lagrangian(n, r, trace_value)
    raise ValueError(f"unknown QP label {label!r}")


# --------------------------------------------------------------------------
# solutions
# --------------------------------------------------------------------------


def hyperplane_basis(n: int) -> np.ndarray:
    """Orthonormal basis of ``{sum_i X_i = 0}`` as columns, shape ``(n, n-1)``."""
    return complement_basis(np.ones(n) / np.sqrt(n))


def restricted_hessian(qp: TraceConstrainedQP) -> np.ndarray:
    """Ascending eigenvalues of the Hessian projected onto the trace hyperplane."""
    B = hyperplane_basis(qp.n)
    H = B.T @ qp.hessian @ B
    return np.linalg.eigvalsh(0.5 * (H + H.T))


@dataclass(frozen=True)
class QPSolution:
    point: np.ndarray
    multiplier: float
    max_value: float
    certificate: np.ndarray
    method: str
    stationarity: float = field(default=0.0)

    @property
    def certified(self) -> bool:
        """True when the restricted Hessian is negative definite."""
        return bool(np.all(self.certificate < 0))


def _finish(qp, point, multiplier, max_value, method):
    point = np.asarray(point, dtype=float)
    g = qp.grad(point)
    return QPSolution(
        point=point,
        multiplier=float(multiplier),
        max_value=float(max_value),
        certificate=restricted_hessian(qp),
        method=method,
        stationarity=float(np.abs(g - multiplier).max()),
    )


def solve_closed_form(qp: TraceConstrainedQP) -> QPSolution:
    """Critical point and maximum of the three labelled forms, from formulas.

    * ``fr_real``: ``(0, a, ..., a)``, ``a = t/(n-1)``, max ``(n-2) t^2 / (2(n-1))``.
    * ``f1_lagrangian``: ``(2a, a, ..., a)``, ``a = t/(n+1)``, max ``(n-2) t^2 / (2(n+1))``.
    * ``fr_lagrangian``: ``2b`` in slot 1, ``9b`` in slot ``r``, ``3b`` elsewhere,
      ``b = t/(3n+5)``, max ``(3n-1)(n-2) t^2 / (2(3n+5)(n-1))``.
    """
    n, t = qp.n, qp.trace_value
    if qp.label == FR_REAL:
        a = t / (n - 1)
        point = np.full(n, a)
        point[0] = 0.0
        lam = (n - 2) * a
        best = (n - 2) * t * t / (2 * (n - 1))
    elif qp.label == F1_LAGRANGIAN:
        a = t / (n + 1)
        point = np.full(n, a)
        point[0] = 2 * a
        lam = (n - 2) * a
        best = (n - 2) * t * t / (2 * (n + 1))
    elif qp.label == FR_LAGRANGIAN:
        b = t / (3 * n + 5)
        point = np.full(n, 3 * b)
        point[0] = 2 * b
        point[qp.r - 1] = 9 * b
        lam = (3 * n - 4 - 2 / (n - 1)) * b
        best = (3 * n - 1) * (n - 2) * t * t / (2 * (3 * n + 5) * (n - 1))
    else:
        raise ValueError(f"no closed form for label {qp.label!r}; use solve_kkt")
    return _finish(qp, point, lam, best, CLOSED_FORM)


def solve_kkt(qp: TraceConstrainedQP, rcond=1e-12) -> QPSolution:
    """Solve ``grad value(x) = lambda * 1``, ``sum x = t`` as one linear system.

    Raises
    ------
    DegenerateQP
        If the bordered KKT matrix is singular; carries its nullspace dimension.
    """
    n = qp.n
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = qp.hessian
    K[:n, n] = -1.0
    K[n, :n] = 1.0
    s = np.linalg.svd(K, compute_uv=False)
    null = int(np.sum(s <= rcond * s[0]))
    if null:
        raise DegenerateQP(f"KKT system is singular (nullspace dimension {null})", null)
    rhs = np.zeros(n + 1)
    rhs[n] = qp.trace_value
    sol = np.linalg.solve(K, rhs)
    x, lam = sol[:n], sol[n]
    return _finish(qp, x, lam, qp.value(x), KKT)


def numeric_max_oracle(qp: TraceConstrainedQP, starts: int = 8, seed: int = 0) -> QPSolution:
    """Multi-start Powell maximisation over ``n - 1`` free hyperplane coordinates.

    Uses only function values. The best local maximum is returned; it matches
    the KKT route when the restricted form is concave.
    """
    if starts < 8:
        raise ValueError(f"starts must be >= 8, got {starts}")
    n, t = qp.n, qp.trace_value
    B = hyperplane_basis(n)
    x0 = np.full(n, t / n)
    M = qp.M

    def neg(z):
        x = x0 + B @ z
        return -(x @ M @ x)

    rng = np.random.default_rng(seed)
    spread = 1.0 + abs(t)
    best = None
    for _ in range(starts):
        z0 = rng.uniform(-spread, spread, size=n - 1)
        res = minimize(neg, z0, method="Powell", options={"xtol": 1e-12, "ftol": 1e-15, "maxfev": 200_000})
        if best is None or res.fun < best.fun or (res.fun == best.fun and tuple(res.x) < tuple(best.x)):
            best = res
    x = x0 + B @ best.x
    lam = float(np.mean(qp.grad(x)))
    return _finish(qp, x, lam, -float(best.fun), NUMERIC_ORACLE)


# --------------------------------------------------------------------------
# identities used in the maximisation argument
# --------------------------------------------------------------------------


def alpha_identity_check(n: int, k_order: int, samples: int = 1000, seed: int = 0, perturb: float = 0.0) -> float:
    """Max gap between ``X^T Hess X`` and its completed-square expression.

    For ``X`` with ``sum_i X_i = 0`` and the ``fr_real`` form,

        X^T Hess X = -1/(k-1) [ sum_{i=2}^k (X_1 + X_i)^2
                                + (k-2) sum_{i=2}^k X_i^2
                                + (k-1) sum_{i>k} X_i^2 ].

    ``perturb`` is added to the ``(1, 2)`` Hessian entry as a fault-injection hook.
    """
    k = k_order
    H = build_fr_real(n, k).hessian.copy()
    H[0, 1] += perturb
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, n))
    X -= X.mean(axis=1, keepdims=True)
    lhs = np.einsum("mi,ij,mj->m", X, H, X)
    head = X[:, 1:k]
    rhs = -(
        np.sum((X[:, :1] + head) ** 2, axis=1)
        + (k - 2) * np.sum(head**2, axis=1)
        + (k - 1) * np.sum(X[:, k:] ** 2, axis=1)
    ) / (k - 1)
    return float(np.abs(lhs - rhs).max()) if samples else 0.0


def factorization_check(ns=range(3, 65)) -> bool:
    """``9n^3 - 6n^2 - 29n + 10 == (3n+5)(3n-1)(n-2)`` in integer arithmetic."""
    return all(9 * n**3 - 6 * n**2 - 29 * n + 10 == (3 * n + 5) * (3 * n - 1) * (n - 2) for n in ns)


def gauss_decomposition_residual(shape: ShapeOperatorSet, ambient: AmbientForm, k: int) -> float:
    """``tau - Ric_L(e_1)/(k-1)`` minus its diagonal upper estimate, in the given frame.

    ``L = span(e_1, ..., e_k)``. The estimate is
    ``(n+1)(n-2)/2 * c + sum_r f_r(diag A_r)`` with ``f_r`` the ``fr_real`` form;
    the residual is ``<= 0`` for ``k >= 3``.
    """
    n = shape.n
    E = np.eye(n)
    lhs = scalar_curvature(shape, ambient) - ric_L(shape, ambient, E[0], E[1:k]) / (k - 1)
    f = build_fr_real(n, k)
    diag = np.diagonal(shape.h, axis1=1, axis2=2)
    est = 0.5 * (n + 1) * (n - 2) * ambient.effective_constant + sum(f.value(d) for d in diag)
    return float(lhs - est)


def lagrangian_decomposition_residual(shape: ShapeOperatorSet, ambient: AmbientForm) -> float:
    """Lagrangian analogue with ``L = T_xM``: ``f_1`` on ``diag A_1`` and the
    ``J e_r`` form on ``diag A_r`` for ``r >= 2``. Non-positive for fully
    symmetric ``h``.
    """
    n = shape.n
    E = np.eye(n)
    lhs = scalar_curvature(shape, ambient) - ric_L(shape, ambient, E[0], E[1:]) / (n - 1)
    diag = np.diagonal(shape.h, axis1=1, axis2=2)
    est = 0.5 * (n + 1) * (n - 2) * ambient.effective_constant
    est += build_f1_lagrangian(n).value(diag[0])
    est += sum(build_fr_lagrangian(n, r).value(diag[r - 1]) for r in range(2, n + 1))
    return float(lhs - est)


def coefficient_ratio_gap(n: int) -> Fraction:
    """``(3n-1)(n-2)/((3n+5)(n-1)) - (n-2)/(n+1)`` as an exact fraction."""
    return Fraction((3 * n - 1) * (n - 2), (3 * n + 5) * (n - 1)) - Fraction(n - 2, n + 1)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def qp_from_document(doc) -> TraceConstrainedQP:
    """Build a QP from ``{"label", "n", "k_order", "r", "trace"}``."""
    if not isinstance(doc, dict):
        raise ShapeValidationError("QP document must be a JSON object")
    try:
        return build_qp(doc["label"], int(doc["n"]), float(doc["trace"]), doc.get("k_order"), doc.get("r"))
    except KeyError as exc:
        raise ShapeValidationError(f"QP document is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ShapeValidationError(str(exc)) from None


def qp_to_document(qp: TraceConstrainedQP) -> dict:
    return {"label": qp.label, "n": qp.n, "k_order": qp.k_order, "r": qp.r, "trace": qp.trace_value}


def solution_to_document(sol: QPSolution) -> dict:
    return {
        "method": sol.method,
        "point": sol.point.tolist(),
        "multiplier": sol.multiplier,
        "max_value": sol.max_value,
        "certificate": sol.certificate.tolist(),
        "certified": sol.certified,
        "stationarity": sol.stationarity,
    }
