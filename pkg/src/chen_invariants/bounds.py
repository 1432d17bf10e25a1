"""Upper bounds for ``delta_k``, verdicts, and the extremal Weingarten form."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import InconsistentKindError
from .grassmann import delta_k
from .shapes import COMPLEX, REAL, AmbientForm, LagrangianShape, ShapeOperatorSet, mean_curvature

__all__ = [
    "REAL_FORM",
    "TOTALLY_REAL",
    "LAGRANGIAN_ORDER_N",
    "BOUND_KINDS",
    "HOLDS_TOL",
    "EQUALITY_TOL",
    "Verdict",
    "EqualityDetection",
    "bound_real",
    "bound_totally_real",
    "bound_lagrangian",
    "bound_for",
    "coefficient_comparison",
    "verify",
    "equality_case_generate",
    "equality_shape_detect",
    "verdict_to_document",
]

REAL_FORM = "RealForm"
TOTALLY_REAL = "TotallyReal"
LAGRANGIAN_ORDER_N = "LagrangianOrderN"
BOUND_KINDS = (REAL_FORM, TOTALLY_REAL, LAGRANGIAN_ORDER_N)

HOLDS_TOL = 1e-7
EQUALITY_TOL = 1e-6


def _check_n(n):
    if n < 3:
        raise ValueError(f"bounds need n >= 3, got {n}")


def bound_real(n: int, c: float, H_sq: float) -> float:
    """``(n-2)/2 * (n^2/(n-1) |H|^2 + (n+1) c)`` for a real space form."""
    _check_n(n)
    return 0.5 * (n - 2) * (n * n / (n - 1) * H_sq + (n + 1) * c)


def bound_totally_real(n: int, c: float, H_sq: float) -> float:
    """Same as :func:`bound_real` with ``c`` replaced by ``c / 4``."""
    return bound_real(n, c / 4.0, H_sq)


def bound_lagrangian(n: int, c: float, H_sq: float) -> float:
    """``(n+1)(n-2)/8 c + (3n-1)(n-2) n^2 / (2(3n+5)(n-1)) |H|^2``, valid for ``k = n``."""
    _check_n(n)
    return (n + 1) * (n - 2) / 8.0 * c + (3 * n - 1) * (n - 2) * n * n / (2.0 * (3 * n + 5) * (n - 1)) * H_sq


def bound_for(kind: str, n: int, c: float, H_sq: float) -> float:
    if kind == REAL_FORM:
        return bound_real(n, c, H_sq)
    if kind == TOTALLY_REAL:
        return bound_totally_real(n, c, H_sq)
    if kind == LAGRANGIAN_ORDER_N:
        return bound_lagrangian(n, c, H_sq)
    raise ValueError(f"unknown bound kind {kind!r}")


def coefficient_comparison(n: int) -> bool:
    """Exact check of ``(n-2)/(n+1) <= (3n-1)(n-2)/((3n+5)(n-1))``."""
    _check_n(n)
    return Fraction(n - 2, n + 1) <= Fraction((3 * n - 1) * (n - 2), (3 * n + 5) * (n - 1))


@dataclass(frozen=True)
class Verdict:
    kind: str
    k: int
    delta: float
    bound: float
    slack: float
    holds: bool
    equality: bool
    tol: float
    eq_tol: float
    argmin_X: np.ndarray
    theta_method: str
    # no equality characterisation is known for the Lagrangian order-n bound
    equality_characterized: bool = True


def _check_pairing(shape, ambient, k, kind):
    if kind not in BOUND_KINDS:
        raise InconsistentKindError(f"unknown bound kind {kind!r}")
    n = shape.n
    if not 2 <= k <= n:
        raise InconsistentKindError(f"k={k} outside [2, {n}]")
    if kind == REAL_FORM and ambient.kind != REAL:
        raise InconsistentKindError("RealForm bound needs a real space form")
    if kind in (TOTALLY_REAL, LAGRANGIAN_ORDER_N) and ambient.kind != COMPLEX:
        raise InconsistentKindError(f"{kind} bound needs a complex space form")
    if kind == LAGRANGIAN_ORDER_N:
        if not isinstance(shape, LagrangianShape):
            raise InconsistentKindError("LagrangianOrderN bound needs a LagrangianShape")
        if k != n:
            raise InconsistentKindError(f"LagrangianOrderN bound applies to k = n = {n}, got k={k}")
        m = ambient.ambient_real_dim
        if m is not None and m != 2 * n:
            raise InconsistentKindError(f"a Lagrangian submanifold of dimension {n} needs ambient_real_dim {2 * n}")
    if kind == TOTALLY_REAL:
        m = ambient.ambient_real_dim
        if m is not None and 2 * shape.n > m:
            raise InconsistentKindError("a totally real submanifold has dimension at most half the ambient one")
    ambient.check_pairing(shape)


def verify(
    shape: ShapeOperatorSet,
    ambient: AmbientForm,
    k: int,
    kind: str = REAL_FORM,
    tol: float = HOLDS_TOL,
    eq_tol: float = EQUALITY_TOL,
    **theta_kw,
) -> Verdict:
    """Compute ``delta_k`` and compare it with the bound selected by ``kind``.

    Raises
    ------
    InconsistentKindError
        If ``kind`` does not fit the ambient form, the shape type or ``k``.
    """
    _check_pairing(shape, ambient, k, kind)
    d = delta_k(shape, ambient, k, **theta_kw)
    H_sq = mean_curvature(shape).norm_sq
    bound = bound_for(kind, shape.n, ambient.c, H_sq)
    slack = bound - d.delta
    holds = slack >= -tol
    return Verdict(
        kind=kind,
        k=k,
        delta=d.delta,
        bound=bound,
        slack=slack,
        holds=holds,
        equality=holds and abs(slack) <= eq_tol,
        tol=tol,
        eq_tol=eq_tol,
        argmin_X=d.theta.argmin_X,
        theta_method=d.theta.method,
        equality_characterized=kind != LAGRANGIAN_ORDER_N,
    )


def verdict_to_document(v: Verdict) -> dict:
    return {
        "kind": v.kind,
        "k": v.k,
        "delta": v.delta,
        "bound": v.bound,
        "slack": v.slack,
        "holds": v.holds,
        "equality": v.equality,
        "equality_characterized": v.equality_characterized,
        "theta_method": v.theta_method,
        "argmin_X": v.argmin_X.tolist(),
    }


# --------------------------------------------------------------------------
# extremal shapes
# --------------------------------------------------------------------------


def equality_case_generate(n: int, p: int, a) -> ShapeOperatorSet:
    """Shape with ``A_r = a_r (I - e_1 e_1^T)``, i.e. ``diag(0, a_r, ..., a_r)``."""
    _check_n(n)
    a = np.asarray(a, dtype=float).reshape(-1)
    if p < 1 or len(a) != p:
        raise ValueError(f"need p >= 1 and len(a) == p, got p={p}, len(a)={len(a)}")
    P = np.eye(n)
    P[0, 0] = 0.0
    return ShapeOperatorSet(a[:, None, None] * P)


class EqualityDetection(NamedTuple):
    found: bool
    direction: np.ndarray | None
    a: np.ndarray | None


def equality_shape_detect(shape: ShapeOperatorSet, tol: float = 1e-8) -> EqualityDetection:
    """Look for a unit ``u`` with ``A_r u = 0`` and ``A_r = a_r (I - u u^T)`` for all ``r``.

    Any such ``u`` is a common null vector of the ``A_r``, hence of
    ``sum_r A_r^2``, so candidates come from the near-null eigenvectors of each
    ``A_r`` and of that sum. ``a_r = trace(A_r) / (n - 1)``.
    """
    h = shape.h
    n = shape.n
    candidates = []
    for A in list(h) + [np.einsum("rij,rjk->ik", h, h)]:
        w, V = np.linalg.eigh(A)
        candidates.extend(V[:, i] for i in np.flatnonzero(np.abs(w) <= tol))
    a = np.trace(h, axis1=1, axis2=2) / (n - 1)
    for u in candidates:
        u = u / np.linalg.norm(u)
        if np.max(np.linalg.norm(h @ u, axis=1)) > tol:
            continue
        P = np.eye(n) - np.outer(u, u)
        if all(np.linalg.norm(h[r] - a[r] * P) <= tol for r in range(shape.p)):
            j = int(np.argmax(np.abs(u)))
            return EqualityDetection(True, u * np.sign(u[j]), a)
    return EqualityDetection(False, None, None)
