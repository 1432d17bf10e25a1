"""Curvature of a submanifold of a space form, from the Gauss equation.

With ``c`` the effective sectional constant of the ambient form and
``h_r(U, V) = U^T A_r V``,

    R(X, Y, X, Z) = c (|X|^2 <Y,Z> - <X,Y><X,Z>)
                    + sum_r h_r(X,X) h_r(Y,Z) - h_r(X,Y) h_r(X,Z)

which is the only slice of the curvature tensor the invariants need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameError
from .shapes import ORTHO_TOL, AmbientForm, ShapeOperatorSet

__all__ = [
    "CurvatureView",
    "JacobiForm",
    "sectional_block",
    "curvature_xyxy",
    "curvature_xyxz",
    "scalar_curvature",
    "ric_L",
    "ricci_matrix",
    "jacobi_matrix",
    "jacobi_form",
    "complement_basis",
]


def sectional_block(shape: ShapeOperatorSet, ambient: AmbientForm) -> np.ndarray:
    """Sectional curvatures ``K[i, j]`` of the coordinate planes ``e_i ^ e_j``.

    The diagonal is NaN: a degenerate plane has no sectional curvature.
    """
    h = shape.h
    d = np.diagonal(h, axis1=1, axis2=2)  # (p, n)
    K = ambient.effective_constant + np.einsum("ri,rj->ij", d, d) - np.sum(h * h, axis=0)
    np.fill_diagonal(K, np.nan)
    return K


def curvature_xyxz(shape: ShapeOperatorSet, ambient: AmbientForm, X, Y, Z) -> float:
    """``R(X, Y, X, Z)``; symmetric in ``Y`` and ``Z``."""
    X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
    h = shape.h
    AX = h @ X
    val = ambient.effective_constant * (X @ X * (Y @ Z) - (X @ Y) * (X @ Z))
    val += float((AX @ X) @ (Y @ h @ Z) - (AX @ Y) @ (AX @ Z))
    return float(val)


def curvature_xyxy(shape: ShapeOperatorSet, ambient: AmbientForm, X, Y) -> float:
    """``R(X, Y, X, Y)`` for arbitrary (not necessarily unit) ``X`` and ``Y``."""
    return curvature_xyxz(shape, ambient, X, Y, Y)


def scalar_curvature(shape: ShapeOperatorSet, ambient: AmbientForm) -> float:
    """``tau = sum_{i<j} K[i, j]``, evaluated in closed form."""
    n = shape.n
    h = shape.h
    tr = np.trace(h, axis1=1, axis2=2)
    pairs = 0.5 * float(np.sum(tr * tr) - np.sum(h * h))
    return 0.5 * n * (n - 1) * ambient.effective_constant + pairs


def ricci_matrix(shape: ShapeOperatorSet, ambient: AmbientForm) -> np.ndarray:
    """Matrix of the Ricci form: ``Ric(X) = X^T Ric X`` for unit ``X``."""
    n = shape.n
    h = shape.h
    tr = np.trace(h, axis1=1, axis2=2)
    return (n - 1) * ambient.effective_constant * np.eye(n) + np.einsum("r,rij->ij", tr, h) - np.einsum(
        "rik,rkj->ij", h, h
    )


def jacobi_matrix(shape: ShapeOperatorSet, ambient: AmbientForm, X) -> np.ndarray:
    """Full ``n x n`` matrix of ``(Y, Z) -> R(X, Y, X, Z)``.

    It annihilates ``X``; restricted to ``X^perp`` it is the Jacobi form.
    """
    X = np.asarray(X, dtype=float)
    h = shape.h
    AX = h @ X  # (p, n)
    xAx = AX @ X
    c = ambient.effective_constant
    return c * ((X @ X) * np.eye(len(X)) - np.outer(X, X)) + np.tensordot(xAx, h, 1) - AX.T @ AX


def complement_basis(X) -> np.ndarray:
    """Orthonormal basis of ``X^perp`` as the columns of an ``n x (n-1)`` matrix.

    Gram-Schmidt on ``X`` followed by the coordinate axes ordered from least
    to most aligned with ``X``; the most aligned axis is dropped.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    order = np.argsort(np.abs(X), kind="stable")[: n - 1]
    Q, R = np.linalg.qr(np.column_stack([X, np.eye(n)[:, order]]))
    # fix column signs so each basis vector has positive overlap with its seed axis
    Q = Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
    return Q[:, 1:]


@dataclass(frozen=True)
class JacobiForm:
    """The form ``(Y, Z) -> R(X, Y, X, Z)`` on ``X^perp`` in the basis ``basis``."""

    X: np.ndarray
    basis: np.ndarray
    B: np.ndarray


def _check_unit(X):
    X = np.asarray(X, dtype=float)
    if abs(np.linalg.norm(X) - 1.0) > ORTHO_TOL:
        raise FrameError(f"X must be a unit vector (|X| = {np.linalg.norm(X)!r})")
    return X


def jacobi_form(shape: ShapeOperatorSet, ambient: AmbientForm, X) -> JacobiForm:
    X = _check_unit(X)
    U = complement_basis(X)
    B = U.T @ jacobi_matrix(shape, ambient, X) @ U
    B = 0.5 * (B + B.T)
    return JacobiForm(X, U, B)


def ric_L(shape: ShapeOperatorSet, ambient: AmbientForm, X, L_basis) -> float:
    """Partial Ricci curvature ``Ric_L(X)`` for ``L = span(X, L_basis)``.

    Parameters
    ----------
    X : array_like, shape (n,)
        Unit vector.
    L_basis : array_like, shape (k - 1, n)
        Orthonormal vectors orthogonal to ``X``, one per row. ``k - 1 = 0`` is
        allowed and gives zero.
    """
    X = _check_unit(X)
    Bs = np.asarray(L_basis, dtype=float).reshape(-1, shape.n)
    if len(Bs):
        gram = Bs @ Bs.T
        if np.abs(gram - np.eye(len(Bs))).max() > ORTHO_TOL:
            raise FrameError("L_basis is not orthonormal")
        if np.abs(Bs @ X).max() > ORTHO_TOL:
            raise FrameError("L_basis is not orthogonal to X")
    M = jacobi_matrix(shape, ambient, X)
    return float(np.einsum("ai,ij,aj->", Bs, M, Bs))


class CurvatureView:
    """Curvature quantities of one ``(shape, ambient)`` pair, computed eagerly."""

    def __init__(self, shape: ShapeOperatorSet, ambient: AmbientForm):
        ambient.check_pairing(shape)
        self.shape = shape
        self.ambient = ambient
        self.c_eff = ambient.effective_constant
        self.K = sectional_block(shape, ambient)
        self.K.setflags(write=False)
        self.tau = scalar_curvature(shape, ambient)

    def xyxy(self, X, Y):
        return curvature_xyxy(self.shape, self.ambient, X, Y)

    def ric_L(self, X, L_basis):
        return ric_L(self.shape, self.ambient, X, L_basis)

    def jacobi_form(self, X):
        return jacobi_form(self.shape, self.ambient, X)
