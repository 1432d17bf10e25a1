"""k-order Ricci curvature ``theta_k`` and the invariant ``delta_k = tau - theta_k``.

``theta_k`` is the minimum of ``Ric_L(X) / (k - 1)`` over k-planes ``L`` and unit
``X`` in ``L``. For fixed ``X`` the minimum over ``L`` is a Ky Fan partial trace:
the sum of the ``k - 1`` smallest eigenvalues of the Jacobi form on ``X^perp``.
What remains is a search over the unit sphere, where the objective is even in
``X`` and only piecewise smooth (it has kinks where the ``(k-1)``-th and k-th
eigenvalues cross).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from .curvature import complement_basis, jacobi_form, ricci_matrix, scalar_curvature
from .shapes import AmbientForm, ShapeOperatorSet

__all__ = [
    "EIGEN_EXACT",
    "MULTI_START",
    "BRUTE_FORCE",
    "DEFAULT_SEED",
    "DEFAULT_STARTS",
    "DEFAULT_RESOLUTION",
    "InnerMin",
    "ThetaResult",
    "DeltaResult",
    "SphereObjective",
    "theta_given_X",
    "theta_k",
    "theta_k_bruteforce",
    "delta_k",
]

EIGEN_EXACT = "EigenExact"
MULTI_START = "MultiStart"
BRUTE_FORCE = "BruteForce"

DEFAULT_SEED = 20240517
DEFAULT_STARTS = 64
DEFAULT_RESOLUTION = 20_000

STEP_TOL = 1e-12
KINK_GAP = 1e-6


def _check_k(shape, k):
    if not 2 <= k <= shape.n:
        raise ValueError(f"order k={k} outside [2, {shape.n}]")


class InnerMin(NamedTuple):
    value: float
    L_basis: np.ndarray  # (k - 1, n), rows orthonormal and orthogonal to X


def theta_given_X(shape: ShapeOperatorSet, ambient: AmbientForm, X, k: int) -> InnerMin:
    """Best ``Ric_L(X) / (k - 1)`` over k-planes ``L`` containing the unit vector ``X``."""
    _check_k(shape, k)
    J = jacobi_form(shape, ambient, X)
    w, V = np.linalg.eigh(J.B)
    basis = (J.basis @ V[:, : k - 1]).T
    return InnerMin(float(w[: k - 1].sum()) / (k - 1), basis)


class SphereObjective:
    """Vectorised ``X -> sum of the k-1 smallest eigenvalues of the Jacobi form``.

    The Jacobi matrix ``M_X`` annihilates ``X``. Adding ``shift * X X^T`` with a
    shift above the spectral radius pushes that direction to the top of the
    spectrum, so the bottom ``k - 1`` eigenvalues of the shifted matrix are
    exactly those of the form on ``X^perp``.
    """

    def __init__(self, shape: ShapeOperatorSet, ambient: AmbientForm, k: int):
        _check_k(shape, k)
        self.h = shape.h
        self.n = shape.n
        self.k = k
        self.c = ambient.effective_constant
        # |R(X,Y,X,Z)| <= |c| + 2 sum_r |A_r|^2 for unit vectors
        self.shift = 1.0 + abs(self.c) + 2.0 * float(np.sum(self.h * self.h))
        self._eye = np.eye(self.n)

    def matrices(self, X):
        """Shifted Jacobi matrices for unit rows ``X`` of shape ``(m, n)``."""
        AX = np.tensordot(X, self.h, axes=(1, 2))  # (m, p, n)
        xAx = np.sum(AX * X[:, None, :], axis=2)
        XX = X[:, :, None] * X[:, None, :]
        M = (self.shift - self.c) * XX
        M += self.c * self._eye
        M += np.tensordot(xAx, self.h, axes=(1, 0))
        M -= np.swapaxes(AX, 1, 2) @ AX
        return M

    def values(self, X):
        return np.linalg.eigvalsh(self.matrices(X))[:, : self.k - 1].sum(axis=1)

    def value(self, x):
        x = x / np.linalg.norm(x)
        return float(self.values(x[None, :])[0])


def _fold(X):
    """Pick the representative of ``{X, -X}`` whose largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(X), axis=1)
    s = np.sign(X[np.arange(len(X)), idx])
    s[s == 0] = 1.0
    return X * s[:, None]


def _unit_rows(X):
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _dedupe(X, f, tol=1e-9):
    """Indices of rows kept after merging antipodally-equal points; best value wins."""
    order = np.lexsort((np.arange(len(f)), f))
    keep = []
    for i in order:
        if all(abs(X[i] @ X[j]) < 1.0 - tol for j in keep):
            keep.append(i)
    return np.array(keep, dtype=int)


def _same_plane(W, tol=1e-9):
    """Boolean matrix: rows whose k-planes (columns of ``W[m]``) coincide."""
    m, n, k = W.shape
    # |W_a^T W_b|_F^2 = <P_a, P_b> for the orthogonal projectors P = W W^T
    P = (W @ np.swapaxes(W, 1, 2)).reshape(m, n * n)
    return P @ P.T >= k - tol


def _sandwich(W, h):
    """``W^T A_r W`` for every row and every ``r``: shape ``(m, p, k, k)``."""
    AW = h[None] @ W[:, None]
    return np.swapaxes(W, 1, 2)[:, None] @ AW


def _block_descent(obj: SphereObjective, X, max_iter=500, tol=1e-14, merge_tol=1e-3):
    """Batched block-coordinate descent on the flag ``X in L``.

    Three exact partial minimisations of ``Ric_L(X)`` are cycled:

    * ``X`` fixed: ``L`` is spanned by ``X`` and the bottom ``k - 1``
      eigenvectors ``V`` of its Jacobi form (Ky Fan);
    * ``L`` fixed: ``Ric_L`` is a quadratic form on ``L``; take its bottom
      eigenvector;
    * ``V`` fixed: ``Ric_L`` is a quadratic form in ``X`` on ``V^perp``; take
      its bottom eigenvector.

    Together the moves span every direction of the flag, so fixed points are
    stationary. None of them increases the objective. Rows that stop
    improving are retired; rows that reach the same plane are merged.

    Returns the final rows, their values and Jacobi spectra, best first.
    """
    h, c, k, n = obj.h, obj.c, obj.k, obj.n
    eye_k, eye_c = np.eye(k), np.eye(n - k + 1)
    m = len(X)
    f_prev = np.full(m, np.inf)
    out_X, out_f, out_w = [], [], []
    for it in range(max_iter):
        if not len(X):
            break
        w, E = np.linalg.eigh(obj.matrices(X))
        f = w[:, : k - 1].sum(axis=1)
        if it % 2 == 0:
            # retire converged rows after each full cycle
            done = f_prev - f <= tol * (1.0 + np.abs(f))
            if it == max_iter - 1 or it == max_iter - 2:
                done[:] = True
            if np.any(done):
                out_X.append(X[done]), out_f.append(f[done]), out_w.append(w[done])
                X, E, w, f, f_prev = X[~done], E[~done], w[~done], f[~done], f_prev[~done]
                if not len(X):
                    break
            W = np.concatenate([X[:, :, None], E[:, :, : k - 1]], axis=2)
            S = _sandwich(W, h)
            trPA = np.trace(S, axis1=2, axis2=3)
            R = c * (k - 1) * eye_k + np.sum(trPA[:, :, None, None] * S - S @ S, axis=1)
        else:
            V = E[:, :, : k - 1]
            W = E[:, :, k - 1 :]  # basis of V^perp, contains X
            AV = h[None] @ V[:, None]
            trPA = np.sum(V[:, None] * AV, axis=(2, 3))
            WAV = np.swapaxes(W, 1, 2)[:, None] @ AV
            R = c * (k - 1) * eye_c + np.sum(
                trPA[:, :, None, None] * _sandwich(W, h) - WAV @ np.swapaxes(WAV, 2, 3), axis=1
            )
        _, U = np.linalg.eigh(R)
        X = _fold(_unit_rows((W @ U[:, :, :1])[:, :, 0]))
        f_prev = np.minimum(f_prev, f)
        if it % 2 == 1 and len(X) > 1:
            # merge rows that have entered the same basin: same plane and,
            # for k > 2, the same point (for k = 2 the point slides freely in its plane)
            same = _same_plane(np.concatenate([X[:, :, None], E[:, :, : k - 1]], axis=2), merge_tol)
            if k > 2:
                same &= np.abs(X @ X.T) >= 1.0 - merge_tol
            order = np.argsort(f, kind="stable")
            taken = np.zeros(len(X), dtype=bool)
            for i in order:
                if not np.any(same[i] & taken):
                    taken[i] = True
            keep = np.flatnonzero(taken)
            X, f_prev = X[keep], f_prev[keep]
    Xs, fs, ws = np.concatenate(out_X), np.concatenate(out_f), np.concatenate(out_w)
    order = np.lexsort((np.arange(len(fs)), fs))
    return Xs[order], fs[order], ws[order]


def _polish(obj: SphereObjective, x0, scale=1e-3, max_fev=6000):
    """Nelder-Mead in a tangent chart around ``x0``; tolerant of kinks."""
    n = obj.n
    T = complement_basis(x0)

    def fun(z):
        return obj.value(x0 + T @ z)

    simplex = np.vstack([np.zeros(n - 1), scale * np.eye(n - 1)])
    res = minimize(
        fun,
        np.zeros(n - 1),
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": STEP_TOL, "fatol": 1e-15, "maxfev": max_fev},
    )
    x = x0 + T @ res.x
    x = x / np.linalg.norm(x)
    return x, float(res.fun)


@dataclass(frozen=True)
class ThetaResult:
    """Minimiser record for ``theta_k``.

    ``argmin_L_basis`` holds the k-frame as rows, with ``argmin_X`` first.
    """

    k: int
    theta: float
    argmin_X: np.ndarray
    argmin_L_basis: np.ndarray
    method: str
    starts_used: int


def _result_from_X(shape, ambient, X, k, method, starts, theta=None):
    inner = theta_given_X(shape, ambient, X, k)
    frame = np.vstack([X, inner.L_basis])
    return ThetaResult(k, inner.value if theta is None else theta, X, frame, method, starts)


def theta_k(
    shape: ShapeOperatorSet,
    ambient: AmbientForm,
    k: int,
    starts: int = DEFAULT_STARTS,
    seed: int = DEFAULT_SEED,
    polish: int = 3,
    exact: bool = True,
) -> ThetaResult:
    """k-order Ricci curvature at the point.

    For ``k == n`` the plane is the whole tangent space, ``Ric_L`` is the Ricci
    quadratic form and the minimum is its smallest eigenvalue (``EigenExact``;
    pass ``exact=False`` to force the search). Otherwise ``starts`` seeded
    points on the sphere are driven to local minima by batched block descent,
    and the best ``polish`` distinct results are refined by a derivative-free
    simplex search that copes with eigenvalue crossings.
    """
    _check_k(shape, k)
    n = shape.n
    if exact and k == n:
        w, V = np.linalg.eigh(ricci_matrix(shape, ambient))
        X = _fold(V[:, :1].T)[0]
        frame = np.vstack([X, complement_basis(X).T])
        return ThetaResult(k, float(w[0]) / (n - 1), X, frame, EIGEN_EXACT, 0)

    obj = SphereObjective(shape, ambient, k)
    rng = np.random.default_rng(seed)
    X0 = _fold(_unit_rows(rng.standard_normal((starts, n))))
    X, f, w = _block_descent(obj, X0)

    best_x, best_f = None, np.inf
    for i in range(min(max(polish, 1), len(f))):
        x, val = X[i], f[i]
        # the descent is exact where the objective is smooth; only a crossing
        # of the (k-1)-th and k-th eigenvalues can leave it on a kink
        gap = w[i, k - 1] - w[i, k - 2]
        if polish > 0 and gap <= KINK_GAP * (1.0 + abs(w[i, k - 1])):
            px, pval = _polish(obj, x)
            if pval < val:
                x, val = px, pval
        x = _fold(x[None, :])[0]
        if val < best_f or (val == best_f and tuple(x) < tuple(best_x)):
            best_x, best_f = x, val
    return _result_from_X(shape, ambient, best_x, k, MULTI_START, starts)


def _sphere_points(n, count, seed=0):
    """Deterministic quasi-uniform points on ``S^{n-1}`` (Halton -> Gaussian -> normalise)."""
    u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    return _fold(_unit_rows(norm.ppf(u)))


def theta_k_bruteforce(
    shape: ShapeOperatorSet,
    ambient: AmbientForm,
    k: int,
    resolution: int = DEFAULT_RESOLUTION,
    refine_top: int = 8,
    min_radius: float = 1e-9,
) -> float:
    """Sampling oracle for ``theta_k``.

    Evaluates the inner minimum at ``resolution`` quasi-uniform sphere points,
    then re-samples shrinking tangent balls around the ``refine_top`` best
    distinct points until the ball radius drops below ``min_radius``. Only
    objective values are compared; every sampled value is attained, so the
    result never undercuts the true minimum.
    """
    if resolution < 100:
        raise ValueError(f"resolution must be >= 100, got {resolution}")
    _check_k(shape, k)
    n = shape.n
    obj = SphereObjective(shape, ambient, k)
    pts = _sphere_points(n, resolution)
    vals = np.concatenate([obj.values(chunk) for chunk in np.array_split(pts, max(1, resolution // 4096))])

    order = np.argsort(vals, kind="stable")
    centers = []
    for i in order:
        if all(abs(pts[i] @ pts[j]) < 1 - 1e-6 for j in centers):
            centers.append(i)
        if len(centers) == refine_top:
            break
    C = pts[centers]
    fC = vals[centers]

    # ball offsets in R^{n-1}; fixed pattern of axis moves plus quasi-random directions
    dirs = np.vstack([np.eye(n - 1), -np.eye(n - 1), 2 * qmc.Halton(d=n - 1, scramble=False).random(49)[1:] - 1])
    radius = np.full(len(C), 2.0 * (4.0 / resolution) ** (1.0 / (n - 1)))
    while np.any(radius >= min_radius):
        active = np.flatnonzero(radius >= min_radius)
        for j in active:
            T = complement_basis(C[j])
            trial = _unit_rows(C[j] + radius[j] * dirs @ T.T)
            tv = obj.values(trial)
            b = int(np.argmin(tv))
            if tv[b] < fC[j]:
                C[j], fC[j] = trial[b], tv[b]
            else:
                radius[j] *= 0.5
    return float(min(vals.min(), fC.min())) / (k - 1)


@dataclass(frozen=True)
class DeltaResult:
    tau: float
    theta: ThetaResult
    delta: float


def delta_k(shape: ShapeOperatorSet, ambient: AmbientForm, k: int, **theta_kw) -> DeltaResult:
    """``delta_k = tau - theta_k``."""
    tau = scalar_curvature(shape, ambient)
    th = theta_k(shape, ambient, k, **theta_kw)
    return DeltaResult(tau, th, tau - th.theta)
