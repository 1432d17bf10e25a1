"""Pointwise submanifold data: shape operators, ambient forms and frame changes.

Indices of normal directions are 1-based in the public API (``r = 1..p``);
arrays are stored 0-based as ``h[r - 1, i, j]``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import FrameError, ShapeValidationError

__all__ = [
    "REAL",
    "COMPLEX",
    "ORTHO_TOL",
    "AmbientForm",
    "ShapeOperatorSet",
    "LagrangianShape",
    "MeanCurvatureRecord",
    "SymmetryReport",
    "mean_curvature",
    "weingarten",
    "rotate_tangent_frame",
    "rotate_normal_frame",
    "check_lagrangian_symmetry",
    "symmetrize_tensor",
    "random_shape",
    "random_lagrangian_shape",
    "shape_from_document",
    "shape_to_document",
    "load_shape",
    "dump_shape",
]

REAL = "real"
COMPLEX = "complex"

ORTHO_TOL = 1e-10
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class AmbientForm:
    """Real space form of curvature ``c`` or complex space form of
    holomorphic sectional curvature ``c``.

    Submanifolds of a complex space form are assumed totally real, so the
    tangential curvature is that of a real space form with constant ``c/4``.
    """

    kind: str
    c: float
    ambient_real_dim: int | None = None

    def __post_init__(self):
        if self.kind not in (REAL, COMPLEX):
            raise ShapeValidationError(f"unknown ambient kind {self.kind!r}")
        if not np.isfinite(self.c):
            raise ShapeValidationError("curvature constant must be finite")
        m = self.ambient_real_dim
        if m is not None:
            if int(m) != m or m < 1:
                raise ShapeValidationError(f"ambient_real_dim must be a positive integer, got {m}")
            if self.kind == COMPLEX and m % 2:
                raise ShapeValidationError("a complex space form has even real dimension")

    @classmethod
    def real(cls, c, ambient_real_dim=None):
        return cls(REAL, float(c), ambient_real_dim)

    @classmethod
    def complex(cls, c, ambient_real_dim=None):
        return cls(COMPLEX, float(c), ambient_real_dim)

    @property
    def effective_constant(self) -> float:
        return self.c if self.kind == REAL else self.c / 4.0

    def check_pairing(self, shape: ShapeOperatorSet) -> None:
        """Raise if the ambient dimension cannot host ``shape``."""
        m = self.ambient_real_dim
        if m is not None and m < shape.n + shape.p:
            raise ShapeValidationError(
                f"ambient_real_dim={m} is too small for n={shape.n}, p={shape.p}"
            )


def _as_shape_array(h) -> np.ndarray:
    arr = np.array(h, dtype=float)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ShapeValidationError(f"h must have shape (p, n, n), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeValidationError("h contains non-finite entries")
    return arr


class ShapeOperatorSet:
    """Second fundamental form at a point, as ``p`` symmetric ``n x n`` matrices.

    Parameters
    ----------
    h : array_like, shape (p, n, n)
        ``h[r - 1]`` is the Weingarten matrix of the r-th normal direction.

    Raises
    ------
    ShapeValidationError
        If dimensions are wrong or some ``h[r]`` is not symmetric. The message
        names the first offending ``(r, i, j)`` in 1-based indices.
    """

    __slots__ = ("_h",)

    def __init__(self, h):
        arr = _as_shape_array(h)
        p, n, _ = arr.shape
        if n < 3:
            raise ShapeValidationError(f"tangent dimension must be >= 3, got {n}")
        if p < 1:
            raise ShapeValidationError("codimension must be >= 1")
        gap = np.abs(arr - arr.transpose(0, 2, 1))
        scale = max(1.0, float(np.abs(arr).max()))
        if gap.max() > SYMMETRY_TOL * scale:
            r, i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
            raise ShapeValidationError(
                f"h is not symmetric at (r={r + 1}, i={i + 1}, j={j + 1}): "
                f"{float(arr[r, i, j])!r} != {float(arr[r, j, i])!r}"
            )
        # exact symmetry from here on
        arr = 0.5 * (arr + arr.transpose(0, 2, 1))
        arr.setflags(write=False)
        self._h = arr

    @property
    def h(self) -> np.ndarray:
        return self._h

    @property
    def n(self) -> int:
        return self._h.shape[1]

    @property
    def p(self) -> int:
        return self._h.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, p={self.p})"

    def __eq__(self, other):
        if not isinstance(other, ShapeOperatorSet):
            return NotImplemented
        return self._h.shape == other._h.shape and bool(np.array_equal(self._h, other._h))

    __hash__ = None

    def allclose(self, other: ShapeOperatorSet, atol=1e-12) -> bool:
        return self._h.shape == other.h.shape and bool(np.allclose(self._h, other.h, rtol=0, atol=atol))


class SymmetryReport(NamedTuple):
    ok: bool
    violation: float


def check_lagrangian_symmetry(shape, tol=SYMMETRY_TOL) -> SymmetryReport:
    """Check that ``h[i][j][k]`` is invariant under every index permutation.

    Accepts a :class:`ShapeOperatorSet` with ``p == n`` or a raw ``(n, n, n)``
    array, so that non-symmetric candidates can be inspected.
    """
    arr = shape.h if isinstance(shape, ShapeOperatorSet) else np.asarray(shape, dtype=float)
    if arr.ndim != 3 or len(set(arr.shape)) != 1:
        raise ShapeValidationError(f"Lagrangian data needs shape (n, n, n), got {arr.shape}")
    violation = 0.0
    for perm in itertools.permutations(range(3)):
        violation = max(violation, float(np.abs(arr - arr.transpose(perm)).max()))
    return SymmetryReport(violation <= tol, violation)


class LagrangianShape(ShapeOperatorSet):
    """Shape data of a Lagrangian submanifold in the frame ``{J e_1, ..., J e_n}``.

    ``h[i][j][k]`` is the ``J e_i`` component of ``h(e_j, e_k)`` and is fully
    symmetric in its three indices.
    """

    __slots__ = ()

    def __init__(self, h):
        arr = _as_shape_array(h)
        report = check_lagrangian_symmetry(arr, tol=SYMMETRY_TOL * max(1.0, float(np.abs(arr).max())))
        if not report.ok:
            raise ShapeValidationError(
                f"Lagrangian h is not fully symmetric (max violation {report.violation:.3e})"
            )
        super().__init__(symmetrize_tensor(arr))


def symmetrize_tensor(t) -> np.ndarray:
    """Average a cubic ``(n, n, n)`` array over all six index permutations."""
    t = np.asarray(t, dtype=float)
    avg = sum(t.transpose(perm) for perm in itertools.permutations(range(3))) / 6.0
    # read every entry from its sorted index triple so that symmetry is exact
    n = t.shape[0]
    i, j, k = np.sort(np.indices((n, n, n)).reshape(3, -1), axis=0)
    return avg[i, j, k].reshape(n, n, n)


@dataclass(frozen=True)
class MeanCurvatureRecord:
    components: np.ndarray
    norm_sq: float


def mean_curvature(shape: ShapeOperatorSet) -> MeanCurvatureRecord:
    """Components ``H^r = trace(A_r) / n`` and ``|H|^2``."""
    comps = np.trace(shape.h, axis1=1, axis2=2) / shape.n
    comps.setflags(write=False)
    return MeanCurvatureRecord(comps, float(np.dot(comps, comps)))


def weingarten(shape: ShapeOperatorSet, r: int) -> np.ndarray:
    """Return ``A_r`` for the 1-based normal index ``r``."""
    if not 1 <= r <= shape.p:
        raise IndexError(f"normal index r={r} outside 1..{shape.p}")
    return shape.h[r - 1].copy()


def _check_orthogonal(Q, size, name):
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (size, size):
        raise FrameError(f"{name} must be {size}x{size}, got {Q.shape}")
    err = np.abs(Q.T @ Q - np.eye(size)).max()
    if err > ORTHO_TOL:
        raise FrameError(f"{name} is not orthogonal (max |Q^T Q - I| = {err:.3e})")
    return Q


def _rebuild(shape, arr):
    # frame changes do not preserve the Lagrangian normal frame {J e_i}
    # unless the same rotation is used on both sides; return the plain type
    return ShapeOperatorSet(0.5 * (arr + arr.transpose(0, 2, 1)))


def rotate_tangent_frame(shape: ShapeOperatorSet, Q) -> ShapeOperatorSet:
    """Express ``shape`` in the tangent frame ``e'_j = sum_i Q[i, j] e_i``.

    Every ``A_r`` becomes ``Q^T A_r Q``.
    """
    Q = _check_orthogonal(Q, shape.n, "Q")
    return _rebuild(shape, np.einsum("ia,rij,jb->rab", Q, shape.h, Q))


def rotate_normal_frame(shape: ShapeOperatorSet, O) -> ShapeOperatorSet:
    """Mix normal directions: ``A'_r = sum_s O[r, s] A_s``."""
    O = _check_orthogonal(O, shape.p, "O")
    return _rebuild(shape, np.einsum("rs,sij->rij", O, shape.h))


def random_shape(rng: np.random.Generator, n: int, p: int, scale: float = 1.0) -> ShapeOperatorSet:
    """Symmetric matrices with upper-triangle entries uniform in ``[-scale, scale]``."""
    raw = rng.uniform(-scale, scale, size=(p, n, n))
    upper = np.triu(raw)
    return ShapeOperatorSet(upper + np.triu(raw, 1).transpose(0, 2, 1))


def random_lagrangian_shape(rng: np.random.Generator, n: int, scale: float = 1.0) -> LagrangianShape:
    """Fully symmetric cubic form from an i.i.d. uniform tensor."""
    return LagrangianShape(symmetrize_tensor(rng.uniform(-scale, scale, size=(n, n, n))))


# --------------------------------------------------------------------------
# JSON shape documents
# --------------------------------------------------------------------------

_KIND_ALIASES = {"real": REAL, "complex": COMPLEX}


def shape_from_document(doc, lagrangian=False):
    """Parse ``{"n", "p", "ambient": {...}, "h"}`` into ``(shape, ambient)``.

    Raises
    ------
    ShapeValidationError
        On any schema, dimension or symmetry problem.
    """
    if not isinstance(doc, dict):
        raise ShapeValidationError("shape document must be a JSON object")
    for key in ("n", "p", "ambient", "h"):
        if key not in doc:
            raise ShapeValidationError(f"shape document is missing {key!r}")
    n, p = doc["n"], doc["p"]
    if not (isinstance(n, int) and isinstance(p, int)) or isinstance(n, bool) or isinstance(p, bool):
        raise ShapeValidationError("n and p must be integers")
    amb = doc["ambient"]
    if not isinstance(amb, dict) or "kind" not in amb or "c" not in amb:
        raise ShapeValidationError("ambient must be an object with 'kind' and 'c'")
    kind = _KIND_ALIASES.get(amb["kind"])
    if kind is None:
        raise ShapeValidationError(f"ambient kind must be 'real' or 'complex', got {amb['kind']!r}")
    if not isinstance(amb["c"], (int, float)) or isinstance(amb["c"], bool):
        raise ShapeValidationError("ambient c must be a number")
    ambient = AmbientForm(kind, float(amb["c"]), amb.get("ambient_real_dim"))

    try:
        arr = np.array(doc["h"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ShapeValidationError(f"h is not a rectangular numeric array: {exc}") from None
    if arr.shape != (p, n, n):
        raise ShapeValidationError(f"h has shape {arr.shape}, expected {(p, n, n)}")
    shape = LagrangianShape(arr) if lagrangian else ShapeOperatorSet(arr)
    ambient.check_pairing(shape)
    return shape, ambient


def shape_to_document(shape: ShapeOperatorSet, ambient: AmbientForm) -> dict:
    amb = {"kind": ambient.kind, "c": ambient.c}
    if ambient.ambient_real_dim is not None:
        amb["ambient_real_dim"] = ambient.ambient_real_dim
    return {"n": shape.n, "p": shape.p, "ambient": amb, "h": shape.h.tolist()}


def load_shape(path, lagrangian=False):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ShapeValidationError(f"{path}: invalid JSON ({exc})") from None
    return shape_from_document(doc, lagrangian=lagrangian)


def dump_shape(shape: ShapeOperatorSet, ambient: AmbientForm, path=None) -> str:
    text = json.dumps(shape_to_document(shape, ambient))
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
