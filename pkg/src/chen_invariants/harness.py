"""Report builders behind the command line.

Every ``cmd_*`` function returns ``(report, exit_code)`` where ``report`` is a
JSON-ready dict. Exit codes:

    0  success
    1  a mathematical check failed (bound violation, failed self-check)
    2  input error (schema, symmetry, bad parameter)
    3  configuration inconsistency (bound kind vs ambient vs shape type)

Nothing here reads the clock unless asked to, so the same arguments always
give the same bytes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, grassmann, qp
from .curvature import scalar_curvature
from .errors import DegenerateQP, InconsistentKindError, ShapeValidationError
from .shapes import (
    REAL,
    AmbientForm,
    LagrangianShape,
    ShapeOperatorSet,
    check_lagrangian_symmetry,
    mean_curvature,
    random_lagrangian_shape,
    random_shape,
    rotate_tangent_frame,
    shape_to_document,
)

__all__ = [
    "EXIT_OK",
    "EXIT_VIOLATION",
    "EXIT_INPUT",
    "EXIT_INCONSISTENT",
    "ENV_HOLDS_TOL",
    "ENV_EQUALITY_TOL",
    "CLI_KINDS",
    "InputError",
    "check_seed",
    "Tolerances",
    "SweepConfig",
    "sample_rng",
    "sweep_sample",
    "run_sweep",
    "cmd_compute",
    "cmd_sweep",
    "cmd_qp",
    "cmd_equality",
    "cmd_sample",
    "cmd_selfcheck",
]

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_INCONSISTENT = 3

ENV_HOLDS_TOL = "CHEN_INVARIANTS_HOLDS_TOL"
ENV_EQUALITY_TOL = "CHEN_INVARIANTS_EQUALITY_TOL"

KIND_REAL = "real"
KIND_TOTALLY_REAL = "totally-real"
KIND_LAGRANGIAN = "lagrangian"
CLI_KINDS = (KIND_REAL, KIND_TOTALLY_REAL, KIND_LAGRANGIAN)

MAX_SEED = 2**64 - 1


class InputError(ValueError):
    """Bad command-line parameter; maps to exit code 2."""


@dataclass(frozen=True)
class Tolerances:
    holds: float = bounds.HOLDS_TOL
    equality: float = bounds.EQUALITY_TOL

    @classmethod
    def from_env(cls, env=None):
        env = os.environ if env is None else env
        vals = {}
        for name, attr in ((ENV_HOLDS_TOL, "holds"), (ENV_EQUALITY_TOL, "equality")):
            raw = env.get(name)
            if raw is None or raw == "":
                continue
            try:
                v = float(raw)
            except ValueError:
                raise InputError(f"{name}={raw!r} is not a number") from None
            if not (math.isfinite(v) and v >= 0):
                raise InputError(f"{name} must be a finite non-negative number")
            vals[attr] = v
        return cls(**vals)

    def to_document(self):
        return {"holds": self.holds, "equality": self.equality}


def check_seed(seed):
    if not (isinstance(seed, int) and 0 <= seed <= MAX_SEED):
        raise InputError(f"seed must be an integer in [0, 2^64 - 1], got {seed!r}")
    return seed


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Generator keyed by ``(seed, index)``; independent of evaluation order."""
    return np.random.default_rng([check_seed(seed), index])


# --------------------------------------------------------------------------
# compute
# --------------------------------------------------------------------------


def _bound_kinds(cli_kind, k, n):
    if cli_kind == KIND_REAL:
        return [bounds.REAL_FORM]
    if cli_kind == KIND_TOTALLY_REAL:
        return [bounds.TOTALLY_REAL]
    return [bounds.TOTALLY_REAL, bounds.LAGRANGIAN_ORDER_N] if k == n else [bounds.TOTALLY_REAL]


def default_kind(ambient: AmbientForm) -> str:
    return KIND_REAL if ambient.kind == REAL else KIND_TOTALLY_REAL


def cmd_compute(shape: ShapeOperatorSet, ambient: AmbientForm, ks=None, kind=None, tols=None, starts=None):
    """tau, H, theta_k, delta_k and every applicable verdict for one shape.

    Bounds are evaluated for ``k >= 3`` only; ``k = 2`` gets theta and delta.
    """
    tols = tols or Tolerances()
    kind = kind or default_kind(ambient)
    if kind not in CLI_KINDS:
        raise InputError(f"unknown kind {kind!r}")
    n = shape.n
    ks = list(range(3, n + 1)) if ks is None else list(ks)
    for k in ks:
        if not 2 <= k <= n:
            raise InputError(f"k={k} outside [2, {n}]")
    if kind == KIND_LAGRANGIAN and not isinstance(shape, LagrangianShape):
        try:
            shape = LagrangianShape(shape.h)
        except ShapeValidationError as exc:
            raise InconsistentKindError(f"lagrangian kind needs fully symmetric h: {exc}") from None
    theta_kw = {} if starts is None else {"starts": starts}

    H = mean_curvature(shape)
    per_k = []
    violated = False
    for k in ks:
        d = grassmann.delta_k(shape, ambient, k, **theta_kw)
        entry = {
            "k": k,
            "theta": d.theta.theta,
            "theta_method": d.theta.method,
            "argmin_X": d.theta.argmin_X.tolist(),
            "delta": d.delta,
            "verdicts": [],
        }
        if k >= 3:
            for bk in _bound_kinds(kind, k, n):
                v = bounds.verify(shape, ambient, k, bk, tol=tols.holds, eq_tol=tols.equality, **theta_kw)
                violated |= not v.holds
                entry["verdicts"].append(bounds.verdict_to_document(v))
        per_k.append(entry)
    det = bounds.equality_shape_detect(shape)
    report = {
        "command": "compute",
        "kind": kind,
        "n": n,
        "p": shape.p,
        "ambient": {"kind": ambient.kind, "c": ambient.c, "effective_constant": ambient.effective_constant},
        "tau": scalar_curvature(shape, ambient),
        "H": H.components.tolist(),
        "H_sq": H.norm_sq,
        "results": per_k,
        "equality_form": {
            "found": det.found,
            "direction": None if det.direction is None else det.direction.tolist(),
            "a": None if det.a is None else det.a.tolist(),
        },
        "tolerances": tols.to_document(),
    }
    return report, EXIT_VIOLATION if violated else EXIT_OK


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    kind: str
    ns: tuple
    ps: tuple
    count: int
    seed: int
    scale: float = 1.0
    starts: int = grassmann.DEFAULT_STARTS
    tols: Tolerances = field(default_factory=Tolerances)

    def validate(self):
        if self.kind not in CLI_KINDS:
            raise InputError(f"unknown kind {self.kind!r}")
        if self.count < 0:
            raise InputError("count must be >= 0")
        if not self.ns or any(n < 3 for n in self.ns):
            raise InputError("every n must be >= 3")
        if self.kind != KIND_LAGRANGIAN and (not self.ps or any(p < 1 for p in self.ps)):
            raise InputError("every p must be >= 1")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InputError("scale must be positive")
        if self.starts < 1:
            raise InputError("starts must be >= 1")
        check_seed(self.seed)


def sweep_sample(cfg: SweepConfig, index: int):
    """The ``index``-th random ``(shape, ambient)`` of a sweep."""
    rng = sample_rng(cfg.seed, index)
    n = int(cfg.ns[rng.integers(len(cfg.ns))])
    c = float(rng.uniform(-1.0, 1.0))
    if cfg.kind == KIND_LAGRANGIAN:
        return random_lagrangian_shape(rng, n, cfg.scale), AmbientForm.complex(c, 2 * n)
    p = int(cfg.ps[rng.integers(len(cfg.ps))])
    shape = random_shape(rng, n, p, cfg.scale)
    if cfg.kind == KIND_REAL:
        return shape, AmbientForm.real(c, n + p)
    m = max(2 * n, n + p + (n + p) % 2)
    return shape, AmbientForm.complex(c, m)


def _sweep_kinds(kind, n):
    if kind == KIND_REAL:
        return [(k, bounds.REAL_FORM) for k in range(3, n + 1)]
    if kind == KIND_TOTALLY_REAL:
        return [(k, bounds.TOTALLY_REAL) for k in range(3, n + 1)]
    return [(n, bounds.LAGRANGIAN_ORDER_N)]


def _sweep_one(args):
    cfg, index = args
    shape, ambient = sweep_sample(cfg, index)
    rows = []
    for k, bk in _sweep_kinds(cfg.kind, shape.n):
        v = bounds.verify(shape, ambient, k, bk, tol=cfg.tols.holds, eq_tol=cfg.tols.equality, starts=cfg.starts)
        row = {"sample": index, "k": k, "bound_kind": bk, "delta": v.delta, "bound": v.bound, "slack": v.slack}
        if not v.holds:
            row["shape"] = shape_to_document(shape, ambient)
        rows.append(row)
    return rows


def run_sweep(cfg: SweepConfig, workers: int = 1):
    """All verdict rows of a sweep, in sample order regardless of ``workers``."""
    cfg.validate()
    if workers < 1:
        raise InputError("workers must be >= 1")
    jobs = [(cfg, i) for i in range(cfg.count)]
    if workers == 1 or cfg.count < 2:
        chunks = map(_sweep_one, jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_sweep_one, jobs, chunksize=max(1, cfg.count // (8 * workers))))
    return [row for rows in chunks for row in rows]


def cmd_sweep(cfg: SweepConfig, workers: int = 1, timing: bool = False):
    """Aggregate a sweep into a report; exit 1 when any verdict fails."""
    t0 = time.perf_counter()
    rows = run_sweep(cfg, workers)
    violations = [r for r in rows if r["slack"] < -cfg.tols.holds]
    per_k = {}
    for r in rows:
        per_k.setdefault(r["k"], []).append(r["slack"])
    worst = min(rows, key=lambda r: (r["slack"], r["sample"], r["k"])) if rows else None
    report = {
        "command": "sweep",
        "kind": cfg.kind,
        "samples": cfg.count,
        "seed": cfg.seed,
        "n": list(cfg.ns),
        "p": list(cfg.ps) if cfg.kind != KIND_LAGRANGIAN else None,
        "scale": cfg.scale,
        "starts": cfg.starts,
        "kinds_tested": sorted({r["bound_kind"] for r in rows}),
        "verdicts": len(rows),
        "min_slack": None if worst is None else worst["slack"],
        "min_slack_at": None if worst is None else {"sample": worst["sample"], "k": worst["k"]},
        "violations": violations,
        "per_k": {
            str(k): {"count": len(s), "mean_slack": math.fsum(s) / len(s), "min_slack": min(s)}
            for k, s in sorted(per_k.items())
        },
        "tolerances": cfg.tols.to_document(),
    }
    if timing:
        report["wall_time"] = time.perf_counter() - t0
    return report, EXIT_VIOLATION if violations else EXIT_OK


# --------------------------------------------------------------------------
# qp
# --------------------------------------------------------------------------

QP_METHODS = ("closed", "kkt", "oracle", "all")
KKT_AGREE_TOL = 1e-10
ORACLE_AGREE_TOL = 1e-6


def cmd_qp(problem: qp.TraceConstrainedQP, method: str = "all", starts: int = 8, seed: int = 0):
    if method not in QP_METHODS:
        raise InputError(f"method must be one of {QP_METHODS}")
    solvers = {
        "closed": qp.solve_closed_form,
        "kkt": qp.solve_kkt,
        "oracle": lambda q: qp.numeric_max_oracle(q, starts=starts, seed=seed),
    }
    names = ["closed", "kkt", "oracle"] if method == "all" else [method]
    if starts < 8:
        raise InputError("oracle starts must be >= 8")
    sols = {}
    try:
        for name in names:
            sols[name] = solvers[name](problem)
    except DegenerateQP as exc:
        raise InputError(f"{exc}") from None
    report = {
        "command": "qp",
        "qp": qp.qp_to_document(problem),
        "solutions": [qp.solution_to_document(s) for s in sols.values()],
    }
    ok = True
    if method == "all":
        ref = sols["closed"].max_value
        kkt_gap = abs(sols["kkt"].max_value - ref)
        oracle_gap = abs(sols["oracle"].max_value - ref)
        agree = kkt_gap <= KKT_AGREE_TOL * max(1.0, abs(ref)) and oracle_gap <= ORACLE_AGREE_TOL * max(1.0, abs(ref))
        report["agreement"] = {"kkt_gap": kkt_gap, "oracle_gap": oracle_gap, "agree": agree}
        ok = agree
    return report, EXIT_OK if ok else EXIT_VIOLATION


# --------------------------------------------------------------------------
# equality
# --------------------------------------------------------------------------


def cmd_equality(n: int, p: int, a, c: float = 0.0, rotate_seed=None, tols=None):
    """Build the extremal Weingarten form, verify equality for every k >= 3 and detect it back."""
    tols = tols or Tolerances()
    if n < 3 or p < 1:
        raise InputError("need n >= 3 and p >= 1")
    a = np.asarray(a, dtype=float).reshape(-1)
    if len(a) != p:
        raise InputError(f"expected {p} values for a, got {len(a)}")
    shape = bounds.equality_case_generate(n, p, a)
    expected = np.eye(n)[0]
    if rotate_seed is not None:
        from scipy.stats import special_ortho_group

        Q = special_ortho_group.rvs(n, random_state=np.random.default_rng(check_seed(rotate_seed)))
        shape = rotate_tangent_frame(shape, Q)
        expected = Q.T @ expected
    ambient = AmbientForm.real(c, n + p)
    verdicts = [bounds.verify(shape, ambient, k, bounds.REAL_FORM, tol=tols.holds, eq_tol=tols.equality) for k in range(3, n + 1)]
    det = bounds.equality_shape_detect(shape)
    recovered = bool(det.found and abs(abs(det.direction @ expected) - 1.0) <= 1e-8)
    ok = recovered and all(v.equality for v in verdicts)
    report = {
        "command": "equality",
        "n": n,
        "p": p,
        "a": a.tolist(),
        "c": c,
        "rotated": rotate_seed is not None,
        "shape": shape_to_document(shape, ambient),
        "verdicts": [bounds.verdict_to_document(v) for v in verdicts],
        "detected": det.found,
        "direction": None if det.direction is None else det.direction.tolist(),
        "expected_direction": expected.tolist(),
        "direction_recovered": recovered,
        "tolerances": tols.to_document(),
    }
    return report, EXIT_OK if ok else EXIT_VIOLATION


# --------------------------------------------------------------------------
# sample
# --------------------------------------------------------------------------


def cmd_sample(n: int, p=None, seed: int = 0, lagrangian: bool = False, scale: float = 1.0, c: float = 0.0):
    """One seeded shape document (uses ``sample_rng(seed, 0)``)."""
    if n < 3:
        raise InputError("n must be >= 3")
    if not (scale > 0 and math.isfinite(scale)):
        raise InputError("scale must be positive")
    if not math.isfinite(c):
        raise InputError("c must be finite")
    rng = sample_rng(seed, 0)
    if lagrangian:
        if p is not None and p != n:
            raise InputError(f"a Lagrangian shape has p = n = {n}")
        shape = random_lagrangian_shape(rng, n, scale)
        ambient = AmbientForm.complex(c, 2 * n)
    else:
        p = 1 if p is None else p
        if p < 1:
            raise InputError("p must be >= 1")
        shape = random_shape(rng, n, p, scale)
        ambient = AmbientForm.real(c, n + p)
    return shape_to_document(shape, ambient), EXIT_OK


# --------------------------------------------------------------------------
# selfcheck
# --------------------------------------------------------------------------


def _check(name, passed, value, threshold):
    return {"name": name, "passed": bool(passed), "value": value, "threshold": threshold}


def cmd_selfcheck(seed: int = 0, perturb: float = 0.0):
    """Run the analytic identities and a small numerical cross-check suite.

    ``perturb`` is a fault-injection hook added to one Hessian entry inside the
    completed-square identity check.
    """
    check_seed(seed)
    checks = []
    checks.append(_check("factorization_cubic", qp.factorization_check(range(3, 65)), None, None))
    checks.append(
        _check("coefficient_comparison", all(bounds.coefficient_comparison(n) for n in range(3, 10_001)), None, None)
    )

    alpha = max(
        qp.alpha_identity_check(n, k, samples=1000, seed=seed, perturb=perturb)
        for n in range(3, 9)
        for k in range(3, n + 1)
    )
    checks.append(_check("alpha_identity", alpha <= 1e-10, alpha, 1e-10))

    worst_eig = -math.inf
    for n in range(3, 17):
        forms = [qp.build_fr_real(n, k) for k in range(3, n + 1)]
        forms += [qp.build_f1_lagrangian(n)] + [qp.build_fr_lagrangian(n, r) for r in range(2, n + 1)]
        worst_eig = max(worst_eig, max(float(qp.restricted_hessian(f)[-1]) for f in forms))
    checks.append(_check("restricted_hessian_negative", worst_eig < 0, worst_eig, 0.0))

    rng = np.random.default_rng([seed, 1])
    kkt_gap = oracle_gap = 0.0
    for label in (qp.FR_REAL, qp.F1_LAGRANGIAN, qp.FR_LAGRANGIAN):
        for _ in range(4):
            n = int(rng.integers(3, 7))
            t = float(rng.uniform(-5, 5))
            problem = qp.build_qp(
                label,
                n,
                t,
                k_order=int(rng.integers(3, n + 1)) if label == qp.FR_REAL else None,
                r=int(rng.integers(2, n + 1)) if label == qp.FR_LAGRANGIAN else None,
            )
            ref = qp.solve_closed_form(problem).max_value
            kkt_gap = max(kkt_gap, abs(qp.solve_kkt(problem).max_value - ref))
            oracle_gap = max(oracle_gap, abs(qp.numeric_max_oracle(problem, seed=seed).max_value - ref))
    checks.append(_check("qp_closed_vs_kkt", kkt_gap <= 1e-10, kkt_gap, 1e-10))
    checks.append(_check("qp_closed_vs_oracle", oracle_gap <= 1e-6, oracle_gap, 1e-6))

    assembly = 0.0
    for n in range(3, 9):
        for p in (1, 2, 3):
            Hr = rng.uniform(-1, 1, size=p)
            total = sum(qp.solve_closed_form(qp.build_fr_real(n, 3, n * h)).max_value for h in Hr)
            part = bounds.bound_real(n, 0.0, float(Hr @ Hr))
            assembly = max(assembly, abs(total - part))
    checks.append(_check("bound_assembly", assembly <= 1e-12, assembly, 1e-12))

    gauss = -math.inf
    for _ in range(20):
        n = int(rng.integers(3, 7))
        shape = random_shape(rng, n, int(rng.integers(1, 4)))
        gauss = max(gauss, qp.gauss_decomposition_residual(shape, AmbientForm.real(rng.uniform(-1, 1)), int(rng.integers(3, n + 1))))
        lag = random_lagrangian_shape(rng, n)
        gauss = max(gauss, qp.lagrangian_decomposition_residual(lag, AmbientForm.complex(rng.uniform(-1, 1))))
    checks.append(_check("gauss_decomposition_nonpositive", gauss <= 1e-10, gauss, 1e-10))

    eq_slack = 0.0
    for n in (3, 4, 5):
        p = int(rng.integers(1, 4))
        shape = bounds.equality_case_generate(n, p, rng.uniform(-2, 2, size=p))
        amb = AmbientForm.real(float(rng.uniform(-1, 1)))
        for k in range(3, n + 1):
            eq_slack = max(eq_slack, abs(bounds.verify(shape, amb, k).slack))
    checks.append(_check("equality_case_slack", eq_slack <= 1e-8, eq_slack, 1e-8))

    gap = 0.0
    for n in (3, 4):
        shape = random_shape(rng, n, 2)
        amb = AmbientForm.real(0.0)
        for k in range(2, n):
            gap = max(gap, abs(grassmann.theta_k(shape, amb, k).theta - grassmann.theta_k_bruteforce(shape, amb, k)))
    checks.append(_check("theta_vs_bruteforce", gap <= 1e-4, gap, 1e-4))

    lag = random_lagrangian_shape(rng, 4)
    sym = check_lagrangian_symmetry(lag)
    checks.append(_check("lagrangian_symmetry", sym.ok, sym.violation, 1e-12))

    passed = all(c["passed"] for c in checks)
    report = {"command": "selfcheck", "seed": seed, "perturb": perturb, "checks": checks, "passed": passed}
    return report, EXIT_OK if passed else EXIT_VIOLATION

