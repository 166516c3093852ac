"""D-optimal approximate designs by multiplicative weight ascent.

The iteration w_x <- w_x * d(x) / p, with d(x) the sensitivity
lambda(x) f(x)^T M(w)^{-1} f(x), has the D-optimal designs as its fixed
points and never decreases log det M.  Convergence is declared through
the equivalence theorem: stop when max_x d(x) <= p (1 + tol).

Weights falling below a pruning threshold are removed and the rest
renormalized; a prune that would make the information matrix singular is
rolled back and the threshold halved, so rank is never lost.  The
iteration itself is deterministic (uniform seed design, no randomness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import (
    MonotonicityError,
    NoBracket,
    NumericalCheckError,
    SingularInformation,
)
from .model import Design, InteractionModel, ParameterVector, _check_model, regression_matrix


class DesignStructure(Enum):
    UNIFORM = "uniform"
    CORNER = "corner"
    SATURATED_OTHER = "saturated-other"
    INTERIOR = "interior"


@dataclass(frozen=True)
class OptimizerConfig:
    """Iteration limits and tolerances of the multiplicative ascent."""

    max_iterations: int = 200_000
    kw_tolerance: float = 1e-7
    prune_threshold: float = 1e-8
    seed_design: Design | None = None

    def __post_init__(self) -> None:
        if self.kw_tolerance <= 0:
            raise ValueError("kw_tolerance must be positive")
        if not 0 <= self.prune_threshold <= 1e-6:
            raise ValueError("prune_threshold must lie in [0, 1e-6]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True, eq=False)
class OptimizerResult:
    design: Design
    iterations: int
    final_kw_max: float
    log_det: float
    structure: DesignStructure
    converged: bool
    #: log det per evaluated iterate (ascending within each support segment).
    log_det_trace: np.ndarray = field(repr=False)
    #: trace indices after which the support changed (prunes, artifact drops).
    prune_iterations: tuple[int, ...]
    support_size: int
    caratheodory_ok: bool


def caratheodory_bound(m: InteractionModel) -> int:
    """Support size p(p-1)/2 + 1 that always suffices for any information matrix."""
    return m.p * (m.p - 1) // 2 + 1


def classify_structure(
    w: Design, m: InteractionModel, tol: float = 1e-6
) -> DesignStructure:
    """Uniform / corner / other-saturated / interior, by support and weights."""
    support = set(w.support)
    n = 1 << m.k
    if len(support) == n and all(
        abs(v - 1.0 / n) <= tol for v in w.weights.values()
    ):
        return DesignStructure.UNIFORM
    corner = {x for x in m.settings() if x.bit_count() <= m.d}
    if support == corner and all(
        abs(v - 1.0 / m.p) <= tol for v in w.weights.values()
    ):
        return DesignStructure.CORNER
    if len(support) == m.p:
        return DesignStructure.SATURATED_OTHER
    return DesignStructure.INTERIOR


def _evaluate(w, rows, lam):
    """log det of M(w) and the sensitivity at every setting."""
    factor = cho_factor(_symmetric_information(w, rows, lam), lower=True)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    solved = cho_solve(factor, rows.T)
    d = lam * np.einsum("ij,ji->i", rows, solved)
    return log_det, d


def optimize_design(
    theta: ParameterVector,
    m: InteractionModel,
    cfg: OptimizerConfig | None = None,
) -> OptimizerResult:
    """Run the multiplicative ascent from the seed design (uniform by default).

    Raises ``SingularInformation`` when the seed design's information
    matrix does not span, and ``MonotonicityError`` if log det ever
    decreases across multiplicative steps (a broken-sensitivity symptom).
    A run that exhausts ``max_iterations`` returns the best iterate with
    ``converged=False``.
    """
    _check_model(theta, m)
    cfg = cfg or OptimizerConfig()
    n = 1 << m.k
    p = float(m.p)
    rows = regression_matrix(m).astype(float)
    lam = np.exp(rows @ theta.values)

    w = np.zeros(n)
    if cfg.seed_design is None:
        w[:] = 1.0 / n
    else:
        if cfg.seed_design.k != m.k:
            raise ValueError("seed design does not match the model's rule count")
        for mask, value in cfg.seed_design.weights.items():
            w[mask] = value

    prune_threshold = cfg.prune_threshold
    trace: list[float] = []
    prunes: list[int] = []
    last_log_det: float | None = None
    converged = False
    kw_max = math.inf
    log_det = -math.inf
    iterations = 0

    for iterations in range(cfg.max_iterations + 1):
        try:
            log_det, d = _evaluate(w, rows, lam)
        except LinAlgError as exc:
            raise SingularInformation(
                "information matrix of the current iterate is singular"
            ) from exc
        trace.append(log_det)
        if last_log_det is not None and log_det < last_log_det - 1e-12 * max(
            1.0, abs(last_log_det)
        ):
            raise MonotonicityError(
                f"log det fell from {last_log_det!r} to {log_det!r} "
                f"at iteration {iterations}"
            )
        last_log_det = log_det

        mean_d = float(w @ d)
        if abs(mean_d - p) > 1e-9 * p:
            raise NumericalCheckError(
                f"sum of w_x d(x) = {mean_d!r} deviates from p = {p} "
                f"at iteration {iterations}"
            )

        kw_max = float(np.max(d))
        if kw_max <= p * (1.0 + cfg.kw_tolerance):
            converged = True
            w, cleaned_log_det, cleaned_kw_max, changed = _drop_stopping_artifacts(
                w, rows, lam, p, cfg.kw_tolerance, trace, prunes
            )
            if changed:
                log_det, kw_max = cleaned_log_det, cleaned_kw_max
            break
        if iterations == cfg.max_iterations:
            break

        active = w > 0
        w[active] *= d[active] / p
        w /= w.sum()

        # Prune, rolling back (and halving the threshold) if rank would drop.
        while prune_threshold > 0:
            small = (w > 0) & (w < prune_threshold)
            if not small.any():
                break
            trial = w.copy()
            trial[small] = 0.0
            trial /= trial.sum()
            try:
                cho_factor(
                    _symmetric_information(trial, rows, lam), lower=True
                )
            except LinAlgError:
                prune_threshold /= 2.0
                continue
            w = trial
            prunes.append(len(trace) - 1)
            last_log_det = None  # support changed; ascent restarts from here
            break

    design = Design(m.k, {int(x): float(w[x]) for x in np.nonzero(w)[0]})
    support_size = len(design.support)
    return OptimizerResult(
        design=design,
        iterations=iterations,
        final_kw_max=kw_max,
        log_det=log_det,
        structure=classify_structure(design, m, tol=10 * cfg.kw_tolerance),
        converged=converged,
        log_det_trace=np.asarray(trace),
        prune_iterations=tuple(prunes),
        support_size=support_size,
        caratheodory_ok=support_size <= caratheodory_bound(m),
    )


def _drop_stopping_artifacts(w, rows, lam, p, kw_tolerance, trace, prunes):
    """Shed tiny weights left over because the KW criterion fires at
    finite tolerance.

    Each candidate weight is dropped tentatively, the trial design is
    polished with a few multiplicative updates (on a saturated support one
    update restores exactly uniform weights), and the drop is kept only if
    the polished trial still passes the KW criterion.  A support point the
    optimum genuinely needs always fails the re-check and is rolled back,
    so the returned design stays certified at the same tolerance.
    """
    threshold = max(10.0 * kw_tolerance, 0.05 / p)
    candidates = np.nonzero((w > 0) & (w < threshold))[0]
    kw_max = None
    log_det = None
    changed = False
    for idx in sorted(candidates, key=lambda i: w[i]):
        if np.count_nonzero(w) <= 1:
            break
        trial = w.copy()
        trial[idx] = 0.0
        trial /= trial.sum()
        accepted = None
        try:
            for _ in range(5):
                trial_log_det, trial_d = _evaluate(trial, rows, lam)
                trial_max = float(np.max(trial_d))
                if trial_max <= p * (1.0 + kw_tolerance):
                    accepted = (trial_log_det, trial_max)
                    break
                active = trial > 0
                trial[active] *= trial_d[active] / p
                trial /= trial.sum()
        except LinAlgError:
            continue
        if accepted is not None:
            w = trial
            log_det, kw_max = accepted
            prunes.append(len(trace) - 1)
            trace.append(log_det)
            changed = True
    return w, log_det, kw_max, changed


def _symmetric_information(w, rows, lam):
    active = w > 0
    ra = rows[active]
    wl = w[active] * lam[active]
    mat = (ra * wl[:, None]).T @ ra
    return 0.5 * (mat + mat.T)


def find_transition(
    path: Callable[[float], ParameterVector],
    m: InteractionModel,
    predicate: Callable[[OptimizerResult], bool],
    bracket: tuple[float, float],
    tol: float = 1e-3,
    cfg: OptimizerConfig | None = None,
) -> float:
    """Bisection for the parameter value where a structure predicate flips.

    ``path`` maps a scalar to a parameter vector; the predicate must take
    different values at the two bracket ends, else ``NoBracket`` is raised.
    Returns the bracket midpoint once its width is below ``tol``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"invalid bracket {bracket}")
    value_lo = predicate(optimize_design(path(lo), m, cfg))
    value_hi = predicate(optimize_design(path(hi), m, cfg))
    if value_lo == value_hi:
        raise NoBracket(
            f"predicate is {value_lo} at both ends of [{lo}, {hi}]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(optimize_design(path(mid), m, cfg)) == value_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
