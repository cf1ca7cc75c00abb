"""Four-parameter smoothing-curve evaluation and least-squares fitting.

The curve is ``a2 - a1 / sqrt(a3 + 1/(x + a4)^4)``: a saturating shape with
a pole at ``x = -a4`` and horizontal asymptote ``a2 - a1/sqrt(a3)``. Fitting
minimizes the sum of squared residuals with damped Gauss-Newton steps
(Levenberg-style lambda control) and a central-difference numerical
Jacobian. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CurveDomainError, FitFailedError

__all__ = [
    "CurveParams",
    "FitResult",
    "curve_value",
    "fit_curve",
    "numeric_jacobian",
    "load_points",
]

JACOBIAN_STEP = 1e-6
RESIDUAL_RTOL = 1e-10
MAX_ITERATIONS = 200
MAX_DAMPING = 1e12


@dataclass(frozen=True)
class CurveParams:
    a1: float
    a2: float
    a3: float
    a4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4], dtype=float)

    @classmethod
    def from_array(cls, values) -> "CurveParams":
        a1, a2, a3, a4 = (float(v) for v in values)
        return cls(a1, a2, a3, a4)


@dataclass(frozen=True)
class FitResult:
    params: CurveParams
    residual: float            # final sum of squared residuals
    iterations: int
    residual_history: tuple[float, ...]  # accepted residuals, initial first


def curve_value(params: CurveParams, x) -> float | np.ndarray:
    """Evaluate the curve at x (scalar or array).

    Raises :class:`CurveDomainError` at the pole ``x = -a4`` or when the
    radicand ``a3 + 1/(x + a4)^4`` is not positive.
    """
    xs = np.asarray(x, dtype=float)
    values = _evaluate(params.as_array(), xs)
    return float(values) if np.isscalar(x) or xs.ndim == 0 else values


def _evaluate(p: np.ndarray, xs: np.ndarray) -> np.ndarray:
    a1, a2, a3, a4 = p
    shifted = xs + a4
    if np.any(shifted == 0.0):
        raise CurveDomainError(f"curve has a pole at x = {-a4}")
    radicand = a3 + shifted**-4.0
    if np.any(radicand <= 0.0):
        raise CurveDomainError("non-positive radicand; a3 too negative for this x")
    return a2 - a1 / np.sqrt(radicand)


def numeric_jacobian(p: np.ndarray, xs: np.ndarray, step: float = JACOBIAN_STEP) -> np.ndarray:
    """Central-difference Jacobian of the curve values w.r.t. the parameters."""
    jac = np.empty((xs.size, p.size))
    for j in range(p.size):
        bump = np.zeros_like(p)
        bump[j] = step
        jac[:, j] = (_evaluate(p + bump, xs) - _evaluate(p - bump, xs)) / (2 * step)
    return jac


def fit_curve(points, init: CurveParams | None = None) -> FitResult:
    """Fit the curve to (x, y) samples by damped Gauss-Newton.

    ``points`` is any (n, 2) array-like with n >= 4. The default start is
    ``(1, mean(y), 1, 1 - min(x))``, which places the pole left of the
    data. Steps solve ``(J^T J + lambda I) delta = -J^T r`` and are only
    accepted when they reduce the residual, so the residual history is
    non-increasing; lambda shrinks on success and grows on rejection.
    Converges when the relative residual change drops below 1e-10 or
    after 200 iterations.

    Raises :class:`FitFailedError` (carrying the last iterate) if no
    acceptable step exists even at maximum damping.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array of (x, y) samples")
    if pts.shape[0] < 4:
        raise ValueError("need at least 4 points to fit 4 parameters")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    xs, ys = pts[:, 0], pts[:, 1]

    if init is None:
        init = CurveParams(1.0, float(ys.mean()), 1.0, 1.0 - float(xs.min()))
    p = init.as_array()
    residual = _sse(p, xs, ys)  # raises CurveDomainError on an invalid init
    history = [residual]

    damping = 1e-3
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        r = _evaluate(p, xs) - ys
        jac = numeric_jacobian(p, xs)
        gram = jac.T @ jac
        gradient = jac.T @ r

        accepted = False
        solvable = False
        while damping <= MAX_DAMPING:
            try:
                delta = np.linalg.solve(gram + damping * np.eye(4), -gradient)
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            candidate = p + delta
            try:
                candidate_sse = _sse(candidate, xs, ys)
            except CurveDomainError:
                damping *= 10
                continue
            if not np.isfinite(candidate_sse):
                damping *= 10
                continue
            solvable = True
            if candidate_sse < residual:
                accepted = True
                break
            damping *= 10
        if not accepted:
            if not solvable:
                raise FitFailedError(
                    "normal equations unsolvable at maximum damping",
                    params=CurveParams.from_array(p),
                    residual=residual,
                )
            break  # solvable but no descending step: stalled at a minimum

        previous = residual
        p, residual = candidate, candidate_sse
        history.append(residual)
        damping = max(damping * 0.1, 1e-12)
        if _relative_change(previous, residual) < RESIDUAL_RTOL:
            break

    return FitResult(
        params=CurveParams.from_array(p),
        residual=residual,
        iterations=iterations,
        residual_history=tuple(history),
    )


def _sse(p: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> float:
    r = _evaluate(p, xs) - ys
    return float(r @ r)


def _relative_change(previous: float, current: float) -> float:
    if previous == 0.0:
        return 0.0
    return abs(previous - current) / abs(previous)


def load_points(path) -> np.ndarray:
    """Read (x, y) samples from two-column comma-separated text.

    Blank lines and lines starting with ``#`` are skipped.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'x,y', got {raw!r}")
        rows.append((float(parts[0]), float(parts[1])))
    return np.asarray(rows, dtype=float).reshape(-1, 2)
