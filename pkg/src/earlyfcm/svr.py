"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved by sequential minimal optimization over the split
variables theta = [alpha; alpha*] with the signs z = [+1...; -1...]: sweeps
run in index order over the set still allowed to move up, each paired with
the extreme partner from the set allowed to move down, so fits are
bit-for-bit reproducible. A least-squares linear baseline lives here too.

Notation used throughout: beta = alpha - alpha* are the dual coefficients,
e0 = K @ beta - y is the prediction error without bias, and
v = [-e0 - eps; -e0 + eps] holds the per-variable bias bounds. The KKT
conditions reduce to max(v[up]) <= min(v[low]) + tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigurationError, DegenerateFitError, InputError

_ZERO_COEFF = 1e-12


@dataclass(frozen=True)
class SvrHyperparams:
    """Box constraint, tube width, kernel width and SMO stopping controls.

    gamma accepts a positive real or "scale", which resolves at fit time to
    1 / (n_features * variance of the training inputs), falling back to 1.0
    for constant inputs.
    """

    c: float = 1.0
    epsilon_tube: float = 0.01
    gamma: float | str = "scale"
    tolerance: float = 1e-3
    max_passes: int = 200

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ConfigurationError(f"c must be > 0, got {self.c}")
        if self.epsilon_tube < 0:
            raise ConfigurationError(f"epsilon_tube must be >= 0, got {self.epsilon_tube}")
        if isinstance(self.gamma, str):
            if self.gamma != "scale":
                raise ConfigurationError(f'gamma must be > 0 or "scale", got {self.gamma!r}')
        elif not self.gamma > 0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_passes < 1:
            raise ConfigurationError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass
class SvrModel:
    """Fitted SVR: kernel expansion over the support inputs plus a bias.

    dual_coeffs holds alpha - alpha* for the support inputs only; every
    entry lies in [-c, c]. scaler is an opaque reference to whatever
    standardization the caller applied to the inputs (None when raw).
    """

    support_inputs: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    gamma: float
    converged: bool
    scaler: Any = field(default=None)


@dataclass(frozen=True)
class LinearModel:
    """Ordinary least squares fit: y = slopes . x + intercept."""

    slopes: np.ndarray
    intercept: float


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2); equals 1 exactly at x == y."""
    dx = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-gamma * np.dot(dx.ravel(), dx.ravel())))


def _as_xy(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise InputError(f"incompatible shapes: inputs {x.shape}, targets {y.shape}")
    if x.shape[0] < 2:
        raise InputError("need at least 2 training pairs")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InputError("training data contains non-finite values")
    return x, y


def _kernel_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.exp(-gamma * np.einsum("ijd,ijd->ij", diff, diff))


def _resolve_gamma(gamma: float | str, x: np.ndarray) -> float:
    if gamma == "scale":
        var = float(x.var())
        return 1.0 / (x.shape[1] * var) if var > 0 else 1.0
    return float(gamma)


def _smo_solve(
    k: np.ndarray, y: np.ndarray, c: float, eps: float, tol: float, max_passes: int
) -> tuple[np.ndarray, float, bool]:
    """Minimize 0.5 b'Kb - y'b + eps*|b|_1 over the SVR dual feasible set.

    Returns (beta, bias, converged). One pass sweeps the up-set in index
    order; each violator steps jointly with the partner of extreme bias
    bound, which keeps the equality constraint sum(beta) = 0 intact.
    """
    n = y.shape[0]
    theta = np.zeros(2 * n)
    beta = np.zeros(n)
    e0 = -y.copy()
    v = np.concatenate([-e0 - eps, -e0 + eps])
    converged = False
    for _ in range(max_passes):
        progressed = False
        # the extreme low-set partner only moves when a step is taken
        low = np.concatenate([theta[:n] > 0.0, theta[n:] < c])
        t = int(np.argmin(np.where(low, v, np.inf)))
        for s in range(2 * n):
            up = theta[s] < c if s < n else theta[s] > 0.0
            if not up or v[s] <= v[t] + tol:
                continue
            i, j = s % n, t % n
            eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
            lam = (v[s] - v[t]) / eta if eta > 1e-12 else np.inf
            room_s = c - theta[s] if s < n else theta[s]
            room_t = theta[t] if t < n else c - theta[t]
            lam = min(lam, room_s, room_t)
            # land exactly on the box face when the step is box-limited
            theta[s] = (c if s < n else 0.0) if lam == room_s else theta[s] + (lam if s < n else -lam)
            theta[t] = (0.0 if t < n else c) if lam == room_t else theta[t] - (lam if t < n else -lam)
            di = (theta[i] - theta[n + i]) - beta[i]
            beta[i] += di
            dj = (theta[j] - theta[n + j]) - beta[j]
            beta[j] += dj
            e0 += di * k[:, i] + dj * k[:, j]
            v[:n] = -e0 - eps
            v[n:] = -e0 + eps
            progressed = True
            low = np.concatenate([theta[:n] > 0.0, theta[n:] < c])
            t = int(np.argmin(np.where(low, v, np.inf)))
        # refresh the cached errors once per pass to stop drift
        e0 = k @ beta - y
        v[:n] = -e0 - eps
        v[n:] = -e0 + eps
        up_set = np.concatenate([theta[:n] < c, theta[n:] > 0.0])
        low_set = np.concatenate([theta[:n] > 0.0, theta[n:] < c])
        b_lo = float(v[up_set].max())
        b_hi = float(v[low_set].min())
        if b_lo <= b_hi + tol:
            converged = True
            break
        if not progressed:
            break
    else:
        up_set = np.concatenate([theta[:n] < c, theta[n:] > 0.0])
        low_set = np.concatenate([theta[:n] > 0.0, theta[n:] < c])
        b_lo = float(v[up_set].max())
        b_hi = float(v[low_set].min())
    bias = 0.5 * (b_lo + b_hi)
    return beta, bias, converged


def fit_svr(xs, ys, hp: SvrHyperparams | None = None) -> SvrModel:
    """Fit epsilon-SVR by SMO; deterministic for identical inputs.

    If the KKT tolerance is not met within max_passes the best iterate is
    returned with converged=False rather than raising.
    """
    hp = hp or SvrHyperparams()
    x, y = _as_xy(xs, ys)
    gamma = _resolve_gamma(hp.gamma, x)
    k = _kernel_matrix(x, x, gamma)
    beta, bias, converged = _smo_solve(
        k, y, hp.c, hp.epsilon_tube, hp.tolerance, hp.max_passes
    )
    support = np.abs(beta) > _ZERO_COEFF
    return SvrModel(
        support_inputs=x[support].copy(),
        dual_coeffs=beta[support].copy(),
        bias=bias,
        gamma=gamma,
        converged=converged,
    )


def _predict_svr_many(model: SvrModel, x: np.ndarray) -> np.ndarray:
    if model.support_inputs.shape[0] == 0:
        return np.full(x.shape[0], model.bias)
    k = _kernel_matrix(x, model.support_inputs, model.gamma)
    return k @ model.dual_coeffs + model.bias


def predict_svr(model: SvrModel, x) -> float:
    """Kernel expansion at a single input: sum_i coeff_i k(s_i, x) + bias."""
    q = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return float(_predict_svr_many(model, q)[0])


def fit_linear(xs, ys) -> LinearModel:
    """Ordinary least squares baseline; rejects constant inputs."""
    x, y = _as_xy(xs, ys)
    if (x == x[0]).all():
        raise DegenerateFitError("all inputs identical; linear fit is underdetermined")
    design = np.column_stack([x, np.ones(x.shape[0])])
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    if not np.isfinite(coeffs).all():
        raise DegenerateFitError("least squares produced non-finite coefficients")
    return LinearModel(slopes=coeffs[:-1], intercept=float(coeffs[-1]))


def predict_linear(model: LinearModel, x) -> float:
    q = np.asarray(x, dtype=np.float64).ravel()
    return float(model.slopes @ q + model.intercept)
