"""Linear family: OLS, ridge, LASSO, elastic net.

All four minimize

    (1/2n) ||y - X w - b||^2  +  alpha * l1_ratio * ||w||_1
                              +  (alpha / 2) * (1 - l1_ratio) * ||w||^2

with the intercept unpenalized (data is centered, so b = mean(y) -
mean(X) . w).  Any L1 term forces cyclic coordinate descent with
soft-thresholding; pure L2 (and plain OLS) also admit closed-form normal
equations, which is the default for those kinds.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError

CD_TOL = 1e-7
CD_MAX_SWEEPS = 10_000


def soft_threshold(z: float, t: float) -> float:
    """Proximal step for the L1 term: sign(z) * max(|z| - t, 0)."""
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def coordinate_descent(
    Xc: np.ndarray,
    yc: np.ndarray,
    alpha: float,
    l1_ratio: float,
    *,
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
) -> np.ndarray:
    """Cyclic coordinate descent on centered data.

    Stops when the largest single-coefficient update in a sweep falls
    below ``tol`` or after ``max_sweeps`` full sweeps.  The objective is
    non-increasing, so the budget cap simply returns the current iterate.
    """
    n, p = Xc.shape
    col_sq = (Xc * Xc).sum(axis=0) / n
    denom = col_sq + alpha * (1.0 - l1_ratio)
    l1 = alpha * l1_ratio
    w = np.zeros(p)
    r = yc.copy()  # residual y - X w, maintained incrementally
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            old = w[j]
            if denom[j] == 0.0:
                # zero-variance column: leave untouched (stays 0)
                continue
            rho = (Xc[:, j] @ r) / n + col_sq[j] * old
            new = soft_threshold(rho, l1) / denom[j]
            if new != old:
                w[j] = new
                r += Xc[:, j] * (old - new)
                delta = max(delta, abs(new - old))
        if delta < tol:
            break
    return w


def elastic_net_objective(X, y, w, b, alpha, l1_ratio) -> float:
    """The penalized objective; used by tests as an independent check."""
    n = X.shape[0]
    resid = y - X @ w - b
    return (
        0.5 / n * float(resid @ resid)
        + alpha * l1_ratio * float(np.abs(w).sum())
        + 0.5 * alpha * (1.0 - l1_ratio) * float(w @ w)
    )


def lasso_alpha_max(X, y) -> float:
    """Smallest alpha (at l1_ratio=1) for which the LASSO solution is w=0:
    max |X_centered^T (y - mean(y))| / n."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    return float(np.max(np.abs(Xc.T @ yc)) / X.shape[0])


def fit_linear(
    X: np.ndarray,
    y: np.ndarray,
    *,
    alpha: float = 0.0,
    l1_ratio: float = 0.0,
    solver: str = "auto",
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
):
    """Fit the penalized linear model; returns (weights, intercept, flags).

    solver: "auto" picks closed form when the penalty has no L1 part,
    coordinate descent otherwise; "cd" and "closed_form" force a route
    (closed form is invalid with an L1 term).
    """
    if alpha < 0:
        raise DataError("alpha must be non-negative")
    if not 0.0 <= l1_ratio <= 1.0:
        raise DataError("l1_ratio must lie in [0, 1]")
    n, p = X.shape
    xm = X.mean(axis=0)
    ym = float(y.mean())
    Xc = X - xm
    yc = y - ym
    has_l1 = alpha > 0 and l1_ratio > 0
    if solver == "auto":
        solver = "cd" if has_l1 else "closed_form"
    flags: list[str] = []
    if solver == "closed_form":
        if has_l1:
            raise DataError("closed form is unavailable with an L1 penalty")
        l2 = alpha * (1.0 - l1_ratio)
        if l2 > 0:
            w = np.linalg.solve(Xc.T @ Xc + n * l2 * np.eye(p), Xc.T @ yc)
        else:
            w, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
            if rank < p:
                flags.append("singular_min_norm")
    elif solver == "cd":
        w = coordinate_descent(Xc, yc, alpha, l1_ratio, tol=tol, max_sweeps=max_sweeps)
    else:
        raise DataError(f"unknown solver {solver!r}")
    b = ym - float(xm @ w)
    return w, b, tuple(flags)


# -- kind plumbing ----------------------------------------------------------


def fit_linear_kind(kind: str, X, y, hp):
    if kind == "ols":
        alpha, l1_ratio = 0.0, 0.0
    elif kind == "ridge":
        alpha, l1_ratio = hp["alpha"], 0.0
    elif kind == "lasso":
        alpha, l1_ratio = hp["alpha"], 1.0
    else:  # elastic_net
        alpha, l1_ratio = hp["alpha"], hp["l1_ratio"]
    w, b, flags = fit_linear(X, y, alpha=alpha, l1_ratio=l1_ratio)
    return {"weights": w, "intercept": b}, flags


def predict_linear(params, X):
    return X @ params["weights"] + params["intercept"]
