"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved by sequential minimal optimization over the stacked
variable z = [alpha; alpha*] in [0, C]^{2n} with sign vector
u = [+1...; -1...] and linear term p = [eps - y; eps + y]:

    min  1/2 z^T Qhat z + p^T z    s.t.  u^T z = 0,  0 <= z <= C

where Qhat[s, t] = u_s u_t K(x_s mod n, x_t mod n).  Each step picks the
maximal violating pair under v_t = -u_t g_t (g the gradient), solves the
two-variable subproblem in closed form, clips to the box, and updates the
gradient incrementally.  Convergence: m - M <= tol over the I_up / I_low
index sets.  The intercept is the mean of v over free variables, or the
midpoint (m + M) / 2 when none are free.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, DataError


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for all pairs of rows."""
    d2 = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def resolve_gamma(X: np.ndarray, gamma) -> float:
    """None means 1 / (p * Var(X)) over the flattened matrix."""
    if gamma is not None:
        return float(gamma)
    var = float(X.var())
    if var == 0.0:
        return 1.0 / X.shape[1]
    return 1.0 / (X.shape[1] * var)


def _smo(K: np.ndarray, y: np.ndarray, C: float, epsilon: float, tol: float, max_iter: int):
    """Returns (beta, intercept, n_iter); raises ConvergenceError with the
    best iterate attached when the budget runs out."""
    n = y.shape[0]
    u = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    qhat = np.outer(u, u) * np.tile(K, (2, 2))
    z = np.zeros(2 * n)
    g = p.copy()

    def state():
        v = -u * g
        in_up = ((u > 0) & (z < C)) | ((u < 0) & (z > 0))
        in_low = ((u > 0) & (z > 0)) | ((u < 0) & (z < C))
        return v, in_up, in_low

    def intercept(v, in_up, in_low):
        free = (z > 0.0) & (z < C)
        if np.any(free):
            return float(v[free].mean())
        m = float(v[in_up].max()) if np.any(in_up) else 0.0
        big = float(v[in_low].min()) if np.any(in_low) else 0.0
        return (m + big) / 2.0

    it = 0
    while True:
        v, in_up, in_low = state()
        if not np.any(in_up) or not np.any(in_low):
            break  # fully bound in one direction; KKT trivially holds
        vi = np.where(in_up, v, -np.inf)
        vj = np.where(in_low, v, np.inf)
        i = int(np.argmax(vi))
        j = int(np.argmin(vj))
        if vi[i] - vj[j] <= tol:
            break
        if it >= max_iter:
            beta = z[:n] - z[n:]
            raise ConvergenceError(
                f"SMO did not converge within {max_iter} iterations "
                f"(violation {vi[i] - vj[j]:.3g} > tol {tol:g})",
                best={"beta": beta, "intercept": intercept(v, in_up, in_low), "n_iter": it},
            )
        it += 1
        same_sign = u[i] == u[j]
        if same_sign:
            eta = qhat[i, i] + qhat[j, j] - 2.0 * qhat[i, j]
            step = -(g[i] - g[j]) / max(eta, 1e-12)
            lo = max(-z[i], z[j] - C)
            hi = min(C - z[i], z[j])
        else:
            eta = qhat[i, i] + qhat[j, j] + 2.0 * qhat[i, j]
            step = -(g[i] + g[j]) / max(eta, 1e-12)
            lo = max(-z[i], -z[j])
            hi = min(C - z[i], C - z[j])
        step = min(max(step, lo), hi)
        zi_new = min(max(z[i] + step, 0.0), C)
        zj_new = min(max(z[j] - step if same_sign else z[j] + step, 0.0), C)
        di = zi_new - z[i]
        dj = zj_new - z[j]
        z[i] = zi_new
        z[j] = zj_new
        if di != 0.0:
            g += qhat[:, i] * di
        if dj != 0.0:
            g += qhat[:, j] * dj

    v, in_up, in_low = state()
    return z[:n] - z[n:], intercept(v, in_up, in_low), it


def fit_svr(X, y, hp):
    C = hp["C"]
    epsilon = hp["epsilon"]
    gamma = resolve_gamma(X, hp["gamma"])
    K = rbf_kernel(X, X, gamma)
    try:
        beta, b, n_iter = _smo(K, y, C, epsilon, hp["tol"], hp["max_iter"])
    except ConvergenceError as exc:
        # re-raise with a directly usable model as the best iterate
        beta = exc.best["beta"]
        sv = beta != 0.0
        exc.best = {
            "support_vectors": X[sv].copy(),
            "coef": beta[sv].copy(),
            "intercept": exc.best["intercept"],
            "gamma": gamma,
            "n_iter": exc.best["n_iter"],
        }
        raise
    sv = beta != 0.0
    params = {
        "support_vectors": X[sv].copy(),
        "coef": beta[sv].copy(),
        "intercept": b,
        "gamma": gamma,
        "n_iter": n_iter,
    }
    return params, []


def predict_svr(params, X):
    svs = params["support_vectors"]
    if svs.shape[0] == 0:
        return np.full(X.shape[0], params["intercept"])
    K = rbf_kernel(X, svs, params["gamma"])
    return K @ params["coef"] + params["intercept"]
