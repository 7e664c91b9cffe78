"""Damped Gauss-Newton (Levenberg-Marquardt) minimiser for least squares.

Minimal by design: trend fitting needs a deterministic optimiser with an
explicit damping schedule (double on reject, halve on accept) and a
relative-SSE stopping rule, which is easier to guarantee here than to
coax out of a general-purpose library.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["LMResult", "levenberg_marquardt"]


@dataclass(frozen=True)
class LMResult:
    x: np.ndarray
    sse: float
    converged: bool
    n_iter: int


def levenberg_marquardt(residual, jacobian, x0, max_iter=500, rel_tol=1e-10,
                        lam0=1e-3, lam_max=1e14):
    """Minimise ||r(x)||^2 with r = y - f(x) and jacobian J = df/dx.

    The step solves (J'J + lam*diag(J'J)) d = J'r; lam doubles when a step
    is rejected and halves when accepted.  Converged means the relative
    SSE improvement fell below ``rel_tol``, the gradient or step became
    negligible, or damping is exhausted (stuck at a local minimum to
    machine precision).  Callers that evaluate residual and jacobian from
    shared intermediates should memoise those internally; the jacobian is
    only requested at accepted iterates, right after the corresponding
    residual call.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = residual(x)
    sse = float(r @ r)
    if not np.isfinite(sse):
        return LMResult(x=x, sse=np.inf, converged=False, n_iter=0)
    lam = lam0
    J = jacobian(x)
    n_iter = 0
    while n_iter < max_iter:
        n_iter += 1
        A = J.T @ J
        g = J.T @ r
        if np.max(np.abs(g)) <= 1e-12 * max(1.0, sse):
            return LMResult(x=x, sse=sse, converged=True, n_iter=n_iter)
        d = np.diag(A).copy()
        d[d < 1e-12] = 1e-12
        try:
            step = np.linalg.solve(A + lam * np.diag(d), g)
        except np.linalg.LinAlgError:
            lam *= 2.0
            if lam > lam_max:
                return LMResult(x=x, sse=sse, converged=True, n_iter=n_iter)
            continue
        x_new = x + step
        r_new = residual(x_new)
        sse_new = float(r_new @ r_new)
        if np.isfinite(sse_new) and sse_new < sse:
            improvement = (sse - sse_new) / max(sse, 1e-300)
            tiny_step = np.max(np.abs(step)) <= 1e-13 * (np.max(np.abs(x)) + 1.0)
            x, r, sse = x_new, r_new, sse_new
            lam = max(lam * 0.5, 1e-12)
            if improvement < rel_tol or tiny_step:
                return LMResult(x=x, sse=sse, converged=True, n_iter=n_iter)
            J = jacobian(x)
        else:
            lam *= 2.0
            if lam > lam_max:
                return LMResult(x=x, sse=sse, converged=True, n_iter=n_iter)
    return LMResult(x=x, sse=sse, converged=False, n_iter=n_iter)
