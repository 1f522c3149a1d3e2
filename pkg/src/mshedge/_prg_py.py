"""Pure-numpy inner-loop kernel (fallback for the compiled extension).

Solves the per-outer-iteration strongly monotone subproblem by projected
reflected gradient steps: ``z_{j+1} = clamp(z_j - lam * G(2 z_j - z_{j-1}))``
with ``G(v) = F(v) + y_base + r (v - x_base)``, stopping once the
probability-weighted L2 gap between the candidate and its own projected
image falls to ``eps``.  Because F is affine, the reflected evaluation
reuses the previous one: ``F(2a - b) = 2 F(a) - F(b)``.

The compiled kernel in ``_prg.pyx`` must stay semantically identical to
this module; the test suite cross-checks both backends.
"""

from __future__ import annotations

import numpy as np

__all__ = ["prg_solve"]


def prg_solve(
    mats: np.ndarray,
    offs: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    x_base: np.ndarray,
    y_base: np.ndarray,
    probs: np.ndarray,
    r: float,
    lam: float,
    eps: float,
    max_iter: int,
    cand: np.ndarray,
    proj: np.ndarray,
) -> tuple[int, float, float]:
    """Run the reflected-projection loop in place.

    ``cand`` holds the warm start on entry and the final candidate on
    exit; ``proj`` receives the box projection of the final candidate.
    Returns ``(iterations, weighted_residual, max_scenario_residual)``;
    the caller decides whether an unmet ``eps`` is an error.
    """
    m, n = offs.shape
    rinv = 1.0 / r

    z_prev = cand.copy()
    z = cand.copy()
    z_new = np.empty_like(z)
    f_prev = np.empty_like(z)
    f_cur = np.empty_like(z)
    f_new = np.empty_like(z)
    g = np.empty_like(z)
    gap = np.empty_like(z)
    tmp3 = np.empty((m, n, 1))

    def matvec(src: np.ndarray, dst: np.ndarray) -> None:
        np.matmul(mats, src[:, :, None], out=tmp3)
        np.add(tmp3[:, :, 0], offs, out=dst)

    def residual(zc: np.ndarray, fc: np.ndarray) -> tuple[float, float]:
        np.subtract(x_base, (fc + y_base) * rinv, out=proj)
        np.clip(proj, lower, upper, out=proj)
        np.subtract(zc, proj, out=gap)
        per2 = np.einsum("ij,ij->i", gap, gap)
        agg = float(np.sqrt(max(float(probs @ per2), 0.0)))
        return agg, float(np.sqrt(per2.max()))

    matvec(z, f_cur)
    f_prev[:] = f_cur
    res, res_max = residual(z, f_cur)
    if res <= eps:
        cand[:] = z
        return 0, res, res_max

    it = 0
    for it in range(1, max_iter + 1):
        np.subtract(2.0 * f_cur, f_prev, out=g)
        g += y_base
        g += r * (2.0 * z - z_prev)
        g -= r * x_base
        np.subtract(z, lam * g, out=z_new)
        np.clip(z_new, lower, upper, out=z_new)
        matvec(z_new, f_new)
        res, res_max = residual(z_new, f_new)
        z_prev, z, z_new = z, z_new, z_prev
        f_prev, f_cur, f_new = f_cur, f_new, f_prev
        if res <= eps:
            break

    cand[:] = z
    return it, res, res_max
