"""Slow, independent reference implementations used only by the tests."""

import numpy as np


def circular_correlation(x1, x2):
    """``(x1 * x2)(u) = sum_r x1(r) conj(x2(r - u))`` on a periodic grid, by direct summation."""
    h, w = x1.shape
    out = np.zeros((h, w), complex)
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    for uy in range(h):
        for ux in range(w):
            out[uy, ux] = np.sum(x1 * np.conj(x2[(rows - uy) % h, (cols - ux) % w]))
    return out


def wotf_by_correlation(pupil, iy, ix):
    """Single-LED phase WOTF from the correlation definition with a unit point-mass source."""
    h, w = pupil.shape
    source = np.zeros((h, w), complex)
    source[iy % h, ix % w] = 1.0
    return 1j * (circular_correlation(pupil, source) - circular_correlation(source, pupil))


def psnr_loop(estimate, truth):
    """PSNR with a scalar loop over pixels; no vectorized reductions."""
    lo = hi = float(truth.flat[0])
    total = 0.0
    count = 0
    for e, t in zip(np.ravel(estimate), np.ravel(truth)):
        lo = min(lo, float(t))
        hi = max(hi, float(t))
        total += (float(e) - float(t)) ** 2
        count += 1
    mse = total / count
    if mse == 0:
        return 300.0
    return min(300.0, 10.0 * np.log10((hi - lo) ** 2 / mse))


def diagonal_least_squares(measurements, wotfs):
    """``sum conj(h) y / sum |h|^2`` where the denominator is nonzero, else 0."""
    num = np.sum(np.conj(wotfs) * measurements, axis=0)
    den = np.sum(np.abs(wotfs) ** 2, axis=0)
    out = np.zeros_like(num)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def tv_prox_convex(z, weight, pairs):
    """Solve ``min_x 0.5 ||x - z||^2 + weight * sum_(a,b) |x_b - x_a|`` with cvxpy.

    ``pairs`` lists flat-index pairs; works for any image size.
    """
    import cvxpy as cp

    flat = np.ravel(z).astype(float)
    x = cp.Variable(flat.size)
    if pairs:
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        penalty = weight * cp.sum(cp.abs(x[b] - x[a]))
    else:
        penalty = 0
    problem = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(x - flat) + penalty))
    problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return np.asarray(x.value).reshape(np.shape(z))


def circular_edges(shape, axis):
    """All circular neighbour pairs along ``axis`` as flat-index tuples."""
    h, w = shape
    n = shape[axis]
    if n < 2:
        return []
    edges = set()
    for r in range(h):
        for c in range(w):
            if axis == 0:
                r2, c2 = (r + 1) % h, c
            else:
                r2, c2 = r, (c + 1) % w
            edges.add((r * w + c, r2 * w + c2))
    return sorted(edges)


def _axis_matchings(n):
    """Split the circular edges ``(i, i+1 mod n)`` of one axis into vertex-disjoint sets."""
    if n < 2:
        return []
    edges = [(i, (i + 1) % n) for i in range(n)]
    if n % 2 == 0:
        return [[e for e in edges if e[0] % 2 == 0], [e for e in edges if e[0] % 2 == 1]]
    return [[e for e in edges[:-1] if e[0] % 2 == 0], [e for e in edges[:-1] if e[0] % 2 == 1], [edges[-1]]]


def grouped_tv_prox(z, weight):
    """Average of per-axis TV proxes, each axis itself averaged over disjoint edge sets.

    Every edge set is solved as its own convex problem at ``m * weight`` (``m``
    sets on that axis); an axis with no edges contributes ``z``.
    """
    h, w = z.shape
    out = np.zeros((h, w))
    for axis in (0, 1):
        matchings = _axis_matchings(z.shape[axis])
        if not matchings:
            out += 0.5 * z
            continue
        m = len(matchings)
        for matching in matchings:
            pairs = []
            for i, j in matching:
                if axis == 0:
                    pairs += [(i * w + c, j * w + c) for c in range(w)]
                else:
                    pairs += [(r * w + i, r * w + j) for r in range(h)]
            out += 0.5 / m * tv_prox_convex(z, m * weight, pairs)
    return out
