"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical code: each routine is a plain
loop transcription of the defining formula, so agreement with the package
is evidence rather than tautology.
"""

import math

import numpy as np


def brute_force_glcm(img, levels, dr, dc):
    """Symmetric co-occurrence counts by enumerating every pixel pair."""
    rows, cols = len(img), len(img[0])
    counts = [[0] * levels for _ in range(levels)]
    for r in range(rows):
        for c in range(cols):
            r2, c2 = r + dr, c + dc
            if 0 <= r2 < rows and 0 <= c2 < cols:
                a, b = int(img[r][c]), int(img[r2][c2])
                counts[a][b] += 1
                counts[b][a] += 1
    return np.array(counts)


def _h(values):
    return -sum(v * math.log(v) for v in values if v > 0)


def naive_haralick(P):
    """All 14 statistics by explicit loops over 1-based gray levels."""
    P = [[float(v) for v in row] for row in P]
    n = len(P)
    px = [sum(P[i][j] for j in range(n)) for i in range(n)]
    py = [sum(P[i][j] for i in range(n)) for j in range(n)]
    psum = {s: 0.0 for s in range(2, 2 * n + 1)}
    pdiff = {k: 0.0 for k in range(n)}
    for i in range(n):
        for j in range(n):
            psum[(i + 1) + (j + 1)] += P[i][j]
            pdiff[abs(i - j)] += P[i][j]

    mux = sum((i + 1) * px[i] for i in range(n))
    muy = sum((j + 1) * py[j] for j in range(n))
    sx = math.sqrt(sum((i + 1 - mux) ** 2 * px[i] for i in range(n)))
    sy = math.sqrt(sum((j + 1 - muy) ** 2 * py[j] for j in range(n)))

    f1 = sum(P[i][j] ** 2 for i in range(n) for j in range(n))
    f2 = 0.0
    for d in range(n):
        inner = sum(P[i][j] for i in range(n) for j in range(n) if abs(i - j) == d)
        f2 += d * d * inner
    if sx * sy > 0:
        f3 = (sum((i + 1) * (j + 1) * P[i][j] for i in range(n) for j in range(n)) - mux * muy) / (sx * sy)
    else:
        f3 = 0.0
    f4 = sum((i + 1 - mux) ** 2 * P[i][j] for i in range(n) for j in range(n))
    f5 = sum(P[i][j] / (1 + (i - j) ** 2) for i in range(n) for j in range(n))
    f6 = sum(s * psum[s] for s in psum)
    f8 = _h(psum.values())
    f7 = sum((s - f8) ** 2 * psum[s] for s in psum)
    f9 = _h(v for row in P for v in row)
    mud = sum(k * pdiff[k] for k in pdiff)
    f10 = sum((k - mud) ** 2 * pdiff[k] for k in pdiff)
    f11 = _h(pdiff.values())

    hx, hy = _h(px), _h(py)
    hxy = f9
    hxy1 = -sum(P[i][j] * math.log(px[i] * py[j]) for i in range(n) for j in range(n) if P[i][j] > 0)
    hxy2 = -sum(px[i] * py[j] * math.log(px[i] * py[j])
                for i in range(n) for j in range(n) if px[i] * py[j] > 0)
    f12 = (hxy - hxy1) / max(hx, hy) if max(hx, hy) > 0 else 0.0
    f13 = math.sqrt(max(0.0, 1 - math.exp(-2 * (hxy2 - hxy))))

    support = [i for i in range(n) if px[i] > 0]
    ks = [k for k in range(n) if py[k] > 0]
    Q = np.zeros((len(support), len(support)))
    for a, i in enumerate(support):
        for b, j in enumerate(support):
            Q[a, b] = sum(P[i][k] * P[j][k] / (px[i] * py[k]) for k in ks)
    eig = sorted(np.linalg.eigvals(Q).real, reverse=True) if len(support) else []
    f14 = math.sqrt(min(max(eig[1], 0.0), 1.0)) if len(eig) > 1 else 0.0

    return np.array([f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14]), eig


def gaussian_blur_clamped(img, sigma, radius):
    """Normalized truncated Gaussian blur with edge-replicating borders."""
    from scipy.ndimage import correlate

    ax = np.arange(-radius, radius + 1)
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * sigma ** 2))
    k /= k.sum()
    return correlate(np.asarray(img, dtype=float), k, mode="nearest")


def _project(v, y, C):
    """Euclidean projection onto {0 <= a <= C, y.a = 0} by bisection on the multiplier."""
    def g(nu):
        return float(y @ np.clip(v - nu * y, 0.0, C))

    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo *= 2
    while g(hi) > 0:
        hi *= 2
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, C)


def projected_gradient_dual(K, y, C, iters=20000, tol=1e-10):
    """Maximize sum(a) - 1/2 a^T Q a over the SVM dual feasible set.

    Accelerated projected gradient with restart whenever the objective
    worsens; stops when the projected-gradient step (the first-order
    optimality residual) vanishes.
    """
    y = np.asarray(y, dtype=float)
    Q = np.outer(y, y) * K
    L = max(np.linalg.eigvalsh(Q)[-1], 1e-12)

    def loss(a):
        return 0.5 * a @ Q @ a - a.sum()

    a = np.zeros(len(y))
    z, t = a.copy(), 1.0
    for _ in range(iters):
        plain = _project(a - (Q @ a - 1.0) / L, y, C)
        if np.max(np.abs(plain - a)) < tol:
            break
        a_new = _project(z - (Q @ z - 1.0) / L, y, C)
        if loss(a_new) > loss(plain):
            # momentum overshot: fall back to the plain step and restart
            a, z, t = plain, plain.copy(), 1.0
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = a_new + ((t - 1) / t_new) * (a_new - a)
        a, t = a_new, t_new
    return a, float(a.sum() - 0.5 * a @ Q @ a)
