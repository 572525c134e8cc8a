"""Independent numerical oracles for the test suite.

Nothing in here reuses the closed-form machinery from the package: arcs are
advanced with rotation matrices about explicit turn centers, tour optima come
from dynamic programming or plain enumeration, and gradients from central
differences.  Slower than the real code on purpose.
"""

import itertools
import math

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

TWO_PI = 2.0 * math.pi


def wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


def turn_step(x, y, th, phi, rho, side):
    """Advance along an arc of angle phi >= 0, turning left (side=+1) or
    right (side=-1) with radius rho."""
    cx = x - side * rho * math.sin(th)
    cy = y + side * rho * math.cos(th)
    rx, ry = x - cx, y - cy
    rot = side * phi
    c, s = math.cos(rot), math.sin(rot)
    return cx + c * rx - s * ry, cy + s * rx + c * ry, th + rot


def straight_step(x, y, th, length):
    return x + length * math.cos(th), y + length * math.sin(th), th


_CSC_SIDES = {"LSL": (1, 1), "RSR": (-1, -1), "LSR": (1, -1), "RSL": (-1, 1)}
_CCC_SIDES = {"LRL": 1, "RLR": -1}


def _csc_eval(word, p0, p1, rho, t):
    """Residual distance, straight length and total length for a CSC word as a
    function of the first turn angle t.  Vectorized over t."""
    s1, s2 = _CSC_SIDES[word]
    x0, y0, th0 = p0
    x1, y1, th1 = p1
    cx = x0 - s1 * rho * math.sin(th0)
    cy = y0 + s1 * rho * math.cos(th0)
    rx, ry = x0 - cx, y0 - cy
    rot = s1 * t
    c, s = np.cos(rot), np.sin(rot)
    ax = cx + c * rx - s * ry
    ay = cy + s * rx + c * ry
    h = th0 + rot
    # final turn angle is pinned by the heading constraint
    q = (s2 * (th1 - h)) % TWO_PI
    # displacement of the final arc, taken from the origin pose (0, 0, h)
    c2x = -s2 * rho * np.sin(h)
    c2y = s2 * rho * np.cos(h)
    r2x, r2y = -c2x, -c2y
    rot2 = s2 * q
    c2, s2_ = np.cos(rot2), np.sin(rot2)
    dx = c2x + c2 * r2x - s2_ * r2y
    dy = c2y + s2_ * r2x + c2 * r2y
    ux, uy = np.cos(h), np.sin(h)
    wx = x1 - (ax + dx)
    wy = y1 - (ay + dy)
    p = np.clip(wx * ux + wy * uy, 0.0, None)
    err = np.hypot(wx - p * ux, wy - p * uy)
    signed = wy * ux - wx * uy
    return err, signed, rho * (t + q) + p


def _ccc_eval(word, p0, p1, rho, t, u):
    """Residual and total length for a CCC word with first-turn t and middle
    turn u free.  Vectorized over matching-shape t, u."""
    s1 = _CCC_SIDES[word]
    x0, y0, th0 = p0
    x1, y1, th1 = p1
    cx = x0 - s1 * rho * math.sin(th0)
    cy = y0 + s1 * rho * math.cos(th0)
    rx, ry = x0 - cx, y0 - cy
    rot = s1 * t
    c, s = np.cos(rot), np.sin(rot)
    ax = cx + c * rx - s * ry
    ay = cy + s * rx + c * ry
    h1 = th0 + rot
    # middle turn, opposite side
    c2x = ax + s1 * rho * np.sin(h1)
    c2y = ay - s1 * rho * np.cos(h1)
    rot2 = -s1 * u
    c2, s2 = np.cos(rot2), np.sin(rot2)
    bx = c2x + c2 * (ax - c2x) - s2 * (ay - c2y)
    by = c2y + s2 * (ax - c2x) + c2 * (ay - c2y)
    h2 = h1 + rot2
    q = (s1 * (th1 - h2)) % TWO_PI
    c3x = bx - s1 * rho * np.sin(h2)
    c3y = by + s1 * rho * np.cos(h2)
    rot3 = s1 * q
    c3, s3 = np.cos(rot3), np.sin(rot3)
    ex = c3x + c3 * (bx - c3x) - s3 * (by - c3y)
    ey = c3y + s3 * (bx - c3x) + c3 * (by - c3y)
    err = np.hypot(x1 - ex, y1 - ey)
    return err, rho * (t + u + q)


def _csc_eval_s(word, p0, p1, rho, t):
    """Scalar-math twin of _csc_eval for refinement closures."""
    s1, s2 = _CSC_SIDES[word]
    x0, y0, th0 = p0
    x1, y1, th1 = p1
    cx = x0 - s1 * rho * math.sin(th0)
    cy = y0 + s1 * rho * math.cos(th0)
    rx, ry = x0 - cx, y0 - cy
    rot = s1 * t
    c, s = math.cos(rot), math.sin(rot)
    ax = cx + c * rx - s * ry
    ay = cy + s * rx + c * ry
    h = th0 + rot
    q = (s2 * (th1 - h)) % TWO_PI
    c2x = -s2 * rho * math.sin(h)
    c2y = s2 * rho * math.cos(h)
    rot2 = s2 * q
    c2, s2_ = math.cos(rot2), math.sin(rot2)
    dx = c2x - c2 * c2x + s2_ * c2y
    dy = c2y - s2_ * c2x - c2 * c2y
    ux, uy = math.cos(h), math.sin(h)
    wx = x1 - (ax + dx)
    wy = y1 - (ay + dy)
    p = max(wx * ux + wy * uy, 0.0)
    err = math.hypot(wx - p * ux, wy - p * uy)
    signed = wy * ux - wx * uy
    return err, signed, rho * (t + q) + p


def _ccc_eval_s(word, p0, p1, rho, t, u):
    """Scalar-math twin of _ccc_eval."""
    s1 = _CCC_SIDES[word]
    x0, y0, th0 = p0
    x1, y1, th1 = p1
    cx = x0 - s1 * rho * math.sin(th0)
    cy = y0 + s1 * rho * math.cos(th0)
    rx, ry = x0 - cx, y0 - cy
    rot = s1 * t
    c, s = math.cos(rot), math.sin(rot)
    ax = cx + c * rx - s * ry
    ay = cy + s * rx + c * ry
    h1 = th0 + rot
    c2x = ax + s1 * rho * math.sin(h1)
    c2y = ay - s1 * rho * math.cos(h1)
    rot2 = -s1 * u
    c2, s2 = math.cos(rot2), math.sin(rot2)
    bx = c2x + c2 * (ax - c2x) - s2 * (ay - c2y)
    by = c2y + s2 * (ax - c2x) + c2 * (ay - c2y)
    h2 = h1 + rot2
    q = (s1 * (th1 - h2)) % TWO_PI
    c3x = bx - s1 * rho * math.sin(h2)
    c3y = by + s1 * rho * math.cos(h2)
    rot3 = s1 * q
    c3, s3 = math.cos(rot3), math.sin(rot3)
    ex = c3x + c3 * (bx - c3x) - s3 * (by - c3y)
    ey = c3y + s3 * (bx - c3x) + c3 * (by - c3y)
    return math.hypot(x1 - ex, y1 - ey), rho * (t + u + q)


def _local_minima(err, thresh):
    left = np.roll(err, 1)
    right = np.roll(err, -1)
    return np.nonzero((err <= left) & (err <= right) & (err < thresh))[0]


def _refine_csc(word, p0, p1, rho, t_lo, t_hi, fit_tol):
    """Refine one grid-localized CSC fit.  The perpendicular residual crosses
    zero linearly at an exact fit, so a bracketed root gets machine precision;
    fall back to bounded minimization when there is no sign change (p = 0
    fits, tangency cases)."""

    def signed(t):
        return _csc_eval_s(word, p0, p1, rho, t % TWO_PI)[1]

    def resid(t):
        return _csc_eval_s(word, p0, p1, rho, t % TWO_PI)[0]

    s_lo, s_hi = signed(t_lo), signed(t_hi)
    if s_lo == 0.0:
        t_ref = t_lo
    elif s_hi == 0.0:
        t_ref = t_hi
    elif s_lo * s_hi < 0.0:
        t_ref = brentq(signed, t_lo, t_hi, xtol=1e-13)
    else:
        t_ref = minimize_scalar(resid, bounds=(t_lo, t_hi), method="bounded",
                                options={"xatol": 1e-12}).x
    t_ref = float(t_ref) % TWO_PI
    e, _, total = _csc_eval_s(word, p0, p1, rho, t_ref)
    if e >= fit_tol:
        return math.inf
    best = total
    # a final turn of nearly 2*pi reaches the same endpoint as no final turn
    s1, s2 = _CSC_SIDES[word]
    q = (s2 * (p1[2] - (p0[2] + s1 * t_ref))) % TWO_PI
    if q > TWO_PI - 1e-7:
        best -= rho * q
    return best


def dubins_oracle_length(p0, p1, rho, n_grid=1024, fit_tol=1e-6):
    """Shortest bang-straight-bang / bang-bang-bang length found by dense
    scanning plus local refinement.  p0, p1 are (x, y, theta) triples."""
    x0, y0, _ = p0
    x1, y1, _ = p1
    dist = math.hypot(x1 - x0, y1 - y0)
    t_grid = np.arange(n_grid) * (TWO_PI / n_grid)
    dt = TWO_PI / n_grid
    thresh = 6.0 * dt * (2.0 * rho + dist + TWO_PI * rho)
    best = math.inf

    for word in _CSC_SIDES:
        err, _, _ = _csc_eval(word, p0, p1, rho, t_grid)
        for i in _local_minima(err, thresh):
            cand = _refine_csc(word, p0, p1, rho,
                               t_grid[i] - dt, t_grid[i] + dt, fit_tol)
            best = min(best, cand)

    if dist <= 6.6 * rho:
        m = 48
        tg = np.arange(m) * (TWO_PI / m)
        tt, uu = np.meshgrid(tg, tg, indexing="ij")
        for word in _CCC_SIDES:
            err, _ = _ccc_eval(word, p0, p1, rho, tt, uu)
            order = np.argsort(err, axis=None)
            starts = []
            for k in order[:24]:
                i, j = divmod(int(k), m)
                if all(min(abs(i - a), m - abs(i - a))
                       + min(abs(j - b), m - abs(j - b)) > 3
                       for a, b in starts):
                    starts.append((i, j))
                if len(starts) == 3:
                    break

            def g(v, w=word):
                return _ccc_eval_s(w, p0, p1, rho,
                                   v[0] % TWO_PI, v[1] % TWO_PI)[0]

            for i, j in starts:
                res = minimize(g, [tg[i], tg[j]], method="Nelder-Mead",
                               options={"xatol": 1e-10, "fatol": 1e-12,
                                        "maxiter": 260})
                e, total = _ccc_eval_s(word, p0, p1, rho,
                                       res.x[0] % TWO_PI, res.x[1] % TWO_PI)
                if e < fit_tol:
                    best = min(best, total)
    return best


def held_karp_atsp(cost):
    """Exact ATSP optimum by subset DP.  cost is (n, n) with +inf on forbidden
    arcs.  Returns (optimal cycle cost, tour starting at node 0)."""
    n = len(cost)
    assert n >= 2
    full = 1 << (n - 1)
    dp = [[math.inf] * (n - 1) for _ in range(full)]
    parent = [[-1] * (n - 1) for _ in range(full)]
    for j in range(1, n):
        dp[1 << (j - 1)][j - 1] = cost[0][j]
    for mask in range(1, full):
        row = dp[mask]
        for j in range(1, n):
            cur = row[j - 1]
            if cur == math.inf or not (mask >> (j - 1)) & 1:
                continue
            cj = cost[j]
            for k in range(1, n):
                if (mask >> (k - 1)) & 1:
                    continue
                nxt = mask | (1 << (k - 1))
                cand = cur + cj[k]
                if cand < dp[nxt][k - 1]:
                    dp[nxt][k - 1] = cand
                    parent[nxt][k - 1] = j
    best, best_j = math.inf, -1
    last = full - 1
    for j in range(1, n):
        cand = dp[last][j - 1] + cost[j][0]
        if cand < best:
            best, best_j = cand, j
    tour = []
    mask, j = last, best_j
    while j > 0:
        tour.append(j)
        pj = parent[mask][j - 1]
        mask ^= 1 << (j - 1)
        j = pj
    tour.append(0)
    tour.reverse()
    return best, tour


def gtsp_brute_force(cost, clusters):
    """Exhaustive cyclic GTSP optimum: one node per cluster, cluster 0 first.
    Returns (cost, node tour)."""
    best, best_tour = math.inf, None
    rest = list(range(1, len(clusters)))
    for first in clusters[0]:
        for perm in itertools.permutations(rest):
            pools = [clusters[i] for i in perm]
            for combo in itertools.product(*pools):
                nodes = (first,) + combo
                total = 0.0
                for a, b in zip(nodes, nodes[1:] + nodes[:1]):
                    total += cost[a][b]
                    if total >= best:
                        break
                else:
                    best, best_tour = total, list(nodes)
    return best, best_tour


def fd_gradients(fun, arrays, h=1e-5):
    """Central finite differences of scalar fun() with respect to each array
    in `arrays`, perturbed in place."""
    out = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat, gf = arr.ravel(), g.ravel()
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            fp = fun()
            flat[i] = old - h
            fm = fun()
            flat[i] = old
            gf[i] = (fp - fm) / (2.0 * h)
        out.append(g)
    return out


def discounted_returns(rewards, gamma):
    """Return-to-go per step, computed right to left."""
    out = np.zeros(len(rewards))
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out
