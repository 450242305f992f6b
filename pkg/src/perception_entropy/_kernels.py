"""Compiled per-voxel measurement kernels.

All kernels release the GIL so callers may split the voxel array into chunks
and run them on a thread pool.
"""

import math

import numpy as np
from numba import njit

_SQRT3 = math.sqrt(3.0)


@njit(cache=True, nogil=True)
def _slab(o, d, lo, hi):
    """Parametric interval ``[t0, t1]`` of the line ``o + t d`` inside a box.

    Returns ``t0 > t1`` when the line misses.
    """
    t0 = -np.inf
    t1 = np.inf
    for k in range(3):
        if d[k] == 0.0:
            if o[k] < lo[k] or o[k] > hi[k]:
                return 1.0, 0.0
        else:
            a = (lo[k] - o[k]) / d[k]
            b = (hi[k] - o[k]) / d[k]
            if a > b:
                a, b = b, a
            if a > t0:
                t0 = a
            if b < t1:
                t1 = b
    return t0, t1


@njit(cache=True, nogil=True)
def segment_blocked(o, d, t_max, boxes, eps):
    lo = np.empty(3)
    hi = np.empty(3)
    for b in range(boxes.shape[0]):
        for k in range(3):
            lo[k] = boxes[b, k]
            hi[k] = boxes[b, 3 + k]
        t0, t1 = _slab(o, d, lo, hi)
        if t0 <= t1 and t0 < t_max and t1 > eps:
            return True
    return False


@njit(cache=True, nogil=True)
def lidar_counts(centers, origin, rot, zenith, n_az, dphi, max_range, boxes, half, eps):
    """Beam hits per voxel.

    ``rot`` maps sensor to ground, ``zenith`` is sorted ascending.  Candidate
    beams are pruned with the bounding cone of the voxel, then each candidate
    gets an exact ray/box test followed by the occlusion test.
    """
    n = centers.shape[0]
    nch = zenith.shape[0]
    out = np.zeros(n, dtype=np.int64)
    st = np.sin(zenith)
    ct = np.cos(zenith)
    phis = np.arange(n_az) * dphi
    cp = np.cos(phis)
    sp = np.sin(phis)
    radius = half * _SQRT3
    zero = np.zeros(3)
    lo = np.empty(3)
    hi = np.empty(3)
    d = np.empty(3)
    for i in range(n):
        c0 = centers[i, 0] - origin[0]
        c1 = centers[i, 1] - origin[1]
        c2 = centers[i, 2] - origin[2]
        dist = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
        if dist - radius > max_range:
            continue
        lo[0] = c0 - half
        lo[1] = c1 - half
        lo[2] = c2 - half
        hi[0] = c0 + half
        hi[1] = c1 + half
        hi[2] = c2 + half
        # sensor-frame direction of the center
        s0 = rot[0, 0] * c0 + rot[1, 0] * c1 + rot[2, 0] * c2
        s1 = rot[0, 1] * c0 + rot[1, 1] * c1 + rot[2, 1] * c2
        s2 = rot[0, 2] * c0 + rot[1, 2] * c1 + rot[2, 2] * c2

        all_beams = dist <= radius * (1.0 + 1e-9) + 1e-12
        ch_lo = 0
        ch_hi = nch - 1
        j_lo = 0
        j_hi = n_az - 1
        if not all_beams:
            alpha = math.asin(radius / dist) + 1e-9
            cz = s2 / dist
            cz = min(1.0, max(-1.0, cz))
            theta_c = math.acos(cz)
            z_lo = theta_c - alpha
            z_hi = theta_c + alpha
            ch_lo = np.searchsorted(zenith, z_lo - 1e-12)
            ch_hi = np.searchsorted(zenith, z_hi + 1e-12, side="right") - 1
            if ch_lo > ch_hi:
                continue
            if z_lo > 0.0 and z_hi < math.pi:
                ratio = math.sin(alpha) / math.sin(theta_c)
                w = math.pi / 2.0 if ratio >= 1.0 else math.asin(ratio)
                phi_c = math.atan2(s1, s0)
                j_lo = int(math.floor((phi_c - w) / dphi)) - 1
                j_hi = int(math.floor((phi_c + w) / dphi)) + 1
                if j_hi - j_lo + 1 >= n_az:
                    j_lo = 0
                    j_hi = n_az - 1
        count = 0
        for jj in range(j_lo, j_hi + 1):
            j = jj % n_az
            for ch in range(ch_lo, ch_hi + 1):
                v0 = st[ch] * cp[j]
                v1 = st[ch] * sp[j]
                v2 = ct[ch]
                d[0] = rot[0, 0] * v0 + rot[0, 1] * v1 + rot[0, 2] * v2
                d[1] = rot[1, 0] * v0 + rot[1, 1] * v1 + rot[1, 2] * v2
                d[2] = rot[2, 0] * v0 + rot[2, 1] * v1 + rot[2, 2] * v2
                t0, t1 = _slab(zero, d, lo, hi)
                if t0 < 0.0:
                    t0 = 0.0
                if t1 < t0 or t0 > max_range:
                    continue
                if boxes.shape[0] > 0 and segment_blocked(origin, d, t0, boxes, eps):
                    continue
                count += 1
        out[i] = count
    return out


@njit(cache=True, nogil=True)
def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@njit(cache=True, nogil=True)
def convex_hull(px, py, hx, hy):
    """Monotone-chain hull of a small point set, counter-clockwise.

    Writes vertices into ``hx``/``hy`` (length >= 2 n) and returns their count.
    """
    n = px.shape[0]
    idx = np.empty(n, dtype=np.int64)
    # insertion sort by (x, y); n is tiny
    for a in range(n):
        idx[a] = a
    for a in range(1, n):
        key = idx[a]
        b = a - 1
        while b >= 0 and (px[idx[b]] > px[key] or (px[idx[b]] == px[key] and py[idx[b]] > py[key])):
            idx[b + 1] = idx[b]
            b -= 1
        idx[b + 1] = key
    k = 0
    for a in range(n):
        p = idx[a]
        while k >= 2 and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], px[p], py[p]) <= 0.0:
            k -= 1
        hx[k] = px[p]
        hy[k] = py[p]
        k += 1
    lower = k + 1
    for a in range(n - 2, -1, -1):
        p = idx[a]
        while k >= lower and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], px[p], py[p]) <= 0.0:
            k -= 1
        hx[k] = px[p]
        hy[k] = py[p]
        k += 1
    return k - 1


@njit(cache=True, nogil=True)
def count_pixel_centers(hx, hy, m, width, height):
    """Pixel centers ``(u + 0.5, v + 0.5)`` inside a convex polygon (boundary included)."""
    ymin = hy[0]
    ymax = hy[0]
    for a in range(1, m):
        ymin = min(ymin, hy[a])
        ymax = max(ymax, hy[a])
    r0 = max(0, int(math.ceil(ymin - 0.5)))
    r1 = min(height - 1, int(math.floor(ymax - 0.5)))
    total = 0
    for r in range(r0, r1 + 1):
        y = r + 0.5
        xl = np.inf
        xr = -np.inf
        for a in range(m):
            b = a + 1 if a + 1 < m else 0
            ya = hy[a]
            yb = hy[b]
            if (ya <= y <= yb) or (yb <= y <= ya):
                if ya == yb:
                    xl = min(xl, hx[a], hx[b])
                    xr = max(xr, hx[a], hx[b])
                else:
                    x = hx[a] + (y - ya) * (hx[b] - hx[a]) / (yb - ya)
                    xl = min(xl, x)
                    xr = max(xr, x)
        if xl > xr:
            continue
        u0 = max(0, int(math.ceil(xl - 0.5)))
        u1 = min(width - 1, int(math.floor(xr - 0.5)))
        if u1 >= u0:
            total += u1 - u0 + 1
    return total


@njit(cache=True, nogil=True)
def camera_counts(centers, origin, rot, focal, width, height, max_range, boxes, half, eps):
    """Covered pixel centers per voxel; ``rot`` maps ground to the optical frame."""
    n = centers.shape[0]
    out = np.zeros(n, dtype=np.int64)
    cx = width / 2.0
    cy = height / 2.0
    offs = np.empty((8, 3))
    k = 0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                for r in range(3):
                    offs[k, r] = half * (rot[r, 0] * sx + rot[r, 1] * sy + rot[r, 2] * sz)
                k += 1
    px = np.empty(8)
    py = np.empty(8)
    hx = np.empty(17)
    hy = np.empty(17)
    d = np.empty(3)
    for i in range(n):
        c0 = centers[i, 0] - origin[0]
        c1 = centers[i, 1] - origin[1]
        c2 = centers[i, 2] - origin[2]
        dist = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
        if dist > max_range or dist == 0.0:
            continue
        p0 = rot[0, 0] * c0 + rot[0, 1] * c1 + rot[0, 2] * c2
        p1 = rot[1, 0] * c0 + rot[1, 1] * c1 + rot[1, 2] * c2
        p2 = rot[2, 0] * c0 + rot[2, 1] * c1 + rot[2, 2] * c2
        if p2 <= 0.0:
            continue
        visible = True
        umin = np.inf
        umax = -np.inf
        vmin = np.inf
        vmax = -np.inf
        for k in range(8):
            z = p2 + offs[k, 2]
            if z <= 0.0:
                visible = False
                break
            u = focal * (p0 + offs[k, 0]) / z + cx
            v = focal * (p1 + offs[k, 1]) / z + cy
            px[k] = u
            py[k] = v
            umin = min(umin, u)
            umax = max(umax, u)
            vmin = min(vmin, v)
            vmax = max(vmax, v)
        if not visible:
            continue
        if umax < 0.5 or umin > width - 0.5 or vmax < 0.5 or vmin > height - 0.5:
            continue
        if boxes.shape[0] > 0:
            d[0] = c0 / dist
            d[1] = c1 / dist
            d[2] = c2 / dist
            if segment_blocked(origin, d, dist, boxes, eps):
                continue
        m = convex_hull(px, py, hx, hy)
        out[i] = count_pixel_centers(hx, hy, m, width, height)
    return out
