"""Grid kernels: segment deposition, crossing counts, intersection tests.

Every public kernel dispatches to a numba loop implementation or a
vectorized numpy implementation according to :mod:`transportlab.backend`.
Both variants visit segments in input order and touch each cell at most
once per segment, so results agree to floating-point roundoff.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import USE_NUMBA, njit, prange


# ---------------------------------------------------------------------------
# exact segment-to-grid deposition


@njit(cache=True)
def _deposit_nb(values, ox, oy, cell, ax, ay, ex, ey, lam):
    ny, nx = values.shape
    inv_area = 1.0 / (cell * cell)
    for k in range(ax.shape[0]):
        x0 = ax[k]
        y0 = ay[k]
        dx = ex[k] - x0
        dy = ey[k] - y0
        seg_len = math.sqrt(dx * dx + dy * dy)
        if seg_len <= 0.0:
            continue
        w = lam[k] * inv_area
        ix = int(math.floor((x0 - ox) / cell))
        iy = int(math.floor((y0 - oy) / cell))
        if ix < 0:
            ix = 0
        elif ix > nx - 1:
            ix = nx - 1
        if iy < 0:
            iy = 0
        elif iy > ny - 1:
            iy = ny - 1
        step_x = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
        step_y = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
        if step_x > 0:
            t_max_x = (ox + (ix + 1) * cell - x0) / dx
            t_dx = cell / dx
        elif step_x < 0:
            t_max_x = (ox + ix * cell - x0) / dx
            t_dx = -cell / dx
        else:
            t_max_x = math.inf
            t_dx = math.inf
        if step_y > 0:
            t_max_y = (oy + (iy + 1) * cell - y0) / dy
            t_dy = cell / dy
        elif step_y < 0:
            t_max_y = (oy + iy * cell - y0) / dy
            t_dy = -cell / dy
        else:
            t_max_y = math.inf
            t_dy = math.inf
        t = 0.0
        guard = 4 * (nx + ny) + 8
        while guard > 0:
            guard -= 1
            t_next = t_max_x if t_max_x < t_max_y else t_max_y
            if t_next > 1.0:
                t_next = 1.0
            if t_next > t:
                values[iy, ix] += w * (t_next - t) * seg_len
            if t_next >= 1.0:
                break
            advance_x = t_max_x <= t_max_y
            advance_y = t_max_y <= t_max_x
            if advance_x:
                ix += step_x
                t_max_x += t_dx
                if ix < 0:
                    ix = 0
                elif ix > nx - 1:
                    ix = nx - 1
            if advance_y:
                iy += step_y
                t_max_y += t_dy
                if iy < 0:
                    iy = 0
                elif iy > ny - 1:
                    iy = ny - 1
            t = t_next


def _deposit_np(values, ox, oy, cell, ax, ay, ex, ey, lam):
    ny, nx = values.shape
    inv_area = 1.0 / (cell * cell)
    for k in range(ax.shape[0]):
        x0, y0 = ax[k], ay[k]
        dx, dy = ex[k] - x0, ey[k] - y0
        seg_len = math.hypot(dx, dy)
        if seg_len <= 0.0:
            continue
        cuts = [np.array([0.0, 1.0])]
        if dx != 0.0:
            gx0 = math.floor((min(x0, x0 + dx) - ox) / cell) + 1
            gx1 = math.ceil((max(x0, x0 + dx) - ox) / cell)
            lines = ox + np.arange(gx0, gx1) * cell
            cuts.append((lines - x0) / dx)
        if dy != 0.0:
            gy0 = math.floor((min(y0, y0 + dy) - oy) / cell) + 1
            gy1 = math.ceil((max(y0, y0 + dy) - oy) / cell)
            lines = oy + np.arange(gy0, gy1) * cell
            cuts.append((lines - y0) / dy)
        t = np.unique(np.clip(np.concatenate(cuts), 0.0, 1.0))
        mids = 0.5 * (t[:-1] + t[1:])
        lens = np.diff(t) * seg_len
        ix = np.clip(np.floor((x0 + mids * dx - ox) / cell).astype(np.int64), 0, nx - 1)
        iy = np.clip(np.floor((y0 + mids * dy - oy) / cell).astype(np.int64), 0, ny - 1)
        np.add.at(values, (iy, ix), lam[k] * inv_area * lens)


def deposit_segments(values, origin, cell, start, end, lam):
    """Add line measures to a grid, exactly splitting each segment by cell.

    ``lam`` is the measure per unit euclidean length of each segment; the
    per-cell increment is lam * length_in_cell / cell_area.  Accumulation
    order is fixed (segments in order, cells along each segment), so the
    result is reproducible bit for bit.
    """
    ax = np.ascontiguousarray(start[:, 0], dtype=np.float64)
    ay = np.ascontiguousarray(start[:, 1], dtype=np.float64)
    ex = np.ascontiguousarray(end[:, 0], dtype=np.float64)
    ey = np.ascontiguousarray(end[:, 1], dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    impl = _deposit_nb if USE_NUMBA else _deposit_np
    impl(values, float(origin[0]), float(origin[1]), float(cell), ax, ay, ex, ey, lam)
    return values


# ---------------------------------------------------------------------------
# signed crossing accumulation for least-gradient reconstruction
#
# Hit criterion shared by both backends: an endpoint q interferes with the
# scan path p0 -> p1 when |cross(r, q - p0)| <= eps * |r| and the projection
# of q - p0 onto r lies in [-eps * |r|, |r|^2 + eps * |r|], with r = p1 - p0.


@njit(cache=True)
def _leg_crossings_nb(px0, py0, px1, py1, ax, ay, bx, by, mass):
    acc = 0.0
    rx = px1 - px0
    ry = py1 - py0
    for k in range(ax.shape[0]):
        dxk = bx[k] - ax[k]
        dyk = by[k] - ay[k]
        d1 = dxk * (py0 - ay[k]) - dyk * (px0 - ax[k])
        d2 = dxk * (py1 - ay[k]) - dyk * (px1 - ax[k])
        if not ((d1 > 0.0 and d2 < 0.0) or (d1 < 0.0 and d2 > 0.0)):
            continue
        d3 = rx * (ay[k] - py0) - ry * (ax[k] - px0)
        d4 = rx * (by[k] - py0) - ry * (bx[k] - px0)
        if (d3 > 0.0 and d4 < 0.0) or (d3 < 0.0 and d4 > 0.0):
            s = dxk * ry - dyk * rx
            acc += -mass[k] if s > 0.0 else mass[k]
    return acc


@njit(cache=True, parallel=True)
def _crossing_field_nb(cx, cy, p0x, p0y, ax, ay, bx, by, mass, eps_hit, detour):
    n_cells = cx.shape[0]
    n_seg = ax.shape[0]
    out = np.empty(n_cells)
    for c in prange(n_cells):
        px1 = cx[c]
        py1 = cy[c]
        rx = px1 - p0x
        ry = py1 - p0y
        rlen = math.sqrt(rx * rx + ry * ry)
        tol_c = eps_hit * rlen
        hi_t = rlen * rlen + tol_c
        hit = False
        for k in range(n_seg):
            wxa = ax[k] - p0x
            wya = ay[k] - p0y
            if abs(rx * wya - ry * wxa) <= tol_c:
                dt = wxa * rx + wya * ry
                if -tol_c <= dt <= hi_t:
                    hit = True
                    break
            wxb = bx[k] - p0x
            wyb = by[k] - p0y
            if abs(rx * wyb - ry * wxb) <= tol_c:
                dt = wxb * rx + wyb * ry
                if -tol_c <= dt <= hi_t:
                    hit = True
                    break
        if not hit:
            out[c] = _leg_crossings_nb(p0x, p0y, px1, py1, ax, ay, bx, by, mass)
        else:
            # two-leg detour through a deterministically perturbed waypoint
            rn = rlen if rlen > 0.0 else 1.0
            wx = 0.5 * (p0x + px1) - detour * ry / rn
            wy = 0.5 * (p0y + py1) + detour * rx / rn
            out[c] = _leg_crossings_nb(
                p0x, p0y, wx, wy, ax, ay, bx, by, mass
            ) + _leg_crossings_nb(wx, wy, px1, py1, ax, ay, bx, by, mass)
    return out


def _leg_crossings_np_block(p0, pts, a, b, mass):
    """Crossing sums for a block of targets; also reports endpoint hits."""
    d = b - a  # (k,2)
    rx = pts[:, 0] - p0[0]  # (B,)
    ry = pts[:, 1] - p0[1]
    d1 = d[:, 0] * (p0[1] - a[:, 1]) - d[:, 1] * (p0[0] - a[:, 0])  # (k,)
    d2 = d[:, 0, None] * (pts[None, :, 1] - a[:, 1, None]) - d[:, 1, None] * (
        pts[None, :, 0] - a[:, 0, None]
    )  # (k,B)
    wax = a[:, 0, None] - p0[0]  # (k,1)
    way = a[:, 1, None] - p0[1]
    wbx = b[:, 0, None] - p0[0]
    wby = b[:, 1, None] - p0[1]
    d3 = rx[None, :] * way - ry[None, :] * wax  # (k,B)
    d4 = rx[None, :] * wby - ry[None, :] * wbx
    straddle_seg = ((d1[:, None] > 0) & (d2 < 0)) | ((d1[:, None] < 0) & (d2 > 0))
    straddle_ray = ((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0))
    s = d[:, 0, None] * ry[None, :] - d[:, 1, None] * rx[None, :]
    contrib = np.where(s > 0, -mass[:, None], mass[:, None])
    acc = np.sum(contrib * (straddle_seg & straddle_ray), axis=0)  # (B,)
    return acc, (rx, ry, wax, way, wbx, wby, d3, d4)


def _crossing_field_np(cx, cy, p0x, p0y, ax, ay, bx, by, mass, eps_hit, detour):
    p0 = np.array([p0x, p0y])
    a = np.stack([ax, ay], axis=1)
    b = np.stack([bx, by], axis=1)
    n = cx.shape[0]
    out = np.empty(n)
    block = max(1, int(2**22 // max(len(ax), 1)))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        pts = np.stack([cx[lo:hi], cy[lo:hi]], axis=1)
        acc, (rx, ry, wax, way, wbx, wby, d3, d4) = _leg_crossings_np_block(
            p0, pts, a, b, mass
        )
        rlen = np.hypot(rx, ry)
        tol_c = eps_hit * rlen  # (B,)
        hi_t = rlen * rlen + tol_c
        dta = wax * rx[None, :] + way * ry[None, :]
        dtb = wbx * rx[None, :] + wby * ry[None, :]
        hit_a = (np.abs(d3) <= tol_c) & (dta >= -tol_c) & (dta <= hi_t)
        hit_b = (np.abs(d4) <= tol_c) & (dtb >= -tol_c) & (dtb <= hi_t)
        hits = (hit_a | hit_b).any(axis=0)
        out[lo:hi] = acc
        if np.any(hits):
            rn = np.where(rlen > 0, rlen, 1.0)
            for t in np.nonzero(hits)[0]:
                cpt = pts[t]
                wpt = 0.5 * (p0 + cpt) + detour * np.array(
                    [-(cpt[1] - p0[1]), cpt[0] - p0[0]]
                ) / rn[t]
                acc1, _ = _leg_crossings_np_block(p0, wpt[None, :], a, b, mass)
                acc2, _ = _leg_crossings_np_block(wpt, cpt[None, :], a, b, mass)
                out[lo + t] = acc1[0] + acc2[0]
    return out


def crossing_field(centers, anchor, seg_a, seg_b, mass, eps_hit, detour):
    """Signed mass crossed by scan paths from an anchor to each center.

    A path crossing a segment oriented a -> b from its left side to its
    right side contributes +mass.  Paths passing within ``eps_hit`` of a
    segment endpoint are replaced by a two-leg detour through a waypoint
    perturbed by ``detour`` off the midpoint.
    """
    cx = np.ascontiguousarray(centers[:, 0], dtype=np.float64)
    cy = np.ascontiguousarray(centers[:, 1], dtype=np.float64)
    ax = np.ascontiguousarray(seg_a[:, 0], dtype=np.float64)
    ay = np.ascontiguousarray(seg_a[:, 1], dtype=np.float64)
    bx = np.ascontiguousarray(seg_b[:, 0], dtype=np.float64)
    by = np.ascontiguousarray(seg_b[:, 1], dtype=np.float64)
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    impl = _crossing_field_nb if USE_NUMBA else _crossing_field_np
    return impl(
        cx, cy, float(anchor[0]), float(anchor[1]), ax, ay, bx, by, mass,
        float(eps_hit), float(detour),
    )


# ---------------------------------------------------------------------------
# pairwise proper-intersection detection


@njit(cache=True)
def _proper_cross(x1, y1, x2, y2, x3, y3, x4, y4, tol):
    d1x = x2 - x1
    d1y = y2 - y1
    d2x = x4 - x3
    d2y = y4 - y3
    den = d1x * d2y - d1y * d2x
    ex = x3 - x1
    ey = y3 - y1
    if den != 0.0:
        t = (ex * d2y - ey * d2x) / den
        uu = (ex * d1y - ey * d1x) / den
        if 0.0 < t < 1.0 and 0.0 < uu < 1.0:
            px = x1 + t * d1x
            py = y1 + t * d1y
            t2 = tol * tol
            if (px - x1) * (px - x1) + (py - y1) * (py - y1) <= t2:
                return False
            if (px - x2) * (px - x2) + (py - y2) * (py - y2) <= t2:
                return False
            if (px - x3) * (px - x3) + (py - y3) * (py - y3) <= t2:
                return False
            if (px - x4) * (px - x4) + (py - y4) * (py - y4) <= t2:
                return False
            return True
        return False
    # parallel: collinear overlap of positive length counts as crossing
    l1 = math.sqrt(d1x * d1x + d1y * d1y)
    if l1 <= 0.0:
        return False
    off = abs(ex * d1y - ey * d1x) / l1
    if off > tol:
        return False
    t3 = (ex * d1x + ey * d1y) / (l1 * l1)
    t4 = ((x4 - x1) * d1x + (y4 - y1) * d1y) / (l1 * l1)
    lo = t3 if t3 < t4 else t4
    hi = t4 if t3 < t4 else t3
    ov_lo = lo if lo > 0.0 else 0.0
    ov_hi = hi if hi < 1.0 else 1.0
    return (ov_hi - ov_lo) * l1 > tol


@njit(cache=True)
def _crossing_pairs_nb(ax, ay, bx, by, tol):
    n = ax.shape[0]
    cap = 64
    out_i = np.empty(cap, np.int64)
    out_j = np.empty(cap, np.int64)
    cnt = 0
    for i in range(n):
        for j in range(i + 1, n):
            if _proper_cross(
                ax[i], ay[i], bx[i], by[i], ax[j], ay[j], bx[j], by[j], tol
            ):
                if cnt == cap:
                    cap *= 2
                    tmp_i = np.empty(cap, np.int64)
                    tmp_j = np.empty(cap, np.int64)
                    tmp_i[:cnt] = out_i[:cnt]
                    tmp_j[:cnt] = out_j[:cnt]
                    out_i = tmp_i
                    out_j = tmp_j
                out_i[cnt] = i
                out_j[cnt] = j
                cnt += 1
    return out_i[:cnt], out_j[:cnt]


def _crossing_pairs_np(ax, ay, bx, by, tol):
    n = ax.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    d1x, d1y = bx[ii] - ax[ii], by[ii] - ay[ii]
    d2x, d2y = bx[jj] - ax[jj], by[jj] - ay[jj]
    ex, ey = ax[jj] - ax[ii], ay[jj] - ay[ii]
    den = d1x * d2y - d1y * d2x
    safe = np.where(den != 0, den, 1.0)
    t = (ex * d2y - ey * d2x) / safe
    uu = (ex * d1y - ey * d1x) / safe
    inside = (den != 0) & (t > 0) & (t < 1) & (uu > 0) & (uu < 1)
    px = ax[ii] + t * d1x
    py = ay[ii] + t * d1y
    clear = np.ones_like(inside)
    for qx, qy in ((ax, ay), (bx, by)):
        for idx in (ii, jj):
            clear &= (px - qx[idx]) ** 2 + (py - qy[idx]) ** 2 > tol**2
    res = inside & clear
    par = den == 0
    if np.any(par):
        l1 = np.hypot(d1x, d1y)
        ok = par & (l1 > 0)
        safe_l = np.where(l1 > 0, l1, 1.0)
        off = np.abs(ex * d1y - ey * d1x) / safe_l
        t3 = (ex * d1x + ey * d1y) / safe_l**2
        t4 = ((bx[jj] - ax[ii]) * d1x + (by[jj] - ay[ii]) * d1y) / safe_l**2
        lo = np.minimum(t3, t4)
        hi = np.maximum(t3, t4)
        overlap = (np.minimum(hi, 1.0) - np.maximum(lo, 0.0)) * l1
        res |= ok & (off <= tol) & (overlap > tol)
    return ii[res], jj[res]


def crossing_pairs(seg_a, seg_b, tol):
    """Indices of segment pairs that cross at interior points."""
    ax = np.ascontiguousarray(seg_a[:, 0], dtype=np.float64)
    ay = np.ascontiguousarray(seg_a[:, 1], dtype=np.float64)
    bx = np.ascontiguousarray(seg_b[:, 0], dtype=np.float64)
    by = np.ascontiguousarray(seg_b[:, 1], dtype=np.float64)
    impl = _crossing_pairs_nb if USE_NUMBA else _crossing_pairs_np
    i, j = impl(ax, ay, bx, by, float(tol))
    return np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64)
