"""Numba kernels: the hot loops behind walks, loop erasure, the window tree
sampler and the heat-kernel iteration.

Everything here is deterministic given (seed, stream): the RNG is a
hand-rolled xoshiro256++ seeded through splitmix64 from (seed, stream, salt),
so identical inputs reproduce identical trajectories bit for bit, regardless
of how many worker threads the caller uses. Pure-Python reference
implementations of each algorithm live in the public modules and serve as the
test oracles for these kernels.

Points are packed into non-negative int64 codes (21 bits per coordinate,
offset 2^20) — the same injective code used to derive per-vertex streams.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# Direction tables, same order as geometry.DIRECTIONS. Opposite of d is d^1.
_DX = np.array([1, -1, 0, 0, 0, 0], dtype=np.int64)
_DY = np.array([0, 0, 1, -1, 0, 0], dtype=np.int64)
_DZ = np.array([0, 0, 0, 0, 1, -1], dtype=np.int64)

_POFF = np.int64(1 << 20)

# dense state codes: 0 empty, 1..6 attached (parent = pos + DIR[state-1]), 7 root
_ROOT_STATE = np.uint8(7)


# ---------------------------------------------------------------------------
# RNG: splitmix64 seeding + xoshiro256++
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _splitmix64(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _rng_init(seed, stream, salt):
    """xoshiro256++ state from (seed, stream, salt), all taken mod 2^64."""
    z = np.uint64(seed)
    z = _splitmix64(z ^ (np.uint64(stream) * np.uint64(0xA3EC647659359ACD)))
    z = _splitmix64(z ^ (np.uint64(salt) * np.uint64(0x9E6C63D0876A9A63)))
    s = np.empty(4, dtype=np.uint64)
    acc = z
    for i in range(4):
        acc = _splitmix64(acc + np.uint64(0x9E3779B97F4A7C15))
        s[i] = acc
    if s[0] == np.uint64(0) and s[1] == np.uint64(0) and s[2] == np.uint64(0) and s[3] == np.uint64(0):
        s[0] = np.uint64(1)
    return s


@njit(cache=True, nogil=True)
def _rng_next(s):
    x03 = s[0] + s[3]
    result = ((x03 << np.uint64(23)) | (x03 >> np.uint64(41))) + s[0]
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << np.uint64(45)) | (s[3] >> np.uint64(19))
    return result


@njit(cache=True, nogil=True)
def _rand_dir(s):
    """Exactly uniform direction index in 0..5 (3-bit rejection)."""
    while True:
        d = _rng_next(s) & np.uint64(7)
        if d < np.uint64(6):
            return np.int64(d)


@njit(cache=True, nogil=True)
def _rand_below(s, n):
    """Exactly uniform integer in 0..n-1 for small n (mask rejection)."""
    mask = np.uint64(1)
    nn = np.uint64(n)
    while mask < nn - np.uint64(1):
        mask = (mask << np.uint64(1)) | np.uint64(1)
    while True:
        r = _rng_next(s) & mask
        if r < nn:
            return np.int64(r)


# ---------------------------------------------------------------------------
# Packed points and open-addressing maps (int64 keys >= 0, -1 = empty slot)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _pack(x, y, z):
    return (x + _POFF) | ((y + _POFF) << 21) | ((z + _POFF) << 42)


@njit(cache=True, nogil=True)
def _unpack_x(code):
    return (code & np.int64(0x1FFFFF)) - _POFF


@njit(cache=True, nogil=True)
def _unpack_y(code):
    return ((code >> 21) & np.int64(0x1FFFFF)) - _POFF


@njit(cache=True, nogil=True)
def _unpack_z(code):
    return ((code >> 42) & np.int64(0x1FFFFF)) - _POFF


@njit(cache=True, nogil=True)
def _map_get(keys, vals, key):
    mask = keys.shape[0] - 1
    i = np.int64(_splitmix64(np.uint64(key))) & mask
    while True:
        k = keys[i]
        if k == key:
            return vals[i]
        if k == -1:
            return np.int64(-1)
        i = (i + 1) & mask


@njit(cache=True, nogil=True)
def _map_put(keys, vals, key, value):
    """Insert or overwrite; returns the slot index used."""
    mask = keys.shape[0] - 1
    i = np.int64(_splitmix64(np.uint64(key))) & mask
    while True:
        k = keys[i]
        if k == key or k == -1:
            keys[i] = key
            vals[i] = value
            return i
        i = (i + 1) & mask


@njit(cache=True, nogil=True)
def _map_grow(keys, vals):
    n = keys.shape[0]
    nkeys = np.full(2 * n, -1, dtype=np.int64)
    nvals = np.empty(2 * n, dtype=np.int64)
    for i in range(n):
        if keys[i] != -1:
            _map_put(nkeys, nvals, keys[i], vals[i])
    return nkeys, nvals


@njit(cache=True, nogil=True)
def build_set(codes):
    """Frozen membership table for hit-set walk rules."""
    cap = 16
    while cap < 2 * codes.shape[0] + 4:
        cap *= 2
    keys = np.full(cap, -1, dtype=np.int64)
    vals = np.zeros(cap, dtype=np.int64)
    for i in range(codes.shape[0]):
        _map_put(keys, vals, codes[i], 1)
    return keys, vals


# ---------------------------------------------------------------------------
# Plain walks (path-collecting)
# ---------------------------------------------------------------------------

# stop modes for walk_collect
MODE_EXIT_LINF = 0
MODE_EXIT_EUCLID = 1
MODE_HIT_SET = 2
MODE_FIXED_STEPS = 3

OUT_RULE = 0
OUT_CAP = 2


@njit(cache=True, nogil=True)
def walk_collect(x0, y0, z0, mode, r_int, r_sq, cx, cy, cz,
                 set_keys, set_vals, step_cap, seed, stream, salt):
    """Run one SRW, recording every vertex. Returns (path, outcome).

    mode 0: stop when linf distance from (cx,cy,cz) exceeds r_int
    mode 1: stop when squared Euclidean distance from center exceeds r_sq
    mode 2: stop when the current vertex is in the packed set
    mode 3: run exactly step_cap steps
    """
    s = _rng_init(seed, stream, salt)
    cap = 256
    px = np.empty(cap, dtype=np.int64)
    py = np.empty(cap, dtype=np.int64)
    pz = np.empty(cap, dtype=np.int64)
    x, y, z = x0, y0, z0
    px[0], py[0], pz[0] = x, y, z
    n = 1
    outcome = OUT_CAP
    if mode == MODE_HIT_SET and _map_get(set_keys, set_vals, _pack(x, y, z)) != -1:
        outcome = OUT_RULE
        step_cap = 0
    steps = np.int64(0)
    while steps < step_cap:
        d = _rand_dir(s)
        x += _DX[d]
        y += _DY[d]
        z += _DZ[d]
        steps += 1
        if n == cap:
            cap *= 2
            qx = np.empty(cap, dtype=np.int64)
            qy = np.empty(cap, dtype=np.int64)
            qz = np.empty(cap, dtype=np.int64)
            qx[:n] = px
            qy[:n] = py
            qz[:n] = pz
            px, py, pz = qx, qy, qz
        px[n], py[n], pz[n] = x, y, z
        n += 1
        if mode == MODE_EXIT_LINF:
            dx = x - cx
            dy = y - cy
            dz = z - cz
            if dx < 0:
                dx = -dx
            if dy < 0:
                dy = -dy
            if dz < 0:
                dz = -dz
            m = dx
            if dy > m:
                m = dy
            if dz > m:
                m = dz
            if m >= r_int:
                outcome = OUT_RULE
                break
        elif mode == MODE_EXIT_EUCLID:
            dx = x - cx
            dy = y - cy
            dz = z - cz
            if dx * dx + dy * dy + dz * dz >= r_sq:
                outcome = OUT_RULE
                break
        elif mode == MODE_HIT_SET:
            if _map_get(set_keys, set_vals, _pack(x, y, z)) != -1:
                outcome = OUT_RULE
                break
    if mode == MODE_FIXED_STEPS:
        outcome = OUT_RULE
    path = np.empty((n, 3), dtype=np.int64)
    for i in range(n):
        path[i, 0] = px[i]
        path[i, 1] = py[i]
        path[i, 2] = pz[i]
    return path, outcome


# ---------------------------------------------------------------------------
# Fused walk + loop erasure: length of the erased path at Euclidean exit
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def lerw_exit_length(r_sq, seed, stream):
    """Steps of the loop erasure of an SRW from 0 run until |S|^2 >= r_sq.

    The loop erasure is maintained live on a stack; map entries are validated
    against the live stack so popped (stale) entries need no deletion.
    """
    s = _rng_init(seed, stream, np.uint64(0))
    cap = 1 << 12
    keys = np.full(cap, -1, dtype=np.int64)
    vals = np.empty(cap, dtype=np.int64)
    cnt = 0
    scap = 1 << 10
    stack = np.empty(scap, dtype=np.int64)
    x = np.int64(0)
    y = np.int64(0)
    z = np.int64(0)
    code = _pack(x, y, z)
    stack[0] = code
    top = 1
    _map_put(keys, vals, code, 0)
    cnt = 1
    while True:
        d = _rand_dir(s)
        x += _DX[d]
        y += _DY[d]
        z += _DZ[d]
        code = _pack(x, y, z)
        j = _map_get(keys, vals, code)
        if j >= 0 and j < top and stack[j] == code:
            top = j + 1
        else:
            if top == scap:
                scap *= 2
                nstack = np.empty(scap, dtype=np.int64)
                nstack[:top] = stack[:top]
                stack = nstack
            stack[top] = code
            if 2 * (cnt + 1) > keys.shape[0]:
                keys, vals = _map_grow(keys, vals)
            _map_put(keys, vals, code, top)
            cnt += 1
            top += 1
        if x * x + y * y + z * z >= r_sq:
            return np.int64(top - 1)


@njit(cache=True, nogil=True)
def lerw_exit_length_batch(r_sq, trials, seed, stream0):
    """lerw_exit_length over trials with streams stream0..stream0+trials-1."""
    out = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        out[t] = lerw_exit_length(r_sq, seed, np.uint64(stream0) + np.uint64(t))
    return out


# ---------------------------------------------------------------------------
# Window tree sampler
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _attach_one(state, D, Rd, sp_keys, sp_vals, sp_cnt, vcode, pcode, is_root):
    """Record vertex vcode with parent pcode. Returns (sp_keys, sp_vals, sp_cnt).

    Inside the dense cube the parent is stored as a direction code; outside it
    goes to the spill table keyed by packed point.
    """
    x = _unpack_x(vcode)
    y = _unpack_y(vcode)
    z = _unpack_z(vcode)
    ix = x + Rd
    iy = y + Rd
    iz = z + Rd
    if 0 <= ix < D and 0 <= iy < D and 0 <= iz < D:
        lin = (ix * D + iy) * D + iz
        if is_root:
            state[lin] = _ROOT_STATE
        else:
            dx = _unpack_x(pcode) - x
            dy = _unpack_y(pcode) - y
            dz = _unpack_z(pcode) - z
            dcode = np.uint8(0)
            for d in range(6):
                if _DX[d] == dx and _DY[d] == dy and _DZ[d] == dz:
                    dcode = np.uint8(d + 1)
                    break
            state[lin] = dcode
    else:
        if 2 * (sp_cnt + 1) > sp_keys.shape[0]:
            sp_keys, sp_vals = _map_grow(sp_keys, sp_vals)
        _map_put(sp_keys, sp_vals, vcode, pcode if not is_root else -2)
        sp_cnt += 1
    return sp_keys, sp_vals, sp_cnt


@njit(cache=True, nogil=True)
def wilson_window(R, KR, pad, order_mode, order_supplied, seed, branch_cap,
                  retry_cap):
    """Sample the window tree on B_inf(0, R); walks stop/reject at d_inf >= KR.

    order_mode: 0 lexicographic, 1 outward shells, 2 supplied (packed codes).
    A candidate whose walks escape retry_cap times in a row is counted in
    failed_candidates. Returns (state, spill_keys, spill_vals, stats) where
    stats = [walk_steps, escapes, branches, attached, spill_count,
    max_branch_steps, failed_candidates, root_steps].
    """
    Rd = np.int64(R + pad)
    D = np.int64(2 * Rd + 1)
    state = np.zeros(D * D * D, dtype=np.uint8)

    sp_keys = np.full(1 << 14, -1, dtype=np.int64)
    sp_vals = np.empty(1 << 14, dtype=np.int64)
    sp_cnt = np.int64(0)

    # reusable walk buffers
    mp_keys = np.full(1 << 14, -1, dtype=np.int64)
    mp_vals = np.empty(1 << 14, dtype=np.int64)
    stack = np.empty(1 << 12, dtype=np.int64)
    touched = np.empty(1 << 12, dtype=np.int64)

    stats = np.zeros(8, dtype=np.int64)

    # --- root branch: loop erasure of the walk from 0 to the exit of B_inf(0, K*R)
    s = _rng_init(seed, np.uint64(_pack(0, 0, 0)), np.uint64(0))
    x = np.int64(0)
    y = np.int64(0)
    z = np.int64(0)
    code = _pack(x, y, z)
    stack[0] = code
    top = np.int64(1)
    ntouch = np.int64(0)
    slot = _map_put(mp_keys, mp_vals, code, 0)
    touched[ntouch] = slot
    ntouch += 1
    mp_cnt = np.int64(1)
    root_steps = np.int64(0)
    while True:
        d = _rand_dir(s)
        x += _DX[d]
        y += _DY[d]
        z += _DZ[d]
        root_steps += 1
        code = _pack(x, y, z)
        j = _map_get(mp_keys, mp_vals, code)
        if j >= 0 and j < top and stack[j] == code:
            top = j + 1
        else:
            if top == stack.shape[0]:
                nstack = np.empty(2 * stack.shape[0], dtype=np.int64)
                nstack[:top] = stack[:top]
                stack = nstack
            stack[top] = code
            if 2 * (mp_cnt + 1) > mp_keys.shape[0]:
                mp_keys, mp_vals = _map_grow(mp_keys, mp_vals)
                # rebuild touched slots after rehash
                ntouch = 0
                for i in range(mp_keys.shape[0]):
                    if mp_keys[i] != -1:
                        if ntouch == touched.shape[0]:
                            nt = np.empty(2 * touched.shape[0], dtype=np.int64)
                            nt[:ntouch] = touched[:ntouch]
                            touched = nt
                        touched[ntouch] = i
                        ntouch += 1
            slot = _map_put(mp_keys, mp_vals, code, top)
            if ntouch == touched.shape[0]:
                nt = np.empty(2 * touched.shape[0], dtype=np.int64)
                nt[:ntouch] = touched[:ntouch]
                touched = nt
            touched[ntouch] = slot
            ntouch += 1
            mp_cnt += 1
            top += 1
        ax = -x if x < 0 else x
        ay = -y if y < 0 else y
        az = -z if z < 0 else z
        m = ax
        if ay > m:
            m = ay
        if az > m:
            m = az
        if m >= KR:
            break
    stats[7] = root_steps
    for i in range(top):
        vcode = stack[i]
        if i == 0:
            sp_keys, sp_vals, sp_cnt = _attach_one(
                state, D, Rd, sp_keys, sp_vals, sp_cnt, vcode, np.int64(-2), True)
        else:
            sp_keys, sp_vals, sp_cnt = _attach_one(
                state, D, Rd, sp_keys, sp_vals, sp_cnt, vcode, stack[i - 1], False)
    stats[3] = top
    for i in range(ntouch):
        mp_keys[touched[i]] = -1

    # --- branch walks over the window, per order mode
    # big enough for a lex slab (2R+1)^2 or an outward shell 24R^2+2
    chunk = np.empty(24 * R * R + 8 * R + 16, dtype=np.int64)
    ci = np.int64(0)
    while True:
        m_sz = np.int64(0)
        if order_mode == 0:
            if ci > 2 * R:
                break
            zx = ci - R
            for zy in range(-R, R + 1):
                for zz in range(-R, R + 1):
                    chunk[m_sz] = _pack(zx, zy, zz)
                    m_sz += 1
        elif order_mode == 1:
            if ci > R:
                break
            r = ci
            if r == 0:
                chunk[0] = _pack(0, 0, 0)
                m_sz = 1
            else:
                for zx in (-r, r):
                    for zy in range(-r, r + 1):
                        for zz in range(-r, r + 1):
                            chunk[m_sz] = _pack(zx, zy, zz)
                            m_sz += 1
                for zy in (-r, r):
                    for zx in range(-r + 1, r):
                        for zz in range(-r, r + 1):
                            chunk[m_sz] = _pack(zx, zy, zz)
                            m_sz += 1
                for zz in (-r, r):
                    for zx in range(-r + 1, r):
                        for zy in range(-r + 1, r):
                            chunk[m_sz] = _pack(zx, zy, zz)
                            m_sz += 1
        else:
            if ci > 0:
                break
            m_sz = order_supplied.shape[0]
        ci += 1

        for t in range(m_sz):
            if order_mode == 2:
                zcode = order_supplied[t]
            else:
                zcode = chunk[t]
            zx = _unpack_x(zcode)
            zy = _unpack_y(zcode)
            zz = _unpack_z(zcode)
            ixz = zx + Rd
            iyz = zy + Rd
            izz = zz + Rd
            in_dense = 0 <= ixz < D and 0 <= iyz < D and 0 <= izz < D
            if in_dense:
                if state[(ixz * D + iyz) * D + izz] != 0:
                    continue
            else:
                if _map_get(sp_keys, sp_vals, zcode) != -1:
                    continue

            attempt = np.int64(0)
            while True:
                s = _rng_init(seed, np.uint64(zcode), np.uint64(attempt + 1))
                x, y, z = zx, zy, zz
                code = zcode
                top = np.int64(1)
                stack[0] = code
                ntouch = np.int64(0)
                slot = _map_put(mp_keys, mp_vals, code, 0)
                touched[ntouch] = slot
                ntouch += 1
                mp_cnt = np.int64(1)
                hit = np.int64(-1)
                escaped = False
                bsteps = np.int64(0)
                while True:
                    d = _rand_dir(s)
                    x += _DX[d]
                    y += _DY[d]
                    z += _DZ[d]
                    bsteps += 1
                    code = _pack(x, y, z)
                    ix = x + Rd
                    iy = y + Rd
                    iz = z + Rd
                    if 0 <= ix < D and 0 <= iy < D and 0 <= iz < D:
                        if state[(ix * D + iy) * D + iz] != 0:
                            hit = code
                            break
                    else:
                        if _map_get(sp_keys, sp_vals, code) != -1:
                            hit = code
                            break
                    ax = -x if x < 0 else x
                    ay = -y if y < 0 else y
                    az = -z if z < 0 else z
                    mm = ax
                    if ay > mm:
                        mm = ay
                    if az > mm:
                        mm = az
                    if mm >= KR or bsteps >= branch_cap:
                        escaped = True
                        break
                    j = _map_get(mp_keys, mp_vals, code)
                    if j >= 0 and j < top and stack[j] == code:
                        top = j + 1
                    else:
                        if top == stack.shape[0]:
                            nstack = np.empty(2 * stack.shape[0], dtype=np.int64)
                            nstack[:top] = stack[:top]
                            stack = nstack
                        stack[top] = code
                        if 2 * (mp_cnt + 1) > mp_keys.shape[0]:
                            mp_keys, mp_vals = _map_grow(mp_keys, mp_vals)
                            ntouch = 0
                            for i in range(mp_keys.shape[0]):
                                if mp_keys[i] != -1:
                                    if ntouch == touched.shape[0]:
                                        nt = np.empty(2 * touched.shape[0], dtype=np.int64)
                                        nt[:ntouch] = touched[:ntouch]
                                        touched = nt
                                    touched[ntouch] = i
                                    ntouch += 1
                        slot = _map_put(mp_keys, mp_vals, code, top)
                        if ntouch == touched.shape[0]:
                            nt = np.empty(2 * touched.shape[0], dtype=np.int64)
                            nt[:ntouch] = touched[:ntouch]
                            touched = nt
                        touched[ntouch] = slot
                        ntouch += 1
                        mp_cnt += 1
                        top += 1
                stats[0] += bsteps
                if bsteps > stats[5]:
                    stats[5] = bsteps
                for i in range(ntouch):
                    mp_keys[touched[i]] = -1
                if escaped:
                    stats[1] += 1
                    attempt += 1
                    if attempt >= retry_cap:
                        stats[6] += 1
                        break
                    continue
                for i in range(top):
                    pcode = stack[i + 1] if i + 1 < top else hit
                    sp_keys, sp_vals, sp_cnt = _attach_one(
                        state, D, Rd, sp_keys, sp_vals, sp_cnt, stack[i], pcode, False)
                stats[2] += 1
                stats[3] += top
                break

    stats[4] = sp_cnt
    return state, sp_keys, sp_vals, stats


@njit(cache=True, nogil=True)
def export_attached(state, D, Rd, sp_keys, sp_vals):
    """Collect attached vertices as (points, packed parent codes).

    Root's parent code is -2. Order: dense linear scan, then spill slots.
    """
    n = np.int64(0)
    for lin in range(D * D * D):
        if state[lin] != 0:
            n += 1
    for i in range(sp_keys.shape[0]):
        if sp_keys[i] != -1:
            n += 1
    pts = np.empty((n, 3), dtype=np.int64)
    par = np.empty(n, dtype=np.int64)
    k = np.int64(0)
    for lin in range(D * D * D):
        st = state[lin]
        if st == 0:
            continue
        iz = lin % D
        iy = (lin // D) % D
        ix = lin // (D * D)
        x = ix - Rd
        y = iy - Rd
        z = iz - Rd
        pts[k, 0] = x
        pts[k, 1] = y
        pts[k, 2] = z
        if st == _ROOT_STATE:
            par[k] = -2
        else:
            d = st - 1
            par[k] = _pack(x + _DX[d], y + _DY[d], z + _DZ[d])
        k += 1
    for i in range(sp_keys.shape[0]):
        if sp_keys[i] != -1:
            c = sp_keys[i]
            pts[k, 0] = _unpack_x(c)
            pts[k, 1] = _unpack_y(c)
            pts[k, 2] = _unpack_z(c)
            par[k] = sp_vals[i]
            k += 1
    return pts, par


# ---------------------------------------------------------------------------
# Queries on the dense window form
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def ball_volumes(state, D, Rd, cx, cy, cz, radii):
    """BFS ball volumes |B_U(c, r)| for sorted radii; pure dense-region BFS.

    Returns (volumes, max_linf_from_origin, boundary_contact). The caller must
    keep radii within the attached window so the ball cannot leave the dense
    cube; boundary_contact reports any attempt to expand past it.
    """
    rmax = radii[radii.shape[0] - 1]
    dist1 = np.zeros(D * D * D, dtype=np.int32)  # BFS distance + 1; 0 = unseen
    counts = np.zeros(rmax + 1, dtype=np.int64)
    vols = np.zeros(radii.shape[0], dtype=np.int64)
    boundary = False
    ix0 = cx + Rd
    iy0 = cy + Rd
    iz0 = cz + Rd
    if not (0 <= ix0 < D and 0 <= iy0 < D and 0 <= iz0 < D):
        return vols, np.int64(-1), True
    lin0 = (ix0 * D + iy0) * D + iz0
    if state[lin0] == 0:
        return vols, np.int64(-1), True
    q = np.empty(1 << 14, dtype=np.int64)
    q[0] = lin0
    dist1[lin0] = 1
    head = np.int64(0)
    tail = np.int64(1)
    max_linf = np.int64(0)
    while head < tail:
        lin = q[head]
        head += 1
        dv = np.int64(dist1[lin]) - 1
        counts[dv] += 1
        iz = lin % D
        iy = (lin // D) % D
        ix = lin // (D * D)
        ax = ix - Rd
        ay = iy - Rd
        az = iz - Rd
        if ax < 0:
            ax = -ax
        if ay < 0:
            ay = -ay
        if az < 0:
            az = -az
        ml = ax
        if ay > ml:
            ml = ay
        if az > ml:
            ml = az
        if ml > max_linf:
            max_linf = ml
        if dv == rmax:
            continue
        stv = state[lin]
        for d in range(6):
            jx = ix + _DX[d]
            jy = iy + _DY[d]
            jz = iz + _DZ[d]
            if not (0 <= jx < D and 0 <= jy < D and 0 <= jz < D):
                boundary = True
                continue
            nlin = (jx * D + jy) * D + jz
            stu = state[nlin]
            if stu == 0:
                continue
            is_par = stv <= 6 and np.int64(stv) - 1 == d
            is_child = stu <= 6 and np.int64(stu) - 1 == (d ^ 1)
            if not (is_par or is_child):
                continue
            if dist1[nlin] == 0:
                dist1[nlin] = np.int32(dv + 2)
                if tail == q.shape[0]:
                    nq = np.empty(2 * q.shape[0], dtype=np.int64)
                    nq[:tail] = q[:tail]
                    q = nq
                q[tail] = nlin
                tail += 1
    acc = np.int64(0)
    ri = np.int64(0)
    for dv in range(rmax + 1):
        acc += counts[dv]
        while ri < radii.shape[0] and radii[ri] == dv:
            vols[ri] = acc
            ri += 1
    return vols, max_linf, boundary


@njit(cache=True, nogil=True)
def ball_volumes_map(state, D, Rd, cx, cy, cz, radii):
    """ball_volumes with hash-map bookkeeping instead of a dense scratch cube.

    Identical contract; memory scales with the ball size rather than D^3,
    which matters for large windows.
    """
    rmax = radii[radii.shape[0] - 1]
    counts = np.zeros(rmax + 1, dtype=np.int64)
    vols = np.zeros(radii.shape[0], dtype=np.int64)
    boundary = False
    ix0 = cx + Rd
    iy0 = cy + Rd
    iz0 = cz + Rd
    if not (0 <= ix0 < D and 0 <= iy0 < D and 0 <= iz0 < D):
        return vols, np.int64(-1), True
    lin0 = (ix0 * D + iy0) * D + iz0
    if state[lin0] == 0:
        return vols, np.int64(-1), True
    vk = np.full(1 << 13, -1, dtype=np.int64)
    vv = np.empty(1 << 13, dtype=np.int64)
    vcnt = np.int64(1)
    _map_put(vk, vv, lin0, 0)
    q = np.empty(1 << 12, dtype=np.int64)
    qd = np.empty(1 << 12, dtype=np.int32)
    q[0] = lin0
    qd[0] = 0
    head = np.int64(0)
    tail = np.int64(1)
    max_linf = np.int64(0)
    while head < tail:
        lin = q[head]
        dv = np.int64(qd[head])
        head += 1
        counts[dv] += 1
        iz = lin % D
        iy = (lin // D) % D
        ix = lin // (D * D)
        ax = ix - Rd
        ay = iy - Rd
        az = iz - Rd
        if ax < 0:
            ax = -ax
        if ay < 0:
            ay = -ay
        if az < 0:
            az = -az
        ml = ax
        if ay > ml:
            ml = ay
        if az > ml:
            ml = az
        if ml > max_linf:
            max_linf = ml
        if dv == rmax:
            continue
        stv = state[lin]
        for d in range(6):
            jx = ix + _DX[d]
            jy = iy + _DY[d]
            jz = iz + _DZ[d]
            if not (0 <= jx < D and 0 <= jy < D and 0 <= jz < D):
                boundary = True
                continue
            nlin = (jx * D + jy) * D + jz
            stu = state[nlin]
            if stu == 0:
                continue
            is_par = stv <= 6 and np.int64(stv) - 1 == d
            is_child = stu <= 6 and np.int64(stu) - 1 == (d ^ 1)
            if not (is_par or is_child):
                continue
            if _map_get(vk, vv, nlin) == -1:
                if 2 * (vcnt + 1) > vk.shape[0]:
                    vk, vv = _map_grow(vk, vv)
                _map_put(vk, vv, nlin, 1)
                vcnt += 1
                if tail == q.shape[0]:
                    nq = np.empty(2 * q.shape[0], dtype=np.int64)
                    nq[:tail] = q[:tail]
                    q = nq
                    nqd = np.empty(2 * qd.shape[0], dtype=np.int32)
                    nqd[:tail] = qd[:tail]
                    qd = nqd
                q[tail] = nlin
                qd[tail] = np.int32(dv + 1)
                tail += 1
    acc = np.int64(0)
    ri = np.int64(0)
    for dv in range(rmax + 1):
        acc += counts[dv]
        while ri < radii.shape[0] and radii[ri] == dv:
            vols[ri] = acc
            ri += 1
    return vols, max_linf, boundary


@njit(cache=True, nogil=True)
def ball_extract_csr(state, D, Rd, cx, cy, cz, rmax):
    """Extract B_U(c, rmax) in BFS order with in-ball adjacency and full degrees.

    Returns (indptr, indices, mu, cnt_by_dist, max_linf_from_origin, boundary).
    cnt_by_dist[d] = number of ball vertices at tree distance <= d; vertex 0 is
    the center. mu is the full tree degree (edges to out-of-ball children count).
    """
    dist1 = np.zeros(D * D * D, dtype=np.int32)
    id1 = np.zeros(D * D * D, dtype=np.int32)  # BFS id + 1
    boundary = False
    empty_ptr = np.zeros(1, dtype=np.int64)
    empty_idx = np.zeros(0, dtype=np.int32)
    empty_mu = np.zeros(0, dtype=np.float64)
    empty_cnt = np.zeros(1, dtype=np.int64)
    ix0 = cx + Rd
    iy0 = cy + Rd
    iz0 = cz + Rd
    if not (0 <= ix0 < D and 0 <= iy0 < D and 0 <= iz0 < D):
        return empty_ptr, empty_idx, empty_mu, empty_cnt, np.int64(-1), True
    lin0 = (ix0 * D + iy0) * D + iz0
    if state[lin0] == 0:
        return empty_ptr, empty_idx, empty_mu, empty_cnt, np.int64(-1), True
    q = np.empty(1 << 14, dtype=np.int64)
    q[0] = lin0
    dist1[lin0] = 1
    id1[lin0] = 1
    head = np.int64(0)
    tail = np.int64(1)
    max_linf = np.int64(0)
    while head < tail:
        lin = q[head]
        head += 1
        dv = np.int64(dist1[lin]) - 1
        iz = lin % D
        iy = (lin // D) % D
        ix = lin // (D * D)
        ax = ix - Rd
        ay = iy - Rd
        az = iz - Rd
        if ax < 0:
            ax = -ax
        if ay < 0:
            ay = -ay
        if az < 0:
            az = -az
        ml = ax
        if ay > ml:
            ml = ay
        if az > ml:
            ml = az
        if ml > max_linf:
            max_linf = ml
        if dv == rmax:
            continue
        stv = state[lin]
        for d in range(6):
            jx = ix + _DX[d]
            jy = iy + _DY[d]
            jz = iz + _DZ[d]
            if not (0 <= jx < D and 0 <= jy < D and 0 <= jz < D):
                boundary = True
                continue
            nlin = (jx * D + jy) * D + jz
            stu = state[nlin]
            if stu == 0:
                continue
            is_par = stv <= 6 and np.int64(stv) - 1 == d
            is_child = stu <= 6 and np.int64(stu) - 1 == (d ^ 1)
            if not (is_par or is_child):
                continue
            if dist1[nlin] == 0:
                dist1[nlin] = np.int32(dv + 2)
                if tail == q.shape[0]:
                    nq = np.empty(2 * q.shape[0], dtype=np.int64)
                    nq[:tail] = q[:tail]
                    q = nq
                q[tail] = nlin
                tail += 1
                id1[nlin] = np.int32(tail)  # id = tail-1, so id+1 = tail
    nb = tail
    cnt_by_dist = np.zeros(rmax + 2, dtype=np.int64)
    indptr = np.zeros(nb + 1, dtype=np.int64)
    mu = np.zeros(nb, dtype=np.float64)
    # first pass: degrees (full) and in-ball neighbor counts
    deg_in = np.zeros(nb, dtype=np.int32)
    for i in range(nb):
        lin = q[i]
        dv = np.int64(dist1[lin]) - 1
        cnt_by_dist[dv] += 1
        iz = lin % D
        iy = (lin // D) % D
        ix = lin // (D * D)
        stv = state[lin]
        full = np.int64(0)
        nin = np.int32(0)
        for d in range(6):
            jx = ix + _DX[d]
            jy = iy + _DY[d]
            jz = iz + _DZ[d]
            if not (0 <= jx < D and 0 <= jy < D and 0 <= jz < D):
                boundary = True
                continue
            nlin = (jx * D + jy) * D + jz
            stu = state[nlin]
            if stu == 0:
                continue
            is_par = stv <= 6 and np.int64(stv) - 1 == d
            is_child = stu <= 6 and np.int64(stu) - 1 == (d ^ 1)
            if not (is_par or is_child):
                continue
            full += 1
            if id1[nlin] != 0:
                nin += 1
        mu[i] = np.float64(full)
        deg_in[i] = nin
    for d in range(1, rmax + 2):
        cnt_by_dist[d] += cnt_by_dist[d - 1]
    for i in range(nb):
        indptr[i + 1] = indptr[i] + deg_in[i]
    indices = np.empty(indptr[nb], dtype=np.int32)
    for i in range(nb):
        lin = q[i]
        iz = lin % D
        iy = (lin // D) % D
        ix = lin // (D * D)
        stv = state[lin]
        w = indptr[i]
        for d in range(6):
            jx = ix + _DX[d]
            jy = iy + _DY[d]
            jz = iz + _DZ[d]
            if not (0 <= jx < D and 0 <= jy < D and 0 <= jz < D):
                continue
            nlin = (jx * D + jy) * D + jz
            stu = state[nlin]
            if stu == 0:
                continue
            is_par = stv <= 6 and np.int64(stv) - 1 == d
            is_child = stu <= 6 and np.int64(stu) - 1 == (d ^ 1)
            if not (is_par or is_child):
                continue
            if id1[nlin] != 0:
                indices[w] = id1[nlin] - 1
                w += 1
    return indptr, indices, mu, cnt_by_dist, max_linf, boundary


@njit(cache=True, nogil=True)
def hk_iterate(indptr, indices, mu, cnt_by_dist, grid):
    """Iterate v_{k+1}(i) = sum_{j ~ i} v_k(j)/mu(j) from v_0 = delta_center.

    Vertices must be in BFS order from the center (as from ball_extract_csr),
    so at step k only the first cnt_by_dist[min(k, rmax)] rows are active.
    At each k in grid records p_{2k}(c, c) = sum_i v_k(i)^2 / mu(i) (the
    reversibility identity) and the mass drift |sum v_k - 1|.
    Returns (p2k values, max mass drift).
    """
    nb = mu.shape[0]
    rmax = cnt_by_dist.shape[0] - 2
    v = np.zeros(nb, dtype=np.float64)
    w = np.zeros(nb, dtype=np.float64)
    u = np.zeros(nb, dtype=np.float64)
    inv_mu = np.empty(nb, dtype=np.float64)
    for i in range(nb):
        inv_mu[i] = 1.0 / mu[i]
    v[0] = 1.0
    out = np.empty(grid.shape[0], dtype=np.float64)
    gi = np.int64(0)
    max_drift = 0.0
    steps = grid[grid.shape[0] - 1]
    act_prev = np.int64(1)
    for k in range(1, steps + 1):
        kk = k if k < rmax else rmax
        act = cnt_by_dist[kk]
        for i in range(act_prev):
            u[i] = v[i] * inv_mu[i]
        for i in range(act):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += u[indices[jj]]
            w[i] = acc
        if gi < grid.shape[0] and grid[gi] == k:
            p = 0.0
            mass = 0.0
            for i in range(act):
                p += w[i] * w[i] * inv_mu[i]
                mass += w[i]
            drift = mass - 1.0
            if drift < 0.0:
                drift = -drift
            if drift > max_drift:
                max_drift = drift
            out[gi] = p
            gi += 1
        tmp = v
        v = w
        w = tmp
        act_prev = act
    return out, max_drift


@njit(cache=True, nogil=True)
def tree_depths(parent, root):
    """Depth of every vertex under a parent array; parent[root] == -1.

    Returns (depths, ok). ok is False when a chain hits a bad parent index
    or a cycle (detected by chain length exceeding n); offending vertices
    keep depth -1.
    """
    n = parent.shape[0]
    depth = np.full(n, -1, dtype=np.int64)
    if root < 0 or root >= n:
        return depth, False
    depth[root] = 0
    stack = np.empty(64, dtype=np.int64)
    for i in range(n):
        if depth[i] >= 0:
            continue
        top = np.int64(0)
        u = np.int64(i)
        while depth[u] < 0:
            if top == stack.shape[0]:
                ns = np.empty(2 * stack.shape[0], dtype=np.int64)
                ns[:top] = stack[:top]
                stack = ns
            stack[top] = u
            top += 1
            p = parent[u]
            if p < 0 or p >= n or top > n:
                return depth, False
            u = p
        d = depth[u]
        for k in range(top - 1, -1, -1):
            d += 1
            depth[stack[k]] = d
    return depth, True


# ---------------------------------------------------------------------------
# Walks on an explicit tree/graph CSR
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def csr_walk_hits(indptr, indices, x_id, n, trials, seed, stream):
    """Count returns to x_id after exactly n uniform-neighbor steps."""
    s = _rng_init(seed, stream, np.uint64(0))
    hits = np.int64(0)
    for t in range(trials):
        pos = np.int64(x_id)
        for k in range(n):
            lo = indptr[pos]
            deg = indptr[pos + 1] - lo
            if deg == 1:
                pos = np.int64(indices[lo])
            else:
                pos = np.int64(indices[lo + _rand_below(s, deg)])
        if pos == x_id:
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def wilson_finite_batch(indptr, indices, root, order, samples, seed, stream0):
    """Uniform spanning trees of a finite connected graph, Wilson's algorithm.

    Cycle-popping form: successor pointers overwritten on revisit implement
    the loop erasure. Returns parents[samples, n] with parent[root] = -1.
    Stream for sample t is stream0 + t.
    """
    n = indptr.shape[0] - 1
    out = np.empty((samples, n), dtype=np.int32)
    nxt = np.empty(n, dtype=np.int32)
    intree = np.zeros(n, dtype=np.uint8)
    for t in range(samples):
        s = _rng_init(seed, np.uint64(stream0) + np.uint64(t), np.uint64(0))
        for i in range(n):
            intree[i] = 0
            out[t, i] = -1
        intree[root] = 1
        for oi in range(n):
            i = order[oi]
            if intree[i] == 1:
                continue
            u = np.int64(i)
            while intree[u] == 0:
                lo = indptr[u]
                deg = indptr[u + 1] - lo
                if deg == 1:
                    v = np.int64(indices[lo])
                else:
                    v = np.int64(indices[lo + _rand_below(s, deg)])
                nxt[u] = np.int32(v)
                u = v
            u = np.int64(i)
            while intree[u] == 0:
                intree[u] = 1
                out[t, u] = nxt[u]
                u = np.int64(nxt[u])
    return out


@njit(cache=True, nogil=True)
def hit_before_exit(set_keys, set_vals, x0, y0, z0, r_sq, trials, seed, stream0):
    """Count walks from (x0, y0, z0) touching the key set no later than the
    first time their squared Euclidean distance from the start reaches r_sq.

    The start point and the exit point both count as visited. Trial t uses
    stream stream0 + t.
    """
    hits = np.int64(0)
    for t in range(trials):
        s = _rng_init(seed, np.uint64(stream0) + np.uint64(t), np.uint64(0))
        x = x0
        y = y0
        z = z0
        while True:
            if _map_get(set_keys, set_vals, _pack(x, y, z)) != -1:
                hits += 1
                break
            dx = x - x0
            dy = y - y0
            dz = z - z0
            if dx * dx + dy * dy + dz * dz >= r_sq:
                break
            d = _rand_dir(s)
            x += _DX[d]
            y += _DY[d]
            z += _DZ[d]
    return hits


# ---------------------------------------------------------------------------
# Tube crossing event (box 1)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def tube_a1_hits(m, q, trials, seed, stream0):
    """Count tube-crossing successes for walks started at (m/2, 0, 0).

    Success means: the walk reaches the slab x = 3m/2 while staying inside
    {m/2 - q <= x <= 3m/2, |y| <= m, |z| <= m}, every visit to the plane x = m
    satisfies m^2/100 <= y^2 + z^2 <= m^2/64, the arrival point has
    |y|, |z| <= m/2, and after first touching x = 3m/2 - q the walk never goes
    below x = 3m/2 - 2q.
    """
    a1 = m // 2
    a2 = m + m // 2
    hits = np.int64(0)
    m2 = np.int64(m) * np.int64(m)
    for t in range(trials):
        s = _rng_init(seed, np.uint64(stream0) + np.uint64(t), np.uint64(0))
        x = np.int64(a1)
        y = np.int64(0)
        z = np.int64(0)
        reached_aq = False
        ok = True
        while True:
            d = _rand_dir(s)
            x += _DX[d]
            y += _DY[d]
            z += _DZ[d]
            if x < a1 - q or y > m or y < -m or z > m or z < -m:
                ok = False
                break
            if x == m:
                rho2 = y * y + z * z
                if 100 * rho2 < m2 or 64 * rho2 > m2:
                    ok = False
                    break
            if not reached_aq and x == a2 - q:
                reached_aq = True
            if reached_aq and x < a2 - 2 * q:
                ok = False
                break
            if x == a2:
                ay = -y if y < 0 else y
                az = -z if z < 0 else z
                if 2 * ay > m or 2 * az > m:
                    ok = False
                break
        if ok:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# Grounded tree Laplacian: leaf-first Cholesky with two-entry right-hand sides
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def lap_tree_pair_solve(parent, deg, order_deep_first, pairs, root):
    """Solve L w = e_x - e_y on the root-grounded tree Laplacian per pair.

    Forward elimination folds 1/dd into each parent (children first, so the
    deep-first order makes every pivot final before use); the sparse
    right-hand side then confines substitution to the pair's root paths.
    Returns w[x] - w[y] for each pair row.
    """
    n = parent.shape[0]
    dd = deg.astype(np.float64)
    for i in range(n):
        v = order_deep_first[i]
        p = parent[v]
        if p >= 0:
            dd[p] -= 1.0 / dd[v]
    bb = np.zeros(n, dtype=np.float64)
    scratch = np.empty(3 * n, dtype=np.int64)
    out = np.empty(pairs.shape[0], dtype=np.float64)
    for k in range(pairs.shape[0]):
        ix = pairs[k, 0]
        iy = pairs[k, 1]
        if ix == iy:
            out[k] = 0.0
            continue
        cnt = 0
        for s in range(2):
            v = ix if s == 0 else iy
            val = 1.0 if s == 0 else -1.0
            while v != root:
                bb[v] += val
                scratch[cnt] = v
                cnt += 1
                val /= dd[v]
                v = parent[v]
        wx = 0.0
        wy = 0.0
        for s in range(2):
            v = ix if s == 0 else iy
            plen = 0
            while v != root:
                scratch[cnt + plen] = v
                plen += 1
                v = parent[v]
            w = 0.0
            for i in range(plen - 1, -1, -1):
                w = (bb[scratch[cnt + i]] + w) / dd[scratch[cnt + i]]
            if s == 0:
                wx = w
            else:
                wy = w
        out[k] = wx - wy
        for i in range(cnt):
            bb[scratch[i]] = 0.0
    return out
