"""Minimum-weight perfect matching with a boundary, and logical correction.

Each fired vertex is matched to another fired vertex or to the boundary.
Connected components of the candidate graph (pairs cheaper than sending
both vertices to the boundary) are solved independently with an exact
bitmask dynamic program; components above ``DP_LIMIT`` vertices
fall back to a blossom matching on an expanded graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numba
import numpy as np

from .weights import WeightMatrix

DP_LIMIT = 12


@dataclass
class MatchingResult:
    pairs: list            # [(k, l)] vertex pairs, k < l
    boundary: list         # [k] vertices matched to the boundary
    M: int                 # parity of logical-string crossings
    weight: float

    @property
    def matched_vertices(self) -> list:
        return sorted([v for p in self.pairs for v in p] + list(self.boundary))


@numba.njit(cache=True)
def _components(defects, W, B):
    # a pair costing at least both boundary edges is never needed, so it
    # does not join components
    k = len(defects)
    parent = np.arange(k)
    for i in range(k):
        for j in range(i + 1, k):
            if W[defects[i], defects[j]] < B[defects[i]] + B[defects[j]]:
                ri = i
                while parent[ri] != ri:
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    rj = parent[rj]
                if ri != rj:
                    if ri < rj:
                        parent[rj] = ri
                    else:
                        parent[ri] = rj
    root = np.empty(k, np.int64)
    for i in range(k):
        r = i
        while parent[r] != r:
            r = parent[r]
        root[i] = r
    return root


@numba.njit(cache=True)
def _dp(verts, W, B):
    """Exact matching of ``verts``; returns partner (-1 = boundary) and cost."""
    c = len(verts)
    full = (1 << c) - 1
    f = np.empty(full + 1, np.float64)
    ch = np.empty(full + 1, np.int8)
    f[0] = 0.0
    ch[0] = -1
    for mask in range(1, full + 1):
        i = 0
        while not (mask >> i) & 1:
            i += 1
        rest = mask ^ (1 << i)
        best = f[rest] + B[verts[i]]
        choice = -1
        j = i + 1
        while j < c:
            if (rest >> j) & 1:
                cand = f[rest ^ (1 << j)] + W[verts[i], verts[j]]
                if cand < best:
                    best = cand
                    choice = j
            j += 1
        f[mask] = best
        ch[mask] = choice
    partner = np.full(c, -2, np.int64)
    mask = full
    while mask:
        i = 0
        while not (mask >> i) & 1:
            i += 1
        j = ch[mask]
        if j < 0:
            partner[i] = -1
            mask ^= 1 << i
        else:
            partner[i] = j
            partner[j] = i
            mask ^= (1 << i) | (1 << j)
    return partner, f[full]


@numba.njit(cache=True)
def _decode_shot(defects, W, B, P, BP, limit):
    """Returns (partner over defects, M, weight, ok)."""
    k = len(defects)
    partner = np.full(k, -2, np.int64)
    if k == 0:
        return partner, 0, 0.0, True
    root = _components(defects, W, B)
    M = 0
    total = 0.0
    for r in range(k):
        cnt = 0
        for i in range(k):
            if root[i] == r:
                cnt += 1
        if cnt == 0:
            continue
        if cnt > limit:
            return partner, 0, 0.0, False
        idx = np.empty(cnt, np.int64)
        t = 0
        for i in range(k):
            if root[i] == r:
                idx[t] = i
                t += 1
        verts = defects[idx]
        part, cost = _dp(verts, W, B)
        total += cost
        for a in range(cnt):
            b = part[a]
            if b == -1:
                partner[idx[a]] = -1
                M ^= BP[verts[a]]
            elif b > a:
                partner[idx[a]] = idx[b]
                partner[idx[b]] = idx[a]
                M ^= P[verts[a], verts[b]]
    return partner, M, total, True


@numba.njit(cache=True)
def _decode_many(indptr, flat, W, B, P, BP, limit):
    n = len(indptr) - 1
    Ms = np.zeros(n, np.uint8)
    ok = np.ones(n, np.bool_)
    for s in range(n):
        d = flat[indptr[s]:indptr[s + 1]]
        _, M, _, good = _decode_shot(d, W, B, P, BP, limit)
        Ms[s] = M
        ok[s] = good
    return Ms, ok


def _blossom(verts: np.ndarray, wm: WeightMatrix) -> np.ndarray:
    """Exact matching through networkx on a graph with per-vertex boundary twins."""
    g = nx.Graph()
    k = len(verts)
    for a in range(k):
        ba = wm.boundary_w[verts[a]]
        g.add_edge(("d", a), ("b", a), weight=float(ba))
        for b in range(a + 1, k):
            w = wm.w[verts[a], verts[b]]
            if w < ba + wm.boundary_w[verts[b]]:
                g.add_edge(("d", a), ("d", b), weight=float(w))
            g.add_edge(("b", a), ("b", b), weight=0.0)
    partner = np.full(k, -2, np.int64)
    for u, v in nx.min_weight_matching(g):
        if u[0] == "d" and v[0] == "d":
            partner[u[1]], partner[v[1]] = v[1], u[1]
        elif u[0] == "d":
            partner[u[1]] = -1
        elif v[0] == "d":
            partner[v[1]] = -1
    return partner


def _match_components(defects: np.ndarray, wm: WeightMatrix, limit: int) -> np.ndarray:
    """Per-component matching; components above ``limit`` go to blossom."""
    root = _components(defects, wm.w, wm.boundary_w)
    partner = np.full(len(defects), -2, np.int64)
    for r in np.unique(root):
        idx = np.flatnonzero(root == r)
        verts = defects[idx]
        if len(idx) <= limit:
            part, _ = _dp(verts, wm.w, wm.boundary_w)
        else:
            part = _blossom(verts, wm)
        partner[idx] = np.where(part >= 0, idx[np.maximum(part, 0)], part)
    return partner


def _result(defects, partner, wm: WeightMatrix) -> MatchingResult:
    pairs, bnd, M, total = [], [], 0, 0.0
    for a, b in enumerate(partner):
        u = int(defects[a])
        if b == -1:
            bnd.append(u)
            M ^= int(wm.boundary_parity[u])
            total += float(wm.boundary_w[u])
        elif b > a:
            v = int(defects[b])
            pairs.append((u, v))
            M ^= int(wm.parity[u, v])
            total += float(wm.w[u, v])
    return MatchingResult(pairs, bnd, M, total)


def mwpm_decode(wm: WeightMatrix, events, limit: int = DP_LIMIT) -> MatchingResult:
    """Match the fired vertices of one shot (``events`` is a 0/1 vector)."""
    defects = np.flatnonzero(np.asarray(events)).astype(np.int64)
    partner, _, _, ok = _decode_shot(defects, wm.w, wm.boundary_w,
                                     wm.parity.astype(np.uint8),
                                     wm.boundary_parity.astype(np.uint8), limit)
    if not ok:
        partner = _match_components(defects, wm, limit)
    return _result(defects, partner, wm)


def decode_batch(wm: WeightMatrix, events: np.ndarray, limit: int = DP_LIMIT) -> np.ndarray:
    """Matching parity M for every shot of an events array (shots, V)."""
    events = np.asarray(events, bool)
    counts = events.sum(1)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    flat = np.nonzero(events)[1].astype(np.int64)
    P = wm.parity.astype(np.uint8)
    BP = wm.boundary_parity.astype(np.uint8)
    Ms, ok = _decode_many(indptr, flat, wm.w, wm.boundary_w, P, BP, limit)
    for s in np.flatnonzero(~ok):
        Ms[s] = mwpm_decode(wm, events[s], limit).M
    return Ms


def correct_logical(final_bits, M, support_idx) -> np.ndarray:
    """Raw logical parity of ``final_bits`` (+/-1) over ``support_idx`` times (-1)^M."""
    fb = np.asarray(final_bits)
    raw = np.prod(fb[..., list(support_idx)], axis=-1)
    return raw.astype(np.int64) * (1 - 2 * (np.asarray(M, dtype=np.int64) % 2))
