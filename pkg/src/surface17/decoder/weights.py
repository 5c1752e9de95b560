"""Edge probabilities from syndrome correlations, path sums and weights."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import DetectionGraph

P_MAX = 0.5 - 1e-9
P_FLOOR = 1e-12   # boundary floor so a perfect matching always exists


@dataclass
class EdgeProbabilities:
    graph: DetectionGraph
    edge_p: np.ndarray        # (E,)
    boundary_p: np.ndarray    # (V,)
    shots: int = 0
    edge_se: np.ndarray | None = None
    boundary_se: np.ndarray | None = None


def _invert(n_shots, sums, pair_sums, uv, incident):
    """Edge and boundary probabilities from event counts (no clamping)."""
    mean = sums / n_shots
    u, v = uv[:, 0], uv[:, 1]
    xixj = pair_sums / n_shots
    num = xixj - mean[u] * mean[v]
    den = 1.0 - 2 * mean[u] - 2 * mean[v] + 4 * xixj
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(den > 1e-12, 1.0 - 4.0 * num / den, 1.0)
    p_raw = 0.5 - 0.5 * np.sqrt(np.maximum(arg, 0.0))
    p = np.clip(p_raw, 0.0, P_MAX)
    fac = 1.0 - 2.0 * p
    prod = np.array([np.prod(fac[inc]) if inc else 1.0 for inc in incident])
    with np.errstate(divide="ignore", invalid="ignore"):
        pb_raw = 0.5 * (1.0 - (1.0 - 2.0 * mean) / prod)
    pb_raw = np.nan_to_num(pb_raw, nan=P_MAX)
    return p_raw, pb_raw, mean


def estimate_edge_probabilities(graph: DetectionGraph, events: np.ndarray,
                                blocks: int = 100, min_shots: int = 100) -> EdgeProbabilities:
    """Invert pairwise event correlations into independent-edge probabilities.

    For an edge (i, j) with marginals a, b and joint rate c,
    ``p = 1/2 - 1/2 sqrt(1 - 4 (c - a b) / (1 - 2a - 2b + 4c))``.  Boundary
    probabilities then follow from ``1 - 2 a_k = (1 - 2 p_kb) prod (1 - 2 p_e)``.
    Standard errors come from a block jackknife over ``blocks`` blocks.
    """
    events = np.asarray(events)
    if events.ndim != 2 or events.shape[1] != graph.n_vertices:
        raise ValueError(f"events must have shape (shots, {graph.n_vertices})")
    n = len(events)
    if n < min_shots:
        raise ValueError(f"need at least {min_shots} shots, got {n}")
    uv = graph.edge_array()
    incident = graph.incident()
    X = events.astype(np.float64)

    def counts(rows):
        Xs = X[rows]
        s = Xs.sum(0)
        ps = np.einsum("ij,ij->j", Xs[:, uv[:, 0]], Xs[:, uv[:, 1]])
        return s, ps

    chunks = np.array_split(np.arange(n), blocks) if blocks > 1 else [np.arange(n)]
    parts = [counts(r) for r in chunks]
    tot_s = sum(p[0] for p in parts)
    tot_ps = sum(p[1] for p in parts)
    p_raw, pb_raw, mean = _invert(n, tot_s, tot_ps, uv, incident)

    tol = 3.0 * np.sqrt(np.maximum(mean[uv[:, 0]] * mean[uv[:, 1]], 1.0 / n) / n)
    bad = p_raw < -tol
    if np.any(bad):
        warnings.warn(f"{int(bad.sum())} edge correlations are negative beyond statistical "
                      "tolerance; clamped to 0", stacklevel=2)
    edge_p = np.clip(p_raw, 0.0, P_MAX)
    boundary_p = np.clip(pb_raw, 0.0, P_MAX)

    edge_se = boundary_se = None
    if blocks > 1:
        loo_e, loo_b = [], []
        for (s, ps), r in zip(parts, chunks):
            pe, pb, _ = _invert(n - len(r), tot_s - s, tot_ps - ps, uv, incident)
            loo_e.append(pe)
            loo_b.append(pb)
        loo_e, loo_b = np.array(loo_e), np.array(loo_b)
        k = len(parts)
        edge_se = np.sqrt((k - 1) / k * ((loo_e - loo_e.mean(0)) ** 2).sum(0))
        boundary_se = np.sqrt((k - 1) / k * ((loo_b - loo_b.mean(0)) ** 2).sum(0))
    return EdgeProbabilities(graph, edge_p, boundary_p, n, edge_se, boundary_se)


@dataclass
class PathSums:
    pair_p: np.ndarray         # (V, V) summed path probability, 0 = not a candidate
    pair_parity: np.ndarray    # (V, V) logical parity of the most likely path
    boundary_p: np.ndarray     # (V,)
    boundary_parity: np.ndarray
    cap: int


def path_sum_probabilities(graph: DetectionGraph, probs: EdgeProbabilities, cap: int = 4,
                           max_dm: int | None = 2) -> PathSums:
    """Sum edge-probability products over simple paths of at most ``cap`` edges.

    Pairs further apart than ``max_dm`` layers are dropped.  The boundary is
    a virtual vertex reachable from every vertex; paths never pass through it.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    V = graph.n_vertices
    adj = [[] for _ in range(V)]
    for e, p in zip(graph.edges, probs.edge_p):
        if p > 0:
            adj[e.u].append((e.v, float(p), e.parity))
            adj[e.v].append((e.u, float(p), e.parity))
    pb = [float(x) for x in probs.boundary_p]
    bpar = [int(x) for x in graph.boundary_parity]

    pair_p = np.zeros((V, V))
    best = np.zeros((V, V))
    pair_par = np.zeros((V, V), np.uint8)
    b_p = np.zeros(V)
    b_par = np.zeros(V, np.uint8)

    for src in range(V):
        acc = pair_p[src]
        bst = best[src]
        par_row = pair_par[src]
        visited = [False] * V
        visited[src] = True
        bsum = 0.0
        bmax = -1.0
        bmax_par = 0
        stack = [(src, 1.0, 0, 0, iter(adj[src]))]
        # the source itself: direct boundary edge
        if pb[src] > 0:
            bsum += pb[src]
            bmax, bmax_par = pb[src], bpar[src]
        while stack:
            v, prob, par, depth, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                visited[v] = False if v != src else True
                continue
            w, pe, epar = nxt
            if visited[w] or depth >= cap:
                continue
            q = prob * pe
            if q < 1e-300:
                continue
            qpar = par ^ epar
            acc[w] += q
            if q > bst[w]:
                bst[w] = q
                par_row[w] = qpar
            if depth + 1 < cap and pb[w] > 0:
                qb = q * pb[w]
                bsum += qb
                if qb > bmax:
                    bmax, bmax_par = qb, qpar ^ bpar[w]
            visited[w] = True
            stack.append((w, q, qpar, depth + 1, iter(adj[w])))
        b_p[src] = bsum
        b_par[src] = bmax_par if bmax > 0 else bpar[src]

    if max_dm is not None:
        far = np.abs(graph.layer[:, None] - graph.layer[None, :]) > max_dm
        pair_p[far] = 0.0
    np.fill_diagonal(pair_p, 0.0)
    return PathSums(pair_p, pair_par, b_p, b_par, cap)


@dataclass
class WeightMatrix:
    w: np.ndarray            # (V, V), inf where no candidate pair
    parity: np.ndarray       # (V, V) uint8
    boundary_w: np.ndarray   # (V,)
    boundary_parity: np.ndarray
    graph: DetectionGraph | None = None

    @classmethod
    def from_path_sums(cls, ps: PathSums, graph: DetectionGraph | None = None) -> "WeightMatrix":
        p = np.minimum(ps.pair_p, P_MAX)
        with np.errstate(divide="ignore"):
            w = np.where(p > 0, -np.log(np.where(p > 0, p, 1.0)), np.inf)
        bp = np.clip(ps.boundary_p, P_FLOOR, P_MAX)
        return cls(w, ps.pair_parity.copy(), -np.log(bp), ps.boundary_parity.copy(), graph)

    def scaled(self, factor: float) -> "WeightMatrix":
        return WeightMatrix(self.w * factor, self.parity, self.boundary_w * factor,
                            self.boundary_parity, self.graph)


def weights_from_probabilities(probs: EdgeProbabilities, cap: int = 4) -> WeightMatrix:
    return WeightMatrix.from_path_sums(path_sum_probabilities(probs.graph, probs, cap),
                                       probs.graph)


def _w(p: float):
    return None if p <= 0 else -math.log(p)


def weights_to_dict(probs: EdgeProbabilities, cap: int = 4, extra_meta: dict | None = None) -> dict:
    g = probs.graph
    meta = {"shots": int(probs.shots), "basis": g.basis, "cap": cap, "n_cycles": g.n_cycles}
    meta.update(extra_meta or {})
    return {
        "edges": [{"from": g.labels[e.u], "to": g.labels[e.v], "kind": e.kind,
                   "p": float(p), "w": _w(float(p))} for e, p in zip(g.edges, probs.edge_p)],
        "boundary": [{"vertex": g.labels[k], "p": float(p), "w": _w(float(p))}
                     for k, p in enumerate(probs.boundary_p)],
        "meta": meta,
    }


def weights_from_dict(doc: dict) -> tuple[EdgeProbabilities, int]:
    meta = doc["meta"]
    g = DetectionGraph.surface17(meta["basis"], int(meta["n_cycles"]))
    idx = {lab: k for k, lab in enumerate(g.labels)}
    lookup = {}
    for e in doc["edges"]:
        a, b = idx[e["from"]], idx[e["to"]]
        lookup[(min(a, b), max(a, b))] = float(e["p"])
    edge_p = np.array([lookup[(min(e.u, e.v), max(e.u, e.v))] for e in g.edges])
    boundary_p = np.zeros(g.n_vertices)
    for b in doc["boundary"]:
        boundary_p[idx[b["vertex"]]] = float(b["p"])
    return EdgeProbabilities(g, edge_p, boundary_p, int(meta.get("shots", 0))), int(meta["cap"])
