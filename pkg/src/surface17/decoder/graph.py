"""Space-time detection graph for one stabilizer basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..code import Surface17, build_surface17


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    kind: str      # time, meas, space, diag
    parity: int    # 1 if the underlying data error flips the logical operator


@dataclass
class DetectionGraph:
    n_vertices: int
    edges: tuple
    boundary_parity: np.ndarray
    layer: np.ndarray
    labels: list
    basis: str | None = None
    n_cycles: int | None = None

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if e.u == e.v:
                raise ValueError("self-loop in detection graph")
            key = (min(e.u, e.v), max(e.u, e.v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        self.boundary_parity = np.asarray(self.boundary_parity, np.uint8)
        self.layer = np.asarray(self.layer, int)

    def edge_array(self) -> np.ndarray:
        return np.array([(e.u, e.v) for e in self.edges], int).reshape(-1, 2)

    def incident(self) -> list[list[int]]:
        out = [[] for _ in range(self.n_vertices)]
        for k, e in enumerate(self.edges):
            out[e.u].append(k)
            out[e.v].append(k)
        return out

    def vertex(self, aux_index: int, m: int) -> int:
        """Vertex id of stabilizer ``aux_index`` (0..3) in layer ``m`` (1-based)."""
        return 4 * (m - 1) + aux_index

    @classmethod
    def surface17(cls, basis: str, n_cycles: int,
                  code: Surface17 | None = None) -> "DetectionGraph":
        """Graph with layers m = 1..n and the final-readout layer n+1."""
        if basis not in ("X", "Z"):
            raise ValueError("basis must be 'X' or 'Z'")
        if n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        code = code or build_surface17()
        stabs = code.stabilizers_of(basis)
        logical = set(code.logical(basis).support)
        n_layers = n_cycles + 1
        vid = lambda i, m: 4 * (m - 1) + i  # noqa: E731

        neighbours = []
        for i in range(4):
            for j in range(i + 1, 4):
                shared = set(stabs[i].support) & set(stabs[j].support)
                if shared:
                    (q,) = shared
                    neighbours.append((i, j, int(q in logical)))
        bparity = []
        for i, s in enumerate(stabs):
            own = [q for q in s.support
                   if sum(q in t.support for t in stabs) == 1]
            pars = {int(q in logical) for q in own}
            if len(pars) != 1:
                raise ValueError(f"ambiguous boundary parity for {s.auxiliary}")
            bparity.append(pars.pop())

        edges = []
        for m in range(1, n_layers + 1):
            for i, j, par in neighbours:
                edges.append(Edge(vid(i, m), vid(j, m), "space", par))
            if m + 1 <= n_layers:
                for i in range(4):
                    edges.append(Edge(vid(i, m), vid(i, m + 1), "time", 0))
                for i, j, par in neighbours:
                    edges.append(Edge(vid(i, m), vid(j, m + 1), "diag", par))
                    edges.append(Edge(vid(j, m), vid(i, m + 1), "diag", par))
            if m + 2 <= n_layers:
                for i in range(4):
                    edges.append(Edge(vid(i, m), vid(i, m + 2), "meas", 0))
        labels = [f"{stabs[i].auxiliary}@{m}" for m in range(1, n_layers + 1) for i in range(4)]
        layer = np.repeat(np.arange(1, n_layers + 1), 4)
        return cls(4 * n_layers, tuple(edges), np.tile(bparity, n_layers), layer, labels,
                   basis, n_cycles)
