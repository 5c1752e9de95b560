"""Stabilizer tableau (destabilizer/stabilizer form) for exact Clifford runs."""

from __future__ import annotations

import numpy as np

from .pauli import PauliString


def _g(x1, z1, x2, z2):
    """Exponent of i picked up when multiplying single-qubit Paulis (CHP)."""
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    return np.where(
        x1 & z1, z2 - x2,
        np.where(x1 & (1 - z1), z2 * (2 * x2 - 1),
                 np.where(z1 & (1 - x1), x2 * (1 - 2 * z2), 0)))


class Tableau:
    """Aaronson-Gottesman tableau on ``n`` qubits, initialized to |0...0>.

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers, row ``2n``
    is scratch space.  A row with ``x=z=1`` on a qubit denotes Y there.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=bool)
        self.z = np.zeros((2 * n + 1, n), dtype=bool)
        self.r = np.zeros(2 * n + 1, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.r = self.r.copy()
        return t

    def _check(self, *qs):
        for q in qs:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range for n={self.n}")
        if len(set(qs)) != len(qs):
            raise ValueError("two-qubit gate needs distinct targets")

    # gates --------------------------------------------------------------
    def h(self, a):
        self._check(a)
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a):
        self._check(a)
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def s_dag(self, a):
        self._check(a)
        self.r ^= self.x[:, a] & ~self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def px(self, a):
        self._check(a)
        self.r ^= self.z[:, a]

    def pz(self, a):
        self._check(a)
        self.r ^= self.x[:, a]

    def py(self, a):
        self._check(a)
        self.r ^= self.x[:, a] ^ self.z[:, a]

    def sqrt_y(self, a):
        # X -> -Z, Z -> X
        self.pz(a)
        self.h(a)

    def sqrt_y_dag(self, a):
        # X -> Z, Z -> -X
        self.h(a)
        self.pz(a)

    def cx(self, a, b):
        self._check(a, b)
        xa, xb, za, zb = self.x[:, a], self.x[:, b], self.z[:, a], self.z[:, b]
        self.r ^= xa & zb & ~(xb ^ za)
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def cz(self, a, b):
        self.h(b)
        self.cx(a, b)
        self.h(b)

    # row algebra ----------------------------------------------------------
    def _rowsum(self, hs: np.ndarray, i: int) -> None:
        """Left-multiply rows ``hs`` by row ``i`` in place."""
        if len(hs) == 0:
            return
        tot = _g(self.x[i][None, :], self.z[i][None, :], self.x[hs], self.z[hs]).sum(axis=1)
        tot = tot + 2 * self.r[hs].astype(int) + 2 * int(self.r[i])
        self.r[hs] = (tot % 4) == 2
        self.x[hs] ^= self.x[i]
        self.z[hs] ^= self.z[i]

    # measurement ----------------------------------------------------------
    def measure_z(self, a: int, rng: np.random.Generator | None = None,
                  forced: int | None = None) -> tuple[int, bool]:
        """Projective Z measurement; returns (outcome +1/-1, was_random).

        ``forced`` fixes the outcome of a random measurement (postselection);
        it is ignored for deterministic ones.
        """
        self._check(a)
        n = self.n
        stab_x = np.flatnonzero(self.x[n:2 * n, a])
        if len(stab_x):
            p = n + int(stab_x[0])
            rows = np.flatnonzero(self.x[: 2 * n, a])
            rows = rows[rows != p]
            self._rowsum(rows, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            if forced is not None:
                bit = forced == -1
            elif rng is not None:
                bit = bool(rng.integers(2))
            else:
                bit = False
            self.r[p] = bit
            return (-1 if bit else 1), True
        s = 2 * n
        self.x[s] = False
        self.z[s] = False
        self.r[s] = False
        for i in np.flatnonzero(self.x[:n, a]):
            self._rowsum(np.array([s]), int(i) + n)
        return (-1 if self.r[s] else 1), False

    def reset(self, a: int, rng: np.random.Generator | None = None) -> None:
        out, _ = self.measure_z(a, rng)
        if out == -1:
            self.px(a)

    # queries --------------------------------------------------------------
    def stabilizers(self) -> list[PauliString]:
        n = self.n
        out = []
        for i in range(n, 2 * n):
            p = PauliString(self.x[i], self.z[i], int(np.sum(self.x[i] & self.z[i])))
            out.append(-p if self.r[i] else p)
        return out

    def expectation(self, p: PauliString) -> int:
        """<P> for a Hermitian Pauli string: +1, -1 or 0."""
        n = self.n
        if p.n != n:
            raise ValueError("size mismatch")
        anti = (self.x[n:2 * n] & p.z).sum(1) + (self.z[n:2 * n] & p.x).sum(1)
        if np.any(anti % 2):
            return 0
        s = 2 * n
        self.x[s] = False
        self.z[s] = False
        self.r[s] = False
        d_anti = ((self.x[:n] & p.z).sum(1) + (self.z[:n] & p.x).sum(1)) % 2
        for i in np.flatnonzero(d_anti):
            self._rowsum(np.array([s]), int(i) + n)
        assert np.array_equal(self.x[s], p.x) and np.array_equal(self.z[s], p.z)
        return p.sign * (-1 if self.r[s] else 1)


def measure_z(state: Tableau, q: int, rng: np.random.Generator | None = None) -> int:
    return state.measure_z(q, rng)[0]


def pauli_expectation(state: Tableau, p: PauliString) -> int:
    return state.expectation(p)
