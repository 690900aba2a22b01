"""Uniform periodic grid and even real fields on the torus of period L.

Nodes are x_j = -L/2 + j*h, j = 0..M-1, so the trough sits on node 0 and
the crest on node M/2.  Evenness means symmetry about x = 0, i.e. values
at indices M/2 + k and M/2 - k (mod M) agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "TorusGrid",
    "EvenField",
    "second_derivative",
    "second_derivative_matrix",
    "cosine_coefficient",
    "cosine_coefficients",
    "enforce_evenness",
    "field_from_function",
    "representative_indices",
    "even_extension_matrix",
    "write_field_csv",
    "read_field_csv",
]

EVEN_TOL = 1e-13


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on [-L/2, L/2) with an even number of nodes."""

    L: float
    M: int

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigError("grid period L must be positive")
        if self.M % 2 != 0 or self.M < 32:
            raise ConfigError("grid size M must be even and at least 32")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def nodes(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.M)

    def mode_eigenvalue(self, k: int) -> float:
        """Eigenvalue of -d2/dx2 (centered stencil) on cos(2*pi*k*x/L)."""
        h = self.h
        return (2.0 / h**2) * (1.0 - np.cos(2 * np.pi * k * h / self.L))


@dataclass(frozen=True)
class EvenField:
    """Real field on a TorusGrid, expected symmetric about x = 0."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise ConfigError(f"field length {v.shape} does not match grid M={self.grid.M}")
        object.__setattr__(self, "values", v)

    def evenness_defect(self) -> float:
        v = self.values
        return float(np.max(np.abs(v - v[_mirror(self.grid.M)])))

    def with_values(self, values) -> "EvenField":
        return EvenField(self.grid, np.asarray(values, dtype=float))


def _mirror(M: int) -> np.ndarray:
    return (-np.arange(M)) % M


def field_from_function(grid: TorusGrid, fn) -> EvenField:
    return EvenField(grid, np.asarray(fn(grid.nodes), dtype=float))


def second_derivative_matrix(grid: TorusGrid) -> np.ndarray:
    """Dense periodic centered-difference matrix for d2/dx2."""
    M, h = grid.M, grid.h
    D = np.zeros((M, M))
    idx = np.arange(M)
    D[idx, idx] = -2.0
    D[idx, (idx + 1) % M] = 1.0
    D[idx, (idx - 1) % M] = 1.0
    return D / h**2


def second_derivative(u: EvenField) -> EvenField:
    v = u.values
    d = (np.roll(v, 1) - 2.0 * v + np.roll(v, -1)) / u.grid.h**2
    return u.with_values(d)


def cosine_coefficient(u: EvenField, k: int) -> float:
    """Trapezoid cosine coefficient; spectrally exact for band-limited u."""
    M, L, h = u.grid.M, u.grid.L, u.grid.h
    if not (0 <= k <= M // 2):
        raise IndexError(f"mode index {k} outside 0..{M // 2}")
    if k == 0:
        return float(np.sum(u.values) * h / L)
    c = np.cos(2 * np.pi * k * u.grid.nodes / L)
    return float(2.0 * np.sum(u.values * c) * h / L)


def cosine_coefficients(u: EvenField, kmax: int | None = None) -> np.ndarray:
    kmax = u.grid.M // 2 if kmax is None else kmax
    return np.array([cosine_coefficient(u, k) for k in range(kmax + 1)])


def enforce_evenness(u: EvenField) -> EvenField:
    """Even part about x = 0; idempotent, kills pure odd perturbations."""
    v = u.values
    return u.with_values(0.5 * (v + v[_mirror(u.grid.M)]))


def representative_indices(grid: TorusGrid) -> np.ndarray:
    """Indices j = 0..M/2 (trough through crest); one node per even orbit."""
    return np.arange(grid.M // 2 + 1)


def even_extension_matrix(grid: TorusGrid) -> np.ndarray:
    """M x (M/2+1) matrix mapping half-grid values to a full even field."""
    M = grid.M
    n = M // 2 + 1
    E = np.zeros((M, n))
    for j in range(M):
        r = j if j <= M // 2 else M - j
        E[j, r] = 1.0
    return E


def write_field_csv(path, u: EvenField, extra: dict | None = None) -> None:
    """Two-column CSV (x, value), 17 significant digits; extra columns appended."""
    cols = {"x": u.grid.nodes, "value": u.values}
    if extra:
        cols.update(extra)
    names = list(cols)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols.values()):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    return np.asarray(data[names[0]], dtype=float), np.asarray(data[names[1]], dtype=float)
