"""Complex matrix kernels: DFT matrices, circulant identities, block matrices."""

from dataclasses import dataclass

import numpy as np


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with entries exp(-2j*pi*m*k/n)/sqrt(n).

    The forward kernel has a negative exponent, so ``dft_matrix(n) @ x``
    equals ``np.fft.fft(x) / np.sqrt(n)``.
    """
    if n < 1:
        raise ValueError(f"DFT size must be >= 1, got {n}")
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


def unitarity_defect(a: np.ndarray) -> float:
    """Max elementwise deviation of a^H a from the identity."""
    n = a.shape[0]
    return float(np.abs(a.conj().T @ a - np.eye(n)).max())


def circulant(c: np.ndarray) -> np.ndarray:
    """Dense circulant matrix whose first column is c."""
    c = np.asarray(c)
    n = c.shape[0]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return c[idx]


def circulant_eigenvalues(c: np.ndarray) -> np.ndarray:
    """Eigenvalues of the circulant built from c: the unnormalized DFT of c."""
    return np.fft.fft(np.asarray(c))


def circulant_diagonal_identity(c: np.ndarray) -> tuple[np.ndarray, complex]:
    """Eigenvalues of circulant(c) and its main-diagonal value.

    The diagonal value equals the arithmetic mean of the eigenvalues,
    which in turn equals c[0].
    """
    lam = circulant_eigenvalues(c)
    return lam, complex(lam.mean())


def offdiag_energy_identity(c: np.ndarray, rtol: float = 1e-10) -> float:
    """Off-diagonal row energy of circulant(c) via the eigenvalue identity.

    Returns sum_{i>=1} |c_i|^2 and checks it equals
    mean_j |lam_j|^2 - |mean_j lam_j|^2 (Parseval plus the diagonal value).
    """
    c = np.asarray(c, dtype=complex)
    lhs = float(np.sum(np.abs(c[1:]) ** 2))
    lam = circulant_eigenvalues(c)
    rhs = float(np.mean(np.abs(lam) ** 2) - np.abs(np.mean(lam)) ** 2)
    scale = max(lhs, rhs, 1.0)
    if abs(lhs - rhs) > rtol * scale:
        raise ArithmeticError(
            f"off-diagonal energy identity violated: {lhs} vs {rhs}"
        )
    return lhs


@dataclass(frozen=True)
class BlockMatrix:
    """Dense matrix interpreted as a grid of uniformly sized blocks.

    Structure tags (diagonal / circulant / toeplitz blocks) are not enforced
    at construction; tests query them via the defect methods.
    """

    data: np.ndarray
    grid: tuple[int, int]

    def __post_init__(self):
        rows, cols = self.grid
        if self.data.shape[0] % rows or self.data.shape[1] % cols:
            raise ValueError(
                f"matrix shape {self.data.shape} not divisible by grid {self.grid}"
            )

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.data.shape[0] // self.grid[0], self.data.shape[1] // self.grid[1]

    def block(self, i: int, j: int) -> np.ndarray:
        p, q = self.block_shape
        return self.data[i * p:(i + 1) * p, j * q:(j + 1) * q]

    def _per_block_defect(self, fn) -> float:
        worst = 0.0
        for i in range(self.grid[0]):
            for j in range(self.grid[1]):
                worst = max(worst, fn(self.block(i, j)))
        return worst

    def diagonal_block_defect(self) -> float:
        """Max magnitude of off-diagonal entries within any block."""
        def fn(b):
            off = b - np.diag(np.diag(b))
            return float(np.abs(off).max()) if b.size else 0.0
        return self._per_block_defect(fn)

    def circulant_block_defect(self) -> float:
        """Max deviation of any block from the circulant of its first column."""
        def fn(b):
            return float(np.abs(b - circulant(b[:, 0])).max())
        return self._per_block_defect(fn)

    def toeplitz_block_defect(self) -> float:
        """Max deviation of any block from constancy along its diagonals."""
        def fn(b):
            d = np.abs(b[1:, 1:] - b[:-1, :-1])
            return float(d.max()) if d.size else 0.0
        return self._per_block_defect(fn)
