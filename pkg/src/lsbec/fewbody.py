"""Exact ground states of n <= 3 contact-interacting bosons in a Dirichlet box.

Two independent discretizations of

    H = -sum_i d^2/dz_i^2 + g sum_{i<j} delta(z_i - z_j)   on (0, l)^n:

* finite differences on a uniform grid, the delta as g/h on coincident
  grid points, lowest eigenpair by shift-invert Lanczos;
* (n = 2) a truncated basis of symmetrized sine products, where the contact
  matrix elements are exact integrals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .egp import egp_scaled
from .errors import InvalidArgument, NumericFailure
from .gp import PI2, GpProblem, GpSolution, minimize_gp

MAX_GRID = {1: 4096, 2: 128, 3: 40}


@dataclass(frozen=True)
class FewBodyProblem:
    n: int
    l: float
    g: float
    m: int = 96

    def __post_init__(self):
        if self.n not in MAX_GRID:
            raise InvalidArgument(f"n must be 1, 2 or 3, got {self.n}")
        if self.m < 4 or self.m > MAX_GRID[self.n]:
            raise InvalidArgument(f"grid size {self.m} outside [4, {MAX_GRID[self.n]}] for n={self.n}")
        if self.l <= 0 or self.g < 0:
            raise InvalidArgument("need l > 0 and g >= 0")

    @property
    def h(self) -> float:
        return self.l / (self.m + 1)


def _laplacian_1d(m, h):
    return sparse.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1]) / h**2


def hamiltonian(p: FewBodyProblem) -> sparse.csc_matrix:
    m, h = p.m, p.h
    lap = _laplacian_1d(m, h)
    eye = sparse.identity(m)
    if p.n == 1:
        return lap.tocsc()
    coords = np.indices((m,) * p.n).reshape(p.n, -1)
    kin = sparse.csr_matrix((m**p.n, m**p.n))
    for axis in range(p.n):
        ops = [eye] * p.n
        ops[axis] = lap
        term = ops[0]
        for op in ops[1:]:
            term = sparse.kron(term, op)
        kin = kin + term
    pairs = sum((coords[i] == coords[j]).astype(float) for i, j in itertools.combinations(range(p.n), 2))
    return (kin + sparse.diags(p.g / h * pairs)).tocsc()


def _symmetrize(psi, n):
    if n == 1:
        return psi
    perms = list(itertools.permutations(range(n)))
    return sum(np.transpose(psi, q) for q in perms) / len(perms)


def ground_state(p: FewBodyProblem) -> tuple[float, np.ndarray]:
    """(E_0, psi) on the interior grid; psi >= 0, symmetric, h^n sum psi^2 = 1."""
    H = hamiltonian(p)
    try:
        if p.n < 3:
            w, v = eigsh(H, k=1, sigma=0.0, which="LM", tol=1e-12)
        else:
            # the 3d factorization fills in badly; plain Lanczos from the
            # free product state converges quickly instead
            s = np.sin(np.pi * np.arange(1, p.m + 1) / (p.m + 1))
            v0 = np.einsum("i,j,k->ijk", s, s, s).ravel()
            w, v = eigsh(H, k=1, which="SA", v0=v0, tol=1e-12)
    except Exception as exc:  # ARPACK or factorization failure
        raise NumericFailure(f"eigensolver failed for {p}: {exc}") from exc
    psi = v[:, 0].reshape((p.m,) * p.n)
    psi = psi * np.sign(psi.sum())
    psi = _symmetrize(psi, p.n)
    psi /= math.sqrt(np.sum(psi * psi) * p.h**p.n)
    # Rayleigh quotient of the symmetrized vector
    flat = psi.ravel()
    energy = float(flat @ (H @ flat) / (flat @ flat))
    return energy, psi


def extrapolated_energy(n: int, l: float, g: float, m: int | None = None) -> float:
    """Richardson estimate over grids m and 2m+1 (second-order scheme)."""
    m_fine = MAX_GRID[n] if m is None else m
    if n == 1:
        return PI2 / l**2
    m_coarse = (m_fine - 1) // 2
    e_c, _ = ground_state(FewBodyProblem(n, l, g, m_coarse))
    e_f, _ = ground_state(FewBodyProblem(n, l, g, 2 * m_coarse + 1))
    return (4.0 * e_f - e_c) / 3.0


# -- sine spectral basis, n = 2 --------------------------------------------------


def _cos_overlap(p, q):
    """(1/l) int_0^l cos(p pi z/l) cos(q pi z/l) dz for integers p, q."""
    return 0.5 * ((p == q).astype(float) + (p == -q).astype(float))


def sine_basis_energy(l: float, g: float, K: int) -> float:
    """Lowest two-boson energy in the span of symmetrized sin_a sin_b, a <= b <= K."""
    a, b = np.triu_indices(K)
    a, b = a + 1, b + 1
    kin = PI2 * (a * a + b * b) / l**2
    A, B = a[:, None], b[:, None]
    C, D = a[None, :], b[None, :]
    # int chi_a chi_b chi_c chi_d with chi_p = sqrt(2/l) sin(p pi z / l)
    quad = (_cos_overlap(A - B, C - D) - _cos_overlap(A - B, C + D)
            - _cos_overlap(A + B, C - D) + _cos_overlap(A + B, C + D)) / l
    norm = np.sqrt(2.0 * (1.0 + (a == b)))
    V = g * 4.0 * quad / (norm[:, None] * norm[None, :])
    H = np.diag(kin) + V
    return float(np.linalg.eigvalsh(H)[0])


def sine_basis_extrapolated(l: float, g: float, K: int = 64) -> float:
    """Extrapolate the basis energy in 1/K using K/2 and K (error ~ 1/K)."""
    e1 = sine_basis_energy(l, g, K // 2)
    e2 = sine_basis_energy(l, g, K)
    return 2.0 * e2 - e1


# -- one-particle density matrix -----------------------------------------------------


@dataclass(frozen=True)
class ReducedDensity:
    kernel: np.ndarray  # K(x, x') on the interior grid
    h: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.kernel) * self.h)

    def eigenvalues(self) -> np.ndarray:
        """Occupations of the natural orbitals (eigenvalues of the integral operator)."""
        return np.linalg.eigvalsh(self.kernel * self.h)[::-1]


def reduced_density(psi: np.ndarray, h: float) -> ReducedDensity:
    n = psi.ndim
    m = psi.shape[0]
    mat = psi.reshape(m, -1)
    kernel = n * (mat @ mat.T) * h ** (n - 1)
    return ReducedDensity(0.5 * (kernel + kernel.T), h)


def gp_mode_occupation(p: FewBodyProblem, gp: GpSolution, psi: np.ndarray | None = None) -> float:
    """n_0 = <phi, rho^(1) phi> with phi the unit-mass GP minimizer at coupling n g."""
    if gp.problem.m != p.m or not math.isclose(gp.problem.l, p.l, rel_tol=1e-14):
        raise InvalidArgument("GP solution and few-body problem use different grids")
    if psi is None:
        _, psi = ground_state(p)
    rd = reduced_density(psi, p.h)
    phi = gp.phi[1:-1]
    return float(phi @ rd.kernel @ phi * p.h**2)


def depletion_bound(n: float, l: float, g: float, c: float = 1.0) -> float:
    """sqrt7 c {ln[1 + exp(-2 sqrt(pi^2 + 3 n l g))]}^{-1} n^{2/3} l g."""
    gamma = n * l * g
    return math.sqrt(7.0) * c / math.log1p(math.exp(-2.0 * math.sqrt(PI2 + 3.0 * gamma))) * n ** (2 / 3) * l * g


def smallness(n: float, l: float, g: float) -> float:
    """[n^{1/3} l g]^{1/2}, the quantity the energy and depletion bounds need small."""
    return math.sqrt(n ** (1 / 3) * l * g)


@dataclass(frozen=True)
class SandwichReport:
    n: int
    l: float
    g: float
    eps: float
    e_qm: float
    e_gp: float
    e_qm_grid: float
    e_product_grid: float
    n0: float
    depletion: float
    depletion_rhs: float
    hypothesis: bool

    @property
    def upper_margin(self) -> float:
        return self.e_gp - self.e_qm

    @property
    def lower_margin(self) -> float:
        return self.e_qm - (1.0 - self.eps) * self.e_gp

    @property
    def product_margin(self) -> float:
        """Same-grid margin of E_QM <= n E_GP(1, l, n g) (a discrete variational bound)."""
        return self.e_product_grid - self.e_qm_grid

    @property
    def depletion_margin(self) -> float:
        return self.depletion_rhs - self.depletion

    @property
    def passed(self) -> bool:
        return self.upper_margin >= 0 and self.lower_margin >= 0 and self.product_margin >= 0

    def to_record(self) -> dict:
        return {
            "n": self.n, "l": self.l, "g": self.g, "E_QM": self.e_qm, "E_GP": self.e_gp,
            "n0": self.n0, "upper_margin": self.upper_margin, "lower_margin": self.lower_margin,
            "product_margin": self.product_margin, "depletion": self.depletion,
            "depletion_rhs": self.depletion_rhs, "hypothesis": self.hypothesis, "passed": self.passed,
        }


def sandwich_check(p: FewBodyProblem, eps: float = 0.5, c: float = 1.0, c_tilde: float = 1.0) -> SandwichReport:
    """Energy sandwich, product-state bound and depletion for one problem.

    ``hypothesis`` records whether the smallness condition
    [n^{1/3} l g]^{1/2} < eps / max(sqrt2 c, c~) holds; the inequalities are
    evaluated either way.
    """
    e_grid, psi = ground_state(p)
    e_qm = e_grid if p.n == 1 else extrapolated_energy(p.n, p.l, p.g, p.m)
    e_gp = float(egp_scaled(p.n, p.l, p.g))
    gp = minimize_gp(GpProblem(1.0, p.l, p.n * p.g, p.m))
    product = p.n * gp.energy
    n0 = gp_mode_occupation(p, gp, psi)
    hyp = smallness(p.n, p.l, p.g) < eps / max(math.sqrt(2.0) * c, c_tilde)
    return SandwichReport(p.n, p.l, p.g, eps, e_qm, e_gp, e_grid, product, n0,
                          1.0 - n0 / p.n, depletion_bound(p.n, p.l, p.g, c), hyp)
