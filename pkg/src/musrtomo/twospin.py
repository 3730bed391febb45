"""Two-spin (muon x electron) tomography.

Provides the Clebsch-Gordan change of basis between the product basis
|m_mu, m_e> and the coupled basis |L M>, and the tomogram flavors built on
them: the individual tomogram (joint projection probabilities along a
direction per spin), its measurable muon marginal, the total tomogram in the
coupled basis, the block-diagonal rotation and the total probability
distribution f^(L)(M, N), plus reconstruction routines.

Basis ordering is fixed globally: product labels are muon-major with both
projections descending; coupled labels are (L descending, M descending).
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .linalg import SubsystemDims, kron, partial_trace, require_density_matrix
from .tomography import (
    Direction,
    QuadratureGrid,
    clebsch_gordan,
    measurement_projector,
    quantizer,
    rotation_matrix,
    spin_projections,
)


@dataclass(frozen=True)
class TwoSpinBasis:
    """Label bookkeeping for a muon spin coupled to an effective electron spin."""

    j_mu: float
    j_e: float

    @property
    def dim(self) -> int:
        return int(round(2 * self.j_mu + 1)) * int(round(2 * self.j_e + 1))

    @property
    def dims(self) -> SubsystemDims:
        return SubsystemDims(int(round(2 * self.j_mu + 1)), int(round(2 * self.j_e + 1)))

    def product_labels(self) -> list[tuple[float, float]]:
        return [(m_mu, m_e)
                for m_mu in spin_projections(self.j_mu)
                for m_e in spin_projections(self.j_e)]

    def total_spins(self) -> list[float]:
        lo, hi = abs(self.j_mu - self.j_e), self.j_mu + self.j_e
        n = int(round(hi - lo)) + 1
        return [hi - k for k in range(n)]

    def coupled_labels(self) -> list[tuple[float, float]]:
        return [(ell, m) for ell in self.total_spins() for m in spin_projections(ell)]


def cg_matrix(j_mu: float, j_e: float) -> np.ndarray:
    """Unitary change of basis, coupled components = U_CG @ product components.

    Rows run over (L desc, M desc), columns over the muon-major product basis;
    entries are real Clebsch-Gordan coefficients <m_mu, m_e | L M>.
    """
    basis = TwoSpinBasis(j_mu, j_e)
    coupled = basis.coupled_labels()
    product = basis.product_labels()
    u = np.zeros((len(coupled), len(product)))
    for a, (ell, m) in enumerate(coupled):
        for b, (m_mu, m_e) in enumerate(product):
            u[a, b] = clebsch_gordan(j_mu, m_mu, j_e, m_e, ell, m)
    return u


def _require_unitary(u: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])) > tol * max(1.0, u.shape[0]):
        raise ValueError("matrix is not unitary within tolerance")
    return u


def individual_tomogram_unitary(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Diagonal of U rho U^dag in the product basis (joint probabilities)."""
    rho = require_density_matrix(rho)
    u = _require_unitary(u)
    return np.einsum("ia,ab,ib->i", u, rho, u.conj()).real


def individual_tomogram(rho: np.ndarray, j_mu: float, j_e: float,
                        dir_mu: Direction, dir_e: Direction) -> np.ndarray:
    """Joint probabilities of muon projection along dir_mu and electron
    projection along dir_e, shape (2j_mu+1, 2j_e+1), projections descending."""
    rho = require_density_matrix(rho)
    u = kron(rotation_matrix(j_mu, dir_mu), rotation_matrix(j_e, dir_e))
    diag = np.einsum("ai,ab,bi->i", u.conj(), rho, u).real
    return diag.reshape(int(round(2 * j_mu + 1)), int(round(2 * j_e + 1)))


def reduced_tomogram(rho: np.ndarray, j_mu: float, j_e: float,
                     dir_mu: Direction) -> np.ndarray:
    """Muon marginal of the individual tomogram: the single-spin tomogram of
    Tr_e[rho]. Independent of any electron direction (non-signalling)."""
    rho = require_density_matrix(rho)
    basis = TwoSpinBasis(j_mu, j_e)
    rho_mu = partial_trace(rho, basis.dims, keep="a")
    r = rotation_matrix(j_mu, dir_mu)
    return np.einsum("ai,ab,bi->i", r.conj(), rho_mu, r).real


def total_tomogram(rho: np.ndarray, j_mu: float, j_e: float, u: np.ndarray) -> np.ndarray:
    """<L M| U rho U^dag |L M> over the coupled labels (L desc, M desc)."""
    rho = require_density_matrix(rho)
    u = _require_unitary(u)
    ucg = cg_matrix(j_mu, j_e)
    return np.einsum("ia,ab,ib->i", ucg @ u, rho, (ucg @ u).conj()).real


def blockdiag_rotation(j_mu: float, j_e: float, direction: Direction) -> np.ndarray:
    """Direct sum over L of the spin-L rotations, in the coupled basis
    (blocks ordered L descending). Equals the CG conjugation of the product
    rotation R^(j_mu) x R^(j_e)."""
    basis = TwoSpinBasis(j_mu, j_e)
    blocks = [rotation_matrix(ell, direction) for ell in basis.total_spins()]
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    at = 0
    for b in blocks:
        d = b.shape[0]
        out[at:at + d, at:at + d] = b
        at += d
    return out


def total_pdf(rho: np.ndarray, j_mu: float, j_e: float, direction: Direction) -> dict:
    """f^(L)(M, N): per-L probabilities of total projection M along N.

    Diagonal of (direct-sum rotation)^dag rho_coupled (direct-sum rotation),
    grouped by L. Not invertible in general; see reconstruct_blockdiag for the
    permutation-symmetric (block-diagonal) case.
    """
    rho = require_density_matrix(rho)
    basis = TwoSpinBasis(j_mu, j_e)
    ucg = cg_matrix(j_mu, j_e)
    rho_coupled = ucg @ rho @ ucg.T
    u = blockdiag_rotation(j_mu, j_e, direction)
    diag = np.einsum("ai,ab,bi->i", u.conj(), rho_coupled, u).real
    out = {}
    at = 0
    for ell in basis.total_spins():
        d = int(round(2 * ell)) + 1
        out[ell] = diag[at:at + d]
        at += d
    return out


def total_pdf_on_grid(rho: np.ndarray, j_mu: float, j_e: float,
                      grid: QuadratureGrid) -> dict:
    """f^(L)(M, N) sampled on a grid; maps L -> array (2L+1, n_nodes)."""
    per_node = [total_pdf(rho, j_mu, j_e, node) for node in grid.nodes()]
    basis = TwoSpinBasis(j_mu, j_e)
    return {ell: np.array([smp[ell] for smp in per_node]).T
            for ell in basis.total_spins()}


def reconstruct_blockdiag(f_samples: dict, grid: QuadratureGrid,
                          j_mu: float, j_e: float) -> np.ndarray:
    """Reconstruct the block-diagonal (coupled-basis) part of a state from its
    total probability distribution, block by block with spin-L quantizers.

    Exact for permutation-symmetric states, whose coupled-basis density matrix
    is block-diagonal.
    """
    basis = TwoSpinBasis(j_mu, j_e)
    l_max = max(basis.total_spins())
    if grid.degree < int(round(4 * l_max)):
        raise ValueError(f"grid degree {grid.degree} insufficient; "
                         f"need >= {int(round(4 * l_max))}")
    weights = grid.weights
    nodes = grid.nodes()
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    at = 0
    for ell in basis.total_spins():
        d = int(round(2 * ell)) + 1
        block = np.zeros((d, d), dtype=complex)
        vals = f_samples[ell]
        for mi, m in enumerate(spin_projections(ell)):
            for ni, node in enumerate(nodes):
                block += weights[ni] * vals[mi, ni] * quantizer(ell, m, node)
        out[at:at + d, at:at + d] = block
        at += d
    return out


@dataclass
class TwoSpinTomogram:
    """Individual two-spin tomogram on a product grid.

    ``values`` has shape (2j_mu+1, nodes_mu, 2j_e+1, nodes_e); the projection
    axes are ordered descending.
    """

    j_mu: float
    j_e: float
    grid_mu: QuadratureGrid
    grid_e: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expect = (int(round(2 * self.j_mu + 1)), self.grid_mu.n_nodes,
                  int(round(2 * self.j_e + 1)), self.grid_e.n_nodes)
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != {expect}")
        sums = self.values.sum(axis=(0, 2))
        if np.max(np.abs(sums - 1.0)) > 1e-10:
            raise ValueError("joint probabilities must sum to 1 per direction pair")
        if np.any(self.values < -1e-12):
            raise ValueError("negative joint probabilities")

    @classmethod
    def from_state(cls, rho: np.ndarray, j_mu: float, j_e: float,
                   grid_mu: QuadratureGrid | None = None,
                   grid_e: QuadratureGrid | None = None) -> "TwoSpinTomogram":
        rho = require_density_matrix(rho)
        grid_mu = grid_mu if grid_mu is not None else QuadratureGrid.for_spin(j_mu)
        grid_e = grid_e if grid_e is not None else QuadratureGrid.for_spin(j_e)
        proj_mu = np.array([[measurement_projector(j_mu, m, node)
                             for node in grid_mu.nodes()]
                            for m in spin_projections(j_mu)])
        proj_e = np.array([[measurement_projector(j_e, m, node)
                            for node in grid_e.nodes()]
                           for m in spin_projections(j_e)])
        d_mu = int(round(2 * j_mu + 1))
        d_e = int(round(2 * j_e + 1))
        rho_t = rho.reshape(d_mu, d_e, d_mu, d_e)
        vals = np.einsum("acbd,miba,njdc->minj", rho_t, proj_mu, proj_e).real
        return cls(j_mu, j_e, grid_mu, grid_e, vals)

    def marginal_mu(self) -> np.ndarray:
        """Muon marginal per muon node (electron variables summed out)."""
        return self.values.sum(axis=3).sum(axis=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: musrtomo/two-spin-tomogram/v1\n")
        writer = csv.writer(buf)
        writer.writerow(["m_mu", "theta_mu", "phi_mu", "m_e", "theta_e", "phi_e",
                         "probability"])
        nodes_mu = self.grid_mu.nodes()
        nodes_e = self.grid_e.nodes()
        for mi, m_mu in enumerate(spin_projections(self.j_mu)):
            for ni, node_mu in enumerate(nodes_mu):
                for mj, m_e in enumerate(spin_projections(self.j_e)):
                    for nj, node_e in enumerate(nodes_e):
                        writer.writerow([
                            repr(float(m_mu)), repr(node_mu.theta), repr(node_mu.phi),
                            repr(float(m_e)), repr(node_e.theta), repr(node_e.phi),
                            repr(float(self.values[mi, ni, mj, nj])),
                        ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, j_mu: float, j_e: float,
                 grid_mu: QuadratureGrid | None = None,
                 grid_e: QuadratureGrid | None = None) -> "TwoSpinTomogram":
        grid_mu = grid_mu if grid_mu is not None else QuadratureGrid.for_spin(j_mu)
        grid_e = grid_e if grid_e is not None else QuadratureGrid.for_spin(j_e)
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.DictReader(rows)
        table = {}
        for rec in reader:
            key = (round(float(rec["m_mu"]), 9),
                   round(float(rec["theta_mu"]), 12), round(float(rec["phi_mu"]), 12),
                   round(float(rec["m_e"]), 9),
                   round(float(rec["theta_e"]), 12), round(float(rec["phi_e"]), 12))
            table[key] = float(rec["probability"])
        shape = (int(round(2 * j_mu + 1)), grid_mu.n_nodes,
                 int(round(2 * j_e + 1)), grid_e.n_nodes)
        values = np.empty(shape)
        for mi, m_mu in enumerate(spin_projections(j_mu)):
            for ni, node_mu in enumerate(grid_mu.nodes()):
                for mj, m_e in enumerate(spin_projections(j_e)):
                    for nj, node_e in enumerate(grid_e.nodes()):
                        key = (round(float(m_mu), 9),
                               round(node_mu.theta, 12), round(node_mu.phi, 12),
                               round(float(m_e), 9),
                               round(node_e.theta, 12), round(node_e.phi, 12))
                        if key not in table:
                            raise ValueError(f"file misses sample {key}")
                        values[mi, ni, mj, nj] = table[key]
        return cls(j_mu, j_e, grid_mu, grid_e, values)


def reconstruct_two_spin(w: TwoSpinTomogram) -> np.ndarray:
    """Density matrix from the individual tomogram by double sphere quadrature
    against the product quantizers."""
    for grid, j in ((w.grid_mu, w.j_mu), (w.grid_e, w.j_e)):
        if grid.degree < int(round(4 * j)):
            raise ValueError("grid degree insufficient for reconstruction")
    quant_mu = np.array([[quantizer(w.j_mu, m, node) for node in w.grid_mu.nodes()]
                         for m in spin_projections(w.j_mu)])
    quant_e = np.array([[quantizer(w.j_e, m, node) for node in w.grid_e.nodes()]
                        for m in spin_projections(w.j_e)])
    wq = w.values * w.grid_mu.weights[None, :, None, None] \
        * w.grid_e.weights[None, None, None, :]
    rho_t = np.einsum("minj,miab,njcd->acbd", wq, quant_mu, quant_e)
    dim = w.values.shape[0] * w.values.shape[2]
    return rho_t.reshape(dim, dim)


def total_from_individual(w: TwoSpinTomogram, u: np.ndarray) -> np.ndarray:
    """Total tomogram <L M|U rho U^dag|L M> evaluated from individual-tomogram
    samples: the state is rebuilt by quadrature against the product quantizers
    and then conjugated into the coupled basis."""
    u = _require_unitary(u)
    rho = reconstruct_two_spin(w)
    rho = (rho + rho.conj().T) / 2
    ucg = cg_matrix(w.j_mu, w.j_e)
    m = ucg @ u @ rho @ u.conj().T @ ucg.T
    return np.diag(m).real
