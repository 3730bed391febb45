"""Single-spin tomography.

A spin-j state is equivalently described by the tomogram w(m, n): the
probability of finding spin projection m along the unit direction n. This
module provides

- :class:`Direction` and the product :class:`QuadratureGrid` on the sphere,
- SU(2) rotation matrices, Wigner small-d functions and 3j symbols,
- the forward map state -> tomogram and the quantizer operators that invert
  it by quadrature over the sphere,
- the three-direction inverse for qubits (dual-basis formula).

Conventions
-----------
Projections m are ordered descending (+j first). ``rotation_matrix(j, n)``
is exp(-i (n_perp . J) theta) with n_perp = (-sin phi, cos phi, 0); its first
column is the spin-up state along n. The tomogram is the diagonal of
R^dag rho R, which for a qubit gives w(m, n) = 1/2 + m Tr[rho (n.sigma)].
The pairing tomogram/quantizer is fixed by requiring the sphere-quadrature
round trip to be exact, which also makes the j=1/2 quantizer equal
I/2 + 3m (n.sigma).
"""

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from math import lgamma

import numpy as np

from .linalg import propagator, require_density_matrix

SUPPORTED_SPINS = (0.0, 0.5, 1.0, 1.5, 2.0)


# --------------------------------------------------------------------------
# directions and grids

@dataclass(frozen=True)
class Direction:
    """Unit vector n(theta, phi) on the sphere."""

    theta: float
    phi: float

    @property
    def vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([np.cos(self.phi) * st, np.sin(self.phi) * st, np.cos(self.theta)])

    @property
    def n_perp(self) -> np.ndarray:
        return np.array([-np.sin(self.phi), np.cos(self.phi), 0.0])

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("cannot build a direction from a (near) zero vector")
        v = v / norm
        theta = float(np.arccos(np.clip(v[2], -1.0, 1.0)))
        phi = float(np.arctan2(v[1], v[0])) % (2 * np.pi)
        return cls(theta, phi)

    def ppt_mirror(self) -> "Direction":
        """Mirror n_y -> -n_y (phi -> -phi), the tomogram-level partial transpose."""
        return Direction(self.theta, (-self.phi) % (2 * np.pi))


X_AXIS = Direction(np.pi / 2, 0.0)
Y_AXIS = Direction(np.pi / 2, np.pi / 2)
Z_AXIS = Direction(0.0, 0.0)


@dataclass(frozen=True)
class QuadratureGrid:
    """Product quadrature on the sphere: Gauss-Legendre in cos(theta) times a
    uniform trapezoid in phi, with weights normalized to integrate dn/4pi.

    Exact for spherical polynomials up to the declared ``degree``.
    """

    thetas: np.ndarray
    theta_weights: np.ndarray
    phis: np.ndarray
    degree: int

    @classmethod
    def for_spin(cls, j: float) -> "QuadratureGrid":
        """Grid exact to degree 4j, sufficient for tomogram-quantizer integrals."""
        return cls.of_degree(int(round(4 * j)))

    @classmethod
    def of_degree(cls, degree: int) -> "QuadratureGrid":
        n_theta = max(2, degree + 1)
        n_phi = max(3, degree + 2)
        x, wx = np.polynomial.legendre.leggauss(n_theta)
        order = np.argsort(-x)  # theta ascending
        return cls(
            thetas=np.arccos(x[order]),
            theta_weights=wx[order] / 2.0,
            phis=2 * np.pi * np.arange(n_phi) / n_phi,
            degree=degree,
        )

    @property
    def n_nodes(self) -> int:
        return len(self.thetas) * len(self.phis)

    def nodes(self) -> list[Direction]:
        """Flattened nodes, theta-major: index = i_theta * n_phi + i_phi."""
        return [Direction(float(t), float(p)) for t in self.thetas for p in self.phis]

    @property
    def weights(self) -> np.ndarray:
        n_phi = len(self.phis)
        return np.repeat(self.theta_weights / n_phi, n_phi)

    def ppt_permutation(self) -> np.ndarray:
        """Node permutation realizing phi -> -phi on this grid."""
        n_phi = len(self.phis)
        perm_phi = (-np.arange(n_phi)) % n_phi
        idx = np.arange(self.n_nodes).reshape(-1, n_phi)
        return idx[:, perm_phi].reshape(-1)


# --------------------------------------------------------------------------
# angular-momentum algebra

def spin_projections(j: float) -> np.ndarray:
    """Projections m = j, j-1, ..., -j (descending)."""
    dim = int(round(2 * j)) + 1
    return j - np.arange(dim)


def angular_momentum_ops(j: float):
    """(Jx, Jy, Jz) in the |j m> basis, m descending."""
    ms = spin_projections(j)
    dim = len(ms)
    jz = np.diag(ms).astype(complex)
    jplus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        m = ms[k]
        jplus[k - 1, k] = np.sqrt(j * (j + 1) - m * (m + 1))
    jminus = jplus.conj().T
    return (jplus + jminus) / 2, (jplus - jminus) / 2j, jz


def _lf(x: float) -> float:
    return lgamma(x + 1.0)


def wigner_small_d(j: float, mp: float, m: float, beta: float) -> float:
    """Wigner small-d matrix element d^j_{mp,m}(beta) = <j mp|e^{-i beta Jy}|j m>."""
    if abs(mp) > j or abs(m) > j:
        raise ValueError("projections must satisfy |m| <= j")
    for proj in (mp, m):
        if round(2 * proj) != 2 * proj or (j - proj) != round(j - proj):
            raise ValueError("projections must differ from j by integers")
    kmin = int(round(max(0.0, m - mp)))
    kmax = int(round(min(j + m, j - mp)))
    pre = 0.5 * (_lf(j + m) + _lf(j - m) + _lf(j + mp) + _lf(j - mp))
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    total = 0.0
    for k in range(kmin, kmax + 1):
        ln = pre - (_lf(j + m - k) + _lf(k) + _lf(j - mp - k) + _lf(k - m + mp))
        total += (-1.0) ** round(mp - m + k) * np.exp(ln) \
            * c ** round(2 * j - 2 * k + m - mp) * s ** round(2 * k - m + mp)
    return float(total)


def three_j(j1: float, j2: float, j3: float, m1: float, m2: float, m3: float) -> float:
    """Wigner 3j symbol via the Racah sum with log-factorials.

    Selection-rule violations return 0 rather than raising.
    """
    if round(m1 + m2 + m3, 12) != 0:
        return 0.0
    if j3 > j1 + j2 or j3 < abs(j1 - j2):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if round(2 * (j1 + j2 + j3)) % 2 != 0:
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if (j - m) != round(j - m):
            return 0.0
    pre = 0.5 * (_lf(j1 + j2 - j3) + _lf(j1 - j2 + j3) + _lf(-j1 + j2 + j3)
                 - _lf(j1 + j2 + j3 + 1)
                 + _lf(j1 + m1) + _lf(j1 - m1) + _lf(j2 + m2) + _lf(j2 - m2)
                 + _lf(j3 + m3) + _lf(j3 - m3))
    kmin = int(round(max(0.0, j2 - j3 - m1, j1 - j3 + m2)))
    kmax = int(round(min(j1 + j2 - j3, j1 - m1, j2 + m2)))
    total = 0.0
    for k in range(kmin, kmax + 1):
        ln = pre - (_lf(k) + _lf(j1 + j2 - j3 - k) + _lf(j1 - m1 - k)
                    + _lf(j2 + m2 - k) + _lf(j3 - j2 + m1 + k) + _lf(j3 - j1 - m2 + k))
        total += (-1.0) ** k * np.exp(ln)
    return float((-1.0) ** round(j1 - j2 - m3) * total)


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float,
                   jtot: float, mtot: float) -> float:
    """<j1 m1, j2 m2 | jtot mtot> with the Condon-Shortley phase."""
    return float((-1.0) ** round(j1 - j2 + mtot) * np.sqrt(2 * jtot + 1)
                 * three_j(j1, j2, jtot, m1, m2, -mtot))


# --------------------------------------------------------------------------
# rotations, tomograms, quantizers

def rotation_matrix(j: float, direction: Direction) -> np.ndarray:
    """exp(-i (n_perp . J) theta) in the |j m> basis, m descending.

    Matrix elements e^{-i(m'-m)phi} d^j_{m'm}(theta); the first column is the
    coherent spin state pointing along ``direction``.
    """
    if j not in SUPPORTED_SPINS:
        raise ValueError(f"unsupported spin j={j}; supported: {SUPPORTED_SPINS}")
    ms = spin_projections(j)
    dim = len(ms)
    u = np.zeros((dim, dim), dtype=complex)
    for a, mp in enumerate(ms):
        for b, m in enumerate(ms):
            u[a, b] = np.exp(-1j * (mp - m) * direction.phi) \
                * wigner_small_d(j, mp, m, direction.theta)
    return u


def rotation_from_generators(j: float, direction: Direction) -> np.ndarray:
    """Same rotation through the generic matrix exponential (cross-check path)."""
    jx, jy, jz = angular_momentum_ops(j)
    nperp = direction.n_perp
    return propagator(nperp[0] * jx + nperp[1] * jy + nperp[2] * jz, direction.theta)


def measurement_projector(j: float, m: float, direction: Direction) -> np.ndarray:
    """Rank-one effect R|j m><j m|R^dag: projection m along ``direction``."""
    r = rotation_matrix(j, direction)
    idx = _m_index(j, m)
    col = r[:, idx]
    return np.outer(col, col.conj())


def _m_index(j: float, m: float) -> int:
    idx = int(round(j - m))
    if idx < 0 or idx > int(round(2 * j)):
        raise ValueError(f"projection m={m} invalid for j={j}")
    return idx


def tomogram(rho: np.ndarray, j: float, direction: Direction) -> np.ndarray:
    """Probabilities of spin projections along ``direction``, m descending.

    Diagonal of R^dag rho R; nonnegative for positive rho and summing to 1.
    """
    rho = require_density_matrix(rho)
    dim = int(round(2 * j)) + 1
    if rho.shape[0] != dim:
        raise ValueError(f"density matrix dimension {rho.shape[0]} != 2j+1 = {dim}")
    r = rotation_matrix(j, direction)
    return np.einsum("ai,ab,bi->i", r.conj(), rho, r).real


def tomogram_on_grid(rho: np.ndarray, j: float, grid: QuadratureGrid) -> np.ndarray:
    """Tomogram values on every grid node, shape (2j+1, n_nodes)."""
    rho = require_density_matrix(rho)
    cols = [tomogram_unchecked(rho, j, node) for node in grid.nodes()]
    return np.array(cols).T


def tomogram_unchecked(rho: np.ndarray, j: float, direction: Direction) -> np.ndarray:
    r = rotation_matrix(j, direction)
    return np.einsum("ai,ab,bi->i", r.conj(), rho, r).real


@lru_cache(maxsize=None)
def _tensor_l0_diags(two_j: int) -> tuple:
    """Diagonals of the normalized irreducible tensor operators T^{L0},
    L = 0..2j; each is orthonormal under the trace inner product."""
    j = two_j / 2.0
    ms = spin_projections(j)
    out = []
    for ell in range(two_j + 1):
        diag = np.array([clebsch_gordan(j, m, ell, 0.0, j, m) for m in ms])
        out.append(diag / np.linalg.norm(diag))
    return tuple(out)


def quantizer(j: float, m: float, direction: Direction) -> np.ndarray:
    """Quantizer operator dual to the tomogram: rho equals the quadrature sum
    of w(m, n) * quantizer(j, m, n) over m and the sphere.

    Built as R K_m R^dag with the diagonal kernel
    K_m = sum_L (2L+1) <j m|T^{L0}|j m> T^{L0}; for j = 1/2 this reduces to
    I/2 + 3m (n.sigma).
    """
    idx = _m_index(j, m)
    diags = _tensor_l0_diags(int(round(2 * j)))
    kernel = np.zeros(len(diags[0]))
    for ell, diag in enumerate(diags):
        kernel += (2 * ell + 1) * diag[idx] * diag
    r = rotation_matrix(j, direction)
    return (r * kernel) @ r.conj().T


@dataclass
class SpinTomogram:
    """Tomogram sampled on a quadrature grid; values shape (2j+1, n_nodes)."""

    j: float
    grid: QuadratureGrid
    values: np.ndarray
    _slack: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        dim = int(round(2 * self.j)) + 1
        if self.values.shape != (dim, self.grid.n_nodes):
            raise ValueError(f"values shape {self.values.shape} != "
                             f"({dim}, {self.grid.n_nodes})")
        if np.any(self.values < -self._slack) or np.any(self.values > 1 + self._slack):
            raise ValueError("tomogram values outside [0, 1]")
        sums = self.values.sum(axis=0)
        if np.max(np.abs(sums - 1.0)) > 1e-10:
            raise ValueError("tomogram columns must each sum to 1")

    @classmethod
    def from_state(cls, rho: np.ndarray, j: float,
                   grid: QuadratureGrid | None = None) -> "SpinTomogram":
        grid = grid if grid is not None else QuadratureGrid.for_spin(j)
        return cls(j, grid, tomogram_on_grid(rho, j, grid))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: musrtomo/spin-tomogram/v1\n")
        writer = csv.writer(buf)
        writer.writerow(["m", "theta", "phi", "weight", "probability"])
        ms = spin_projections(self.j)
        weights = self.grid.weights
        for mi, m in enumerate(ms):
            for ni, node in enumerate(self.grid.nodes()):
                writer.writerow([repr(float(m)), repr(node.theta), repr(node.phi),
                                 repr(float(weights[ni])), repr(float(self.values[mi, ni]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, j: float,
                 grid: QuadratureGrid | None = None) -> "SpinTomogram":
        """Rebuild from ``to_csv`` output; the grid must match the file's
        (theta, phi) layout (the default grid for ``j`` unless given)."""
        grid = grid if grid is not None else QuadratureGrid.for_spin(j)
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.DictReader(rows)
        table = {}
        for rec in reader:
            key = (round(float(rec["m"]), 9), round(float(rec["theta"]), 12),
                   round(float(rec["phi"]), 12))
            table[key] = float(rec["probability"])
        dim = int(round(2 * j)) + 1
        values = np.empty((dim, grid.n_nodes))
        for mi, m in enumerate(spin_projections(j)):
            for ni, node in enumerate(grid.nodes()):
                key = (round(float(m), 9), round(node.theta, 12), round(node.phi, 12))
                if key not in table:
                    raise ValueError(f"file misses sample {key}")
                values[mi, ni] = table[key]
        return cls(j, grid, values)


def reconstruct_from_sphere(tom: SpinTomogram) -> np.ndarray:
    """Density matrix from a sphere-sampled tomogram by quadrature against the
    quantizer operators. Requires grid degree >= 4j."""
    if tom.grid.degree < int(round(4 * tom.j)):
        raise ValueError(f"grid degree {tom.grid.degree} insufficient for j={tom.j}; "
                         f"need >= {int(round(4 * tom.j))}")
    dim = int(round(2 * tom.j)) + 1
    weights = tom.grid.weights
    rho = np.zeros((dim, dim), dtype=complex)
    for mi, m in enumerate(spin_projections(tom.j)):
        for ni, node in enumerate(tom.grid.nodes()):
            rho += weights[ni] * tom.values[mi, ni] * quantizer(tom.j, m, node)
    return rho


def operator_symbol_on_grid(op: np.ndarray, j: float, grid: QuadratureGrid) -> np.ndarray:
    """Tomographic symbol Tr[op R|j m><j m|R^dag] of an arbitrary operator."""
    cols = []
    for node in grid.nodes():
        r = rotation_matrix(j, node)
        cols.append(np.einsum("ai,ab,bi->i", r.conj(), np.asarray(op, complex), r))
    return np.array(cols).T


def dual_basis(n1: Direction, n2: Direction, n3: Direction):
    """Vectors l_k with (l_i . n_j) = delta_ij; rejects coplanar triples."""
    v1, v2, v3 = n1.vector, n2.vector, n3.vector
    triple = float(np.dot(v1, np.cross(v2, v3)))
    if abs(triple) < 1e-10:
        raise ValueError("directions are coplanar; no dual basis exists")
    return (np.cross(v2, v3) / triple,
            np.cross(v3, v1) / triple,
            np.cross(v1, v2) / triple)


def reconstruct_qubit_three_directions(ws, directions) -> np.ndarray:
    """Qubit density matrix from the three probabilities w(+1/2, n_k).

    rho = I/2 + sum_k (2 w_k - 1) (l_k . J), J = sigma/2, with {l_k} dual to
    the measurement directions. Hermitian and unit trace by construction; the
    caller must check positivity when the inputs carry noise.
    """
    if len(ws) != 3 or len(directions) != 3:
        raise ValueError("need exactly three probabilities and directions")
    for w in ws:
        if not -1e-9 <= w <= 1 + 1e-9:
            raise ValueError(f"probability {w} outside [0, 1]")
    l1, l2, l3 = dual_basis(*directions)
    bloch = sum((2 * w - 1) * l for w, l in zip(ws, (l1, l2, l3)))
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return (np.eye(2) + bloch[0] * sx + bloch[1] * sy + bloch[2] * sz) / 2
