"""Entanglement and separability diagnostics in the tomographic picture.

Implements the Bell-like number built from joint projection probabilities at
two settings per spin, its maximization over settings, the partial-transpose
map at both the density-matrix and tomogram level, the positivity
coefficients M2..M4 of a unit-trace 4x4 Hermitian matrix, the entanglement
measure E = |M3| + |M4| - M3 - M4 evaluated on the partial transpose,
negativity for 2x2 and 2x3 systems, and the tomographic star-product route to
M3/M4.

Bell-number convention: with W[outcome, setting] the 4x4 matrix of joint
probabilities (outcomes ++, +-, -+, -- by row; settings 11, 12, 21, 22 by
column) and S the CHSH sign table below, B = sum(S * W) elementwise. For any
state this equals -(1/2) (a1-a2)^T T (b1-b2) with T the spin correlation
matrix, so |B| <= 2 s_max(T) <= 2 and separable states satisfy |B| <= 2.
This reading is pinned by the free-muonium benchmark max_B(t) = |sin w0 t|;
the alternative contraction Tr[S W] (plain CHSH) fails that benchmark.
"""

import json
from dataclasses import dataclass

import numpy as np

from .linalg import SubsystemDims, eig_hermitian, partial_transpose, require_density_matrix
from .tomography import Direction
from .twospin import TwoSpinTomogram, individual_tomogram

CHSH_SIGNS = np.array([
    [1, -1, -1, 1],
    [1, -1, -1, 1],
    [1, -1, -1, 1],
    [-1, 1, 1, -1],
], dtype=float)

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class BellSetting:
    """Two measurement directions per spin."""

    n1_mu: Direction
    n2_mu: Direction
    n1_e: Direction
    n2_e: Direction

    @classmethod
    def from_angles(cls, angles) -> "BellSetting":
        """Eight angles (theta, phi) x (n1_mu, n2_mu, n1_e, n2_e)."""
        a = np.asarray(angles, dtype=float)
        if a.shape != (8,):
            raise ValueError("expected 8 angles")
        return cls(Direction(a[0], a[1]), Direction(a[2], a[3]),
                   Direction(a[4], a[5]), Direction(a[6], a[7]))


def bell_cells(rho: np.ndarray, setting: BellSetting) -> np.ndarray:
    """4x4 matrix of joint probabilities; rows (++, +-, -+, --), columns
    (n1n1, n1n2, n2n1, n2n2)."""
    cols = []
    for n_mu in (setting.n1_mu, setting.n2_mu):
        for n_e in (setting.n1_e, setting.n2_e):
            w = individual_tomogram(rho, 0.5, 0.5, n_mu, n_e)
            cols.append(w.reshape(-1))
    return np.array(cols).T


def bell_number(cells: np.ndarray) -> float:
    """Bell-like number from the 16 joint probabilities (see module docstring
    for the contraction convention). Columns must each sum to 1."""
    cells = np.asarray(cells, dtype=float)
    if cells.shape != (4, 4):
        raise ValueError("expected a 4x4 probability table")
    if np.max(np.abs(cells.sum(axis=0) - 1.0)) > 1e-8:
        raise ValueError("each setting column must sum to 1")
    return float(np.sum(CHSH_SIGNS * cells))


def bell_number_of_state(rho: np.ndarray, setting: BellSetting) -> float:
    return bell_number(bell_cells(rho, setting))


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    """Two-qubit spin correlation matrix T_ij = Tr[rho sigma_i x sigma_j]."""
    rho = require_density_matrix(rho)
    if rho.shape != (4, 4):
        raise ValueError("correlation matrix requires a two-qubit state")
    t = np.empty((3, 3))
    for i, si in enumerate(_PAULI):
        for j, sj in enumerate(_PAULI):
            t[i, j] = np.trace(rho @ np.kron(si, sj)).real
    return t


def _bell_from_t(t_matrix: np.ndarray, angles: np.ndarray) -> float:
    """Bell number as -(1/2)(a1-a2)^T T (b1-b2); identical to the cell sum."""
    th = angles
    def vec(k):
        return np.array([np.cos(th[2 * k + 1]) * np.sin(th[2 * k]),
                         np.sin(th[2 * k + 1]) * np.sin(th[2 * k]),
                         np.cos(th[2 * k])])
    da = vec(0) - vec(1)
    db = vec(2) - vec(3)
    return -0.5 * float(da @ t_matrix @ db)


def max_bell(rho: np.ndarray, n_starts: int = 32, seed: int = 0,
             angle_tol: float = 1e-4):
    """Maximize |B| over the four directions (eight angles).

    Multi-start coordinate descent: each start sweeps the angles with a coarse
    scan plus golden-section refinement until no angle moves by more than
    ``angle_tol``. Two starts are seeded from the top singular vectors of the
    correlation matrix, the rest are random. Returns (max |B|, argmax setting).
    """
    t_matrix = correlation_matrix(rho)
    rng = np.random.default_rng(seed)

    def objective(angles):
        return abs(_bell_from_t(t_matrix, angles))

    def golden_refine(angles, k, lo, hi):
        invphi = (np.sqrt(5) - 1) / 2
        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        def f(x):
            angles[k] = x
            return -objective(angles)
        fc, fd = f(c), f(d)
        while b - a > angle_tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = f(d)
        angles[k] = (a + b) / 2
        return objective(angles)

    def descend(angles):
        angles = np.array(angles, dtype=float)
        best = objective(angles)
        for _ in range(60):
            moved = 0.0
            for k in range(8):
                period = np.pi if k % 2 == 0 else 2 * np.pi
                scan = np.linspace(0, period, 13)
                old = angles[k]
                vals = []
                for x in scan:
                    angles[k] = x
                    vals.append(objective(angles))
                i0 = int(np.argmax(vals))
                span = scan[1] - scan[0]
                best = golden_refine(angles, k, scan[i0] - span, scan[i0] + span)
                moved = max(moved, abs(angles[k] - old))
            if moved <= angle_tol:
                break
        return best, angles

    starts = []
    u, s, vt = np.linalg.svd(t_matrix)
    for sign in (1.0, -1.0):
        a1 = Direction.from_vector(u[:, 0])
        a2 = Direction.from_vector(-u[:, 0])
        b1 = Direction.from_vector(sign * vt[0])
        b2 = Direction.from_vector(-sign * vt[0])
        starts.append(np.array([a1.theta, a1.phi, a2.theta, a2.phi,
                                b1.theta, b1.phi, b2.theta, b2.phi]))
    while len(starts) < n_starts:
        starts.append(np.concatenate([[rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)]
                                      for _ in range(4)]))

    best_val, best_angles = -1.0, None
    for start in starts:
        val, angles = descend(start)
        if val > best_val:
            best_val, best_angles = val, angles
    return float(best_val), BellSetting.from_angles(best_angles)


def ppt_tomogram(w: TwoSpinTomogram) -> TwoSpinTomogram:
    """Tomogram of the partial transpose of the underlying state: the muon
    direction is mirrored through n_y -> -n_y, a node permutation on the
    phi-uniform grid."""
    perm = w.grid_mu.ppt_permutation()
    return TwoSpinTomogram(w.j_mu, w.j_e, w.grid_mu, w.grid_e,
                           w.values[:, perm, :, :])


@dataclass(frozen=True)
class PositivityCoefficients:
    """Elementary symmetric polynomials e2, e3, e4 of the spectrum of a
    unit-trace 4x4 Hermitian matrix; all nonnegative iff the matrix is PSD."""

    m2: float
    m3: float
    m4: float


def positivity_coefficients(lam: np.ndarray) -> PositivityCoefficients:
    """M2, M3, M4 from traces of powers:
    M2 = (1 - p2)/2,
    M3 = (1 - 3 p2 + 2 p3)/6,
    M4 = (1 - 6 p2 + 3 p2^2 + 8 p3 - 6 p4)/24,   p_k = Tr[lam^k].
    """
    lam = np.asarray(lam, dtype=complex)
    if lam.shape != (4, 4):
        raise ValueError("positivity coefficients are defined for 4x4 matrices")
    if abs(np.trace(lam) - 1.0) > 1e-10:
        raise ValueError("matrix must have unit trace")
    if np.linalg.norm(lam - lam.conj().T) > 1e-10 * max(1.0, np.linalg.norm(lam)):
        raise ValueError("matrix must be Hermitian")
    l2 = lam @ lam
    p2 = float(np.trace(l2).real)
    p3 = float(np.trace(l2 @ lam).real)
    p4 = float(np.trace(l2 @ l2).real)
    return PositivityCoefficients(
        m2=(1 - p2) / 2,
        m3=(1 - 3 * p2 + 2 * p3) / 6,
        m4=(1 - 6 * p2 + 3 * p2 ** 2 + 8 * p3 - 6 * p4) / 24,
    )


def entanglement_measure(rho: np.ndarray) -> float:
    """E = |M3| + |M4| - M3 - M4 with the coefficients evaluated on the
    partial transpose; zero for separable two-qubit states, positive exactly
    when the partial transpose fails positivity through M3 or M4."""
    rho = require_density_matrix(rho)
    if rho.shape != (4, 4):
        raise ValueError("the measure is defined for two-qubit states")
    ppt = partial_transpose(rho, SubsystemDims(2, 2), which="a")
    coeff = positivity_coefficients(ppt)
    return abs(coeff.m3) + abs(coeff.m4) - coeff.m3 - coeff.m4


def negativity(rho: np.ndarray, dims: SubsystemDims) -> float:
    """Sum of |negative eigenvalues| of the partial transpose. For 2x2 and
    2x3 splits this vanishes iff the state is separable."""
    rho = require_density_matrix(rho)
    if (dims.dim_a, dims.dim_b) not in ((2, 2), (2, 3)):
        raise ValueError("negativity supported for 2x2 and 2x3 splits only")
    dims.check(rho)
    ppt = partial_transpose(rho, dims, which="a")
    w, _ = eig_hermitian(ppt)
    return float(-w[w < 0].sum())


# --------------------------------------------------------------------------
# star product

def _kernel_factor(m_out, n_out, m1, n1, m2, n2):
    """Single-spin star kernel factor
    1/4 + 9 m1 m2 (n1.n2) + 3 m m1 (n.n1) + 3 m m2 (n.n2)
        + 18i m m1 m2 (n.[n1 x n2]).
    """
    return (0.25 + 9 * m1 * m2 * np.dot(n1, n2)
            + 3 * m_out * m1 * np.dot(n_out, n1)
            + 3 * m_out * m2 * np.dot(n_out, n2)
            + 18j * m_out * m1 * m2 * np.dot(n_out, np.cross(n1, n2)))


def star_kernel(x_primed, x_doubleprimed, x_out) -> complex:
    """Two-spin star-product kernel: the product of per-spin factors.

    Each argument is (m_mu, n_mu, m_e, n_e) with n given as a Direction or a
    3-vector. Composing two tomographic symbols against this kernel yields
    the symbol of the operator product.
    """
    def unpack(x):
        m_mu, n_mu, m_e, n_e = x
        to_vec = lambda n: n.vector if isinstance(n, Direction) else np.asarray(n, float)
        return m_mu, to_vec(n_mu), m_e, to_vec(n_e)

    mp_mu, np_mu, mp_e, np_e = unpack(x_primed)
    mpp_mu, npp_mu, mpp_e, npp_e = unpack(x_doubleprimed)
    m_mu, n_mu, m_e, n_e = unpack(x_out)
    return complex(_kernel_factor(m_mu, n_mu, mp_mu, np_mu, mpp_mu, npp_mu)
                   * _kernel_factor(m_e, n_e, mp_e, np_e, mpp_e, npp_e))


def _kernel_tensor(j: float, grid, out_dirs) -> np.ndarray:
    """Per-spin kernel K[(m1,i1),(m2,i2),(m_out,o)] including quadrature
    weights on the two integrated slots. j must be 1/2."""
    if j != 0.5:
        raise ValueError("star-product route implemented for spin 1/2 factors")
    ms = np.array([0.5, -0.5])
    vecs = np.array([d.vector for d in grid.nodes()])
    outs = np.array([d.vector if isinstance(d, Direction) else np.asarray(d, float)
                     for d in out_dirs])
    w = grid.weights
    dot12 = vecs @ vecs.T
    dot1o = vecs @ outs.T
    dot2o = vecs @ outs.T
    cross = np.cross(vecs[:, None, :], vecs[None, :, :])  # (i1, i2, 3)
    triple = np.einsum("abk,ok->abo", cross, outs)
    m1 = ms[:, None, None, None, None, None]
    m2 = ms[None, None, :, None, None, None]
    mo = ms[None, None, None, None, :, None]
    k = (0.25
         + 9 * m1 * m2 * dot12[None, :, None, :, None, None]
         + 3 * mo * m1 * dot1o[None, :, None, None, None, :]
         + 3 * mo * m2 * dot2o[None, None, None, :, None, :]
         + 18j * mo * m1 * m2 * triple[None, :, None, :, None, :])
    k = k * w[None, :, None, None, None, None] * w[None, None, None, :, None, None]
    return k  # shape (2, n, 2, n, 2, n_out)


def _star_on_grid(f: np.ndarray, g: np.ndarray, k_mu: np.ndarray,
                  k_e: np.ndarray) -> np.ndarray:
    """Star product of two sampled two-spin symbols, evaluated at the output
    slots baked into the kernel tensors."""
    return np.einsum("aubv,cwdx,aucwey,bvdxfz->eyfz", f, g, k_mu, k_e,
                     optimize=True)


def tomographic_m34(w: TwoSpinTomogram, eval_dirs=None):
    """M3 and M4 of the partial transpose computed entirely from tomogram
    samples via iterated star products:

        M3 = (1/6) sum_m [w - 3 w*w + 2 w*w*w](m, n),
        M4 = (1/24)[3 (sum_m [w*w])^2
                    + sum_m (w - 6 w*w + 8 w*w*w - 6 w*w*w*w)](m, n),

    where w is the tomogram of the partial transpose and the sums over
    projections run at a fixed direction pair, on which the result does not
    depend. Matches the trace route on the reconstructed matrix.
    """
    if (w.j_mu, w.j_e) != (0.5, 0.5):
        raise ValueError("tomographic M3/M4 implemented for two qubits")
    wp = ppt_tomogram(w).values.astype(complex)
    if eval_dirs is None:
        eval_dirs = (Direction(0.0, 0.0), Direction(0.0, 0.0))
    out_mu, out_e = eval_dirs

    k_mu_grid = _kernel_tensor(0.5, w.grid_mu, w.grid_mu.nodes())
    k_e_grid = _kernel_tensor(0.5, w.grid_e, w.grid_e.nodes())
    k_mu_out = _kernel_tensor(0.5, w.grid_mu, [out_mu])
    k_e_out = _kernel_tensor(0.5, w.grid_e, [out_e])

    w2_grid = _star_on_grid(wp, wp, k_mu_grid, k_e_grid)
    w2_out = _star_on_grid(wp, wp, k_mu_out, k_e_out)
    w3_out = _star_on_grid(w2_grid, wp, k_mu_out, k_e_out)
    w4_out = _star_on_grid(w2_grid, w2_grid, k_mu_out, k_e_out)

    def msum(arr):
        return complex(arr.sum())

    s1 = 1.0  # sum_m w = trace of the state
    s2 = msum(w2_out)
    s3 = msum(w3_out)
    s4 = msum(w4_out)
    m3 = (s1 - 3 * s2 + 2 * s3) / 6
    m4 = (3 * s2 ** 2 + s1 - 6 * s2 + 8 * s3 - 6 * s4) / 24
    return float(m3.real), float(m4.real)


@dataclass
class EntanglementReport:
    """Entanglement diagnostics of a two-qubit state at one instant."""

    t: float
    e_measure: float
    m2: float
    m3: float
    m4: float
    max_bell: float
    negativity: float

    @classmethod
    def from_state(cls, rho: np.ndarray, t: float = 0.0,
                   include_max_bell: bool = True, seed: int = 0) -> "EntanglementReport":
        rho = require_density_matrix(rho)
        ppt = partial_transpose(rho, SubsystemDims(2, 2), which="a")
        coeff = positivity_coefficients(ppt)
        e_val = abs(coeff.m3) + abs(coeff.m4) - coeff.m3 - coeff.m4
        mb = max_bell(rho, seed=seed)[0] if include_max_bell else float("nan")
        return cls(t=t, e_measure=e_val, m2=coeff.m2, m3=coeff.m3, m4=coeff.m4,
                   max_bell=mb, negativity=negativity(rho, SubsystemDims(2, 2)))

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "E": self.e_measure, "M2": self.m2,
                           "M3": self.m3, "M4": self.m4, "max_bell": self.max_bell,
                           "negativity": self.negativity})
