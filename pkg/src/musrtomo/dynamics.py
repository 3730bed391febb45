"""Spin Hamiltonians of the muonium family and their unitary propagators.

Families
--------
- hyperfine:   H = hbar w0 (J_mu . J_e), the free (vacuum) coupling;
- isotropic:   adds Zeeman terms  - g_mu mu_mu (B . J_mu) + g_e mu_e (B . J_e);
- anisotropic: adds an axially anisotropic exchange dA (N.J_mu)(N.J_e).

Units: time in ns, angular frequencies in rad/ns, magnetic field in Gauss.
Hamiltonians are handled as H/hbar in rad/ns throughout; material constants
quoted in MHz are converted on ingestion with an explicit flag saying whether
the number is an angular frequency (rad-based) or a linear frequency (cycles,
multiplied by 2 pi).

Closed-form propagators are tabulated for the orientations: hyperfine (any
j_e in {1/2, 1}); isotropic with B along z, x or y; anisotropic with
(N, B) in {(z,z), (x,z), (y,z)}. Everything else goes through the numeric
eigensolve path, against which every closed form is cross-checked in the
test suite.
"""

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import kron, propagator, require_density_matrix
from .tomography import Direction, QuadratureGrid, angular_momentum_ops
from .twospin import TwoSpinTomogram, individual_tomogram_unitary


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-2018 values; moments in J/T, hbar in J s."""

    hbar: float = 1.054571817e-34
    bohr_magneton: float = 9.2740100783e-24
    proton_magneton: float = 1.41060679736e-26
    g_mu: float = 2.0
    g_e: float = 2.0023193
    muon_moment_ratio: float = 3.18334  # mu_mu / mu_p

    @property
    def mu_mu(self) -> float:
        return self.muon_moment_ratio * self.proton_magneton

    @property
    def gamma_mu(self) -> float:
        """g_mu mu_mu / hbar in rad/ns per Gauss."""
        return self.g_mu * self.mu_mu / self.hbar * 1e-13

    @property
    def gamma_e(self) -> float:
        """g_e mu_e / hbar in rad/ns per Gauss."""
        return self.g_e * self.bohr_magneton / self.hbar * 1e-13

    def critical_field(self, a_rad_ns: float) -> float:
        """Field (Gauss) where B (g_e mu_e - g_mu mu_mu) equals the coupling."""
        return a_rad_ns / (self.gamma_e - self.gamma_mu)


DEFAULT_CONSTANTS = PhysicalConstants()


class HamiltonianFamily(enum.Enum):
    HYPERFINE = "hyperfine"
    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters of a muonium-family spin Hamiltonian.

    ``a`` and ``delta_a`` are angular frequencies (rad/ns), i.e. couplings
    divided by hbar. ``b_field`` is the magnitude in Gauss along ``b_axis``.
    """

    family: HamiltonianFamily
    a: float
    delta_a: float = 0.0
    b_field: float = 0.0
    b_axis: Direction | None = None
    aniso_axis: Direction | None = None
    j_e: float = 0.5

    def __post_init__(self):
        if self.family is HamiltonianFamily.ANISOTROPIC and self.aniso_axis is None:
            raise ValueError("anisotropic family requires an anisotropy axis")
        if self.b_field != 0.0 and self.b_axis is None:
            raise ValueError("nonzero field requires a field axis")
        if self.family is HamiltonianFamily.HYPERFINE and self.b_field != 0.0:
            raise ValueError("hyperfine family has no Zeeman term; use isotropic")

    @classmethod
    def hyperfine(cls, omega0: float, j_e: float = 0.5) -> "HamiltonianSpec":
        return cls(HamiltonianFamily.HYPERFINE, a=omega0, j_e=j_e)

    @property
    def omega0(self) -> float:
        return self.a

    @property
    def dim(self) -> int:
        return 2 * int(round(2 * self.j_e + 1))


def build_hamiltonian(spec: HamiltonianSpec,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """H/hbar in rad/ns, in the muon-major product basis (projections
    descending). Zeeman signs: muon enters with -gamma_mu, electron +gamma_e."""
    j_mu_ops = angular_momentum_ops(0.5)
    j_e_ops = angular_momentum_ops(spec.j_e)
    d_e = j_e_ops[0].shape[0]
    eye_mu, eye_e = np.eye(2), np.eye(d_e)
    h = spec.a * sum(kron(jm, je) for jm, je in zip(j_mu_ops, j_e_ops))
    if spec.b_field != 0.0:
        b_vec = spec.b_axis.vector * spec.b_field
        h = h - constants.gamma_mu * sum(b_vec[i] * kron(j_mu_ops[i], eye_e)
                                         for i in range(3))
        h = h + constants.gamma_e * sum(b_vec[i] * kron(eye_mu, j_e_ops[i])
                                        for i in range(3))
    if spec.family is HamiltonianFamily.ANISOTROPIC and spec.delta_a != 0.0:
        n_vec = spec.aniso_axis.vector
        op_mu = sum(n_vec[i] * j_mu_ops[i] for i in range(3))
        op_e = sum(n_vec[i] * j_e_ops[i] for i in range(3))
        h = h + spec.delta_a * kron(op_mu, op_e)
    return h


# --------------------------------------------------------------------------
# closed forms

_AXES = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]),
         "z": np.array([0, 0, 1.0])}


def _axis_name(direction: Direction | None) -> str | None:
    if direction is None:
        return None
    v = direction.vector
    for name, ref in _AXES.items():
        if np.linalg.norm(v - ref) < 1e-12:
            return name
    return None


@dataclass(frozen=True)
class DerivedScalars:
    """Shorthand frequencies entering the closed-form propagators (rad/ns)."""

    a: float
    b_plus: float
    b_minus: float
    c: float
    d: float
    f: float
    h: float

    @classmethod
    def from_spec(cls, spec: HamiltonianSpec,
                  constants: PhysicalConstants = DEFAULT_CONSTANTS) -> "DerivedScalars":
        a_h, da_h, b = spec.a, spec.delta_a, spec.b_field
        gm, ge = constants.gamma_mu, constants.gamma_e
        return cls(
            a=a_h / 4,
            b_plus=b * (gm + ge) / 2,
            b_minus=b * (gm - ge) / 2,
            c=np.sqrt(a_h ** 2 + b ** 2 * (gm + ge) ** 2) / 2,
            d=da_h / 4,
            f=np.sqrt(da_h ** 2 + 4 * b ** 2 * (gm - ge) ** 2) / 4,
            h=np.sqrt((a_h + da_h / 2) ** 2 + b ** 2 * (gm + ge) ** 2) / 2,
        )


def _sin_ratio(num: float, freq: float, t: float) -> float:
    """num * sin(freq t) / freq, finite in the freq -> 0 limit."""
    return num * t * np.sinc(freq * t / np.pi)


def propagator_hyperfine(omega0: float, t: float) -> np.ndarray:
    """4x4 propagator of the pure coupling: triplet phase e^{-i w0 t/4},
    singlet e^{+3i w0 t/4}, written in the product basis."""
    e = np.exp(1j * omega0 * t)
    u = np.array([
        [2, 0, 0, 0],
        [0, 1 + e, 1 - e, 0],
        [0, 1 - e, 1 + e, 0],
        [0, 0, 0, 2],
    ], dtype=complex)
    return 0.5 * np.exp(-1j * omega0 * t / 4) * u


def propagator_mu_longitudinal(s: DerivedScalars, t: float) -> np.ndarray:
    """Isotropic Hamiltonian, B along z."""
    ct = np.cos(s.c * t)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = np.exp(-1j * (2 * s.a - s.b_minus) * t)
    u[1, 1] = ct + 1j * _sin_ratio(s.b_plus, s.c, t)
    u[2, 2] = ct - 1j * _sin_ratio(s.b_plus, s.c, t)
    u[1, 2] = u[2, 1] = -1j * _sin_ratio(2 * s.a, s.c, t)
    u[3, 3] = np.exp(-1j * (2 * s.a + s.b_minus) * t)
    return np.exp(1j * s.a * t) * u


def propagator_mu_transverse_x(s: DerivedScalars, t: float) -> np.ndarray:
    """Isotropic Hamiltonian, B along x. Symmetric, six distinct entries;
    the signs of the (1,2)/(1,3) pair are fixed by the Zeeman sign convention
    of ``build_hamiltonian`` (flipping both corresponds to B along -x)."""
    em = np.exp(-1j * s.a * t)
    ep = np.exp(1j * s.a * t)
    cb, sb = np.cos(s.b_minus * t), np.sin(s.b_minus * t)
    cc = np.cos(s.c * t)
    asc = _sin_ratio(2 * s.a, s.c, t)
    bsc = _sin_ratio(s.b_plus, s.c, t)
    u11 = 0.5 * (em * cb + ep * (cc - 1j * asc))
    u22 = 0.5 * (em * cb + ep * (cc + 1j * asc))
    u12 = 0.5j * (em * sb - bsc * ep)
    u13 = 0.5j * (em * sb + bsc * ep)
    u14 = 0.5 * (em * cb - ep * (cc - 1j * asc))
    u23 = 0.5 * (em * cb - ep * (cc + 1j * asc))
    u = np.array([
        [u11, u12, u13, u14],
        [u12, u22, u23, u13],
        [u13, u23, u22, u12],
        [u14, u13, u12, u11],
    ], dtype=complex)
    return u


def propagator_mu_transverse_y(s: DerivedScalars, t: float) -> np.ndarray:
    """Isotropic Hamiltonian, B along y: phase pattern D U_x D^dag with
    D = diag(1, i, i, -1), i.e. the x-field propagator rotated about z."""
    ux = propagator_mu_transverse_x(s, t)
    d = np.array([1.0, 1j, 1j, -1.0])
    return (d[:, None] * ux) * d.conj()[None, :]


def propagator_mustar_zz(s: DerivedScalars, t: float) -> np.ndarray:
    """Anisotropic Hamiltonian, N and B both along z."""
    ct = np.cos(s.c * t)
    ad = s.a + s.d
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = np.exp(-1j * (2 * ad - s.b_minus) * t)
    u[1, 1] = ct + 1j * _sin_ratio(s.b_plus, s.c, t)
    u[2, 2] = ct - 1j * _sin_ratio(s.b_plus, s.c, t)
    u[1, 2] = u[2, 1] = -1j * _sin_ratio(2 * s.a, s.c, t)
    u[3, 3] = np.exp(-1j * (2 * ad + s.b_minus) * t)
    return np.exp(1j * ad * t) * u


def propagator_mustar_xz(s: DerivedScalars, t: float) -> np.ndarray:
    """Anisotropic Hamiltonian, N along x, B along z. The (4,4) entry is the
    complex conjugate pattern of (1,1); writing them equal breaks unitarity."""
    em = np.exp(-1j * s.a * t)
    ep = np.exp(1j * s.a * t)
    cf, ch = np.cos(s.f * t), np.cos(s.h * t)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = em * (cf + 1j * _sin_ratio(s.b_minus, s.f, t))
    u[3, 3] = em * (cf - 1j * _sin_ratio(s.b_minus, s.f, t))
    u[0, 3] = u[3, 0] = -1j * em * _sin_ratio(s.d, s.f, t)
    u[1, 1] = ep * (ch + 1j * _sin_ratio(s.b_plus, s.h, t))
    u[2, 2] = ep * (ch - 1j * _sin_ratio(s.b_plus, s.h, t))
    u[1, 2] = u[2, 1] = -1j * ep * _sin_ratio(2 * s.a + s.d, s.h, t)
    return u


def propagator_mustar_yz(s: DerivedScalars, t: float) -> np.ndarray:
    """Anisotropic Hamiltonian, N along y, B along z: equals the xz matrix
    with the (1,4)/(4,1) entries sign-flipped."""
    u = propagator_mustar_xz(s, t)
    u[0, 3] = -u[0, 3]
    u[3, 0] = -u[3, 0]
    return u


def propagator_hyperfine_spin1(a: float, t: float) -> np.ndarray:
    """Pure coupling with an effective electron spin 1; 6x6 in the
    muon-major product basis (up,1),(up,0),(up,-1),(down,1),(down,0),(down,-1)."""
    v1 = np.exp(-1j * a * t / 2)
    arg = 3 * a * t / 4
    ph = np.exp(1j * a * t / 4)
    v2 = -1j * ph * (2 * np.sqrt(2) / 3) * np.sin(arg)
    vp = ph * (np.cos(arg) + 1j / 3 * np.sin(arg))
    vm = ph * (np.cos(arg) - 1j / 3 * np.sin(arg))
    u = np.zeros((6, 6), dtype=complex)
    u[0, 0] = u[5, 5] = v1
    u[1, 1] = vm
    u[1, 3] = u[3, 1] = v2
    u[2, 2] = vp
    u[2, 4] = u[4, 2] = v2
    u[3, 3] = vp
    u[4, 4] = vm
    return u


class OrientationNotTabulated(ValueError):
    """The requested field/axis orientation has no tabulated closed form."""


def closed_form_variant(spec: HamiltonianSpec) -> str:
    """Name of the applicable closed form, or raise OrientationNotTabulated."""
    b_name = _axis_name(spec.b_axis) if spec.b_field != 0.0 else None
    n_name = _axis_name(spec.aniso_axis)
    if spec.family is HamiltonianFamily.HYPERFINE or \
            (spec.family is HamiltonianFamily.ISOTROPIC and spec.b_field == 0.0):
        if spec.j_e == 0.5:
            return "hf"
        if spec.j_e == 1.0:
            return "hf_spin1"
        raise OrientationNotTabulated(f"no closed form for j_e={spec.j_e}")
    if spec.j_e != 0.5:
        raise OrientationNotTabulated("field closed forms cover j_e=1/2 only")
    if spec.family is HamiltonianFamily.ISOTROPIC:
        if b_name in ("x", "y", "z"):
            return f"mu_{b_name}"
        raise OrientationNotTabulated("isotropic closed forms need B along x, y or z")
    if spec.family is HamiltonianFamily.ANISOTROPIC:
        if spec.delta_a == 0.0:
            if spec.b_field == 0.0:
                return "hf"
            if b_name in ("x", "y", "z"):
                return f"mu_{b_name}"
        if (n_name, b_name) == ("z", "z") or (n_name == "z" and spec.b_field == 0.0):
            return "mustar_zz"
        if (n_name, b_name) == ("x", "z") or (n_name == "x" and spec.b_field == 0.0):
            return "mustar_xz"
        if (n_name, b_name) == ("y", "z") or (n_name == "y" and spec.b_field == 0.0):
            return "mustar_yz"
        raise OrientationNotTabulated("anisotropic closed forms need N in {x,y,z}, B along z")
    raise OrientationNotTabulated(f"unknown family {spec.family}")


@dataclass
class PropagatorSpec:
    """Hamiltonian plus evolution method; the callable ``unitary(t)``.

    method "closed_form" transcribes the tabulated matrices; "numeric" uses
    the Hermitian eigensolve; "auto" prefers the closed form and falls back.
    """

    hamiltonian: HamiltonianSpec
    method: str = "auto"
    constants: PhysicalConstants = DEFAULT_CONSTANTS
    _eig: tuple = field(default=None, repr=False, compare=False)

    @property
    def scalars(self) -> DerivedScalars:
        return DerivedScalars.from_spec(self.hamiltonian, self.constants)

    def matrix(self) -> np.ndarray:
        return build_hamiltonian(self.hamiltonian, self.constants)

    def _eigensystem(self):
        if self._eig is None:
            w, v = np.linalg.eigh(self.matrix())
            self._eig = (w, v)
        return self._eig

    def unitary(self, t: float) -> np.ndarray:
        if self.method == "numeric":
            return self.numeric_unitary(t)
        if self.method == "closed_form":
            return self.closed_form_unitary(t)
        try:
            return self.closed_form_unitary(t)
        except OrientationNotTabulated:
            return self.numeric_unitary(t)

    def numeric_unitary(self, t: float) -> np.ndarray:
        w, v = self._eigensystem()
        return (v * np.exp(-1j * w * t)) @ v.conj().T

    def closed_form_unitary(self, t: float) -> np.ndarray:
        variant = closed_form_variant(self.hamiltonian)
        s = self.scalars
        if variant == "hf":
            return propagator_hyperfine(self.hamiltonian.a, t)
        if variant == "hf_spin1":
            return propagator_hyperfine_spin1(self.hamiltonian.a, t)
        if variant == "mu_z":
            return propagator_mu_longitudinal(s, t)
        if variant == "mu_x":
            return propagator_mu_transverse_x(s, t)
        if variant == "mu_y":
            return propagator_mu_transverse_y(s, t)
        if variant == "mustar_zz":
            return propagator_mustar_zz(s, t)
        if variant == "mustar_xz":
            return propagator_mustar_xz(s, t)
        if variant == "mustar_yz":
            return propagator_mustar_yz(s, t)
        raise OrientationNotTabulated(variant)

    def eigenfrequency_gaps(self) -> np.ndarray:
        """Distinct positive gaps of H/hbar (rad/ns), ascending."""
        w, _ = self._eigensystem()
        gaps = sorted({round(abs(a - b), 12)
                       for i, a in enumerate(w) for b in w[:i]})
        return np.array([g for g in gaps if g > 1e-12])


def propagator_numeric(spec: HamiltonianSpec, t: float,
                       constants: PhysicalConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """exp(-i H t / hbar) through the generic eigensolve."""
    return propagator(build_hamiltonian(spec, constants), t)


def evolve_density(rho0: np.ndarray, u: np.ndarray) -> np.ndarray:
    """U rho0 U^dag; trace, Hermiticity and spectrum preserved."""
    rho0 = require_density_matrix(rho0)
    u = np.asarray(u, dtype=complex)
    if np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])) > 1e-10 * u.shape[0]:
        raise ValueError("evolution operator is not unitary")
    return u @ rho0 @ u.conj().T


def initial_muonium_state(j_e: float = 0.5) -> np.ndarray:
    """Fully polarized muon (spin up along z) times a maximally mixed
    electron shell: the standard state right after muonium formation."""
    d_e = int(round(2 * j_e + 1))
    up = np.zeros((2, 2))
    up[0, 0] = 1.0
    return kron(up, np.eye(d_e) / d_e)


def evolve_tomogram(rho0: np.ndarray, unitary_of_t, times,
                    j_mu: float = 0.5, j_e: float = 0.5,
                    grid_mu: QuadratureGrid | None = None,
                    grid_e: QuadratureGrid | None = None,
                    method: str = "conjugation") -> list[TwoSpinTomogram]:
    """Individual two-spin tomogram along a time grid.

    method "conjugation" evolves the state and samples it; "composition"
    folds the evolution into the measurement unitary of each grid node
    (w_t(m, u) = w_0(m, u U(t))). The two paths agree to roundoff.
    """
    grid_mu = grid_mu if grid_mu is not None else QuadratureGrid.for_spin(j_mu)
    grid_e = grid_e if grid_e is not None else QuadratureGrid.for_spin(j_e)
    out = []
    if method == "conjugation":
        for t in times:
            rho_t = evolve_density(rho0, unitary_of_t(t))
            out.append(TwoSpinTomogram.from_state(rho_t, j_mu, j_e, grid_mu, grid_e))
        return out
    if method != "composition":
        raise ValueError("method must be 'conjugation' or 'composition'")
    from .tomography import rotation_matrix
    d_mu = int(round(2 * j_mu + 1))
    d_e = int(round(2 * j_e + 1))
    rots_mu = [rotation_matrix(j_mu, node) for node in grid_mu.nodes()]
    rots_e = [rotation_matrix(j_e, node) for node in grid_e.nodes()]
    for t in times:
        u_t = unitary_of_t(t)
        vals = np.empty((d_mu, grid_mu.n_nodes, d_e, grid_e.n_nodes))
        for ni, r_mu in enumerate(rots_mu):
            for nj, r_e in enumerate(rots_e):
                u = kron(r_mu, r_e).conj().T @ u_t
                joint = individual_tomogram_unitary(rho0, u).reshape(d_mu, d_e)
                vals[:, ni, :, nj] = joint
        out.append(TwoSpinTomogram(j_mu, j_e, grid_mu, grid_e, vals))
    return out


def analytic_free_mu(m_mu: float, n_mu: Direction, m_e: float, n_e: Direction,
                     t: float, omega0: float) -> float:
    """Closed-form individual tomogram of the freshly formed muonium under the
    pure coupling: (1/4)[1 + m_mu nz_mu + m_e nz_e
    + (m_mu nz_mu - m_e nz_e) cos w0 t + 2 m_mu m_e (n_mu x n_e)_z sin w0 t].
    """
    v_mu, v_e = n_mu.vector, n_e.vector
    cross_z = v_mu[0] * v_e[1] - v_mu[1] * v_e[0]
    return 0.25 * (1 + m_mu * v_mu[2] + m_e * v_e[2]
                   + (m_mu * v_mu[2] - m_e * v_e[2]) * np.cos(omega0 * t)
                   + 2 * m_mu * m_e * cross_z * np.sin(omega0 * t))


def analytic_free_mu_reduced(m_mu: float, n_mu: Direction, t: float,
                             omega0: float) -> float:
    """Muon marginal of analytic_free_mu:
    (1/2)[1 + m_mu nz_mu (1 + cos w0 t)]."""
    return 0.5 * (1 + m_mu * n_mu.vector[2] * (1 + np.cos(omega0 * t)))


def muon_polarization_function(rho0: np.ndarray, prop: PropagatorSpec):
    """Vectorized t -> muon Bloch vectors P(t) of the evolved reduced state.

    Expands Tr[rho(t) (sigma_a x I)] over the eigenfrequencies of the
    propagator, so evaluation is a handful of complex exponentials per time;
    suitable for millions of Monte Carlo decay times.
    """
    rho0 = require_density_matrix(rho0)
    w, v = np.linalg.eigh(prop.matrix())
    d_e = rho0.shape[0] // 2
    sigmas = (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )
    rho_p = v.conj().T @ rho0 @ v
    coeffs = []
    for s in sigmas:
        s_p = v.conj().T @ kron(s, np.eye(d_e)) @ v
        coeffs.append((rho_p * s_p.T).reshape(-1))
    coeffs = np.array(coeffs)  # (3, dim^2)
    omegas = (w[:, None] - w[None, :]).reshape(-1)

    def polarization(times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(-1j * times[:, None] * omegas[None, :])
        return (phases @ coeffs.T).real

    return polarization


def with_field(spec: HamiltonianSpec, b_field: float, b_axis: Direction) -> HamiltonianSpec:
    """Copy of a Hamiltonian spec with the field replaced."""
    family = spec.family
    if family is HamiltonianFamily.HYPERFINE and b_field != 0.0:
        family = HamiltonianFamily.ISOTROPIC
    return replace(spec, family=family, b_field=b_field,
                   b_axis=b_axis if b_field != 0.0 else spec.b_axis)
