"""Initial-state reconstruction from reduced-tomogram time series.

Given a known two-spin evolution U(t) and measured muon tomogram values
w(+1/2, n_k, t_l), the initial density matrix is affine in the measured
values: rho0 = I/4 + sum_i x_i G_i over the orthonormal traceless two-qubit
operator basis, and each measurement is 1/2 + (M x)_kl with a design matrix
M. Reconstruction is weighted least squares followed by a projection onto
the positive cone.

Identifiability is a property of the (propagator, directions, times) plan
and is computed by SVD of the design matrix. Static muonium-family
Hamiltonians cap the reachable rank below 15: B and the anisotropy axis span
at most a plane, so a frame exists in which H is real, the eigenstate muon
Bloch vectors are coplanar, and at most two of the three conserved
(frequency-zero) muon-visible combinations are independent. The rank test
makes such deficiencies explicit instead of guessing a closed-form criterion.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PropagatorSpec
from .linalg import eig_hermitian, kron, require_density_matrix
from .tomography import X_AXIS, Y_AXIS, Z_AXIS

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = (_SX, _SY, _SZ)


def operator_basis_two_qubit() -> list[np.ndarray]:
    """The 15 orthonormal traceless Hermitian operators
    {sigma_i x I, I x sigma_j, sigma_i x sigma_j} / 2."""
    eye = np.eye(2)
    basis = [kron(p, eye) / 2 for p in _PAULI]
    basis += [kron(eye, p) / 2 for p in _PAULI]
    basis += [kron(pi, pj) / 2 for pi in _PAULI for pj in _PAULI]
    return basis


def state_to_coefficients(rho: np.ndarray) -> np.ndarray:
    rho = require_density_matrix(rho)
    return np.array([np.trace(g @ rho).real for g in operator_basis_two_qubit()])


def coefficients_to_state(x: np.ndarray) -> np.ndarray:
    rho = np.eye(4, dtype=complex) / 4
    for xi, g in zip(x, operator_basis_two_qubit()):
        rho = rho + xi * g
    return rho


def golden_jitter_times(span: float, n: int = 5) -> list[float]:
    """n times spread over [0, span] by golden-ratio offsets; pairwise
    incommensurate with any single period, avoiding resonant coincidences."""
    golden = (np.sqrt(5) - 1) / 2
    return [span * (((k + 1) * golden) % 1.0) for k in range(n)]


def default_times(propagator: PropagatorSpec, n: int = 5) -> list[float]:
    """Times spread over one beat period of the two lowest eigenfrequency
    gaps of the propagator, jittered by golden-ratio offsets."""
    gaps = propagator.eigenfrequency_gaps()
    if len(gaps) == 0:
        raise ValueError("propagator has no nonzero eigenfrequency gaps")
    if len(gaps) == 1 or abs(gaps[1] - gaps[0]) < 1e-12:
        beat = 2 * np.pi / gaps[0]
    else:
        beat = 2 * np.pi / abs(gaps[1] - gaps[0])
    return golden_jitter_times(beat, n)


@dataclass
class MeasurementPlan:
    """Directions, times and the known evolution behind a reduced-tomogram
    measurement campaign.

    ``propagator`` may be a PropagatorSpec or any callable t -> 4x4 unitary.
    """

    propagator: object
    directions: tuple = (X_AXIS, Y_AXIS, Z_AXIS)
    times: tuple = ()

    def __post_init__(self):
        self.directions = tuple(self.directions)
        if not self.times:
            if not isinstance(self.propagator, PropagatorSpec):
                raise ValueError("default times require a PropagatorSpec")
            self.times = tuple(default_times(self.propagator))
        self.times = tuple(float(t) for t in self.times)
        if len(set(self.times)) != len(self.times):
            raise ValueError("times must be pairwise distinct")

    @property
    def n_values(self) -> int:
        return len(self.directions) * len(self.times)

    def unitary(self, t: float) -> np.ndarray:
        if isinstance(self.propagator, PropagatorSpec):
            return self.propagator.unitary(t)
        return self.propagator(t)

    def coincidence_issues(self, tol: float = 1e-9) -> list[str]:
        """Time pairs congruent modulo an eigenfrequency period (a warning
        sign for resonant plans; the rank test is authoritative)."""
        if not isinstance(self.propagator, PropagatorSpec):
            return []
        issues = []
        for gap in self.propagator.eigenfrequency_gaps():
            period = 2 * np.pi / gap
            for i, ti in enumerate(self.times):
                for tj in self.times[:i]:
                    r = abs(ti - tj) % period
                    if min(r, period - r) < tol:
                        issues.append(
                            f"times {tj:.6g} and {ti:.6g} coincide modulo "
                            f"period {period:.6g}")
        return issues


@dataclass
class DesignMatrix:
    """Linear map from the 15 traceless coefficients of rho0 to the
    predicted measurement values (offset 1/2 subtracted)."""

    matrix: np.ndarray
    singular_values: np.ndarray = field(init=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.singular_values = np.linalg.svd(self.matrix, compute_uv=False)

    @property
    def rank(self) -> int:
        sv = self.singular_values
        return int((sv > 1e-10 * sv[0]).sum())

    @property
    def condition_number(self) -> float:
        """Ratio of extreme singular values above the rank threshold."""
        sv = self.singular_values
        kept = sv[sv > 1e-10 * sv[0]]
        return float(kept[0] / kept[-1])

    def null_space(self) -> np.ndarray:
        _, sv, vt = np.linalg.svd(self.matrix)
        return vt[self.rank:]


def build_design_matrix(plan: MeasurementPlan) -> DesignMatrix:
    """Rows indexed by (time-major, direction-minor) measurement order."""
    basis = operator_basis_two_qubit()
    eye = np.eye(2)
    rows = []
    for t in plan.times:
        u = plan.unitary(t)
        for direction in plan.directions:
            n = direction.vector
            proj = (eye + n[0] * _SX + n[1] * _SY + n[2] * _SZ) / 2
            evolved = u.conj().T @ kron(proj, eye) @ u
            rows.append([np.trace(g @ evolved).real for g in basis])
    return DesignMatrix(np.array(rows))


def forward_model(rho0: np.ndarray, plan: MeasurementPlan) -> np.ndarray:
    """Predicted w(+1/2, n_k, t_l), ordered like the design-matrix rows."""
    design = build_design_matrix(plan)
    return 0.5 + design.matrix @ state_to_coefficients(rho0)


def identifiability(plan: MeasurementPlan) -> tuple[int, float]:
    """(rank, condition number) of the plan's design matrix; rank 15 means
    the full initial state is reconstructible."""
    design = build_design_matrix(plan)
    return design.rank, design.condition_number


@dataclass
class ReconstructionResult:
    rho0: np.ndarray
    rank: int
    condition_number: float
    residual_norm: float
    clipped: bool
    null_space: np.ndarray

    def to_json(self, plan: MeasurementPlan | None = None) -> str:
        payload = {
            "rank": self.rank,
            "condition_number": self.condition_number,
            "residual_norm": self.residual_norm,
            "clipped": self.clipped,
            "rho0_real": np.real(self.rho0).tolist(),
            "rho0_imag": np.imag(self.rho0).tolist(),
            "null_space_dimension": int(self.null_space.shape[0]),
            "null_space": self.null_space.tolist(),
        }
        if plan is not None:
            payload["plan"] = {
                "directions": [[d.theta, d.phi] for d in plan.directions],
                "times_ns": list(plan.times),
            }
        return json.dumps(payload, indent=2)


def reconstruct_initial(values, plan: MeasurementPlan, sigmas=None,
                        allow_deficient: bool = False) -> ReconstructionResult:
    """Weighted least squares for rho0 from measured reduced-tomogram values.

    Requires a rank-15 plan unless ``allow_deficient`` is set, in which case
    the minimum-norm solution is returned together with the unidentifiable
    directions (the null space). The least-squares estimate is projected onto
    the positive cone by eigenvalue clipping and trace renormalization; the
    ``clipped`` flag reports when that projection moved an eigenvalue by more
    than three propagated standard errors (any clipping at all for noiseless
    input).
    """
    values = np.asarray(values, dtype=float)
    design = build_design_matrix(plan)
    if values.shape != (design.matrix.shape[0],):
        raise ValueError(f"expected {design.matrix.shape[0]} measurement values")
    if design.rank < 15 and not allow_deficient:
        raise ValueError(f"plan is rank deficient (rank {design.rank} < 15); "
                         "pass allow_deficient=True for a minimum-norm solution")
    if sigmas is None:
        weights = np.ones_like(values)
    else:
        sigmas = np.asarray(sigmas, dtype=float)
        if np.any(sigmas <= 0):
            raise ValueError("sigmas must be positive")
        weights = 1.0 / sigmas
    a = design.matrix * weights[:, None]
    b = (values - 0.5) * weights
    x, _, _, _ = np.linalg.lstsq(a, b, rcond=1e-10)
    rho_ls = coefficients_to_state(x)
    resid = float(np.linalg.norm(a @ x - b))

    w, v = eig_hermitian((rho_ls + rho_ls.conj().T) / 2)
    clip_scale = _eigenvalue_error_scale(a, sigmas)
    clipped = bool(np.any(w < -max(3 * clip_scale, 1e-12)))
    w_pos = np.clip(w, 0.0, None)
    if w_pos.sum() <= 0:
        raise ValueError("least-squares estimate has no positive part")
    w_pos = w_pos / w_pos.sum()
    rho0 = (v * w_pos) @ v.conj().T
    return ReconstructionResult(rho0=rho0, rank=design.rank,
                                condition_number=design.condition_number,
                                residual_norm=resid, clipped=clipped,
                                null_space=design.null_space())


def _eigenvalue_error_scale(weighted_design: np.ndarray, sigmas) -> float:
    """First-order scale of eigenvalue errors of the estimate: the largest
    per-coefficient standard error propagated through the linear model.
    Zero for noiseless input (sigmas None)."""
    if sigmas is None:
        return 0.0
    gram = weighted_design.T @ weighted_design
    w, _ = np.linalg.eigh(gram)
    w_floor = w[w > 1e-12 * max(w.max(), 1.0)]
    if len(w_floor) == 0:
        return float("inf")
    return float(np.sqrt(1.0 / w_floor.min()) / 2)
