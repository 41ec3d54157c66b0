"""Open-system gate evaluation: Lindblad propagation, process tomography and
process fidelity.

The density matrix evolves in the same rotating frame as the closed-system
gate dynamics; relaxation and dephasing enter through frame-conjugated jump
operators sampled per step, with rates taken from a decoherence-rate report
(1/us, converted to the gate module's ns clock internally).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .exceptions import IntegrationError, InvalidParameterError, TomographyError
from .floquet import PAULI_X, PAULI_Y, PAULI_Z
from .gates import ControlContext, _as_waveform_matrix, _step_hamiltonians

__all__ = [
    "LindbladModel",
    "ProcessMatrix",
    "evolve_density",
    "process_tomography",
    "process_fidelity",
    "chi_from_unitary",
    "channel_from_simulation",
]

_RATE_US_TO_NS = 1.0e-3


@dataclass(frozen=True)
class LindbladModel:
    """Per-qubit (relaxation, dephasing) rate pairs in 1/us.

    Jump operators are supplied by the :class:`ControlContext`; the model
    only carries the rates, e.g. ``((gamma_1, gamma_z),)`` for one qubit.
    """

    rates: tuple

    def __post_init__(self) -> None:
        rates = tuple((float(r), float(d)) for r, d in self.rates)
        if any(r < 0 or d < 0 for r, d in rates):
            raise InvalidParameterError("rates must be non-negative")
        object.__setattr__(self, "rates", rates)

    @property
    def n_qubits(self) -> int:
        return len(self.rates)


def _pauli_basis(n_qubits: int) -> list[np.ndarray]:
    singles = [np.eye(2, dtype=complex), PAULI_X, PAULI_Y, PAULI_Z]
    if n_qubits == 1:
        return singles
    return [np.kron(a, b) for a, b in product(singles, singles)]


def _lindblad_rhs(rho, h, jumps):
    out = -1j * (h @ rho - rho @ h)
    for gamma, op, op_dag, op2 in jumps:
        out += gamma * (op @ rho @ op_dag - 0.5 * (op2 @ rho + rho @ op2))
    return out


def evolve_density(
    context: ControlContext,
    waveforms,
    model: LindbladModel,
    rho0: np.ndarray,
    substeps: int = 4,
) -> np.ndarray:
    """Propagate a density matrix through the pulse with dissipation.

    Fixed-step RK4 with the generator held constant inside each pulse step
    (Hamiltonian and jump operators sampled at the step midpoints); with the
    rates set to zero this reproduces the closed-system step product
    exactly up to RK4 round-off.
    """
    rho = np.asarray(rho0, dtype=complex).copy()
    d = context.dimension
    if rho.shape != (d, d):
        raise InvalidParameterError(f"rho0 must be {d}x{d}")
    if model.n_qubits != context.n_qubits:
        raise InvalidParameterError("model and context disagree on qubit count")
    w = _as_waveform_matrix(context, waveforms)
    hs = _step_hamiltonians(context, w)
    jump_samples = context.embedded_jumps()
    h_step = context.dt / substeps
    for k in range(context.steps):
        h = hs[k]
        jumps = []
        for q, (low, deph) in enumerate(jump_samples):
            g_relax, g_deph = model.rates[q]
            for gamma, op in (
                (g_relax * _RATE_US_TO_NS, low[k]),
                (g_deph * _RATE_US_TO_NS, deph[k]),
            ):
                if gamma > 0.0:
                    op_dag = op.conj().T
                    jumps.append((gamma, op, op_dag, op_dag @ op))
        for _ in range(substeps):
            k1 = _lindblad_rhs(rho, h, jumps)
            k2 = _lindblad_rhs(rho + 0.5 * h_step * k1, h, jumps)
            k3 = _lindblad_rhs(rho + 0.5 * h_step * k2, h, jumps)
            k4 = _lindblad_rhs(rho + h_step * k3, h, jumps)
            rho = rho + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    drift = abs(np.trace(rho).real - np.trace(rho0).real)
    if drift > 1e-9:
        raise IntegrationError(f"trace drifted by {drift:.2e}; refine substeps")
    return rho


def channel_from_simulation(
    context: ControlContext, waveforms, model: LindbladModel, substeps: int = 4
):
    """The open-system gate as a channel ``rho -> rho_final``."""

    def channel(rho: np.ndarray) -> np.ndarray:
        return evolve_density(context, waveforms, model, rho, substeps=substeps)

    return channel


@dataclass(frozen=True)
class ProcessMatrix:
    """Channel coefficients in the Pauli product basis."""

    chi: np.ndarray
    d: int

    def __post_init__(self) -> None:
        chi = np.asarray(self.chi, dtype=complex)
        if chi.shape != (self.d**2, self.d**2):
            raise InvalidParameterError("chi must be d^2 x d^2")
        object.__setattr__(self, "chi", chi)

    @property
    def trace(self) -> float:
        return float(np.trace(self.chi).real)


def _tomography_states(d: int) -> dict:
    """Physical input states that span the operator basis by linearity."""
    states = {}
    basis = np.eye(d, dtype=complex)
    for j in range(d):
        states[("d", j, j)] = np.outer(basis[j], basis[j].conj())
    for j in range(d):
        for k in range(j + 1, d):
            plus = (basis[j] + basis[k]) / np.sqrt(2.0)
            plusi = (basis[j] + 1j * basis[k]) / np.sqrt(2.0)
            states[("p", j, k)] = np.outer(plus, plus.conj())
            states[("q", j, k)] = np.outer(plusi, plusi.conj())
    return states


def process_tomography(channel, d: int) -> ProcessMatrix:
    """Reconstruct the process matrix of a linear trace-preserving channel.

    The channel is probed on d^2 physical states; matrix units are assembled
    by linearity and the result is re-expressed in the Pauli product basis.
    Raises :class:`TomographyError` when the reconstruction is not
    Hermitian, not positive semidefinite (beyond 1e-9), or when the channel
    visibly violates trace preservation.
    """
    if d not in (2, 4):
        raise InvalidParameterError("tomography implemented for d = 2 and 4")
    probes = {key: channel(rho) for key, rho in _tomography_states(d).items()}
    for key, out in probes.items():
        if abs(np.trace(out).real - 1.0) > 1e-6:
            raise TomographyError(
                f"channel is not trace preserving on probe {key}"
            )

    # E(|j><k|) for all matrix units, then the superoperator in row-major vec
    super_op = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            if j == k:
                img = probes[("d", j, j)]
            else:
                a, b = (j, k) if j < k else (k, j)
                e_p = probes[("p", a, b)]
                e_q = probes[("q", a, b)]
                e_jj = probes[("d", j, j)]
                e_kk = probes[("d", k, k)]
                if j < k:
                    img = e_p + 1j * e_q - 0.5 * (1.0 + 1j) * (e_jj + e_kk)
                else:
                    img = e_p - 1j * e_q - 0.5 * (1.0 - 1j) * (e_jj + e_kk)
            super_op[:, j * d + k] = img.ravel()

    n_qubits = 1 if d == 2 else 2
    paulis = _pauli_basis(n_qubits)
    chi = np.empty((d * d, d * d), dtype=complex)
    for p_idx, p in enumerate(paulis):
        for q_idx, q in enumerate(paulis):
            probe = np.kron(p, q.conj())
            chi[p_idx, q_idx] = np.vdot(probe, super_op) / d**2

    herm_err = np.max(np.abs(chi - chi.conj().T))
    if herm_err > 1e-8:
        raise TomographyError(f"chi not Hermitian (deviation {herm_err:.2e})")
    chi = 0.5 * (chi + chi.conj().T)
    min_eig = float(np.linalg.eigvalsh(chi).min())
    if min_eig < -1e-9:
        raise TomographyError(f"chi not positive semidefinite ({min_eig:.2e})")
    return ProcessMatrix(chi=chi, d=d)


def chi_from_unitary(u: np.ndarray) -> ProcessMatrix:
    """Process matrix of a unitary channel (rank one in the Pauli basis)."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    n_qubits = 1 if d == 2 else 2
    coeffs = np.array([np.trace(p.conj().T @ u) / d for p in _pauli_basis(n_qubits)])
    return ProcessMatrix(chi=np.outer(coeffs, coeffs.conj()), d=d)


def process_fidelity(chi: ProcessMatrix, target_chi: ProcessMatrix) -> float:
    """(d Tr(chi_T chi) + Tr chi) / (d + 1)."""
    if chi.d != target_chi.d:
        raise InvalidParameterError("process matrices have different dimensions")
    d = chi.d
    overlap = np.trace(target_chi.chi @ chi.chi).real
    return float((d * overlap + np.trace(chi.chi).real) / (d + 1.0))
