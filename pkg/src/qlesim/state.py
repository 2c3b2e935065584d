"""Four-level density-matrix model of one electron-nuclear sensor pair.

Basis order is [|dn_e dn_n>, |dn_e up_n>, |up_e dn_n>, |up_e up_n>], i.e. the
electron qubit (two addressed ground-state sublevels) tensored with the
nuclear memory spin.  Operations take a state and return a new one; inputs
are never mutated, so independent states can be evolved on parallel workers.
"""

import math

import numpy as np

from .errors import ConfigError, DomainError, InvalidStateError
from .noise import stretched_exp
from .params import SensorEnsembleParams

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
MIN_EIGENVALUE = -1e-10

_DIM = 4


class QuantumState:
    """Validated, immutable 4x4 density matrix."""

    __slots__ = ("rho",)

    def __init__(self, rho):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (_DIM, _DIM):
            raise InvalidStateError(f"density matrix must be 4x4, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) >= HERMITICITY_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) >= TRACE_TOL:
            raise InvalidStateError(f"density matrix trace is {trace}, not 1")
        if float(np.linalg.eigvalsh(rho)[0]) <= MIN_EIGENVALUE:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def __setattr__(self, name, value):
        raise AttributeError("QuantumState is immutable")

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    def electron_excess(self) -> float:
        """Electron down-minus-up population difference."""
        p = self.populations()
        return float(p[0] + p[1] - p[2] - p[3])

    def nuclear_polarization(self) -> float:
        """Nuclear down-minus-up population difference."""
        p = self.populations()
        return float(p[0] + p[2] - p[1] - p[3])


def from_populations(populations) -> QuantumState:
    """Diagonal (coherence-free) state with the given populations."""
    return QuantumState(np.diag(np.asarray(populations, dtype=complex)))


def _as_state(state) -> QuantumState:
    return state if isinstance(state, QuantumState) else QuantumState(state)


def _swap_levels(i, j) -> np.ndarray:
    u = np.eye(_DIM, dtype=complex)
    u[[i, j]] = u[[j, i]]
    return u


# selective MW pi pulse: flips the electron within the nuclear-up manifold
_CNOT_E_GIVEN_N = _swap_levels(1, 3)
# RF pi pulse: flips the nucleus within the electron-up manifold
_CNOT_N_GIVEN_E = _swap_levels(2, 3)


def initial_state() -> QuantumState:
    """Optically polarized start: electron down, nucleus maximally mixed."""
    return from_populations([0.5, 0.5, 0.0, 0.0])


def _mixed_unitary(state: QuantumState, u: np.ndarray, fidelity: float) -> QuantumState:
    if not 0.0 <= fidelity <= 1.0:
        raise DomainError("gate fidelity must lie in [0, 1]")
    rho = state.rho
    return QuantumState(fidelity * (u @ rho @ u.conj().T) + (1.0 - fidelity) * rho)


def apply_cnot_e_given_n(state, fidelity: float = 1.0) -> QuantumState:
    """CNOT on the electron conditioned on the nucleus: with probability
    ``fidelity`` swaps |dn_e up_n> and |up_e up_n>, otherwise acts as identity
    (convex mixture of unitary and identity)."""
    return _mixed_unitary(_as_state(state), _CNOT_E_GIVEN_N, fidelity)


def apply_cnot_n_given_e(state, fidelity: float = 1.0) -> QuantumState:
    """CNOT on the nucleus conditioned on the electron: swaps |up_e up_n> and
    |up_e dn_n> with probability ``fidelity``."""
    return _mixed_unitary(_as_state(state), _CNOT_N_GIVEN_E, fidelity)


def apply_swap(state, params: SensorEnsembleParams) -> QuantumState:
    """Encode the electron polarization onto the nuclear memory spin.

    Runs CNOT_e|n then CNOT_n|e at per-gate fidelity sqrt(swap_fidelity), which
    makes the end-to-end polarization transfer equal params.swap_fidelity.
    """
    f = math.sqrt(params.swap_fidelity)
    return apply_cnot_n_given_e(apply_cnot_e_given_n(state, f), f)


def apply_optical_pulse(state, duration: float, params: SensorEnsembleParams,
                        t1_nuclear: float, stretch_beta: float = 1.0) -> QuantumState:
    """Optical pumping for ``duration`` seconds.

    The electron-up population decays toward down with survival
    (1 - repolarization_fraction)**(duration / t_op); the stored nuclear
    polarization shrinks by the stretched-exponential factor with lifetime
    ``t1_nuclear``; pumping is incoherent, so every coherence is destroyed.
    """
    state = _as_state(state)
    if duration < 0:
        raise DomainError("pulse duration must be nonnegative")
    if t1_nuclear <= 0:
        raise DomainError("t1_nuclear must be positive")
    if duration == 0:
        return state
    survive = (1.0 - params.repolarization_fraction) ** (duration / params.t_op)
    p = state.populations()
    p = np.array([
        p[0] + (1.0 - survive) * p[2],
        p[1] + (1.0 - survive) * p[3],
        survive * p[2],
        survive * p[3],
    ])
    keep = stretched_exp(duration, t1_nuclear, stretch_beta)
    for lo, hi in ((0, 1), (2, 3)):
        mean = 0.5 * (p[lo] + p[hi])
        p[lo] = mean + keep * (p[lo] - mean)
        p[hi] = mean + keep * (p[hi] - mean)
    return from_populations(p)


def apply_sensing_phase(state, phi: float, decoherence_factor: float) -> QuantumState:
    """Collapse a full interferometry block into its population signal.

    After the closing pi/2 pulse the electron down-minus-up population
    difference is cos(phi) * decoherence_factor; the nuclear marginal is
    untouched and the output carries no coherences.
    """
    state = _as_state(state)
    if not 0.0 <= decoherence_factor <= 1.0:
        raise DomainError("decoherence_factor must lie in [0, 1]")
    p = state.populations()
    nuclear_dn, nuclear_up = p[0] + p[2], p[1] + p[3]
    excess = math.cos(phi) * decoherence_factor
    e_dn, e_up = 0.5 * (1.0 + excess), 0.5 * (1.0 - excess)
    return from_populations(
        [e_dn * nuclear_dn, e_dn * nuclear_up, e_up * nuclear_dn, e_up * nuclear_up])


def readout_fluorescence(state, params: SensorEnsembleParams, rng, size=None):
    """Shot-noise sample(s) of the fluorescence contrast; the state itself is
    not modified (back-action enters through the following optical pulse).

    The mean is contrast_c0 times the electron population excess; photon
    statistics enter as Gaussian noise of width contrast_c0 /
    sqrt(photons_per_readout).
    """
    state = _as_state(state)
    if params.photons_per_readout <= 0:
        raise ConfigError("photons_per_readout must be positive")
    mean = params.contrast_c0 * state.electron_excess()
    sigma = params.contrast_c0 / math.sqrt(params.photons_per_readout)
    return mean + sigma * rng.standard_normal(size)
