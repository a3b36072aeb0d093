"""Dense statevector engine with lazy qubit allocation.

Qubits are registered with a single-qubit preparation and only enter the
dense amplitude vector when something multi-qubit touches them (an entangling
gate, or a measurement).  Measurement retires the qubit and shrinks the
register, so a protocol run over a large graph only ever pays for its live
measurement frontier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .angles import Angle

ENGINE_TOL = 1e-12
DEFAULT_MAX_ACTIVE = 22

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class CapacityError(Exception):
    """Raised when the dense register would exceed its configured cap."""


class QubitStateError(Exception):
    """Raised on operations against unknown, retired, or doubly-prepared qubits."""


@dataclass
class PauliPad:
    """A Pauli/phase pad X^x Z(phase) Z^z, composed mod 2 on the bits."""

    x_bit: int = 0
    z_bit: int = 0
    phase_pad: Angle = field(default_factory=lambda: Angle(0))

    def compose(self, other: "PauliPad") -> "PauliPad":
        return PauliPad(
            (self.x_bit + other.x_bit) % 2,
            (self.z_bit + other.z_bit) % 2,
            self.phase_pad + other.phase_pad,
        )


def plus_theta_vector(theta: Angle) -> np.ndarray:
    return np.array([_INV_SQRT2, _INV_SQRT2 * np.exp(1j * theta.radians)], dtype=complex)


def basis_vector(bit: int) -> np.ndarray:
    v = np.zeros(2, dtype=complex)
    v[bit & 1] = 1.0
    return v


class QuantumState:
    """All quantum registers of one protocol execution.

    Qubit ids are arbitrary hashable labels (the protocol uses strings).
    """

    def __init__(self, max_active: int = DEFAULT_MAX_ACTIVE):
        self.max_active = max_active
        self._pending: dict = {}          # qubit -> 2-vector, not yet in the register
        self._order: list = []            # active qubits, axis order of _amps
        self._amps = np.ones(1, dtype=complex)
        self.retired: dict = {}           # qubit -> recorded outcome bit
        self.high_water = 0               # max simultaneous active qubits seen

    # -- bookkeeping ------------------------------------------------------

    @property
    def active_qubits(self) -> tuple:
        return tuple(self._order)

    def is_pending(self, q) -> bool:
        return q in self._pending

    def is_active(self, q) -> bool:
        return q in self._order

    def is_live(self, q) -> bool:
        return q in self._pending or q in self._order

    def _require_live(self, q):
        if not self.is_live(q):
            if q in self.retired:
                raise QubitStateError(f"qubit {q!r} was already measured")
            raise QubitStateError(f"qubit {q!r} was never prepared")

    def rename(self, old, new):
        """Relabel a live qubit (used when a transferred qubit is placed)."""
        self._require_live(old)
        if self.is_live(new) or new in self.retired:
            raise QubitStateError(f"qubit id {new!r} already in use")
        if old in self._pending:
            self._pending[new] = self._pending.pop(old)
        else:
            self._order[self._order.index(old)] = new

    # -- preparation ------------------------------------------------------

    def prepare_state(self, q, vector: np.ndarray):
        if self.is_live(q) or q in self.retired:
            raise QubitStateError(f"qubit {q!r} already prepared")
        v = np.asarray(vector, dtype=complex)
        if v.shape != (2,):
            raise QubitStateError("single-qubit preparation needs a 2-vector")
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-9:
            v = v / n
        self._pending[q] = v

    def prepare_plus_theta(self, q, theta: Angle):
        self.prepare_state(q, plus_theta_vector(theta))

    def prepare_dummy(self, q, d: int):
        self.prepare_state(q, basis_vector(d))

    def _activate(self, q):
        if q in self._order:
            return
        self._require_live(q)
        if len(self._order) + 1 > self.max_active:
            raise CapacityError(
                f"activating {q!r} would exceed the {self.max_active}-qubit register cap"
            )
        vec = self._pending.pop(q)
        self._amps = np.multiply.outer(self._amps, vec).reshape(-1)
        self._order.append(q)
        self.high_water = max(self.high_water, len(self._order))

    # -- single-qubit operators -------------------------------------------

    def _apply_2x2(self, q, m: np.ndarray):
        self._require_live(q)
        if q in self._pending:
            self._pending[q] = m @ self._pending[q]
            return
        n = len(self._order)
        axis = self._order.index(q)
        a = np.moveaxis(self._amps.reshape([2] * n), axis, 0)
        out = np.tensordot(m, a, axes=([1], [0]))
        self._amps = np.moveaxis(out, 0, axis).reshape(-1)

    def apply_x(self, q, power: int = 1):
        if power % 2:
            self._apply_2x2(q, np.array([[0, 1], [1, 0]], dtype=complex))

    def apply_z(self, q, power: int = 1):
        if power % 2:
            self._apply_2x2(q, np.array([[1, 0], [0, -1]], dtype=complex))

    def apply_z_rotation(self, q, theta):
        rad = theta.radians if isinstance(theta, Angle) else float(theta)
        self._apply_2x2(q, np.array([[1, 0], [0, np.exp(1j * rad)]], dtype=complex))

    def apply_pad(self, q, pad: PauliPad):
        """Apply X^x Z(phase) Z^z, rightmost factor first."""
        self.apply_z(q, pad.z_bit)
        self.apply_z_rotation(q, pad.phase_pad)
        self.apply_x(q, pad.x_bit)

    def apply_unitary(self, q, m: np.ndarray):
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise QubitStateError("apply_unitary expects a 2x2 matrix")
        self._apply_2x2(q, m)

    # -- entangling ---------------------------------------------------------

    def cz(self, q1, q2):
        if q1 == q2:
            raise QubitStateError("cz needs two distinct qubits")
        self._activate(q1)
        self._activate(q2)
        n = len(self._order)
        i, j = self._order.index(q1), self._order.index(q2)
        a = self._amps.reshape([2] * n)
        sl = [slice(None)] * n
        sl[i], sl[j] = 1, 1
        a[tuple(sl)] *= -1.0
        self._amps = a.reshape(-1)

    # -- measurement --------------------------------------------------------

    def _collapse(self, q, delta: Angle, outcome: int) -> float:
        """Project q onto (|0> + (-1)^outcome e^{i delta} |1>)/sqrt(2); return branch probability."""
        self._activate(q)
        n = len(self._order)
        axis = self._order.index(q)
        a = np.moveaxis(self._amps.reshape([2] * n), axis, 0)
        sign = -1.0 if outcome else 1.0
        phase = np.exp(-1j * delta.radians)
        branch = (a[0] + sign * phase * a[1]) * _INV_SQRT2
        prob = float(np.sum(np.abs(branch) ** 2))
        if prob > ENGINE_TOL:
            branch = branch / math.sqrt(prob)
        self._amps = branch.reshape(-1)
        self._order.pop(axis)
        self.retired[q] = outcome
        return prob

    def branch_probability(self, q, delta: Angle, outcome: int) -> float:
        """Born probability of `outcome` without collapsing."""
        self._activate(q)
        n = len(self._order)
        axis = self._order.index(q)
        a = np.moveaxis(self._amps.reshape([2] * n), axis, 0)
        sign = -1.0 if outcome else 1.0
        phase = np.exp(-1j * delta.radians)
        branch = (a[0] + sign * phase * a[1]) * _INV_SQRT2
        return float(np.sum(np.abs(branch) ** 2))

    def measure(self, q, delta: Angle, rng: np.random.Generator) -> int:
        """Measure q in the (|0> +- e^{i delta}|1>)/sqrt(2) basis; b=0 for +."""
        self._require_live(q)
        p1 = self.branch_probability(q, delta, 1)
        outcome = 1 if rng.random() < p1 else 0
        self._collapse(q, delta, outcome)
        return outcome

    def project(self, q, delta: Angle, outcome: int) -> float:
        """Force a measurement branch (oracle/enumeration use); returns its probability."""
        self._require_live(q)
        return self._collapse(q, delta, outcome)

    # -- diagnostics ---------------------------------------------------------

    def norm(self) -> float:
        return float(np.linalg.norm(self._amps))

    def statevector(self, qubits) -> np.ndarray:
        """Dense vector over `qubits` (activating any pending ones), in that axis order.

        All other active qubits must already be retired; this is meant for
        end-of-run output extraction and small oracles.
        """
        for q in qubits:
            self._activate(q)
        extra = [q for q in self._order if q not in set(qubits)]
        if extra:
            raise QubitStateError(f"statevector requested while {extra} still active")
        n = len(self._order)
        perm = [self._order.index(q) for q in qubits]
        return np.transpose(self._amps.reshape([2] * n), perm).reshape(-1).copy()

    def reduced_density(self, qubits) -> np.ndarray:
        """Reduced density matrix of `qubits` (<= 6), tracing out the rest."""
        if len(qubits) > 6:
            raise QubitStateError("reduced_density supports at most 6 qubits")
        for q in qubits:
            self._activate(q)
        n = len(self._order)
        keep = [self._order.index(q) for q in qubits]
        rest = [i for i in range(n) if i not in keep]
        a = np.transpose(self._amps.reshape([2] * n), keep + rest)
        k = len(keep)
        mat = a.reshape(2 ** k, -1)
        return mat @ mat.conj().T


def trace_distance(rho0: np.ndarray, rho1: np.ndarray) -> float:
    """(1/2)||rho0 - rho1||_1 via eigenvalues of the Hermitian difference."""
    diff = np.asarray(rho0, dtype=complex) - np.asarray(rho1, dtype=complex)
    eig = np.linalg.eigvalsh((diff + diff.conj().T) / 2.0)
    return float(0.5 * np.sum(np.abs(eig)))


def state_fidelity(vec0: np.ndarray, vec1: np.ndarray) -> float:
    """|<vec0|vec1>|^2 for pure state vectors."""
    v0 = np.asarray(vec0, dtype=complex).reshape(-1)
    v1 = np.asarray(vec1, dtype=complex).reshape(-1)
    v0 = v0 / np.linalg.norm(v0)
    v1 = v1 / np.linalg.norm(v1)
    return float(abs(np.vdot(v0, v1)) ** 2)
