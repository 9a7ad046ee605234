"""Finite ideal clocks and conditional readout through them.

An ideal clock here is a d-level system whose pointer states |t_m> (the
computational basis, labeled t_m = m * tick) are cyclically shifted by
one step per tick of evolution: the generator is diagonal in the discrete
Fourier basis of the pointer states with frequencies 2*pi*k / (d * tick).
The clock is therefore PERIODIC with period d * tick; scenarios must keep
total evolution time below one period or readings alias.

``CompositeScenario`` couples a system S to such a clock C with no
interaction (the composite generator is the Kronecker sum), starting from
a product state with the clock on a definite pointer state. Conditional
readout then recovers exact-time dynamics from the kernel-averaged
composite state: conditioning on the clock reading t reproduces the
exact-time expectation value at t, no matter how broad the watch-error
kernel is. The two readout routes (``alice_conditional`` for a known
time, ``bob_conditional`` through the averaged state) exist separately so
each can check the other.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    ConsistencyError,
    DimensionMismatchError,
    InvalidDimensionError,
    KernelOffGridError,
    NotPointerTimeError,
    ZeroProbabilityError,
)
from .kernels import DeltaKernel, TabulatedKernel, TimeKernel
from .qmat import (
    DensityMatrix,
    Hamiltonian,
    Observable,
    expectation,
    tensor,
)

__all__ = [
    "ClockSystem",
    "CompositeScenario",
    "WallClockComparison",
    "make_ideal_clock",
    "discretize_on_grid",
    "bob_state",
    "alice_conditional",
    "bob_conditional",
    "unconditioned_expectation",
    "wall_clock_self_consistency",
]

_SHIFT_TOL = 1e-8
_ZERO_PROBABILITY = 1e-12
_PATH_AGREEMENT_TOL = 1e-9


class ClockSystem:
    """Cyclic d-state pointer clock with tick ``tick``.

    ``pointer_times[m] = m * tick`` labels the pointer basis, the time
    observable is diagonal on it, and one tick of evolution advances the
    pointer by exactly one step (mod d). Pointer projectors commute with
    the time observable by construction.
    """

    __slots__ = ("dim", "tick", "pointer_times", "hamiltonian", "time_observable")

    def __init__(self, dim: int, tick: float):
        if not isinstance(dim, (int, np.integer)) or dim < 2:
            raise InvalidDimensionError(
                f"clock needs an integer dimension >= 2, got {dim!r}"
            )
        if not tick > 0:
            raise InvalidDimensionError(f"clock tick must be > 0, got {tick}")
        d = int(dim)
        tick = float(tick)
        times = np.arange(d) * tick
        # Fourier eigenvectors F[:, k] of the one-step cyclic shift; the
        # generator with frequencies 2*pi*k/(d*tick) on them exponentiates
        # to exactly that shift over one tick.
        m = np.arange(d)
        fourier = np.exp(2j * np.pi * np.outer(m, m) / d) / np.sqrt(d)
        freqs = 2.0 * np.pi * np.arange(d) / (d * tick)
        hamiltonian = Hamiltonian.from_eigensystem(freqs, fourier)

        step = (fourier * np.exp(-1j * freqs * tick)) @ fourier.conj().T
        shift = np.roll(np.eye(d), 1, axis=0)
        defect = float(np.max(np.abs(step - shift)))
        if defect > _SHIFT_TOL:
            raise InvalidDimensionError(
                f"clock construction failed the shift check: defect {defect:.3e}"
            )

        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "tick", tick)
        times.setflags(write=False)
        object.__setattr__(self, "pointer_times", times)
        object.__setattr__(self, "hamiltonian", hamiltonian)
        object.__setattr__(self, "time_observable", Observable(np.diag(times)))

    def __setattr__(self, name, value):
        raise AttributeError("ClockSystem is immutable")

    @property
    def period(self) -> float:
        return self.dim * self.tick

    def projector(self, index: int) -> np.ndarray:
        """Rank-1 projector onto pointer state ``index``."""
        proj = np.zeros((self.dim, self.dim), dtype=np.complex128)
        proj[index, index] = 1.0
        return proj

    def pointer_index(self, t: float) -> int:
        """Map a time to its pointer index, rejecting off-grid times.

        Only the first period is addressable; later times alias and are
        rejected rather than wrapped.
        """
        index = int(round(t / self.tick))
        tol = 1e-9 * max(self.tick, 1.0)
        if abs(t - index * self.tick) > tol or not 0 <= index < self.dim:
            raise NotPointerTimeError(
                f"t = {t!r} is not a pointer time of a {self.dim}-state "
                f"clock with tick {self.tick} (period {self.period})"
            )
        return index

    def __repr__(self) -> str:
        return f"ClockSystem(dim={self.dim}, tick={self.tick})"


def make_ideal_clock(dim: int, tick: float) -> ClockSystem:
    """Build a cyclic pointer clock (see ``ClockSystem``)."""
    return ClockSystem(dim, tick)


class CompositeScenario:
    """System S coupled to an internal clock C, dynamically independent.

    The composite generator is H_S (x) I + I (x) H_C (system left, clock
    right) and the initial state is the product of the system state with
    the clock pointing at ``initial_pointer`` (default 0, i.e. the clock
    starts in agreement with the wall time).
    """

    __slots__ = (
        "system_hamiltonian",
        "system_state",
        "clock",
        "initial_pointer",
        "hamiltonian",
        "initial_state",
    )

    def __init__(
        self,
        system_hamiltonian: Hamiltonian,
        system_state: DensityMatrix,
        clock: ClockSystem,
        initial_pointer: int = 0,
    ):
        if system_hamiltonian.dim != system_state.dim:
            raise DimensionMismatchError(
                f"system Hamiltonian dim {system_hamiltonian.dim} != "
                f"state dim {system_state.dim}"
            )
        if not 0 <= int(initial_pointer) < clock.dim:
            raise InvalidDimensionError(
                f"initial pointer {initial_pointer} outside 0..{clock.dim - 1}"
            )
        eye_s = np.eye(system_hamiltonian.dim)
        eye_c = np.eye(clock.dim)
        composite = tensor(system_hamiltonian.matrix, eye_c) + tensor(
            eye_s, clock.hamiltonian.matrix
        )
        object.__setattr__(self, "system_hamiltonian", system_hamiltonian)
        object.__setattr__(self, "system_state", system_state)
        object.__setattr__(self, "clock", clock)
        object.__setattr__(self, "initial_pointer", int(initial_pointer))
        object.__setattr__(self, "hamiltonian", Hamiltonian(composite))
        object.__setattr__(
            self,
            "initial_state",
            DensityMatrix(
                tensor(system_state.matrix, clock.projector(int(initial_pointer)))
            ),
        )

    def __setattr__(self, name, value):
        raise AttributeError("CompositeScenario is immutable")

    @property
    def dims(self) -> tuple[int, int]:
        return (self.system_hamiltonian.dim, self.clock.dim)

    def reading_index(self, step: int) -> int:
        """Pointer index shown after ``step`` ticks of evolution."""
        return (self.initial_pointer + step) % self.clock.dim

    def __repr__(self) -> str:
        d_s, d_c = self.dims
        return f"CompositeScenario(system_dim={d_s}, clock_dim={d_c})"


def discretize_on_grid(kernel: TimeKernel, clock: ClockSystem) -> TabulatedKernel:
    """Sample a continuous kernel on the pointer grid and renormalize.

    Delta and tabulated kernels pass through ``pointer_weights`` directly;
    this helper exists for Gaussian/Uniform kernels, which otherwise have
    off-grid support and cannot be used for clock readout.
    """
    if isinstance(kernel, (DeltaKernel, TabulatedKernel)):
        weights = pointer_weights(kernel, clock)
        return TabulatedKernel(clock.pointer_times, weights)
    values = kernel.pdf(clock.pointer_times)
    if float(np.sum(values)) <= 0:
        raise KernelOffGridError(
            "kernel assigns zero weight to every pointer time"
        )
    return TabulatedKernel(clock.pointer_times, values)


def pointer_weights(kernel: TimeKernel, clock: ClockSystem) -> np.ndarray:
    """Kernel weights per pointer time; rejects off-grid support."""
    weights = np.zeros(clock.dim)
    if isinstance(kernel, DeltaKernel):
        atoms = [(kernel.t_b, 1.0)]
    elif isinstance(kernel, TabulatedKernel):
        atoms = list(zip(kernel.times, kernel.weights))
    else:
        raise KernelOffGridError(
            f"{kernel.kind} kernel has continuous support; discretize it "
            "onto the pointer grid first (see discretize_on_grid)"
        )
    for t, w in atoms:
        try:
            index = clock.pointer_index(float(t))
        except NotPointerTimeError as exc:
            raise KernelOffGridError(
                f"kernel atom at t = {t!r} is not on the pointer grid: {exc}"
            ) from exc
        weights[index] += w
    return weights


def _system_state_at(scenario: CompositeScenario, step: int) -> np.ndarray:
    """Raw system state after ``step`` ticks of exact-time evolution."""
    h = scenario.system_hamiltonian
    t = scenario.clock.pointer_times[step]
    phases = np.exp(-1j * h.spectrum * t)
    rho_e = h.eigenbasis.conj().T @ scenario.system_state.matrix @ h.eigenbasis
    rho_e = rho_e * np.outer(phases, phases.conj())
    return h.eigenbasis @ rho_e @ h.eigenbasis.conj().T


def bob_state(scenario: CompositeScenario, kernel: TimeKernel) -> DensityMatrix:
    """Kernel-averaged composite state (discrete mixture over pointer times).

    Each branch pairs the exact-time system state at a pointer time with
    the clock reading shown at that time, weighted by the kernel. This is
    what an observer who consulted only the inaccurate watch assigns; the
    system-clock correlation it carries is what conditional readout
    exploits.
    """
    weights = pointer_weights(kernel, scenario.clock)
    d_s, d_c = scenario.dims
    acc = np.zeros((d_s * d_c, d_s * d_c), dtype=np.complex128)
    for step, w in enumerate(weights):
        if w == 0.0:
            continue
        branch = _system_state_at(scenario, step)
        reading = scenario.reading_index(step)
        acc += w * tensor(branch, scenario.clock.projector(reading))
    acc /= complex(np.trace(acc)).real
    acc = 0.5 * (acc + acc.conj().T)
    return DensityMatrix(acc)


def _conditional_value(
    composite: np.ndarray,
    observable: Observable,
    clock: ClockSystem,
    reading: int,
) -> float:
    d_s = observable.dim
    proj = tensor(np.eye(d_s), clock.projector(reading))
    denominator = float(np.trace(proj @ composite).real)
    if denominator < _ZERO_PROBABILITY:
        raise ZeroProbabilityError(
            f"clock reading index {reading} has probability "
            f"{denominator:.3e}; conditioning is undefined there"
        )
    hat_n = tensor(observable.matrix, np.eye(clock.dim))
    numerator = float(np.trace(hat_n @ proj @ composite).real)
    return numerator / denominator


def alice_conditional(
    scenario: CompositeScenario, observable: Observable, t_a: float
) -> float:
    """Expected value of a system observable when the time is known exactly.

    Computed twice - directly from the evolved system state, and by
    projective conditioning of the evolved composite on the clock reading
    shown at ``t_a`` - and cross-checked before returning. ``t_a`` must be
    a pointer time within the first clock period.
    """
    if observable.dim != scenario.system_hamiltonian.dim:
        raise DimensionMismatchError(
            f"observable dim {observable.dim} != system dim "
            f"{scenario.system_hamiltonian.dim}"
        )
    step = scenario.clock.pointer_index(t_a)
    direct = float(
        np.trace(observable.matrix @ _system_state_at(scenario, step)).real
    )

    h_q = scenario.hamiltonian
    t = scenario.clock.pointer_times[step]
    phases = np.exp(-1j * h_q.spectrum * t)
    rho_e = h_q.eigenbasis.conj().T @ scenario.initial_state.matrix @ h_q.eigenbasis
    rho_e = rho_e * np.outer(phases, phases.conj())
    composite = h_q.eigenbasis @ rho_e @ h_q.eigenbasis.conj().T
    conditioned = _conditional_value(
        composite, observable, scenario.clock, scenario.reading_index(step)
    )

    if abs(direct - conditioned) > _PATH_AGREEMENT_TOL:
        raise ConsistencyError(
            f"direct ({direct!r}) and projectively conditioned "
            f"({conditioned!r}) values disagree beyond {_PATH_AGREEMENT_TOL}"
        )
    return direct


def bob_conditional(
    scenario: CompositeScenario,
    kernel: TimeKernel,
    observable: Observable,
    t: float,
) -> float:
    """Expected value given the clock reading, through the averaged state.

    Builds the kernel-averaged composite state and conditions it on the
    reading shown at pointer time ``t``. Equals ``alice_conditional`` at
    every reading the kernel gives nonzero weight - conditioning on the
    internal clock undoes the watch's ignorance. Raises
    ``ZeroProbabilityError`` for readings the kernel excludes.
    """
    if observable.dim != scenario.system_hamiltonian.dim:
        raise DimensionMismatchError(
            f"observable dim {observable.dim} != system dim "
            f"{scenario.system_hamiltonian.dim}"
        )
    step = scenario.clock.pointer_index(t)
    averaged = bob_state(scenario, kernel)
    return _conditional_value(
        averaged.matrix, observable, scenario.clock, scenario.reading_index(step)
    )


def unconditioned_expectation(
    scenario: CompositeScenario, kernel: TimeKernel, observable: Observable
) -> float:
    """Tr[(N (x) I) rho_averaged]: the watch-only answer, no readout."""
    averaged = bob_state(scenario, kernel)
    hat_n = Observable(tensor(observable.matrix, np.eye(scenario.clock.dim)))
    return expectation(hat_n, averaged)


class WallClockComparison(NamedTuple):
    direct: float
    via_compound: float


def wall_clock_self_consistency(
    scenario: CompositeScenario,
    kernel: TimeKernel,
    observable: Observable,
    t: float,
) -> WallClockComparison:
    """Answer "what would you expect at wall time t?" by two routes.

    ``direct`` evolves the system to t and takes the expectation.
    ``via_compound`` treats the wall clock as an internal clock of the
    enlarged system (realized by the scenario's clock), writes the
    watch-averaged compound state, and conditions on the wall reading t.
    The two agree wherever the kernel gives the reading nonzero weight.
    """
    step = scenario.clock.pointer_index(t)
    direct = float(
        np.trace(observable.matrix @ _system_state_at(scenario, step)).real
    )
    via_compound = bob_conditional(scenario, kernel, observable, t)
    return WallClockComparison(direct=direct, via_compound=via_compound)
