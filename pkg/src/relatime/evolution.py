"""Density-matrix evolution engines and energy-decoherence diagnostics.

Three ways to propagate a state under a time-independent Hamiltonian:

* ``evolve_unitary`` - exact-time evolution exp(-iHt) rho exp(+iHt),
  computed in the eigenbasis (H is diagonalized once and reused).
* ``evolve_relational_quadrature`` - the state as seen through an
  inaccurate clock: a weighted mixture of unitary evolutions over the
  kernel's quadrature nodes.
* ``evolve_relational_dephasing`` - the same state by the closed-form
  route: each energy-basis element (i, j) is multiplied by the kernel's
  characteristic function evaluated at the gap E_i - E_j, so no
  quadrature error enters. The two relational routes agree to the stated
  tolerances and are kept separate deliberately: one checks the other.
* ``evolve_pearle`` - ensemble-level energy-driven collapse dynamics
  (Pearle-type), a Gaussian average of unitary evolutions around t with
  width sqrt(lam * t). Coincides with the relational engines for the
  Gaussian kernel at t_B = t.

Mixing over clock uncertainty only ever suppresses energy-basis
off-diagonals; populations (and any element between equal-energy states)
are untouched. ``coherence_report`` tabulates that suppression per gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonPositiveLambdaError,
    QuadratureDriftError,
)
from .kernels import QuadratureRule, TimeKernel, _hermgauss, quadrature_for
from .qmat import DensityMatrix, Hamiltonian

__all__ = [
    "METHOD_UNITARY",
    "METHOD_RELATIONAL_QUADRATURE",
    "METHOD_RELATIONAL_DEPHASING",
    "METHOD_PEARLE_COLLAPSE",
    "EvolutionResult",
    "CoherencePair",
    "CoherenceReport",
    "evolve_unitary",
    "evolve_relational_quadrature",
    "evolve_relational_dephasing",
    "evolve_pearle",
    "coherence_report",
]

METHOD_UNITARY = "Unitary"
METHOD_RELATIONAL_QUADRATURE = "RelationalQuadrature"
METHOD_RELATIONAL_DEPHASING = "RelationalDephasing"
METHOD_PEARLE_COLLAPSE = "PearleCollapse"

_TRACE_DRIFT_BUDGET = 1e-8
DECOHERENCE_THRESHOLD = 1e-6  # default cutoff for "completely decohered"


@dataclass(frozen=True)
class EvolutionResult:
    """One evolved state plus how it was obtained.

    ``time_label`` is the exact time for the unitary engine and the watch
    reading for the relational/collapse engines. ``node_count`` is 0 for
    closed-form paths.
    """

    state: DensityMatrix
    time_label: float
    method: str
    node_count: int = 0


@dataclass(frozen=True)
class CoherencePair:
    """Energy-basis element (i, j) before and after kernel averaging."""

    i: int
    j: int
    energy_i: float
    energy_j: float
    magnitude_exact: float
    magnitude_averaged: float


@dataclass(frozen=True)
class CoherenceReport:
    """Per-gap dephasing summary for one state, Hamiltonian and kernel.

    ``complete_decoherence`` is True when every element between
    distinct-energy eigenstates has averaged magnitude below the
    threshold; with a fully degenerate spectrum there are no such
    elements and the flag is vacuously True.
    """

    pairs: tuple[CoherencePair, ...]
    max_offdiag_averaged: float
    complete_decoherence: bool
    threshold: float


def _check_dims(rho: DensityMatrix, hamiltonian: Hamiltonian) -> None:
    if rho.dim != hamiltonian.dim:
        raise DimensionMismatchError(
            f"state dim {rho.dim} != Hamiltonian dim {hamiltonian.dim}"
        )


def _to_eigenbasis(rho: DensityMatrix, hamiltonian: Hamiltonian) -> np.ndarray:
    basis = hamiltonian.eigenbasis
    return basis.conj().T @ rho.matrix @ basis


def _from_eigenbasis(rho_e: np.ndarray, hamiltonian: Hamiltonian) -> np.ndarray:
    basis = hamiltonian.eigenbasis
    return basis @ rho_e @ basis.conj().T


def _finish_state(raw: np.ndarray, drift_budget: float | None = None) -> DensityMatrix:
    """Validate engine output: check trace drift, then remove roundoff.

    Renormalization is only allowed inside the drift budget; a larger
    deviation means the quadrature rule was inadequate and is reported as
    an error instead of being papered over.
    """
    tr = complex(np.trace(raw)).real
    if drift_budget is not None and abs(tr - 1.0) > drift_budget:
        raise QuadratureDriftError(
            f"trace drifted to {tr:.12g} (deviation {abs(tr - 1.0):.3e} > "
            f"budget {drift_budget:.1e}); increase the node count"
        )
    out = raw / tr
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out)


def _phase_diag(spectrum: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-1j * spectrum * t)


def _average_over_rule(
    rho: DensityMatrix, hamiltonian: Hamiltonian, rule: QuadratureRule
) -> np.ndarray:
    """Weighted mixture of unitary evolutions, summed in node order."""
    spectrum = hamiltonian.spectrum
    rho_e = _to_eigenbasis(rho, hamiltonian)
    acc = np.zeros_like(rho_e)
    for t_k, w_k in zip(rule.nodes, rule.weights):
        phases = _phase_diag(spectrum, float(t_k))
        acc += w_k * (rho_e * np.outer(phases, phases.conj()))
    return _from_eigenbasis(acc, hamiltonian)


def evolve_unitary(
    rho0: DensityMatrix, hamiltonian: Hamiltonian, t: float
) -> EvolutionResult:
    """Exact-time evolution via the cached spectral decomposition.

    Negative times are allowed (the propagators form a group). Trace,
    Hermiticity, purity and spectrum are preserved up to roundoff.
    """
    _check_dims(rho0, hamiltonian)
    phases = _phase_diag(hamiltonian.spectrum, float(t))
    rho_e = _to_eigenbasis(rho0, hamiltonian) * np.outer(phases, phases.conj())
    state = _finish_state(_from_eigenbasis(rho_e, hamiltonian))
    return EvolutionResult(state, float(t), METHOD_UNITARY, 0)


def evolve_relational_quadrature(
    rho0: DensityMatrix,
    hamiltonian: Hamiltonian,
    kernel: TimeKernel,
    nodes: int,
) -> EvolutionResult:
    """Kernel-averaged state by explicit quadrature over evolution times."""
    _check_dims(rho0, hamiltonian)
    rule = quadrature_for(kernel, nodes)
    raw = _average_over_rule(rho0, hamiltonian, rule)
    state = _finish_state(raw, drift_budget=_TRACE_DRIFT_BUDGET)
    return EvolutionResult(
        state, kernel.t_b, METHOD_RELATIONAL_QUADRATURE, rule.node_count
    )


def _gap_multipliers(hamiltonian: Hamiltonian, kernel: TimeKernel) -> np.ndarray:
    # Element (i, j) of the state in the energy basis picks up the unitary
    # phase exp(+i (E_j - E_i) t); averaging that phase over the kernel is
    # chi evaluated at E_i - E_j (note the order).
    spectrum = hamiltonian.spectrum
    gaps = spectrum[:, None] - spectrum[None, :]
    return np.asarray(kernel._chi(gaps))


def evolve_relational_dephasing(
    rho0: DensityMatrix, hamiltonian: Hamiltonian, kernel: TimeKernel
) -> EvolutionResult:
    """Kernel-averaged state by the closed-form per-gap dephasing law.

    Exact (no discretization error) for every kernel whose characteristic
    function has a closed form; for tabulated kernels the characteristic
    sum over the table is itself exact.
    """
    _check_dims(rho0, hamiltonian)
    rho_e = _to_eigenbasis(rho0, hamiltonian) * _gap_multipliers(hamiltonian, kernel)
    state = _finish_state(_from_eigenbasis(rho_e, hamiltonian))
    return EvolutionResult(state, kernel.t_b, METHOD_RELATIONAL_DEPHASING, 0)


def evolve_pearle(
    rho0: DensityMatrix,
    hamiltonian: Hamiltonian,
    lam: float,
    t: float,
    nodes: int,
) -> EvolutionResult:
    """Energy-driven-collapse state at time t (ensemble level).

    A standard-normal average of unitary evolutions at effective times
    t - sqrt(lam * t) * eta, done with Gauss-Hermite nodes. Effective
    times may be negative; they are evolved with the same group formula,
    no clamping. At t = 0 the state is returned unchanged.
    """
    _check_dims(rho0, hamiltonian)
    if not lam > 0:
        raise NonPositiveLambdaError(f"lam must be > 0, got {lam}")
    if t < 0:
        raise ValueError(f"collapse evolution needs t >= 0, got {t}")
    if t == 0:
        return EvolutionResult(rho0, 0.0, METHOD_PEARLE_COLLAPSE, 0)
    x, w = _hermgauss(int(nodes))
    taus = t - np.sqrt(2.0 * lam * t) * x
    rule = QuadratureRule(taus, w / w.sum())
    raw = _average_over_rule(rho0, hamiltonian, rule)
    state = _finish_state(raw, drift_budget=_TRACE_DRIFT_BUDGET)
    return EvolutionResult(state, float(t), METHOD_PEARLE_COLLAPSE, rule.node_count)


def coherence_report(
    rho0: DensityMatrix,
    hamiltonian: Hamiltonian,
    kernel: TimeKernel,
    *,
    threshold: float = DECOHERENCE_THRESHOLD,
) -> CoherenceReport:
    """Tabulate energy-basis magnitudes before and after kernel averaging.

    Exact-time magnitudes are time-independent (unitary evolution only
    rotates phases in the energy basis), so the comparison needs no
    reference time.
    """
    _check_dims(rho0, hamiltonian)
    spectrum = hamiltonian.spectrum
    mag_exact = np.abs(_to_eigenbasis(rho0, hamiltonian))
    mag_avg = mag_exact * np.abs(_gap_multipliers(hamiltonian, kernel))
    # Eigenvalues closer than this are treated as degenerate; averaging
    # cannot touch elements inside a degenerate subspace.
    gap_tol = 1e-12 * max(1.0, float(np.max(np.abs(spectrum), initial=0.0)))
    pairs = []
    max_offdiag = 0.0
    dim = hamiltonian.dim
    for i in range(dim):
        for j in range(i + 1, dim):
            pair = CoherencePair(
                i=i,
                j=j,
                energy_i=float(spectrum[i]),
                energy_j=float(spectrum[j]),
                magnitude_exact=float(mag_exact[i, j]),
                magnitude_averaged=float(mag_avg[i, j]),
            )
            pairs.append(pair)
            if abs(spectrum[j] - spectrum[i]) > gap_tol:
                max_offdiag = max(max_offdiag, pair.magnitude_averaged)
    return CoherenceReport(
        pairs=tuple(pairs),
        max_offdiag_averaged=max_offdiag,
        complete_decoherence=bool(max_offdiag < threshold),
        threshold=float(threshold),
    )
