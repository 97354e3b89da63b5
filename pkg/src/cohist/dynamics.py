"""Time development, history weights, and the consistency check.

The chain operator of a history alternates its projectors with the step
unitaries; the decoherence functional is the Gram matrix of chain operators.
A family admits probabilities only when all off-diagonal entries vanish
(medium decoherence); probability queries on families that fail the check
are refused rather than silently answered.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimError,
    GridMismatchError,
    InconsistentFamilyError,
    WeightError,
    ZeroConditionError,
)
from .framework import ProjectiveDecomposition
from .histories import History, HistoryFamily, TimeGrid
from .operators import TOL_ALG, Operator

TOL_CONSISTENCY = 1e-8
CONSISTENCY_FLOOR = 1e-12
TOL_PROB = 1e-8


class Dynamics:
    """Per-interval unitaries T(t_{m+1}, t_m) over a time grid."""

    __slots__ = ("grid", "steps")

    def __init__(self, grid: TimeGrid, steps: Sequence[Operator], tol: float = TOL_ALG):
        steps = tuple(steps)
        if len(steps) != grid.f:
            raise GridMismatchError(f"{len(steps)} step unitaries for {grid.f} intervals")
        dims = steps[0].dims
        for m, u in enumerate(steps):
            if u.dims != dims:
                raise DimError(f"step {m} has dims {u.dims}, expected {dims}")
            if u.flavor != "unitary" and not u.is_unitary(tol):
                raise ValueError(f"step {m} is not unitary")
        self.grid = grid
        self.steps = steps

    @classmethod
    def trivial(cls, grid: TimeGrid, dims) -> "Dynamics":
        ident = Operator.identity(dims)
        u = Operator(ident.matrix, ident.dims, flavor="unitary")
        return cls(grid, [u] * grid.f)

    @classmethod
    def from_unitaries(cls, grid: TimeGrid, unitaries: Sequence[Operator]) -> "Dynamics":
        return cls(grid, unitaries)

    @classmethod
    def from_hamiltonian(cls, grid: TimeGrid, hamiltonian: Operator,
                         tol: float = TOL_ALG) -> "Dynamics":
        """Steps exp(-i dt H), with hbar treated as 1.

        Exact (to rounding) via the eigendecomposition of the Hermitian H.
        """
        if not hamiltonian.is_hermitian(tol):
            raise ValueError("Hamiltonian must be Hermitian")
        w, v = np.linalg.eigh(hamiltonian.matrix)
        steps = []
        for m in range(grid.f):
            phases = np.exp(-1j * w * grid.dt(m))
            u = (v * phases) @ v.conj().T
            steps.append(Operator(u, hamiltonian.dims, flavor="unitary"))
        return cls(grid, steps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.steps[0].dims

    @property
    def dim(self) -> int:
        return self.steps[0].dim

    def step(self, m: int) -> Operator:
        """T(t_{m+1}, t_m)."""
        return self.steps[m]

    def propagator(self, m_from: int, m_to: int) -> Operator:
        """Composed T(t_to, t_from); backward propagation is the adjoint."""
        n = self.grid.n_times
        if not (0 <= m_from < n and 0 <= m_to < n):
            raise GridMismatchError(f"time indices ({m_from}, {m_to}) out of range")
        if m_from == m_to:
            return Operator.identity(self.dims)
        if m_to < m_from:
            return self.propagator(m_to, m_from).dag()
        m = self.steps[m_from].matrix
        for k in range(m_from + 1, m_to):
            m = self.steps[k].matrix @ m
        return Operator(m, self.dims, flavor="unitary")

    def reversed(self) -> "Dynamics":
        """Dynamics of the time-reversed grid: adjoint steps in reverse order."""
        steps = tuple(self.steps[self.grid.f - 1 - m].dag() for m in range(self.grid.f))
        steps = tuple(Operator(s.matrix, s.dims, flavor="unitary") for s in steps)
        return Dynamics(self.grid.reversed(), steps)

    def equals(self, other: "Dynamics", tol: float = TOL_ALG) -> bool:
        return (self.grid == other.grid and self.dims == other.dims
                and all(a.allclose(b, tol) for a, b in zip(self.steps, other.steps)))

    def __repr__(self) -> str:
        return f"Dynamics(times={self.grid.n_times}, dim={self.dim})"


@dataclass(frozen=True)
class ChainOperator:
    """Chain operator of one history; not in general a projector."""

    value: Operator
    label: tuple[str, ...]


def chain_operator(history: History, dynamics: Dynamics) -> ChainOperator:
    """F_f T(t_f, t_{f-1}) ... F_1 T(t_1, t_0) F_0 for the given history."""
    if history.n_times != dynamics.grid.n_times:
        raise GridMismatchError(
            f"history has {history.n_times} factors for {dynamics.grid.n_times} times"
        )
    if history.dims != dynamics.dims:
        raise DimError(f"history dims {history.dims} do not match dynamics dims "
                       f"{dynamics.dims}")
    k = history.factors[0].matrix
    for m in range(1, history.n_times):
        k = history.factors[m].matrix @ (dynamics.steps[m - 1].matrix @ k)
    return ChainOperator(Operator(k, history.dims), history.label)


@dataclass
class ConsistencyReport:
    """Decoherence functional of a family plus the consistency verdict.

    `matrix` is the full functional; `weights` its diagonal.  The verdict is
    relative: an off-diagonal entry is acceptable when it is at most
    tol_consistency * sqrt(W_a W_b), with an absolute allowance `floor` for
    pairs whose weights vanish.  `max_offdiag_rel` is a diagnostic of ours,
    not an independently defined quantity.
    """

    labels: tuple[tuple[str, ...], ...]
    matrix: np.ndarray
    weights: np.ndarray
    excluded: tuple[int, ...]
    consistent: bool
    max_offdiag_abs: float
    max_offdiag_rel: float
    tol_consistency: float
    floor: float

    @property
    def verdict(self) -> str:
        return "consistent" if self.consistent else "inconsistent"

    @property
    def n(self) -> int:
        return len(self.labels)

    def included_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if i not in self.excluded)

    def total_weight(self) -> float:
        return float(sum(self.weights[i] for i in self.included_indices()))

    def probabilities(self) -> np.ndarray:
        """Weights normalized over the non-throwaway histories."""
        total = self.total_weight()
        if total <= self.floor:
            raise WeightError(f"total weight {total:.3e} is not positive")
        probs = np.zeros(self.n)
        for i in self.included_indices():
            probs[i] = max(float(self.weights[i]), 0.0) / total
        return probs

    def weight(self, label) -> float:
        label = tuple(label)
        for i, lab in enumerate(self.labels):
            if lab == label:
                return float(self.weights[i])
        raise ValueError(f"no history labeled {label}")


def decoherence_functional(family: HistoryFamily, dynamics: Dynamics,
                           tol_consistency: float = TOL_CONSISTENCY,
                           floor: float = CONSISTENCY_FLOOR) -> ConsistencyReport:
    """Full decoherence functional D(a, b) = Tr[K(Y^a)^dag K(Y^b)].

    The Gram construction makes D Hermitian with a real nonnegative diagonal,
    which doubles as the history weights.
    """
    if family.grid != dynamics.grid:
        raise GridMismatchError("family and dynamics use different time grids")
    if family.dims != dynamics.dims:
        raise DimError(f"family dims {family.dims} do not match dynamics dims "
                       f"{dynamics.dims}")
    chains = np.array([
        chain_operator(h, dynamics).value.matrix.ravel() for h in family.histories
    ])
    matrix = chains.conj() @ chains.T
    weights = matrix.diagonal().real.copy()
    n = len(family.histories)
    consistent = True
    max_abs = 0.0
    max_rel = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            off = abs(matrix[i, j])
            scale = float(np.sqrt(max(weights[i], 0.0) * max(weights[j], 0.0)))
            max_abs = max(max_abs, off)
            if scale > floor:
                max_rel = max(max_rel, off / scale)
            if off > max(tol_consistency * scale, floor):
                consistent = False
    matrix.flags.writeable = False
    weights.flags.writeable = False
    excluded = tuple(i for i, h in enumerate(family.histories) if h.kind == "throwaway")
    return ConsistencyReport(
        labels=family.labels, matrix=matrix, weights=weights, excluded=excluded,
        consistent=consistent, max_offdiag_abs=max_abs, max_offdiag_rel=max_rel,
        tol_consistency=tol_consistency, floor=floor,
    )


def born_weight(pd0: ProjectiveDecomposition, pd1: ProjectiveDecomposition,
                dynamics: Dynamics, j: int, k: int) -> float:
    """Two-time weight Tr(Q^k T(t_1, t_0) P^j T(t_0, t_1))."""
    if dynamics.grid.f != 1:
        raise GridMismatchError("Born weights are defined on a two-time grid")
    if pd0.dims != dynamics.dims or pd1.dims != dynamics.dims:
        raise DimError("decompositions do not match the dynamics dims")
    t = dynamics.step(0).matrix
    p = pd0[j].matrix
    q = pd1[k].matrix
    return float(np.trace(q @ t @ p @ t.conj().T).real)


def _require_consistent(report: ConsistencyReport) -> None:
    if not report.consistent:
        raise InconsistentFamilyError(
            "family fails the consistency condition "
            f"(max off-diagonal {report.max_offdiag_abs:.6e}); probabilities "
            "are meaningless for it and are refused"
        )


def event_weight(family: HistoryFamily, report: ConsistencyReport,
                 event: Mapping[int, str | Iterable[str]] | None) -> float:
    """Total weight of non-throwaway histories matching the event."""
    included = set(family.included_indices())
    if event is None:
        idx = included
    else:
        idx = set(family.select(event)) & included
    return float(sum(report.weights[i] for i in idx))


def probability(family: HistoryFamily, dynamics: Dynamics,
                event: Mapping[int, str | Iterable[str]],
                tol_consistency: float = TOL_CONSISTENCY,
                floor: float = CONSISTENCY_FLOOR) -> float:
    """Probability of an event, conditioned on the family's sample space."""
    return conditional_probability(family, dynamics, event, None,
                                   tol_consistency=tol_consistency, floor=floor)


def conditional_probability(family: HistoryFamily, dynamics: Dynamics,
                            target: Mapping[int, str | Iterable[str]],
                            given: Mapping[int, str | Iterable[str]] | None = None,
                            tol_consistency: float = TOL_CONSISTENCY,
                            floor: float = CONSISTENCY_FLOOR) -> float:
    """Pr(target | given) from history weights; refuses inconsistent families."""
    report = decoherence_functional(family, dynamics,
                                    tol_consistency=tol_consistency, floor=floor)
    _require_consistent(report)
    denominator = event_weight(family, report, given)
    if denominator <= floor:
        raise ZeroConditionError(
            f"conditioning event has weight {denominator:.3e}; the conditional "
            "probability is undefined"
        )
    both = dict(given or {})
    for t, lab in target.items():
        t = int(t)
        new = {lab} if isinstance(lab, str) else {str(x) for x in lab}
        if t in both:
            old = both[t]
            old = {old} if isinstance(old, str) else {str(x) for x in old}
            new = new & old
        both[t] = new
    numerator = event_weight(family, report, both)
    return numerator / denominator


def sample_history(family: HistoryFamily, dynamics: Dynamics, seed: int,
                   size: int | None = None,
                   tol_consistency: float = TOL_CONSISTENCY,
                   floor: float = CONSISTENCY_FLOOR):
    """Draw history labels with probability W(a)/sum W; deterministic per seed.

    Exactly one history of a family occurs; this picks it.  Returns a single
    label when size is None, else a list of labels.
    """
    report = decoherence_functional(family, dynamics,
                                    tol_consistency=tol_consistency, floor=floor)
    _require_consistent(report)
    included = family.included_indices()
    weights = np.array([max(float(report.weights[i]), 0.0) for i in included])
    total = weights.sum()
    if total <= floor:
        raise WeightError("family carries no weight to sample from")
    probs = weights / total
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(included), size=size, p=probs)
    if size is None:
        return family.histories[included[int(picks)]].label
    return [family.histories[included[int(i)]].label for i in picks]
