"""History spaces and sample spaces of histories (families).

A history assigns one projector per time; formally it is the tensor product
of its factors on the history space H_0 (x) H_1 (x) ... (x) H_f.  Histories
are stored factored -- one single-time projector per time, never as a dense
d^(f+1) matrix -- which keeps chain-operator evaluation polynomial in the
single-time dimension and the number of times.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CompletenessError,
    DimError,
    GridMismatchError,
    NotProjectorError,
    OrthogonalityError,
)
from .framework import ProjectiveDecomposition
from .operators import TOL_ALG, Ket, Operator, dyad

KIND_NORMAL = "normal"
KIND_THROWAWAY = "throwaway"
KIND_UNITARY = "unitary"


class TimeGrid:
    """Strictly increasing times t_0 < t_1 < ... < t_f, with f >= 1."""

    __slots__ = ("times",)

    def __init__(self, times: Iterable[float]):
        ts = tuple(float(t) for t in times)
        if len(ts) < 2:
            raise GridMismatchError("a time grid needs at least two times")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise GridMismatchError(f"times must be strictly increasing, got {ts}")
        self.times = ts

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def f(self) -> int:
        """Number of steps (one less than the number of times)."""
        return len(self.times) - 1

    def dt(self, m: int) -> float:
        return self.times[m + 1] - self.times[m]

    def reversed(self) -> "TimeGrid":
        return TimeGrid(tuple(-t for t in reversed(self.times)))

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeGrid) and self.times == other.times

    def __hash__(self) -> int:
        return hash(self.times)

    def __repr__(self) -> str:
        return f"TimeGrid({self.times})"


class HistorySpace:
    """Bookkeeping for the tensor product of per-time copies of one space."""

    __slots__ = ("grid", "dims")

    def __init__(self, grid: TimeGrid, dims: tuple[int, ...]):
        self.grid = grid
        self.dims = tuple(int(d) for d in dims)

    @property
    def dim(self) -> int:
        """Dimension of the single-time space."""
        return int(np.prod(self.dims))

    @property
    def total_dim(self) -> int:
        return self.dim ** self.grid.n_times

    def __eq__(self, other) -> bool:
        return (isinstance(other, HistorySpace)
                and self.grid == other.grid and self.dims == other.dims)

    def __repr__(self) -> str:
        return f"HistorySpace(times={self.grid.n_times}, dim={self.dim})"


class History:
    """One projector per time; the product projector F_0 (x) ... (x) F_f."""

    __slots__ = ("factors", "label", "kind")

    def __init__(self, factors: Sequence[Operator], label: Sequence[str],
                 kind: str = KIND_NORMAL, tol: float = TOL_ALG):
        factors = tuple(factors)
        if not factors:
            raise GridMismatchError("a history needs at least one factor")
        dims = factors[0].dims
        for m, fct in enumerate(factors):
            if fct.dims != dims:
                raise DimError(f"factor at time {m} has dims {fct.dims}, expected {dims}")
            if fct.flavor != "projector" and not fct.is_projector(tol):
                raise NotProjectorError(f"factor at time {m} is not a projector")
        label = tuple(str(l) for l in label)
        if len(label) != len(factors):
            raise ValueError(f"{len(label)} label parts for {len(factors)} factors")
        if kind not in (KIND_NORMAL, KIND_THROWAWAY, KIND_UNITARY):
            raise ValueError(f"unknown history kind {kind!r}")
        self.factors = factors
        self.label = label
        self.kind = kind

    @property
    def n_times(self) -> int:
        return len(self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.factors[0].dims

    def dense(self) -> np.ndarray:
        """The history projector as a dense matrix on the history space."""
        m = self.factors[0].matrix
        for fct in self.factors[1:]:
            m = np.kron(m, fct.matrix)
        return m

    def display_label(self) -> str:
        return ",".join(self.label)

    def time_reversed(self) -> "History":
        return History(tuple(reversed(self.factors)), tuple(reversed(self.label)),
                       kind=self.kind)

    def __repr__(self) -> str:
        return f"History({self.display_label()!r}, kind={self.kind!r})"


class HistoryFamily:
    """Sample space of mutually exclusive histories on one history space."""

    __slots__ = ("space", "histories", "dynamics")

    def __init__(self, grid: TimeGrid, histories: Sequence[History], dynamics=None):
        histories = tuple(histories)
        if not histories:
            raise GridMismatchError("a family needs at least one history")
        dims = histories[0].dims
        for h in histories:
            if h.n_times != grid.n_times:
                raise GridMismatchError(
                    f"history {h.display_label()!r} has {h.n_times} factors for "
                    f"{grid.n_times} grid times"
                )
            if h.dims != dims:
                raise DimError(f"history {h.display_label()!r} has dims {h.dims}")
        labels = [h.label for h in histories]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate history labels in family")
        if dynamics is not None and dynamics.grid != grid:
            raise GridMismatchError("attached dynamics uses a different time grid")
        self.space = HistorySpace(grid, dims)
        self.histories = histories
        self.dynamics = dynamics

    @property
    def grid(self) -> TimeGrid:
        return self.space.grid

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.dims

    @property
    def n(self) -> int:
        return len(self.histories)

    @property
    def labels(self) -> tuple[tuple[str, ...], ...]:
        return tuple(h.label for h in self.histories)

    def index_of(self, label) -> int:
        label = tuple(label)
        for i, h in enumerate(self.histories):
            if h.label == label:
                return i
        raise ValueError(f"no history labeled {label}")

    def included_indices(self) -> tuple[int, ...]:
        """Indices of histories that carry probability (throwaways excluded)."""
        return tuple(i for i, h in enumerate(self.histories) if h.kind != KIND_THROWAWAY)

    def select(self, event: Mapping[int, str | Iterable[str]]) -> tuple[int, ...]:
        """Histories whose label at each given time lies in the allowed set."""
        crit: dict[int, set[str]] = {}
        for t, lab in event.items():
            t = int(t)
            if not 0 <= t < self.grid.n_times:
                raise GridMismatchError(f"time index {t} out of range")
            crit[t] = {lab} if isinstance(lab, str) else {str(x) for x in lab}
        out = []
        for i, h in enumerate(self.histories):
            if all(h.label[t] in allowed for t, allowed in crit.items()):
                out.append(i)
        return tuple(out)

    def attach(self, dynamics) -> "HistoryFamily":
        return HistoryFamily(self.grid, self.histories, dynamics)

    def time_reversed(self) -> "HistoryFamily":
        return HistoryFamily(self.grid.reversed(),
                             tuple(h.time_reversed() for h in self.histories))

    def validate(self, tol: float = TOL_ALG) -> None:
        """Check mutual exclusivity and that the histories sum to the identity.

        The sum check builds the dense history-space identity, which is fine
        at desk scale; storage stays factored.
        """
        n = self.n
        norms = [[float(np.linalg.norm(a.matrix @ b.matrix))
                  for a, b in zip(h1.factors, h2.factors)]
                 for h1, h2 in itertools.combinations(self.histories, 2)]
        pair_iter = itertools.combinations(range(n), 2)
        for (i, j), factor_norms in zip(pair_iter, norms):
            # || kron(A_0..A_f) || = prod ||A_m||, so the product of factor
            # norms is the norm of the history-space product.
            if float(np.prod(factor_norms)) > tol:
                raise OrthogonalityError(
                    f"histories {self.histories[i].display_label()!r} and "
                    f"{self.histories[j].display_label()!r} are not mutually exclusive"
                )
        total = sum(h.dense() for h in self.histories)
        residual = float(np.linalg.norm(total - np.eye(self.space.total_dim)))
        if residual > tol:
            raise CompletenessError(
                f"histories do not sum to the history-space identity: "
                f"||sum - I|| = {residual:.3e}"
            )

    def __repr__(self) -> str:
        return f"HistoryFamily(n={self.n}, times={self.grid.n_times}, dim={self.space.dim})"


def product_family(grid: TimeGrid, pds: Sequence[ProjectiveDecomposition],
                   dynamics=None) -> HistoryFamily:
    """Family drawing the projector at each time from a fixed decomposition."""
    pds = tuple(pds)
    if len(pds) != grid.n_times:
        raise GridMismatchError(f"{len(pds)} decompositions for {grid.n_times} times")
    dims = pds[0].dims
    for m, pd in enumerate(pds):
        if pd.dims != dims:
            raise DimError(f"decomposition at time {m} has dims {pd.dims}, expected {dims}")
    histories = [
        History([pd[i] for pd, i in zip(pds, combo)],
                [pd.labels[i] for pd, i in zip(pds, combo)])
        for combo in itertools.product(*(range(pd.size) for pd in pds))
    ]
    return HistoryFamily(grid, histories, dynamics)


def fixed_initial_family(grid: TimeGrid, initial: Operator,
                         later_pds: Sequence[ProjectiveDecomposition],
                         label: str = "init", dynamics=None,
                         tol: float = TOL_ALG) -> HistoryFamily:
    """Family with a fixed initial projector and per-time decompositions after it.

    The complementary history (I - P_0 at t_0, I afterwards) is kept in the
    sample space so the histories sum to the identity, but it is marked as a
    zero-probability throwaway and excluded from probability assignments.
    """
    if initial.flavor != "projector" and not initial.is_projector(tol):
        raise NotProjectorError("initial condition is not a projector")
    if initial.norm() <= tol:
        raise NotProjectorError("initial projector is zero")
    later_pds = tuple(later_pds)
    if len(later_pds) != grid.f:
        raise GridMismatchError(
            f"{len(later_pds)} decompositions for {grid.f} later times"
        )
    for m, pd in enumerate(later_pds):
        if pd.dims != initial.dims:
            raise DimError(f"decomposition at step {m} has dims {pd.dims}, "
                           f"expected {initial.dims}")
    histories = [
        History([initial] + [pd[i] for pd, i in zip(later_pds, combo)],
                [label] + [pd.labels[i] for pd, i in zip(later_pds, combo)])
        for combo in itertools.product(*(range(pd.size) for pd in later_pds))
    ]
    rest = initial.complement()
    if rest.norm() > tol:
        identity = Operator.identity(initial.dims)
        histories.append(History(
            [Operator(rest.matrix, initial.dims, flavor="projector")]
            + [identity] * grid.f,
            [f"!{label}"] + ["I"] * grid.f,
            kind=KIND_THROWAWAY,
        ))
    return HistoryFamily(grid, histories, dynamics)


def unitary_family(psi0: Ket, dynamics, labels: tuple[str, str] = ("psi", "!psi"),
                   tol: float = TOL_ALG) -> HistoryFamily:
    """Family built from {[psi(t_m)], I - [psi(t_m)]} along the evolved state.

    The all-[psi] history is tagged as the unitary history.  The initial
    state is assigned probability 1: histories starting with the complement
    stay in the sample space for bookkeeping but are marked zero-probability
    throwaways, so with the family's own dynamics the unitary history carries
    all the weight.
    """
    psi0.require_normalized()
    grid = dynamics.grid
    kets = [psi0]
    for m in range(grid.f):
        kets.append(dynamics.step(m) @ kets[-1])
    per_time = []
    for ket in kets:
        p = dyad(ket.normalized())
        q = p.complement()
        choices = [(labels[0], p)]
        if q.norm() > tol:
            choices.append((labels[1], Operator(q.matrix, p.dims, flavor="projector")))
        per_time.append(choices)
    histories = []
    for combo in itertools.product(*per_time):
        label = tuple(lab for lab, _ in combo)
        if label[0] != labels[0]:
            kind = KIND_THROWAWAY
        elif all(lab == labels[0] for lab in label):
            kind = KIND_UNITARY
        else:
            kind = KIND_NORMAL
        histories.append(History([op for _, op in combo], label, kind=kind))
    return HistoryFamily(grid, histories, dynamics)


def raw_family(grid: TimeGrid, histories: Sequence[History], dynamics=None,
               tol: float = TOL_ALG) -> HistoryFamily:
    """Family from an explicit list of product histories; fully validated."""
    fam = HistoryFamily(grid, histories, dynamics)
    fam.validate(tol)
    return fam


def _pair_product_norm(h1: History, h2: History) -> float:
    return float(np.prod([
        np.linalg.norm(a.matrix @ b.matrix) for a, b in zip(h1.factors, h2.factors)
    ]))


def _histories_commute(h1: History, h2: History, tol: float) -> bool:
    """Commutation of the two product projectors on the history space.

    Factorwise commutation settles the common case exactly; zero products in
    either order also commute.  Only the rare remainder needs the dense
    history-space commutator, which is fine at desk scale.
    """
    ab = [a.matrix @ b.matrix for a, b in zip(h1.factors, h2.factors)]
    ba = [b.matrix @ a.matrix for a, b in zip(h1.factors, h2.factors)]
    if all(float(np.linalg.norm(x - y)) <= tol for x, y in zip(ab, ba)):
        return True
    n_ab = float(np.prod([np.linalg.norm(m) for m in ab]))
    n_ba = float(np.prod([np.linalg.norm(m) for m in ba]))
    if n_ab <= tol and n_ba <= tol:
        return True
    dense_ab, dense_ba = ab[0], ba[0]
    for x, y in zip(ab[1:], ba[1:]):
        dense_ab = np.kron(dense_ab, x)
        dense_ba = np.kron(dense_ba, y)
    return float(np.linalg.norm(dense_ab - dense_ba)) <= tol


def family_compatible(f1: HistoryFamily, f2: HistoryFamily,
                      tol: float = TOL_ALG, tol_consistency: float = 1e-8,
                      floor: float = 1e-12) -> bool:
    """Whether two families on the same history space may be combined.

    Requires all history projectors to commute pairwise and, when dynamics
    is attached to either family, the common refinement to pass the
    consistency check.
    """
    if f1.dims != f2.dims:
        raise DimError(f"families live on dims {f1.dims} and {f2.dims}")
    if f1.grid != f2.grid:
        raise DimError("families use different time grids")
    dyn = f1.dynamics if f1.dynamics is not None else f2.dynamics
    if f1.dynamics is not None and f2.dynamics is not None \
            and not f1.dynamics.equals(f2.dynamics, tol):
        raise ValueError("families carry different dynamics")

    refined: list[History] = []
    for h1 in f1.histories:
        for h2 in f2.histories:
            if not _histories_commute(h1, h2, tol):
                return False
            if _pair_product_norm(h1, h2) <= tol:
                continue
            prods = []
            for a, b in zip(h1.factors, h2.factors):
                prod = a @ b
                if not prod.is_projector(tol):
                    # Commuting on the history space but not factorwise: the
                    # products are not projectors, so no refinement exists.
                    return False
                prods.append(Operator(prod.matrix, a.dims, flavor="projector"))
            kind = KIND_THROWAWAY if KIND_THROWAWAY in (h1.kind, h2.kind) else KIND_NORMAL
            label = tuple(f"{a}&{b}" for a, b in zip(h1.label, h2.label))
            refined.append(History(prods, label, kind=kind))
    if dyn is None:
        return True
    from .dynamics import decoherence_functional

    refinement = HistoryFamily(f1.grid, refined)
    report = decoherence_functional(refinement, dyn,
                                    tol_consistency=tol_consistency, floor=floor)
    return report.consistent
