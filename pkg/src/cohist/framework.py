"""Single-time frameworks: projective decompositions of the identity.

A framework is a set of mutually orthogonal projectors summing to I (the
quantum sample space) together with the Boolean event algebra generated by
it.  Incompatible frameworks (ones whose projectors do not all commute)
must never be combined; `common_refinement` enforces this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CompletenessError,
    DimError,
    IncompatibleFrameworksError,
    NotProjectorError,
    OrthogonalityError,
    WeightError,
)
from .operators import TOL_ALG, Operator, commutes, interval_projector, spin_projectors

TOL_PROB = 1e-8


class ProjectiveDecomposition:
    """Ordered set of mutually orthogonal projectors that sum to the identity."""

    __slots__ = ("projectors", "labels", "dims")

    def __init__(self, projectors: Sequence[Operator], labels: Sequence[str] | None = None,
                 tol: float = TOL_ALG):
        projectors = tuple(projectors)
        if not projectors:
            raise CompletenessError("a projective decomposition needs at least one element")
        dims = projectors[0].dims
        dim = projectors[0].dim
        if labels is None:
            labels = tuple(str(i) for i in range(len(projectors)))
        labels = tuple(str(l) for l in labels)
        if len(labels) != len(projectors):
            raise ValueError(f"{len(labels)} labels for {len(projectors)} projectors")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate element labels in {labels}")
        for i, p in enumerate(projectors):
            if p.dim != dim:
                raise DimError(f"element {i} has dim {p.dim}, expected {dim}")
            if p.norm() <= tol:
                raise NotProjectorError(f"element {i} ({labels[i]}) is the zero operator")
            if not p.is_projector(tol):
                raise NotProjectorError(f"element {i} ({labels[i]}) is not a projector")
        for i in range(len(projectors)):
            for j in range(i + 1, len(projectors)):
                overlap = float(np.linalg.norm(projectors[i].matrix @ projectors[j].matrix))
                if overlap > tol:
                    raise OrthogonalityError(
                        f"elements {i} ({labels[i]}) and {j} ({labels[j]}) are not "
                        f"orthogonal: ||P_i P_j|| = {overlap:.3e}"
                    )
        total = sum(p.matrix for p in projectors)
        residual = float(np.linalg.norm(total - np.eye(dim)))
        if residual > tol:
            raise CompletenessError(
                f"projectors do not sum to the identity (completeness violated): "
                f"||sum - I|| = {residual:.3e}"
            )
        self.projectors = projectors
        self.labels = labels
        self.dims = dims

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    @property
    def size(self) -> int:
        return len(self.projectors)

    def __len__(self) -> int:
        return len(self.projectors)

    def __iter__(self):
        return iter(self.projectors)

    def __getitem__(self, i: int) -> Operator:
        return self.projectors[i]

    def items(self):
        return zip(self.labels, self.projectors)

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"no element labeled {label!r} in {self.labels}") from None

    def event(self, members: Iterable[int | str]) -> "Event":
        """Event of the Boolean algebra given by element indices or labels."""
        idx = frozenset(
            m if isinstance(m, int) else self.label_index(m) for m in members
        )
        for i in idx:
            if not 0 <= i < self.size:
                raise ValueError(f"element index {i} out of range")
        return Event(self, idx)

    def __repr__(self) -> str:
        return f"ProjectiveDecomposition(dim={self.dim}, labels={self.labels})"


@dataclass(frozen=True)
class Event:
    """A subset of a decomposition's elements; its projector is their sum."""

    pd: ProjectiveDecomposition
    members: frozenset

    @property
    def projector(self) -> Operator:
        if not self.members:
            return Operator.zero(self.pd.dims)
        total = sum(self.pd.projectors[i].matrix for i in sorted(self.members))
        return Operator(total, self.pd.dims, flavor="projector")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.pd.labels[i] for i in sorted(self.members))


def make_pd(projectors: Sequence[Operator], labels: Sequence[str] | None = None,
            tol: float = TOL_ALG) -> ProjectiveDecomposition:
    """Validate and build a projective decomposition of the identity."""
    return ProjectiveDecomposition(projectors, labels, tol)


def trivial_pd(dims) -> ProjectiveDecomposition:
    return make_pd([Operator.identity(dims)], ["I"])


def basis_pd(dims, labels: Sequence[str] | None = None) -> ProjectiveDecomposition:
    """Computational-basis dyads on a space with the given dims."""
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    d = int(np.prod(dims))
    projs = []
    for i in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[i, i] = 1.0
        projs.append(Operator(m, dims, flavor="projector"))
    return make_pd(projs, labels)


def spin_pd(axis: str) -> ProjectiveDecomposition:
    plus, minus = spin_projectors(axis)
    return make_pd([plus, minus], [f"{axis}+", f"{axis}-"])


def interval_pd(grid, lo: float, hi: float, tol: float = TOL_ALG) -> ProjectiveDecomposition:
    """Two-element decomposition {inside, outside}; empty sides are dropped."""
    inside = interval_projector(grid, lo, hi)
    outside = inside.complement()
    projs, labels = [], []
    if inside.norm() > tol:
        projs.append(inside)
        labels.append("in")
    if outside.norm() > tol:
        projs.append(Operator(outside.matrix, inside.dims, flavor="projector"))
        labels.append("out")
    return make_pd(projs, labels, tol)


def tensor_pd(*pds: ProjectiveDecomposition) -> ProjectiveDecomposition:
    """Product decomposition on the composite space; labels join with '&'."""
    from .operators import tensor as _tensor

    if len(pds) < 1:
        raise DimError("tensor_pd needs at least one factor")
    projs = [pds[0].projectors[i] for i in range(pds[0].size)]
    labels = list(pds[0].labels)
    for nxt in pds[1:]:
        projs = [_tensor(p, q) for p in projs for q in nxt.projectors]
        labels = [f"{a}&{b}" for a in labels for b in nxt.labels]
    return make_pd(projs, labels)


def lift_pd(pd: ProjectiveDecomposition, dims, slot: int) -> ProjectiveDecomposition:
    """Extend each element by identities on the other factors of `dims`."""
    from .operators import embed

    projs = [embed(p, dims, slot) for p in pd.projectors]
    return make_pd(projs, pd.labels)


def compatible(f: ProjectiveDecomposition, g: ProjectiveDecomposition,
               tol: float = TOL_ALG) -> bool:
    """True iff every projector of one commutes with every projector of the other."""
    if f.dim != g.dim:
        raise DimError(f"decompositions live on dims {f.dim} and {g.dim}")
    return all(commutes(p, q, tol) for p in f.projectors for q in g.projectors)


def common_refinement(f: ProjectiveDecomposition, g: ProjectiveDecomposition,
                      tol: float = TOL_ALG) -> ProjectiveDecomposition:
    """Decomposition of all nonzero products P_j Q_k of two compatible frameworks.

    Refuses incompatible inputs: combining them has no meaning, so no
    refinement exists.
    """
    if not compatible(f, g, tol):
        raise IncompatibleFrameworksError(
            "frameworks are incompatible (projectors do not all commute); "
            "they cannot be combined into a common refinement"
        )
    projs, labels = [], []
    for lf, p in f.items():
        for lg, q in g.items():
            prod = p @ q
            if prod.norm() > tol:
                projs.append(Operator(prod.matrix, p.dims, flavor="projector"))
                labels.append(f"{lf}&{lg}")
    return make_pd(projs, labels, tol)


def refines(fine: ProjectiveDecomposition, coarse: ProjectiveDecomposition,
            tol: float = TOL_ALG) -> bool:
    """True iff every coarse projector is a sum of fine projectors.

    A fine element belongs to a coarse one iff Q P_j = P_j; the residual of
    the reassembled sum is then verified.  This greedy test is exact for
    orthogonal families.
    """
    if fine.dim != coarse.dim:
        raise DimError(f"decompositions live on dims {fine.dim} and {coarse.dim}")
    for q in coarse.projectors:
        total = np.zeros((fine.dim, fine.dim), dtype=complex)
        for p in fine.projectors:
            if float(np.linalg.norm(q.matrix @ p.matrix - p.matrix)) <= tol:
                total = total + p.matrix
        if float(np.linalg.norm(total - q.matrix)) > tol:
            return False
    return True


def event_probability(pd: ProjectiveDecomposition, weights: Sequence[float],
                      event: Event, tol: float = TOL_PROB) -> float:
    """Probability of an event under per-element probabilities."""
    w = np.asarray(weights, dtype=float)
    if w.size != pd.size:
        raise WeightError(f"{w.size} weights for {pd.size} elements")
    if float(w.min(initial=0.0)) < -tol:
        raise WeightError(f"negative weight {float(w.min()):.3e}")
    if abs(float(w.sum()) - 1.0) > tol:
        raise WeightError(f"weights sum to {float(w.sum()):.12g}, expected 1")
    if event.pd is not pd:
        raise ValueError("event belongs to a different decomposition")
    return float(sum(w[i] for i in event.members))
