"""Built-in demo scenarios.

Each demo is generated as a scenario document from deterministic
ingredients, so running it twice (same seed) produces byte-identical
machine-mode reports.  Interaction unitaries that are awkward to write by
hand are computed by the model builders and embedded as literal matrices.
"""

from __future__ import annotations

import numpy as np

from .models import build_measurement, contextual_preparation
from .operators import Ket
from .scenario import (
    DynamicsDecl,
    FamilyDecl,
    GridDecl,
    LocalityHeadDecl,
    LocalityStateDecl,
    LocalityStepDecl,
    OperatorDecl,
    PdDecl,
    QueryDecl,
    Scenario,
    StateDecl,
    SystemDecl,
    serialize,
)

_R = 1.0 / np.sqrt(2.0)


def _op_matrix(name: str, system: str, matrix) -> OperatorDecl:
    rows = tuple(tuple(complex(z) for z in row)
                 for row in np.asarray(matrix, dtype=complex))
    return OperatorDecl(name, system, "matrix", rows=rows)


def _state(name: str, system: str, amps) -> StateDecl:
    return StateDecl(name, system, "amps",
                     amps=tuple(complex(a) for a in np.asarray(amps, dtype=complex)))


def _q(kind: str, *pairs: tuple[str, str]) -> QueryDecl:
    return QueryDecl(kind, tuple(pairs))


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def stern_gerlach() -> Scenario:
    stmts = (
        SystemDecl("spin", dim=2),
        _state("xplus", "spin", [_R, _R]),
        OperatorDecl("pxp", "spin", "dyad", state="xplus"),
        PdDecl("z", "spin", "spin", axis="z"),
        PdDecl("x", "spin", "spin", axis="x"),
        GridDecl("g", (0.0, 1.0)),
        DynamicsDecl("free", "spin", "g", "trivial"),
        FamilyDecl("f", "spin", "g", "fixed", initial="pxp", pds=("z",)),
        _q("compatibility", ("pds", "z x")),
        _q("compatibility", ("pds", "z z")),
        _q("refinement", ("fine", "z"), ("coarse", "z")),
        _q("consistency", ("family", "f"), ("dynamics", "free")),
        _q("probability", ("family", "f"), ("dynamics", "free"), ("where", "1=z+")),
        _q("probability", ("family", "f"), ("dynamics", "free"), ("where", "1=z-")),
    )
    return Scenario("stern-gerlach", stmts)


def measurement() -> Scenario:
    model = build_measurement(2, "destructive")
    stmts = (
        SystemDecl("s", dim=2),
        SystemDecl("m", dim=4),
        SystemDecl("sm", factors=("s", "m")),
        _state("psi0", "s", [0.6, 0.8]),
        StateDecl("m0", "m", "basis", index=0),
        StateDecl("m1ptr", "m", "basis", index=2),
        StateDecl("m2ptr", "m", "basis", index=3),
        StateDecl("init", "sm", "tensor", parts=("psi0", "m0")),
        _op_matrix("u1", "sm", model.u_first.matrix),
        _op_matrix("u2", "sm", model.u_second.matrix),
        OperatorDecl("P1", "m", "dyad", state="m1ptr"),
        OperatorDecl("P2", "m", "dyad", state="m2ptr"),
        _op_matrix("Prest", "m", np.diag([1.0, 1.0, 0.0, 0.0])),
        PdDecl("sbasis", "s", "basis"),
        PdDecl("pointer", "m", "projectors", members=("P1", "P2", "Prest")),
        PdDecl("slift", "sm", "lift", inner="sbasis", slot=0),
        PdDecl("plift", "sm", "lift", inner="pointer", slot=1),
        GridDecl("g", (0.0, 1.0, 2.0)),
        DynamicsDecl("meas", "sm", "g", "unitaries", ops=("u1", "u2")),
        FamilyDecl("fam", "sm", "g", "fixed", initial="init",
                   pds=("slift", "plift")),
        _q("consistency", ("family", "fam"), ("dynamics", "meas")),
        _q("probability", ("family", "fam"), ("dynamics", "meas"),
           ("where", "2=P1")),
        _q("probability", ("family", "fam"), ("dynamics", "meas"),
           ("where", "2=P2")),
        _q("conditional", ("family", "fam"), ("dynamics", "meas"),
           ("where", "1=0"), ("given", "2=P1")),
        _q("conditional", ("family", "fam"), ("dynamics", "meas"),
           ("where", "1=1"), ("given", "2=P2")),
        _q("conditional", ("family", "fam"), ("dynamics", "meas"),
           ("where", "1=1"), ("given", "2=P1")),
    )
    return Scenario("measurement", stmts)


def preparation() -> Scenario:
    model = build_measurement(2, "vonNeumann")
    stmts = (
        SystemDecl("s", dim=2),
        SystemDecl("m", dim=4),
        SystemDecl("sm", factors=("s", "m")),
        _state("psi0", "s", [_R, _R]),
        StateDecl("m0", "m", "basis", index=0),
        StateDecl("m1ptr", "m", "basis", index=2),
        StateDecl("m2ptr", "m", "basis", index=3),
        StateDecl("init", "sm", "tensor", parts=("psi0", "m0")),
        _op_matrix("u1", "sm", model.u_first.matrix),
        _op_matrix("u2", "sm", model.u_second.matrix),
        OperatorDecl("P1", "m", "dyad", state="m1ptr"),
        OperatorDecl("P2", "m", "dyad", state="m2ptr"),
        _op_matrix("Prest", "m", np.diag([1.0, 1.0, 0.0, 0.0])),
        PdDecl("sbasis", "s", "basis"),
        PdDecl("pointer", "m", "projectors", members=("P1", "P2", "Prest")),
        PdDecl("triv", "sm", "trivial"),
        PdDecl("joint", "sm", "tensor", members=("sbasis", "pointer")),
        GridDecl("g", (0.0, 1.0, 2.0)),
        DynamicsDecl("prep", "sm", "g", "unitaries", ops=("u1", "u2")),
        FamilyDecl("fam", "sm", "g", "fixed", initial="init",
                   pds=("triv", "joint")),
        _q("consistency", ("family", "fam"), ("dynamics", "prep")),
        _q("probability", ("family", "fam"), ("dynamics", "prep"),
           ("where", "2=0&P1")),
        _q("probability", ("family", "fam"), ("dynamics", "prep"),
           ("where", "2=1&P2")),
        _q("probability", ("family", "fam"), ("dynamics", "prep"),
           ("where", "2=0&P2")),
        _q("conditional", ("family", "fam"), ("dynamics", "prep"),
           ("where", "2=0&P1"), ("given", "2=0&P1,1&P1")),
        _q("conditional", ("family", "fam"), ("dynamics", "prep"),
           ("where", "2=1&P2"), ("given", "2=1&P2,0&P2")),
    )
    return Scenario("preparation", stmts)


def contextual() -> Scenario:
    r1 = Ket([1.0, 0.0])
    r2 = Ket([0.6, 0.8])
    prep = contextual_preparation([r1, r2], [0.6, 0.8])
    pd = prep.outcome_pd()
    op_names = ("r1P1", "nr1P1", "r2P2", "nr2P2", "Prest")
    op_decls = tuple(
        _op_matrix(name, "sm", proj.matrix)
        for name, proj in zip(op_names, pd.projectors)
    )
    stmts = (
        SystemDecl("s", dim=2),
        SystemDecl("m", dim=4),
        SystemDecl("sm", factors=("s", "m")),
        StateDecl("s0", "s", "basis", index=0),
        StateDecl("m0", "m", "basis", index=0),
        StateDecl("init", "sm", "tensor", parts=("s0", "m0")),
        _op_matrix("u", "sm", prep.unitary.matrix),
    ) + op_decls + (
        PdDecl("outcome", "sm", "projectors", members=op_names),
        GridDecl("g", (0.0, 1.0)),
        DynamicsDecl("prep", "sm", "g", "unitaries", ops=("u",)),
        FamilyDecl("fam", "sm", "g", "fixed", initial="init", pds=("outcome",)),
        _q("consistency", ("family", "fam"), ("dynamics", "prep")),
        _q("probability", ("family", "fam"), ("dynamics", "prep"),
           ("where", "1=r1P1")),
        _q("probability", ("family", "fam"), ("dynamics", "prep"),
           ("where", "1=r2P2")),
        _q("conditional", ("family", "fam"), ("dynamics", "prep"),
           ("where", "1=r1P1"), ("given", "1=r1P1,nr1P1")),
        _q("conditional", ("family", "fam"), ("dynamics", "prep"),
           ("where", "1=r2P2"), ("given", "1=r2P2,nr2P2")),
    )
    return Scenario("contextual-preparation", stmts)


def povm() -> Scenario:
    stmts = (
        SystemDecl("s", dim=2),
        SystemDecl("a", dim=2),
        SystemDecl("sa", factors=("s", "a")),
        _state("b1", "sa", [_R, 0.0, 0.0, _R]),
        _state("b2", "sa", [_R, 0.0, 0.0, -_R]),
        _state("b3", "sa", [0.0, _R, _R, 0.0]),
        _state("b4", "sa", [0.0, _R, -_R, 0.0]),
        _state("a0", "a", [0.8, 0.6j]),
        PdDecl("bell", "sa", "dyads", members=("b1", "b2", "b3", "b4")),
        _q("povm", ("pd", "bell"), ("state", "a0"), ("ancilla", "1")),
    )
    return Scenario("povm", stmts)


def singlet_demo() -> Scenario:
    stmts = (
        SystemDecl("a", dim=2),
        SystemDecl("b", dim=2),
        SystemDecl("pair", factors=("a", "b")),
        StateDecl("psi", "pair", "singlet"),
        OperatorDecl("ppsi", "pair", "dyad", state="psi"),
        PdDecl("za", "a", "spin", axis="z"),
        PdDecl("zb", "b", "spin", axis="z"),
        PdDecl("xb", "b", "spin", axis="x"),
        PdDecl("zz", "pair", "tensor", members=("za", "zb")),
        PdDecl("zx", "pair", "tensor", members=("za", "xb")),
        GridDecl("g", (0.0, 1.0)),
        DynamicsDecl("free", "pair", "g", "trivial"),
        FamilyDecl("fzz", "pair", "g", "fixed", initial="ppsi", pds=("zz",)),
        FamilyDecl("fzx", "pair", "g", "fixed", initial="ppsi", pds=("zx",)),
        _q("compatibility", ("pds", "zz zx")),
        _q("consistency", ("family", "fzz"), ("dynamics", "free")),
        _q("conditional", ("family", "fzz"), ("dynamics", "free"),
           ("where", "1=z+&z-"), ("given", "1=z+&z+,z+&z-")),
        _q("conditional", ("family", "fzz"), ("dynamics", "free"),
           ("where", "1=z-&z+"), ("given", "1=z-&z+,z-&z-")),
        _q("conditional", ("family", "fzx"), ("dynamics", "free"),
           ("where", "1=z+&x+"), ("given", "1=z+&x+,z+&x-")),
    )
    return Scenario("singlet", stmts)


def locality() -> Scenario:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) * _R
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                    dtype=float)
    cz = np.diag([1.0, 1.0, 1.0, -1.0])
    tbc1 = cnot @ np.kron(h, np.eye(2))
    tbc2 = cz @ np.kron(np.eye(2), h)
    stmts = (
        SystemDecl("a", dim=2),
        SystemDecl("b", dim=2),
        SystemDecl("c", dim=2),
        SystemDecl("ab", factors=("a", "b")),
        SystemDecl("bc", factors=("b", "c")),
        StateDecl("phi0", "ab", "singlet"),
        _state("c1", "c", [1.0, 0.0]),
        _state("c2", "c", [0.6, 0.8j]),
        _state("c3", "c", [_R, -_R]),
        _op_matrix("ta1", "a", _rotation(0.35)),
        _op_matrix("ta2", "a", _rotation(0.9)),
        _op_matrix("tbc1", "bc", tbc1),
        _op_matrix("tbc2", "bc", tbc2),
        PdDecl("za", "a", "spin", axis="z"),
        PdDecl("xa", "a", "spin", axis="x"),
        GridDecl("g", (0.0, 1.0, 2.0)),
        LocalityHeadDecl("L", "a", "b", "c", "g", "phi0", ("za", "xa")),
        LocalityStepDecl("L", "ta1", "tbc1"),
        LocalityStepDecl("L", "ta2", "tbc2"),
        LocalityStateDecl("L", "c1"),
        LocalityStateDecl("L", "c2"),
        LocalityStateDecl("L", "c3"),
        _q("locality", ("locality", "L")),
    )
    return Scenario("locality", stmts)


def unitary_family_demo() -> Scenario:
    stmts = (
        SystemDecl("spin", dim=2),
        StateDecl("up", "spin", "basis", index=0),
        _op_matrix("rot", "spin", _rotation(0.3 * np.pi)),
        GridDecl("g", (0.0, 1.0, 2.0)),
        DynamicsDecl("dyn", "spin", "g", "unitaries", ops=("rot", "rot")),
        FamilyDecl("fam", "spin", "g", "unitary", state="up", dynamics="dyn"),
        _q("consistency", ("family", "fam"), ("dynamics", "dyn")),
        _q("probability", ("family", "fam"), ("dynamics", "dyn"),
           ("where", "0=psi 1=psi 2=psi")),
        _q("sample", ("family", "fam"), ("dynamics", "dyn"),
           ("count", "5"), ("seed", "7")),
    )
    return Scenario("unitary-family", stmts)


def inconsistent_triple() -> Scenario:
    stmts = (
        SystemDecl("spin", dim=2),
        _state("xplus", "spin", [_R, _R]),
        OperatorDecl("pxp", "spin", "dyad", state="xplus"),
        PdDecl("z", "spin", "spin", axis="z"),
        PdDecl("x", "spin", "spin", axis="x"),
        GridDecl("g", (0.0, 1.0, 2.0)),
        DynamicsDecl("free", "spin", "g", "trivial"),
        FamilyDecl("trip", "spin", "g", "fixed", initial="pxp", pds=("z", "x")),
        _q("consistency", ("family", "trip"), ("dynamics", "free")),
        _q("probability", ("family", "trip"), ("dynamics", "free"),
           ("where", "2=x+")),
        _q("conditional", ("family", "trip"), ("dynamics", "free"),
           ("where", "1=z+"), ("given", "2=x+")),
        _q("compatibility", ("pds", "z x")),
    )
    return Scenario("inconsistent-triple", stmts)


def three_toss() -> Scenario:
    stmts = (
        SystemDecl("q", dim=2),
        SystemDecl("qqq", factors=("q", "q", "q")),
        StateDecl("up", "q", "basis", index=0),
        StateDecl("init", "qqq", "tensor", parts=("up", "up", "up")),
        _op_matrix("r", "q", _rotation(np.pi / 4.0)),
        OperatorDecl("rrr", "qqq", "tensor", parts=("r", "r", "r")),
        PdDecl("zq", "q", "spin", axis="z"),
        PdDecl("zzz", "qqq", "tensor", members=("zq", "zq", "zq")),
        GridDecl("g", (0.0, 1.0)),
        DynamicsDecl("toss", "qqq", "g", "unitaries", ops=("rrr",)),
        FamilyDecl("fam", "qqq", "g", "fixed", initial="init", pds=("zzz",)),
        _q("consistency", ("family", "fam"), ("dynamics", "toss")),
        _q("probability", ("family", "fam"), ("dynamics", "toss"),
           ("where", "1=z+&z+&z+")),
        _q("sample", ("family", "fam"), ("dynamics", "toss"),
           ("count", "100000"), ("seed", "20260810")),
    )
    return Scenario("three-toss", stmts)


DEMOS: dict[str, tuple[str, callable]] = {
    "stern-gerlach": (
        "incompatible z/x frameworks and two-outcome beam statistics",
        stern_gerlach),
    "measurement": (
        "destructive measurement: pointer statistics and retrodiction",
        measurement),
    "preparation": (
        "nondestructive interaction; pointer outcome certifies the state",
        preparation),
    "contextual-preparation": (
        "preparation into non-orthogonal states, certain per pointer sector",
        contextual),
    "povm": (
        "positive operator set induced on the system by a Bell-basis pd",
        povm),
    "singlet": (
        "singlet pair: same-axis anti-correlation, cross-axis evenness",
        singlet_demo),
    "locality": (
        "A-system statistics unchanged by whatever C does to B",
        locality),
    "unitary-family": (
        "deterministic family tracking the evolved state",
        unitary_family_demo),
    "inconsistent-triple": (
        "three-time family that fails the consistency condition",
        inconsistent_triple),
    "three-toss": (
        "three rotated qubits read in the z basis, with seeded sampling",
        three_toss),
}


def list_demos() -> list[tuple[str, str]]:
    return [(name, desc) for name, (desc, _) in DEMOS.items()]


def demo_scenario(name: str) -> Scenario:
    desc_builder = DEMOS.get(name)
    if desc_builder is None:
        raise KeyError(name)
    return desc_builder[1]()


def demo_text(name: str) -> str:
    return serialize(demo_scenario(name))
