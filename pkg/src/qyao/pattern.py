"""Measurement patterns on dotted computation graphs.

A pattern carries the computation graph (the dotted base-graph), default
angles, an explicit X/Z dependency table per vertex, and a measurement
order.  For plain wires the table comes from the canonical flow; the
entangling gadget's bridge qubit has no causal flow and uses a fixed table
validated against the dense matrix oracle below.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .angles import Angle, angle_pi_times, angle_times_sign
from .graph import (
    BaseGraph,
    DependencySets,
    DtgGraph,
    Flow,
    GraphError,
    compute_flow,
    dependency_sets,
    dotted_graph,
    grid_graph,
    make_graph,
    path_graph,
)
from .qsim import QuantumState, state_fidelity


class PatternError(Exception):
    pass


@dataclass
class MeasurementPattern:
    base: BaseGraph          # the base graph G handed to the triple construction
    graph: BaseGraph         # the computation graph D(G)
    phi: dict                # measured vertex -> Angle
    deps: DependencySets     # X/Z dependency sets for every vertex of `graph`
    order: tuple             # measurement order over non-output vertices
    target: np.ndarray | None = None   # unitary the pattern was compiled for

    def __post_init__(self):
        self.validate()

    @property
    def outputs(self) -> tuple:
        return self.graph.outputs

    @property
    def inputs(self) -> tuple:
        return self.graph.inputs

    def validate(self):
        outputs = set(self.graph.outputs)
        measured = [v for v in self.graph.vertices if v not in outputs]
        if sorted(self.order) != sorted(measured):
            raise PatternError("order must cover exactly the non-output vertices")
        if sorted(self.phi) != sorted(measured):
            raise PatternError("every measured vertex needs a default angle")
        pos = {v: i for i, v in enumerate(self.order)}
        for v in self.order:
            for j in self.deps.past(v):
                if j not in pos or pos[j] >= pos[v]:
                    raise PatternError(f"dependency {j} of {v} is not measured earlier")
        for o in outputs:
            for j in self.deps.past(o):
                if j not in pos:
                    raise PatternError(f"output byproduct source {j} of {o} is not measured")


def corrected_angle(pattern: MeasurementPattern, v: str, s: dict) -> Angle:
    """phi'_v = (-1)^{XOR of X-deps} phi_v + pi * (XOR of Z-deps)."""
    try:
        sx = 0
        for j in pattern.deps.x_deps.get(v, ()):
            sx ^= s[j] & 1
        sz = 0
        for j in pattern.deps.z_deps.get(v, ()):
            sz ^= s[j] & 1
    except KeyError as missing:
        raise PatternError(f"missing outcome for dependency {missing} of {v}") from None
    return angle_times_sign(pattern.phi[v], sx) + angle_pi_times(sz)


def delta(pattern: MeasurementPattern, v: str, theta: Angle, r: int, s: dict,
          phi_override: Angle | None = None) -> Angle:
    """The instructed angle C(v, phi, theta, r, s) = phi' + theta + pi r.

    Trap and dummy qubits use phi' = 0: pass phi_override=Angle(0) (the
    pattern has no entry for them; they live on DT(G), not on the
    computation graph).
    """
    if phi_override is not None:
        phi_part = phi_override
    else:
        phi_part = corrected_angle(pattern, v, s)
    return phi_part + theta + angle_pi_times(r)


def delta_from_influence_past(pattern: MeasurementPattern, v: str, c: dict,
                              theta: Angle, r: int, r_of: dict) -> Angle:
    """delta computed from claimed raw outcomes b_j over (at least) the past of v.

    Bits of `c` outside the past of v are ignored; agreement with `delta`
    under s_j = b_j XOR r_j is the pattern-level content of the one-time-memory
    cell formula.
    """
    s = {}
    for j in pattern.deps.past(v):
        if j not in c:
            raise PatternError(f"influence-past assignment missing {j}")
        s[j] = (c[j] ^ r_of[j]) & 1
    return delta(pattern, v, theta, r, s)


def byproduct_bits(pattern: MeasurementPattern, out: str, s: dict) -> tuple:
    """(x_bit, z_bit) byproduct parities for an output vertex."""
    x = 0
    for j in pattern.deps.x_deps.get(out, ()):
        x ^= s[j] & 1
    z = 0
    for j in pattern.deps.z_deps.get(out, ()):
        z ^= s[j] & 1
    return x, z


# ---------------------------------------------------------------------------
# Dense oracle: run a pattern on explicit input vectors, one outcome branch


def run_pattern_branch(pattern: MeasurementPattern, input_vecs: dict, branch: dict,
                       max_active: int = 24):
    """Simulate the bare (unblinded) pattern forcing measurement outcomes.

    Returns (output statevector over pattern.outputs in order, branch probability).
    Byproduct corrections for the forced outcomes are applied to the outputs.
    """
    g = pattern.graph
    state = QuantumState(max_active=max_active)
    for v in g.vertices:
        if v in input_vecs:
            state.prepare_state(v, input_vecs[v])
        else:
            state.prepare_plus_theta(v, Angle(0))
    for u, w in g.sorted_edges():
        state.cz(u, w)
    prob = 1.0
    s = {}
    for v in pattern.order:
        ang = corrected_angle(pattern, v, s)
        b = branch[v] & 1
        prob *= state.project(v, ang, b)
        s[v] = b
    for o in pattern.outputs:
        x, z = byproduct_bits(pattern, o, s)
        state.apply_z(o, z)
        state.apply_x(o, x)
    return state.statevector(pattern.outputs), prob


def pattern_unitary(pattern: MeasurementPattern) -> np.ndarray:
    """The unitary induced on the input wires (all-zero outcome branch)."""
    n = len(pattern.inputs)
    dim = 2 ** n
    cols = []
    zero_branch = {v: 0 for v in pattern.order}
    for k in range(dim):
        vecs = {}
        for i, v in enumerate(pattern.inputs):
            bit = (k >> (n - 1 - i)) & 1
            e = np.zeros(2, dtype=complex)
            e[bit] = 1.0
            vecs[v] = e
        out, _ = run_pattern_branch(pattern, vecs, zero_branch)
        cols.append(out)
    return np.stack(cols, axis=1)


def check_determinism(pattern: MeasurementPattern, trials_inputs: int = 2,
                      rng: np.random.Generator | None = None, tol: float = 1e-9) -> None:
    """Every outcome branch must give the reference output, at uniform probability.

    Exhaustive over branches; raises PatternError with the offending branch.
    """
    rng = rng or np.random.default_rng(11)
    m = len(pattern.order)
    if m > 12:
        raise PatternError("determinism check is exhaustive; pattern too large")
    for _ in range(trials_inputs):
        vecs = {}
        for v in pattern.inputs:
            raw = rng.normal(size=2) + 1j * rng.normal(size=2)
            vecs[v] = raw / np.linalg.norm(raw)
        ref, _ = run_pattern_branch(pattern, vecs, {v: 0 for v in pattern.order})
        for bits in itertools.product((0, 1), repeat=m):
            branch = dict(zip(pattern.order, bits))
            out, prob = run_pattern_branch(pattern, vecs, branch)
            if abs(prob - 2.0 ** -m) > 1e-9:
                raise PatternError(f"branch {bits} has probability {prob}, not uniform")
            if state_fidelity(ref, out) < 1.0 - tol:
                raise PatternError(f"branch {bits} deviates from the reference output")


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Distance up to global phase: 1 - |tr(U^dag V)| / dim."""
    d = u.shape[0]
    return float(1.0 - abs(np.trace(u.conj().T @ v)) / d)


# ---------------------------------------------------------------------------
# Gate compiler


def _wire_pattern(base: BaseGraph, phi_turns: dict, target: np.ndarray | None) -> MeasurementPattern:
    g = dotted_graph(base)
    flow = compute_flow(g)
    deps = dependency_sets(g, flow)
    phi = {v: Angle(phi_turns.get(v, 0)) for v in flow.order}
    return MeasurementPattern(base, g, phi, deps, flow.order, target)


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_I2 = np.eye(2, dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


def _zrot(k: int) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * k * np.pi / 4)]).astype(complex)


def _xrot(k: int) -> np.ndarray:
    return _H @ _zrot(k) @ _H


def compile_gate(gate: str) -> MeasurementPattern:
    """Compile one gate of the universal set to a pattern fragment.

    Supported: "identity", "h", "t", "tdg", "s", "z", "x", "cz", "cnot".
    Wires: a two-measurement dotted path applies X(-phi_mid) Z(-phi_in), so
    a Z(k pi/4) rotation is phi = (-k, 0) and pairs of segments give any
    single-qubit gate as an X/Z Euler word.  The entangler is the dotted
    2x3 grid with a vertical rung whose bridge qubit is measured first.
    """
    name = gate.lower()
    if name in ("identity", "i", "wire"):
        base = path_graph(2, prefix="w")
        return _wire_pattern(base, {}, _I2.copy())
    if name in ("t", "zrot1"):
        return _zrot_pattern(1)
    if name == "tdg":
        return _zrot_pattern(7)
    if name == "s":
        return _zrot_pattern(2)
    if name == "z":
        return _zrot_pattern(4)
    if name == "x":
        base = path_graph(2, prefix="w")
        # X = H Z(pi) H = X(pi): phi = (0, -4)
        return _wire_pattern(base, {"w0~w1": -4}, _xrot(4))
    if name == "h":
        # H ~ X(pi/2) Z(pi/2) X(pi/2) up to global phase, as a 4-measurement wire.
        base = path_graph(3, prefix="w")
        turns = {"w0": 0, "w0~w1": -2, "w1": -2, "w1~w2": -2}
        return _wire_pattern(base, turns, _H.copy())
    if name == "cz":
        return _cz_pattern()
    if name == "cnot":
        top = compile_gate("identity")
        had = compile_gate("h")
        pre = parallel_patterns([top, had])
        post = parallel_patterns([compile_gate("identity"), compile_gate("h")])
        pat = compose_patterns([pre, _cz_pattern(), post])
        pat.target = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        return pat
    raise PatternError(f"unsupported gate {gate!r}")


def _zrot_pattern(k: int) -> MeasurementPattern:
    base = path_graph(2, prefix="w")
    return _wire_pattern(base, {"w0": -k}, _zrot(k))


def _cz_pattern() -> MeasurementPattern:
    """Entangling gadget: 2x3 grid base with a vertical rung mid-column.

    The dotted vertical edge's bridge qubit has no row-preserving flow; it is
    measured first and its outcome is absorbed by the fixed dependency table
    below (validated exhaustively by check_determinism / the matrix oracle).
    """
    base = grid_graph(2, 3, verticals=[(0, 1)], prefix="c")
    g = dotted_graph(base)
    a1, a2, a3 = "c0_0", "c0_1", "c0_2"
    b1, b2, b3 = "c1_0", "c1_1", "c1_2"
    ea1, ea2 = f"{a1}~{a2}", f"{a2}~{a3}"
    eb1, eb2 = f"{b1}~{b2}", f"{b2}~{b3}"
    v = f"{a2}~{b2}"
    order = (v, a1, b1, ea1, eb1, a2, b2, ea2, eb2)
    x_deps = {
        v: frozenset(), a1: frozenset(), b1: frozenset(),
        ea1: frozenset({a1}), eb1: frozenset({b1}),
        a2: frozenset({v, eb1}), b2: frozenset({eb1}),
        ea2: frozenset({a2}), eb2: frozenset({b2}),
        a3: frozenset({ea2}), b3: frozenset({eb2}),
    }
    z_deps = {
        v: frozenset(), a1: frozenset(), b1: frozenset(),
        ea1: frozenset({v}), eb1: frozenset(),
        a2: frozenset({a1}), b2: frozenset({b1}),
        ea2: frozenset({v, eb1}), eb2: frozenset({eb1}),
        a3: frozenset({a2}), b3: frozenset({b2}),
    }
    phi = {w: Angle(0) for w in order}
    deps = DependencySets(x_deps, z_deps)
    return MeasurementPattern(base, g, phi, deps, order, _CZ.copy())


# ---------------------------------------------------------------------------
# Composition


def _relabel_pattern(pat: MeasurementPattern, rename: dict) -> MeasurementPattern:
    def rn(v):
        return rename.get(v, v)
    base = make_graph([rn(v) for v in pat.base.vertices],
                      [(rn(u), rn(w)) for u, w in pat.base.edges],
                      [rn(v) for v in pat.base.inputs],
                      [rn(v) for v in pat.base.outputs],
                      {rn(v): c for v, c in pat.base.coords.items()})
    graph = make_graph([rn(v) for v in pat.graph.vertices],
                       [(rn(u), rn(w)) for u, w in pat.graph.edges],
                       [rn(v) for v in pat.graph.inputs],
                       [rn(v) for v in pat.graph.outputs],
                       {rn(v): c for v, c in pat.graph.coords.items()})
    deps = DependencySets({rn(v): frozenset(rn(j) for j in s) for v, s in pat.deps.x_deps.items()},
                          {rn(v): frozenset(rn(j) for j in s) for v, s in pat.deps.z_deps.items()})
    phi = {rn(v): a for v, a in pat.phi.items()}
    return MeasurementPattern(base, graph, phi, deps, tuple(rn(v) for v in pat.order), pat.target)


def _prefix_pattern(pat: MeasurementPattern, prefix: str) -> MeasurementPattern:
    rename = {}
    for v in pat.base.vertices:
        rename[v] = prefix + v
    for v in pat.graph.vertices:
        if "~" in v:
            u, w = v.split("~")
            rename[v] = f"{prefix}{u}~{prefix}{w}"
    return _relabel_pattern(pat, rename)


def parallel_patterns(fragments) -> MeasurementPattern:
    """Stack fragments on independent wires (tensor product, top wire first)."""
    frags = [_prefix_pattern(p, f"r{i}.") for i, p in enumerate(fragments)]
    row_off = 0
    shifted = []
    for p in frags:
        def shift(coords, off):
            return {v: (r + off, c) for v, (r, c) in coords.items()}
        base = make_graph(p.base.vertices, p.base.edges, p.base.inputs, p.base.outputs,
                          shift(p.base.coords, row_off))
        graph = make_graph(p.graph.vertices, p.graph.edges, p.graph.inputs, p.graph.outputs,
                           shift(p.graph.coords, 2 * row_off))
        shifted.append(MeasurementPattern(base, graph, p.phi, p.deps, p.order, p.target))
        row_off += 1 + max(r for r, _ in p.base.coords.values())
    base = make_graph(
        [v for p in shifted for v in p.base.vertices],
        [e for p in shifted for e in p.base.edges],
        [v for p in shifted for v in p.base.inputs],
        [v for p in shifted for v in p.base.outputs],
        {v: c for p in shifted for v, c in p.base.coords.items()})
    graph = make_graph(
        [v for p in shifted for v in p.graph.vertices],
        [e for p in shifted for e in p.graph.edges],
        [v for p in shifted for v in p.graph.inputs],
        [v for p in shifted for v in p.graph.outputs],
        {v: c for p in shifted for v, c in p.graph.coords.items()})
    deps = DependencySets(
        {v: s for p in shifted for v, s in p.deps.x_deps.items()},
        {v: s for p in shifted for v, s in p.deps.z_deps.items()})
    phi = {v: a for p in shifted for v, a in p.phi.items()}
    order = tuple(v for p in shifted for v in p.order)
    target = None
    if all(p.target is not None for p in shifted):
        target = shifted[0].target
        for p in shifted[1:]:
            target = np.kron(target, p.target)
    return MeasurementPattern(base, graph, phi, deps, order, target)


def compose_patterns(fragments) -> MeasurementPattern:
    """Sequential composition: later fragments' inputs are glued onto earlier outputs.

    The glued boundary vertex keeps the earlier fragment's id; the earlier
    fragment's output byproduct sets become extra dependencies of the
    boundary vertex's measurement.
    """
    frags = list(fragments)
    if not frags:
        raise PatternError("empty composition")
    acc = _prefix_pattern(frags[0], "s0.")
    for step, nxt in enumerate(frags[1:], start=1):
        nxt = _prefix_pattern(nxt, f"s{step}.")
        if len(acc.graph.outputs) != len(nxt.graph.inputs):
            raise PatternError("fragment wire counts do not match")
        rename = dict(zip(nxt.graph.inputs, acc.graph.outputs))
        for v in nxt.graph.vertices:
            if "~" in v:
                u, w = v.split("~")
                if u in rename or w in rename:
                    rename[v] = f"{rename.get(u, u)}~{rename.get(w, w)}"
        nxt = _relabel_pattern(nxt, rename)

        col_off = 1 + max(c for _, c in acc.base.coords.values())
        gcol_off = 1 + max(c for _, c in acc.graph.coords.values())
        boundary = set(acc.graph.outputs)

        def merge_coords(old_coords, new_coords, off):
            merged = dict(old_coords)
            for v, (r, c) in new_coords.items():
                if v not in boundary:
                    merged[v] = (r, c + off)
            return merged

        base = make_graph(
            list(acc.base.vertices) + [v for v in nxt.base.vertices if v not in boundary],
            list(acc.base.edges) + list(nxt.base.edges),
            acc.base.inputs, nxt.base.outputs,
            merge_coords(acc.base.coords, nxt.base.coords, col_off))
        graph = make_graph(
            list(acc.graph.vertices) + [v for v in nxt.graph.vertices if v not in boundary],
            list(acc.graph.edges) + list(nxt.graph.edges),
            acc.graph.inputs, nxt.graph.outputs,
            merge_coords(acc.graph.coords, nxt.graph.coords, gcol_off))
        x_deps = dict(acc.deps.x_deps)
        z_deps = dict(acc.deps.z_deps)
        for v in nxt.graph.vertices:
            nx = nxt.deps.x_deps.get(v, frozenset())
            nz = nxt.deps.z_deps.get(v, frozenset())
            if v in boundary:  # glued wire qubit: earlier byproducts feed its angle
                x_deps[v] = nx | x_deps.get(v, frozenset())
                z_deps[v] = nz | z_deps.get(v, frozenset())
            else:
                x_deps[v] = nx
                z_deps[v] = nz
        phi = dict(acc.phi)
        phi.update(nxt.phi)
        order = tuple(acc.order) + tuple(nxt.order)
        target = None
        if acc.target is not None and nxt.target is not None:
            target = nxt.target @ acc.target
        acc = MeasurementPattern(base, graph, phi, deps=DependencySets(x_deps, z_deps),
                                 order=order, target=target)
    return acc


# ---------------------------------------------------------------------------
# DT(G) measurement order


@dataclass(frozen=True)
class DtgOrder:
    qubits: tuple  # every measured DT qubit, grouped by base-location in pattern order

    def __iter__(self):
        return iter(self.qubits)


def dtg_measurement_order(dtg: DtgGraph, pattern: MeasurementPattern,
                          rng: np.random.Generator) -> DtgOrder:
    """Base-locations follow the pattern order; slots inside each set are shuffled."""
    out = []
    for loc in pattern.order:
        ids = list(dtg.location_qubits(loc))
        rng.shuffle(ids)
        out.extend(ids)
    return DtgOrder(tuple(out))
