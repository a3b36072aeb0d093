"""Base graphs, dotted graphs, dotted triple-graphs, trap-colourings and flows.

Vertex ids are strings throughout.  A base graph carries an explicit layer
embedding (row, column per vertex) because the whole artifact is restricted
to layered path/grid-like graphs where the canonical row-preserving flow is
defined.  Dotting an edge (u, w) produces the vertex id "u~w"; the vertices
of the dotted graph D(G) double as the base-location labels of the dotted
triple-graph DT(G).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np


class GraphError(Exception):
    pass


class Colour(enum.Enum):
    WHITE = "white"
    BLACK = "black"
    GREEN = "green"
    RED = "red"
    BLUE = "blue"


def edge_key(u: str, w: str, order: dict) -> tuple:
    """Canonical (u, w) ordering of an undirected edge by vertex position."""
    return (u, w) if order[u] <= order[w] else (w, u)


@dataclass(frozen=True)
class BaseGraph:
    vertices: tuple
    edges: frozenset
    inputs: tuple
    outputs: tuple
    coords: dict  # vertex -> (row, col)

    def __post_init__(self):
        index = {v: i for i, v in enumerate(self.vertices)}
        if len(index) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        for u, w in self.edges:
            if u not in index or w not in index:
                raise GraphError(f"edge ({u},{w}) references unknown vertex")
            if u == w:
                raise GraphError(f"self-loop at {u}")
            if edge_key(u, w, index) != (u, w):
                raise GraphError(f"edge ({u},{w}) not canonically ordered")
        for v in itertools.chain(self.inputs, self.outputs):
            if v not in index:
                raise GraphError(f"io location {v} not a vertex")
        if set(self.coords) != set(self.vertices):
            raise GraphError("coords must cover exactly the vertex set")
        both = set(self.inputs) & set(self.outputs)
        if both and not self.single_layer():
            raise GraphError("inputs and outputs overlap on a multi-layer graph")

    def single_layer(self) -> bool:
        cols = {self.coords[v][1] for v in self.vertices}
        return len(cols) <= 1

    @property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def neighbours(self, v: str) -> tuple:
        out = []
        for u, w in sorted(self.edges, key=lambda e: (self.index[e[0]], self.index[e[1]])):
            if u == v:
                out.append(w)
            elif w == v:
                out.append(u)
        return tuple(out)

    def degree(self, v: str) -> int:
        return len(self.neighbours(v))

    @property
    def max_degree(self) -> int:
        if not self.vertices:
            raise GraphError("empty graph")
        return max((self.degree(v) for v in self.vertices), default=0)

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=lambda e: (self.index[e[0]], self.index[e[1]]))


def make_graph(vertices, edges, inputs, outputs, coords) -> BaseGraph:
    order = {v: i for i, v in enumerate(vertices)}
    canon = frozenset(edge_key(u, w, order) for u, w in edges)
    return BaseGraph(tuple(vertices), canon, tuple(inputs), tuple(outputs), dict(coords))


def path_graph(n: int, prefix: str = "v", row: int = 0) -> BaseGraph:
    """A single computation wire: path of n vertices, first input, last output."""
    if n < 1:
        raise GraphError("path needs at least one vertex")
    vs = [f"{prefix}{i}" for i in range(n)]
    es = [(vs[i], vs[i + 1]) for i in range(n - 1)]
    coords = {v: (row, i) for i, v in enumerate(vs)}
    return make_graph(vs, es, [vs[0]], [vs[-1]], coords)


def grid_graph(rows: int, cols: int, verticals=(), prefix: str = "g") -> BaseGraph:
    """Rows stacked paths with optional vertical rungs at given (row, col).

    A vertical (r, c) joins (r, c) and (r+1, c).  Inputs are column 0,
    outputs the last column.
    """
    name = {}
    vs = []
    for r in range(rows):
        for c in range(cols):
            v = f"{prefix}{r}_{c}"
            name[(r, c)] = v
            vs.append(v)
    es = []
    for r in range(rows):
        for c in range(cols - 1):
            es.append((name[(r, c)], name[(r, c + 1)]))
    for (r, c) in verticals:
        es.append((name[(r, c)], name[(r + 1, c)]))
    coords = {name[(r, c)]: (r, c) for r in range(rows) for c in range(cols)}
    ins = [name[(r, 0)] for r in range(rows)]
    outs = [name[(r, cols - 1)] for r in range(rows)]
    return make_graph(vs, es, ins, outs, coords)


def disjoint_union(graphs) -> BaseGraph:
    """Stack graphs as independent wires (rows offset to stay distinct)."""
    vs, es, ins, outs, coords = [], [], [], [], {}
    row_off = 0
    for g in graphs:
        if set(vs) & set(g.vertices):
            raise GraphError("disjoint_union needs distinct vertex ids")
        vs.extend(g.vertices)
        es.extend(g.edges)
        ins.extend(g.inputs)
        outs.extend(g.outputs)
        for v, (r, c) in g.coords.items():
            coords[v] = (r + row_off, c)
        row_off += 1 + max(r for r, _ in g.coords.values()) if g.coords else 1
    return make_graph(vs, es, ins, outs, coords)


# ---------------------------------------------------------------------------
# Dotted graph D(G)


def dotted_graph(base: BaseGraph) -> BaseGraph:
    """Replace every edge with a new degree-2 vertex "u~w"."""
    vs = list(base.vertices)
    coords = dict(base.coords)
    # double the embedding so edge-vertices land between their endpoints
    coords = {v: (2 * r, 2 * c) for v, (r, c) in coords.items()}
    es = []
    for u, w in base.sorted_edges():
        m = f"{u}~{w}"
        vs.append(m)
        (ru, cu), (rw, cw) = coords[u], coords[w]
        coords[m] = ((ru + rw) // 2, (cu + cw) // 2)
        es.append((u, m))
        es.append((m, w))
    return make_graph(vs, es, base.inputs, base.outputs, coords)


# ---------------------------------------------------------------------------
# Dotted triple-graph DT(G)


@dataclass(frozen=True)
class DtgVertex:
    id: str
    kind: str            # "primary" | "added"
    base_location: str   # base vertex id, or "u~w" for a base edge
    slot: tuple          # (k,) for primary, (i, j) for added


@dataclass
class DtgGraph:
    base: BaseGraph
    vertices: list               # DtgVertex, in the standard labelling order
    edges: frozenset             # pairs of DT vertex ids
    primary_sets: dict           # base vertex -> tuple of 3 primary ids
    added_sets: dict             # "u~w" -> tuple of 9 added ids
    neighbours: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.neighbours:
            nbr = {v.id: [] for v in self.vertices}
            for a, b in sorted(self.edges):
                nbr[a].append(b)
                nbr[b].append(a)
            self.neighbours = {k: tuple(sorted(v)) for k, v in nbr.items()}

    @property
    def vertex_ids(self) -> tuple:
        return tuple(v.id for v in self.vertices)

    @property
    def by_id(self) -> dict:
        return {v.id: v for v in self.vertices}

    def location_qubits(self, loc: str) -> tuple:
        if loc in self.primary_sets:
            return self.primary_sets[loc]
        return self.added_sets[loc]

    @property
    def locations(self) -> tuple:
        return tuple(self.primary_sets) + tuple(self.added_sets)

    def n_qubits(self) -> int:
        return len(self.vertices)


def primary_id(v: str, k: int) -> str:
    return f"p:{v}:{k}"

def added_id(u: str, w: str, i: int, j: int) -> str:
    return f"a:{u}~{w}:{i}:{j}"


def dotted_triple_graph(base: BaseGraph) -> DtgGraph:
    """Three primary vertices per base vertex, nine added per base edge.

    The standard labelling (shared by client and server) lists each base
    vertex's primaries in slot order, then each base edge's added vertices
    in (left-slot, right-slot) order.
    """
    if not base.vertices:
        raise GraphError("empty base graph")
    verts = []
    primary_sets = {}
    for v in base.vertices:
        ids = tuple(primary_id(v, k) for k in (1, 2, 3))
        primary_sets[v] = ids
        for k in (1, 2, 3):
            verts.append(DtgVertex(ids[k - 1], "primary", v, (k,)))
    added_sets = {}
    edges = set()
    for u, w in base.sorted_edges():
        loc = f"{u}~{w}"
        ids = []
        for i in (1, 2, 3):
            for j in (1, 2, 3):
                aid = added_id(u, w, i, j)
                ids.append(aid)
                verts.append(DtgVertex(aid, "added", loc, (i, j)))
                edges.add(tuple(sorted((primary_id(u, i), aid))))
                edges.add(tuple(sorted((aid, primary_id(w, j)))))
        added_sets[loc] = tuple(ids)
    dtg = DtgGraph(base, verts, frozenset(edges), primary_sets, added_sets)
    n, c = len(base.vertices), base.max_degree
    if dtg.n_qubits() > 3 * n * (3 * c + 1):
        raise GraphError("dotted triple-graph exceeded its 3N(3c+1) size bound")
    return dtg


# ---------------------------------------------------------------------------
# Trap-colouring


@dataclass
class TrapColouring:
    colour: dict  # DT vertex id -> Colour

    def computation_colour(self, dtg: DtgGraph, vid: str) -> bool:
        return self.colour[vid] in (Colour.GREEN, Colour.BLUE)


_PRIMARY_ROLES = ("computation", "white", "black")


def sample_trap_colouring(dtg: DtgGraph, rng: np.random.Generator) -> TrapColouring:
    """Choose the colour permutation of each primary set independently and uniformly."""
    colour = {}
    perms = list(itertools.permutations(_PRIMARY_ROLES))
    is_input = set(dtg.base.inputs)
    for v in dtg.base.vertices:
        perm = perms[int(rng.integers(len(perms)))]
        for k, role in zip((1, 2, 3), perm):
            if role == "computation":
                colour[primary_id(v, k)] = Colour.BLUE if v in is_input else Colour.GREEN
            elif role == "white":
                colour[primary_id(v, k)] = Colour.WHITE
            else:
                colour[primary_id(v, k)] = Colour.BLACK
    _colour_added(dtg, colour)
    return TrapColouring(colour)


def _colour_added(dtg: DtgGraph, colour: dict):
    for loc, ids in dtg.added_sets.items():
        u, w = loc.split("~")
        for aid in ids:
            vtx = dtg.by_id[aid]
            i, j = vtx.slot
            cu, cw = colour[primary_id(u, i)], colour[primary_id(w, j)]
            eu = Colour.GREEN if cu is Colour.BLUE else cu
            ew = Colour.GREEN if cw is Colour.BLUE else cw
            colour[aid] = eu if eu is ew else Colour.RED


@dataclass
class ColouringViolation:
    condition: str
    vertices: tuple
    message: str


def validate_colouring(dtg: DtgGraph, col: TrapColouring) -> list:
    """Report every violated trap-colouring condition; empty iff valid."""
    out = []
    cmap = col.colour
    missing = [v.id for v in dtg.vertices if v.id not in cmap]
    if missing:
        out.append(ColouringViolation("domain", tuple(missing), "uncoloured vertices"))
        return out
    is_input = set(dtg.base.inputs)
    for v, ids in dtg.primary_sets.items():
        cols = [cmap[i] for i in ids]
        allowed = {Colour.WHITE, Colour.BLACK, Colour.BLUE if v in is_input else Colour.GREEN}
        for vid, c in zip(ids, cols):
            if c not in allowed:
                cond = "(v)" if c in (Colour.BLUE, Colour.GREEN) else "(i)"
                out.append(ColouringViolation(cond, (vid,), f"primary colour {c.value} not allowed at {v}"))
        counts = {c: cols.count(c) for c in allowed}
        if any(n != 1 for n in counts.values()):
            out.append(ColouringViolation("(iii)", tuple(ids), f"primary set at {v} lacks one of each colour"))
    for loc, ids in dtg.added_sets.items():
        u, w = loc.split("~")
        for aid in ids:
            c = cmap[aid]
            if c is Colour.BLUE:
                out.append(ColouringViolation("(ii)", (aid,), "added vertex coloured blue"))
                continue
            i, j = dtg.by_id[aid].slot
            cu, cw = cmap[primary_id(u, i)], cmap[primary_id(w, j)]
            eu = Colour.GREEN if cu is Colour.BLUE else cu
            ew = Colour.GREEN if cw is Colour.BLUE else cw
            want = eu if eu is ew else Colour.RED
            if c is not want:
                out.append(ColouringViolation("(iv)", (aid,), f"added vertex should be {want.value}, is {c.value}"))
    return out


def dummy_positions(dtg: DtgGraph, col: TrapColouring) -> frozenset:
    """Red vertices, white added vertices, and black primary vertices."""
    bad = validate_colouring(dtg, col)
    if bad:
        raise GraphError(f"invalid colouring: {bad[0].message}")
    dummies = set()
    for v in dtg.vertices:
        c = col.colour[v.id]
        if c is Colour.RED:
            dummies.add(v.id)
        elif c is Colour.WHITE and v.kind == "added":
            dummies.add(v.id)
        elif c is Colour.BLACK and v.kind == "primary":
            dummies.add(v.id)
    return frozenset(dummies)


def qubit_role(dtg: DtgGraph, col: TrapColouring, vid: str, dummies: frozenset | None = None) -> str:
    """One of "computation", "trap", "dummy" for a coloured DT vertex."""
    if dummies is None:
        dummies = dummy_positions(dtg, col)
    if vid in dummies:
        return "dummy"
    c = col.colour[vid]
    if c in (Colour.GREEN, Colour.BLUE):
        return "computation"
    return "trap"


def green_map(dtg: DtgGraph, col: TrapColouring) -> dict:
    """base-location -> its computation (green/blue) qubit id."""
    out = {}
    for v, ids in dtg.primary_sets.items():
        for vid in ids:
            if col.colour[vid] in (Colour.GREEN, Colour.BLUE):
                out[v] = vid
    for loc, ids in dtg.added_sets.items():
        for vid in ids:
            if col.colour[vid] is Colour.GREEN:
                out[loc] = vid
    return out


def broken_subgraphs(dtg: DtgGraph, col: TrapColouring) -> dict:
    """Vertex sets and surviving edges per colour class after dummy removal."""
    dummies = dummy_positions(dtg, col)
    keep = [v.id for v in dtg.vertices if v.id not in dummies]
    kept_edges = [e for e in dtg.edges if e[0] not in dummies and e[1] not in dummies]
    def cls(vid):
        c = col.colour[vid]
        return "green" if c in (Colour.GREEN, Colour.BLUE) else c.value
    out = {"green": (set(), set()), "white": (set(), set()), "black": (set(), set())}
    for vid in keep:
        out[cls(vid)][0].add(vid)
    for a, b in kept_edges:
        ca, cb = cls(a), cls(b)
        if ca == cb:
            out[ca][1].add((a, b))
        else:  # cannot happen for a valid colouring
            raise GraphError(f"cross-colour edge survived the break: {(a, b)}")
    return out


# ---------------------------------------------------------------------------
# Flow and dependency sets (on a layered graph; typically D(G))


@dataclass(frozen=True)
class Flow:
    f: dict        # measured vertex -> successor (partial: bridge vertices absent)
    order: tuple   # total measurement order over non-output vertices

    def inverse(self) -> dict:
        return {w: v for v, w in self.f.items()}


def compute_flow(graph: BaseGraph) -> Flow:
    """Canonical row-preserving flow: each non-output vertex maps to its
    same-row neighbour in the next occupied column.

    Fails when the graph is not layered this way (e.g. dotted vertical
    bridges, which carry no causal flow and are handled by gadget-specific
    dependency tables in the pattern compiler).
    """
    f = {}
    outputs = set(graph.outputs)
    for v in graph.vertices:
        if v in outputs:
            continue
        r, c = graph.coords[v]
        succ = [w for w in graph.neighbours(v)
                if graph.coords[w][0] == r and graph.coords[w][1] > c]
        if len(succ) != 1:
            raise GraphError(f"no row-preserving flow successor for {v}")
        f[v] = min(succ, key=lambda w: graph.coords[w][1])
    targets = list(f.values())
    if len(set(targets)) != len(targets):
        raise GraphError("flow is not injective on this graph")
    if set(targets) & set(graph.inputs):
        raise GraphError("flow maps onto an input")
    order = tuple(sorted((v for v in graph.vertices if v not in outputs),
                         key=lambda v: (graph.coords[v][1], graph.coords[v][0])))
    flow = Flow(f, order)
    problems = validate_flow(graph, flow)
    if problems:
        raise GraphError(f"canonical flow violates flow conditions: {problems[0]}")
    return flow


def validate_flow(graph: BaseGraph, flow: Flow) -> list:
    """Check i < f(i), f(i) ~ i, and j >= i for all j in N(f(i)) \\ {i}."""
    pos = {v: i for i, v in enumerate(flow.order)}
    for o in graph.outputs:
        pos.setdefault(o, len(pos) + len(graph.vertices))
    problems = []
    for v, w in flow.f.items():
        if tuple(sorted((v, w), key=lambda x: graph.index[x])) not in graph.edges:
            problems.append(f"f({v})={w} is not a neighbour")
        if pos[v] >= pos[w]:
            problems.append(f"{v} does not precede f({v})={w}")
        for j in graph.neighbours(w):
            if j != v and pos[j] < pos[v]:
                problems.append(f"neighbour {j} of f({v})={w} precedes {v}")
    return problems


@dataclass(frozen=True)
class DependencySets:
    x_deps: dict   # vertex -> frozenset of vertices (XOR semantics)
    z_deps: dict   # vertex -> frozenset

    def past(self, v: str) -> frozenset:
        return self.x_deps.get(v, frozenset()) | self.z_deps.get(v, frozenset())


def dependency_sets(graph: BaseGraph, flow: Flow) -> DependencySets:
    """X_i = {f^-1(i)}; Z_i = {j : f(j) in N(i) \\ {f(i)}}.

    Output vertices get the same rule with no f(i) to exclude; their sets are
    the final byproduct dependencies.
    """
    inv = flow.inverse()
    x_deps, z_deps = {}, {}
    for v in graph.vertices:
        x_deps[v] = frozenset({inv[v]}) if v in inv else frozenset()
        nv = set(graph.neighbours(v))
        excl = flow.f.get(v)
        z = {j for j, t in flow.f.items() if t in nv and t != excl and j != v}
        z_deps[v] = frozenset(z)
    return DependencySets(x_deps, z_deps)


# ---------------------------------------------------------------------------
# Extended past on DT(G)


def _green_at(loc: str, greens: dict) -> str:
    if "~" in loc:
        u, w = loc.split("~")
        return added_id(u, w, greens[u], greens[w])
    return primary_id(loc, greens[loc])


def _base_vertices_of(loc: str) -> tuple:
    return tuple(loc.split("~")) if "~" in loc else (loc,)


def extended_past(dtg: DtgGraph, deps: DependencySets, qubit: str) -> frozenset:
    """All DT qubits that are in the past of `qubit` under some trap-colouring.

    Only the green-slot choices of the base vertices underlying the qubit's
    own base-location and its dependency locations can matter, so those are
    enumerated locally instead of over all global colourings.
    """
    vtx = dtg.by_id[qubit]
    loc = vtx.base_location
    past_locs = sorted(deps.past(loc))
    if not past_locs:
        return frozenset()
    relevant = []
    for l in (loc, *past_locs):
        for b in _base_vertices_of(l):
            if b not in relevant:
                relevant.append(b)
    out = set()
    for slots in itertools.product((1, 2, 3), repeat=len(relevant)):
        greens = dict(zip(relevant, slots))
        if vtx.kind == "primary":
            if greens[loc] != vtx.slot[0]:
                continue
        else:
            u, w = loc.split("~")
            if (greens[u], greens[w]) != vtx.slot:
                continue
        for l in past_locs:
            out.add(_green_at(l, greens))
    return frozenset(out)


def extended_past_bruteforce(dtg: DtgGraph, deps: DependencySets, qubit: str) -> frozenset:
    """Oracle: the same union computed over every global green-slot assignment."""
    vtx = dtg.by_id[qubit]
    loc = vtx.base_location
    past_locs = sorted(deps.past(loc))
    base_vs = list(dtg.base.vertices)
    out = set()
    for slots in itertools.product((1, 2, 3), repeat=len(base_vs)):
        greens = dict(zip(base_vs, slots))
        if vtx.kind == "primary":
            if greens[loc] != vtx.slot[0]:
                continue
        else:
            u, w = loc.split("~")
            if (greens[u], greens[w]) != vtx.slot:
                continue
        for l in past_locs:
            out.add(_green_at(l, greens))
    return frozenset(out)


def past_under_colouring(dtg: DtgGraph, deps: DependencySets, col: TrapColouring, qubit: str) -> frozenset:
    """The actual past of `qubit` under a concrete colouring (empty unless green)."""
    c = col.colour[qubit]
    if c not in (Colour.GREEN, Colour.BLUE):
        return frozenset()
    greens = green_map(dtg, col)
    loc = dtg.by_id[qubit].base_location
    return frozenset(greens[l] for l in deps.past(loc))


# ---------------------------------------------------------------------------
# Text serialization


def graph_to_text(g: BaseGraph) -> str:
    lines = ["# layered base graph"]
    for v in g.vertices:
        r, c = g.coords[v]
        tags = []
        if v in g.inputs:
            tags.append("input")
        if v in g.outputs:
            tags.append("output")
        lines.append(" ".join(["vertex", v, "row", str(r), "col", str(c)] + tags))
    for u, w in g.sorted_edges():
        lines.append(f"edge {u} {w}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> BaseGraph:
    vs, es, ins, outs, coords = [], [], [], [], {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "vertex":
            if len(parts) < 6 or parts[2] != "row" or parts[4] != "col":
                raise GraphError(f"line {ln}: expected 'vertex ID row R col C [input] [output]'")
            v = parts[1]
            vs.append(v)
            coords[v] = (int(parts[3]), int(parts[5]))
            if "input" in parts[6:]:
                ins.append(v)
            if "output" in parts[6:]:
                outs.append(v)
        elif parts[0] == "edge":
            if len(parts) != 3:
                raise GraphError(f"line {ln}: expected 'edge U W'")
            es.append((parts[1], parts[2]))
        else:
            raise GraphError(f"line {ln}: unknown record {parts[0]!r}")
    if not vs:
        raise GraphError("no vertices in graph description")
    return make_graph(vs, es, ins, outs, coords)


def dtg_to_text(dtg: DtgGraph, col: TrapColouring | None = None) -> str:
    lines = ["# dotted triple-graph"]
    for v in dtg.vertices:
        rec = ["dtvertex", v.id, "kind", v.kind, "loc", v.base_location]
        if col is not None:
            rec += ["colour", col.colour[v.id].value]
        lines.append(" ".join(rec))
    for a, b in sorted(dtg.edges):
        lines.append(f"dtedge {a} {b}")
    return "\n".join(lines) + "\n"
