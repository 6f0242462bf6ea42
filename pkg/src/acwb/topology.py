"""Invariant-level calculus of gluing, puncturing, cutting and capping on a
tracked pair (total space, sticky end).

A TrackedSpace does not carry a geometric model.  It keeps, per base piece
(a connected component of the starting handle structure), an Euler ledger,
and threads boundary-circle identities through the operations:

* glue        : chi(M) -1, chi(S) -1; merges components (tracking a vertical
                annulus when they were distinct); joins two circles into one,
                or splits one circle into two when both sites lie on it.
* puncture    : chi(M) -1, chi(S) -1; one new boundary circle.
* cut_bigon   : chi(M) +1, chi(S) +1; splits or joins circles; may split a
                component (declared, verified downstream by reconstruction).
* cut_quad    : chi(M) +1, chi(S) +1; two arc cuts plus one included disc
                copy, gated by a homology check on the chosen side.
* cap_off     : caps every open circle; chi(M) +1 and chi(S) +1 per cap.

Capped circles are bookkept by which pieces they touch, so that cutting the
tracked annuli re-caps each side correctly.  Effects that cannot be derived
at this level (component splits of cuts) are declared inputs, checked later
against freshly built structures.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .handles import (
    HandleStructure,
    _island_components,
    boundary_circles,
    sticky_end,
    structure_components,
)
from .words import Presentation, snf_diagonal, standard_presentation
from . import handles as _handles


class StaleSiteError(ValueError):
    pass


class SamePointError(ValueError):
    pass


class HomologyCheckFailed(ValueError):
    def __init__(self, side: str):
        super().__init__(f"cut side {side!r} is not even a homological product")
        self.side = side


LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class SpaceInvariants:
    euler_m: int
    euler_s: int
    components: int
    boundary_circles_s: int


@dataclass(frozen=True)
class Site:
    component: int
    circle: int
    point: int = 0


@dataclass(frozen=True)
class QuadGate:
    pre: Presentation
    left: Presentation
    right: Presentation


@dataclass(frozen=True)
class BigonSplit:
    """Declared effect of a component-splitting bigon: the pieces moved to the
    new component, values carved out of the anchor piece for a fresh piece,
    and the circles that travel with it."""

    moved_pieces: frozenset
    carve_euler_m: int
    carve_euler_s: int
    carve_s_count: int
    moved_circles: frozenset


@dataclass(frozen=True)
class GlueOp:
    x: Site
    y: Site


@dataclass(frozen=True)
class PunctureOp:
    component: int
    near_circle: int
    piece_hint: int | None = None


@dataclass(frozen=True)
class CutBigonOp:
    component: int
    circle_a: int
    circle_b: int
    declared_split: bool = False
    split: BigonSplit | None = None


@dataclass(frozen=True)
class CutQuadOp:
    component: int
    cut1: tuple[int, int]
    cut2: tuple[int, int]
    band: tuple[int, int]
    side: str = LEFT
    gate: QuadGate | None = None


@dataclass(frozen=True)
class CapOp:
    circle: int


@dataclass(frozen=True)
class CutAnnulusOp:
    annulus: int


TopologyOp = GlueOp | PunctureOp | CutBigonOp | CutQuadOp | CapOp | CutAnnulusOp


@dataclass(frozen=True)
class PieceState:
    base_euler_m: int
    base_euler_s: int
    base_s_count: int
    delta_m: int = 0
    delta_s: int = 0
    delta_s_count: int = 0


@dataclass(frozen=True)
class LinkEdge:
    id: int
    kind: str  # "annulus" or "link"
    piece_a: int
    piece_b: int
    delta_m: int
    delta_s: int
    delta_s_count: int


@dataclass(frozen=True)
class CircleRec:
    id: int
    status: str  # "live" | "capped" | "gone"
    pieces: frozenset
    s_id: int
    anchor: int


@dataclass(frozen=True)
class PunctureRec:
    id: int
    circle: int
    anchor: int


@dataclass(frozen=True)
class ComponentView:
    id: int
    pieces: frozenset
    euler_m: int
    euler_s: int
    live_circles: tuple[int, ...]
    capped_circles: tuple[int, ...]
    s_count: int
    annuli: tuple[int, ...]


@dataclass(frozen=True)
class TrackedSpace:
    base: HandleStructure | None
    history: tuple[TopologyOp, ...]
    pieces: tuple[PieceState, ...]
    edges: tuple[LinkEdge, ...]
    circles: tuple[CircleRec, ...]
    punctures: tuple[PunctureRec, ...]
    s_parent: tuple[int, ...]
    invariants: SpaceInvariants = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        asm = _assemble(self)
        object.__setattr__(self, "_asm", asm)
        if self.invariants is None:
            object.__setattr__(self, "invariants", asm.totals)

    # -- queries ------------------------------------------------------------

    def components(self) -> tuple[ComponentView, ...]:
        return self._asm.views

    def component_of_circle(self, circle: int) -> int:
        rec = self.circles[circle]
        return self._asm.piece_component[next(iter(rec.pieces))]

    def circle(self, circle_id: int) -> CircleRec:
        if circle_id < 0 or circle_id >= len(self.circles):
            raise StaleSiteError(f"unknown circle {circle_id}")
        return self.circles[circle_id]

    def tracked_annuli(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges if e.kind == "annulus")

    def undone_punctures(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.punctures if self.circles[p.circle].status == "capped")


def _s_find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


class _Assembly:
    __slots__ = ("totals", "piece_component", "_ts", "_views")

    def __init__(self, totals, piece_component, ts):
        self.totals = totals
        self.piece_component = piece_component
        self._ts = ts
        self._views = None

    @property
    def views(self) -> tuple[ComponentView, ...]:
        if self._views is None:
            self._views = _build_views(self._ts, self.piece_component)
        return self._views


def _assemble(ts: TrackedSpace) -> _Assembly:
    n = len(ts.pieces)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in ts.edges:
        a, b = find(e.piece_a), find(e.piece_b)
        if a != b:
            parent[a] = b

    roots = sorted({find(i) for i in range(n)})
    index = {r: i for i, r in enumerate(roots)}
    piece_component = [index[find(i)] for i in range(n)]

    euler_m = euler_s = 0
    live = 0
    for piece in ts.pieces:
        euler_m += piece.base_euler_m + piece.delta_m
        euler_s += piece.base_euler_s + piece.delta_s
    for e in ts.edges:
        euler_m += e.delta_m
        euler_s += e.delta_s
    for rec in ts.circles:
        if rec.status == "live":
            if len(rec.pieces) > 1:
                comps = {piece_component[p] for p in rec.pieces}
                if len(comps) != 1:
                    raise StaleSiteError(f"live circle {rec.id} spans components")
            live += 1
        elif rec.status == "capped":
            # a capped circle contributes one cap to every component it touches
            if len(rec.pieces) == 1:
                caps = 1
            else:
                caps = len({piece_component[p] for p in rec.pieces})
            euler_m += caps
            euler_s += caps

    totals = SpaceInvariants(
        euler_m=euler_m,
        euler_s=euler_s,
        components=len(roots),
        boundary_circles_s=live,
    )
    return _Assembly(totals, piece_component, ts)


def _build_views(ts: TrackedSpace, piece_component: list[int]) -> tuple[ComponentView, ...]:
    n_comp = max(piece_component) + 1 if piece_component else 0
    euler_m = [0] * n_comp
    euler_s = [0] * n_comp
    s_count = [0] * n_comp
    live: list[list[int]] = [[] for _ in range(n_comp)]
    capped: list[list[int]] = [[] for _ in range(n_comp)]
    annuli: list[list[int]] = [[] for _ in range(n_comp)]
    members: list[set] = [set() for _ in range(n_comp)]

    for i, piece in enumerate(ts.pieces):
        c = piece_component[i]
        members[c].add(i)
        euler_m[c] += piece.base_euler_m + piece.delta_m
        euler_s[c] += piece.base_euler_s + piece.delta_s
        s_count[c] += piece.base_s_count + piece.delta_s_count
    for e in ts.edges:
        c = piece_component[e.piece_a]
        euler_m[c] += e.delta_m
        euler_s[c] += e.delta_s
        s_count[c] += e.delta_s_count
        if e.kind == "annulus":
            annuli[c].append(e.id)
    for rec in ts.circles:
        if rec.status == "gone":
            continue
        comps = {piece_component[p] for p in rec.pieces}
        if rec.status == "live":
            live[comps.pop()].append(rec.id)
        else:
            for c in comps:
                euler_m[c] += 1
                euler_s[c] += 1
                capped[c].append(rec.id)

    return tuple(
        ComponentView(
            id=i,
            pieces=frozenset(members[i]),
            euler_m=euler_m[i],
            euler_s=euler_s[i],
            live_circles=tuple(sorted(live[i])),
            capped_circles=tuple(sorted(capped[i])),
            s_count=s_count[i],
            annuli=tuple(sorted(annuli[i])),
        )
        for i in range(n_comp)
    )


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def from_handle_structure(h: HandleStructure) -> TrackedSpace:
    """Track a freshly built structure.  Circle ids follow the deterministic
    order of handles.boundary_circles on the sticky end."""
    cached = getattr(h, "_tracked", None)
    if cached is not None:
        return cached
    comps = structure_components(h)
    piece_of_beam = {}
    for pi, comp in enumerate(comps):
        for b in comp["beams"]:
            piece_of_beam[b] = pi

    g = sticky_end(h)
    roots = _island_components(g)
    s_ids = {}
    for isl in range(g.island_count):
        s_ids.setdefault(roots[isl], len(s_ids))
    piece_s_counts = [0] * len(comps)
    seen_roots = set()
    for isl in range(g.island_count):
        if roots[isl] not in seen_roots:
            seen_roots.add(roots[isl])
            piece_s_counts[piece_of_beam[isl // 2]] += 1

    ends = g.band_ends()
    circles = []
    circle_list = boundary_circles(g)
    for cid, circle in enumerate(circle_list):
        pt = next(iter(circle))
        isl = pt[1] if pt[0] == "island" else ends[pt[0][0]][pt[0][1]][0]
        piece = piece_of_beam[isl // 2]
        circles.append(
            CircleRec(cid, "live", frozenset({piece}), s_ids[roots[isl]], piece)
        )

    pieces = tuple(
        PieceState(comp["euler_m"], comp["euler_s"], piece_s_counts[i])
        for i, comp in enumerate(comps)
    )
    ts = TrackedSpace(
        base=h,
        history=(),
        pieces=pieces,
        edges=(),
        circles=tuple(circles),
        punctures=(),
        s_parent=tuple(range(len(s_ids))),
    )
    object.__setattr__(h, "_tracked", ts)
    return ts


def standard_pieces(n: int) -> TrackedSpace:
    """The tracked structure of the standard presentation of rank n."""
    return from_handle_structure(
        _handles.build_handle_structure(standard_presentation(n))
    )


# ---------------------------------------------------------------------------
# Internal builder
# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self, ts: TrackedSpace):
        self.base = ts.base
        self.history = list(ts.history)
        self.pieces = list(ts.pieces)
        self.edges = list(ts.edges)
        self.circles = list(ts.circles)
        self.punctures = list(ts.punctures)
        self.s_parent = list(ts.s_parent)
        self._pc = ts._asm.piece_component

    def freeze(self) -> TrackedSpace:
        return TrackedSpace(
            base=self.base,
            history=tuple(self.history),
            pieces=tuple(self.pieces),
            edges=tuple(self.edges),
            circles=tuple(self.circles),
            punctures=tuple(self.punctures),
            s_parent=tuple(self.s_parent),
        )

    def current_pc(self) -> list[int]:
        """Piece -> component index for the builder's current state."""
        if self._pc is None:
            n = len(self.pieces)
            parent = list(range(n))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for e in self.edges:
                a, b = find(e.piece_a), find(e.piece_b)
                if a != b:
                    parent[a] = b
            roots = sorted({find(i) for i in range(n)})
            index = {r: i for i, r in enumerate(roots)}
            self._pc = [index[find(i)] for i in range(n)]
        return self._pc

    def live_circle(self, cid: int) -> CircleRec:
        if cid < 0 or cid >= len(self.circles):
            raise StaleSiteError(f"unknown circle {cid}")
        rec = self.circles[cid]
        if rec.status != "live":
            raise StaleSiteError(f"circle {cid} is {rec.status}")
        return rec

    def check_site(self, s: Site) -> CircleRec:
        rec = self.live_circle(s.circle)
        comp = self.current_pc()[rec.anchor]
        if comp != s.component:
            raise StaleSiteError(
                f"circle {s.circle} is in component {comp}, not {s.component}"
            )
        return rec

    def piece_delta(self, piece: int, dm: int = 0, ds: int = 0, dsc: int = 0):
        p = self.pieces[piece]
        self.pieces[piece] = PieceState(
            p.base_euler_m,
            p.base_euler_s,
            p.base_s_count,
            p.delta_m + dm,
            p.delta_s + ds,
            p.delta_s_count + dsc,
        )

    def new_circle(self, pieces: frozenset, s_id: int, anchor: int) -> int:
        cid = len(self.circles)
        self.circles.append(CircleRec(cid, "live", pieces, s_id, anchor))
        return cid

    def retire(self, cid: int, status: str = "gone"):
        self.circles[cid] = replace(self.circles[cid], status=status)

    def s_union(self, a: int, b: int) -> bool:
        ra, rb = _s_find(self.s_parent, a), _s_find(self.s_parent, b)
        if ra == rb:
            return False
        self.s_parent[ra] = rb
        return True

    # shared surface surgery: attach a band between two boundary circles
    def add_band(self, rec_x: CircleRec, rec_y: CircleRec, anchor_x: int, anchor_y: int,
                 dm: int, ds: int, kind_if_cross: str) -> tuple[int, ...]:
        merged_s = self.s_union(rec_x.s_id, rec_y.s_id)
        dsc = -1 if merged_s else 0
        if anchor_x != anchor_y:
            self.edges.append(
                LinkEdge(len(self.edges), kind_if_cross, anchor_x, anchor_y, dm, ds, dsc)
            )
            self._pc = None
        else:
            self.piece_delta(anchor_x, dm=dm, ds=ds, dsc=dsc)
        s_root = _s_find(self.s_parent, rec_x.s_id)
        if rec_x.id == rec_y.id:
            # both attachment arcs on one circle: it splits in two
            self.retire(rec_x.id)
            a = self.new_circle(rec_x.pieces | {anchor_x, anchor_y}, s_root, rec_x.anchor)
            b = self.new_circle(rec_x.pieces | {anchor_x, anchor_y}, s_root, rec_x.anchor)
            return (a, b)
        self.retire(rec_x.id)
        self.retire(rec_y.id)
        merged = self.new_circle(
            rec_x.pieces | rec_y.pieces | {anchor_x, anchor_y}, s_root, rec_x.anchor
        )
        return (merged,)

    # shared surface surgery: cut along an arc between two boundary points
    def cut_arc(self, rec_a: CircleRec, rec_b: CircleRec, anchor: int, ds: int = 1) -> tuple[int, ...]:
        self.piece_delta(anchor, ds=ds)
        s_root = _s_find(self.s_parent, rec_a.s_id)
        if rec_a.id == rec_b.id:
            self.retire(rec_a.id)
            a = self.new_circle(rec_a.pieces, s_root, rec_a.anchor)
            b = self.new_circle(rec_a.pieces, s_root, rec_a.anchor)
            return (a, b)
        if _s_find(self.s_parent, rec_a.s_id) != _s_find(self.s_parent, rec_b.s_id):
            raise StaleSiteError("cut arc endpoints lie in different sticky pieces")
        self.retire(rec_a.id)
        self.retire(rec_b.id)
        merged = self.new_circle(rec_a.pieces | rec_b.pieces, s_root, rec_a.anchor)
        return (merged,)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def _apply_glue(b: _Builder, op: GlueOp) -> None:
    x, y = op.x, op.y
    if (x.circle, x.point) == (y.circle, y.point):
        raise SamePointError("glue sites must be distinct points")
    rec_x = b.check_site(x)
    rec_y = b.check_site(y)
    cross = x.component != y.component
    kind = "annulus" if cross else "link"
    b.add_band(rec_x, rec_y, rec_x.anchor, rec_y.anchor, dm=-1, ds=-1, kind_if_cross=kind)
    b.history.append(op)


def _apply_puncture(b: _Builder, op: PunctureOp) -> None:
    rec = b.live_circle(op.near_circle)
    anchor = op.piece_hint if op.piece_hint is not None else rec.anchor
    if not 0 <= anchor < len(b.pieces):
        raise StaleSiteError(f"unknown piece {anchor}")
    if op.component is not None:
        pc = b.current_pc()
        if pc[anchor] != op.component:
            raise StaleSiteError(f"piece {anchor} is not in component {op.component}")
        if pc[rec.anchor] != op.component:
            raise StaleSiteError(
                f"circle {op.near_circle} is in component {pc[rec.anchor]}, not {op.component}"
            )
    b.piece_delta(anchor, dm=-1, ds=-1)
    cid = b.new_circle(frozenset({anchor}), _s_find(b.s_parent, rec.s_id), anchor)
    b.punctures.append(PunctureRec(len(b.punctures), cid, anchor))
    b.history.append(op)


def _apply_cut_bigon(b: _Builder, op: CutBigonOp) -> None:
    rec_a = b.check_site(Site(op.component, op.circle_a))
    rec_b = b.check_site(Site(op.component, op.circle_b))
    anchor = rec_a.anchor
    b.piece_delta(anchor, dm=1)
    b.cut_arc(rec_a, rec_b, anchor)
    if op.declared_split:
        spec = op.split or BigonSplit(frozenset(), 0, 0, 0, frozenset())
        new_piece = len(b.pieces)
        b.pieces.append(
            PieceState(spec.carve_euler_m, spec.carve_euler_s, spec.carve_s_count)
        )
        b._pc = None
        b.piece_delta(anchor, dm=-spec.carve_euler_m, ds=-spec.carve_euler_s,
                      dsc=-spec.carve_s_count)
        moved = set(spec.moved_pieces) | {new_piece}
        pc = b.current_pc()
        for e in b.edges:
            in_a = e.piece_a in moved
            in_b = e.piece_b in moved
            if in_a != in_b and pc[e.piece_a] == op.component:
                raise StaleSiteError("declared split severs a recorded link")
        for cid in spec.moved_circles:
            rec = b.circles[cid]
            if rec.status == "gone":
                raise StaleSiteError(f"moved circle {cid} is gone")
            b.circles[cid] = replace(
                rec, pieces=frozenset({new_piece}), anchor=new_piece
            )
    b.history.append(op)


def _apply_cut_quad(b: _Builder, op: CutQuadOp) -> None:
    if op.side not in (LEFT, RIGHT):
        raise ValueError(f"side must be {LEFT!r} or {RIGHT!r}")
    if op.gate is not None:
        candidate = op.gate.left if op.side == LEFT else op.gate.right
        if snf_diagonal(candidate) != snf_diagonal(op.gate.pre):
            raise HomologyCheckFailed(op.side)
    rec1a = b.check_site(Site(op.component, op.cut1[0]))
    rec1b = b.check_site(Site(op.component, op.cut1[1]))
    anchor = rec1a.anchor
    b.piece_delta(anchor, dm=1)
    b.cut_arc(rec1a, rec1b, anchor)
    rec2a, rec2b = b.live_circle(op.cut2[0]), b.live_circle(op.cut2[1])
    b.cut_arc(rec2a, rec2b, anchor)
    recba, recbb = b.live_circle(op.band[0]), b.live_circle(op.band[1])
    b.add_band(recba, recbb, recba.anchor, recbb.anchor, dm=0, ds=-1, kind_if_cross="link")
    b.history.append(op)


def _apply_cap(b: _Builder, op: CapOp) -> None:
    rec = b.live_circle(op.circle)
    b.retire(rec.id, status="capped")
    b.history.append(op)


_APPLY = {
    GlueOp: _apply_glue,
    PunctureOp: _apply_puncture,
    CutBigonOp: _apply_cut_bigon,
    CutQuadOp: _apply_cut_quad,
    CapOp: _apply_cap,
}


def apply_ops(ts: TrackedSpace, ops) -> TrackedSpace:
    """Apply a sequence of operations, validating each against the evolving
    state, and freeze once at the end."""
    b = _Builder(ts)
    for op in ops:
        handler = _APPLY.get(type(op))
        if handler is None:
            raise ValueError(f"cannot apply {op!r}")
        handler(b, op)
    return b.freeze()


def glue(ts: TrackedSpace, x: Site, y: Site) -> TrackedSpace:
    """Identify neighbourhoods of two boundary points: a boundary-connected
    sum of the pair.  Cross-component glues record a tracked vertical
    annulus."""
    b = _Builder(ts)
    _apply_glue(b, GlueOp(x, y))
    return b.freeze()


def puncture(ts: TrackedSpace, component: int | None, near_circle: int, piece_hint: int | None = None) -> TrackedSpace:
    """Delete a neighbourhood of an arc with exactly one endpoint in S: one
    new boundary circle in the sticky piece of ``near_circle``."""
    b = _Builder(ts)
    _apply_puncture(b, PunctureOp(component, near_circle, piece_hint))
    return b.freeze()


def cut_bigon(
    ts: TrackedSpace,
    component: int,
    circle_a: int,
    circle_b: int,
    declared_split: bool = False,
    split: BigonSplit | None = None,
) -> TrackedSpace:
    """Cut along a disc meeting S in one boundary arc.  Neither disc copy
    joins S.  A declared component split carves a fresh piece out of the
    anchor; the declaration is checked downstream by reconstruction."""
    b = _Builder(ts)
    _apply_cut_bigon(b, CutBigonOp(component, circle_a, circle_b, declared_split, split))
    return b.freeze()


def cut_quad(
    ts: TrackedSpace,
    component: int,
    cut1: tuple[int, int],
    cut2: tuple[int, int],
    band: tuple[int, int],
    side: str = LEFT,
    gate: QuadGate | None = None,
) -> TrackedSpace:
    """Cut along a disc meeting S in two boundary arcs; the copy on the side
    away from the bigon is included back into S.

    The homology gate runs first: the reconstructed presentation of the
    chosen side must leave the abelianization invariants unchanged, otherwise
    the result is not even a homological product and the op fails without
    mutating anything.
    """
    b = _Builder(ts)
    _apply_cut_quad(b, CutQuadOp(component, cut1, cut2, band, side, gate))
    return b.freeze()


def cap_off(ts: TrackedSpace) -> TrackedSpace:
    """Attach a thickened disc along every open boundary circle of S.

    Punctures whose circles get capped are thereby undone.  Idempotent."""
    open_ids = [rec.id for rec in ts.circles if rec.status == "live"]
    if not open_ids:
        return ts
    b = _Builder(ts)
    for cid in open_ids:
        _apply_cap(b, CapOp(cid))
    return b.freeze()


def cut_tracked_annuli(ts: TrackedSpace) -> TrackedSpace:
    """Cut along every tracked vertical annulus at once, undoing the
    corresponding glues and re-capping each side.  Identity when no annuli
    are tracked; requires a fully capped space."""
    annuli = [e for e in ts.edges if e.kind == "annulus"]
    if not annuli:
        return ts
    if any(rec.status == "live" for rec in ts.circles):
        raise ValueError("cut_tracked_annuli requires a fully capped space")
    b = _Builder(ts)
    b.edges = [e for e in b.edges if e.kind != "annulus"]
    b._pc = None
    for e in annuli:
        b.history.append(CutAnnulusOp(e.id))
    return b.freeze()


# ---------------------------------------------------------------------------
# History serialization: one op per line
# ---------------------------------------------------------------------------


def serialize_history(ts: TrackedSpace) -> str:
    lines = []
    for op in ts.history:
        if isinstance(op, GlueOp):
            lines.append(
                f"GLUE {op.x.component} {op.x.circle}:{op.x.point} "
                f"{op.y.component} {op.y.circle}:{op.y.point}"
            )
        elif isinstance(op, PunctureOp):
            comp = "?" if op.component is None else op.component
            lines.append(f"PUNCT {comp} {op.near_circle}")
        elif isinstance(op, CutBigonOp):
            lines.append(
                f"BIGON {op.component} {op.circle_a} {op.circle_b} "
                f"{1 if op.declared_split else 0}"
            )
        elif isinstance(op, CutQuadOp):
            lines.append(
                f"QUAD {op.component} {op.cut1[0]} {op.cut1[1]} "
                f"{op.cut2[0]} {op.cut2[1]} {op.band[0]} {op.band[1]} {op.side}"
            )
        elif isinstance(op, CapOp):
            lines.append(f"CAP {op.circle}")
        elif isinstance(op, CutAnnulusOp):
            lines.append(f"CUTANN {op.annulus}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_history(text: str) -> list[TopologyOp]:
    out: list[TopologyOp] = []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts:
            continue
        op = parts[0]
        if op == "GLUE":
            cx, px, cy, py = parts[1], parts[2], parts[3], parts[4]
            xc, xp = px.split(":")
            yc, yp = py.split(":")
            out.append(GlueOp(Site(int(cx), int(xc), int(xp)), Site(int(cy), int(yc), int(yp))))
        elif op == "PUNCT":
            out.append(PunctureOp(int(parts[1]), int(parts[2])))
        elif op == "BIGON":
            out.append(CutBigonOp(int(parts[1]), int(parts[2]), int(parts[3]), parts[4] == "1"))
        elif op == "QUAD":
            out.append(
                CutQuadOp(
                    int(parts[1]),
                    (int(parts[2]), int(parts[3])),
                    (int(parts[4]), int(parts[5])),
                    (int(parts[6]), int(parts[7])),
                    parts[8],
                )
            )
        elif op == "CAP":
            out.append(CapOp(int(parts[1])))
        elif op == "CUTANN":
            out.append(CutAnnulusOp(int(parts[1])))
        else:
            raise ValueError(f"unknown history line {ln!r}")
    return out
