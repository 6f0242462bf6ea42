"""Compile Andrews-Curtis moves and free cancellations into traces of
topology operations, and verify trace/structure consistency.

Inversion has no topological effect.  Conjugation is one gluing followed by
one puncture.  Right-multiplication by a relator with b bridges is one
gluing followed by b-1 punctures (the glue at the base-point bridges, the
punctures along arcs dual to the discs filling the remaining new bridges).
Cancelling an adjacent inverse pair is a quadrilateral cut (keeping the side
away from the bigon) followed by a bigon cut.

Move compilation places the new strips adjacent to the strips they imitate,
so the resulting structure is one for which the trace is exact; every
boundary-circle argument is read off the actual sticky end, threading a
shadow ribbon graph through each cut so the emitted circle ids match what
the tracked replay assigns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .handles import (
    AttachmentChoice,
    HandleStructure,
    StickyRibbonGraph,
    _island_components,
    boundary_circle_count,
    boundary_circles,
    fast_circle_count,
    bottom_island,
    build_handle_structure,
    structure_component_count,
    circle_lookup,
    reconstruct_presentation,
    sticky_end,
    sticky_graph,
    structure_components,
    top_island,
)
from .moves import (
    ACMove,
    Conjugate,
    Invert,
    MultiplyRight,
    apply_move,
    canonical_form,
    move_target,
)
from .topology import (
    LEFT,
    BigonSplit,
    CutBigonOp,
    CutQuadOp,
    GlueOp,
    PunctureOp,
    QuadGate,
    Site,
    TrackedSpace,
    apply_ops,
    cut_quad,
    from_handle_structure,
)
from .words import Presentation


class NoCancellablePairError(ValueError):
    pass


class EmptyRelatorError(ValueError):
    pass


@dataclass(frozen=True)
class Cancellation:
    relator: int
    position: int


@dataclass(frozen=True)
class TopologyTrace:
    ops: tuple
    move: ACMove | Cancellation


@dataclass(frozen=True)
class ConsistencyReport:
    ok: bool
    compared: dict
    mismatches: tuple[str, ...]


def _orders_as_lists(h: HandleStructure) -> list[list]:
    return [list(order) for order in h.beam_orders]


def _rebuild(p: Presentation, orders: list[list]) -> HandleStructure:
    # trusted construction: the compiler's orders are complete by construction
    from .handles import Plate, Strip

    slot_of = {}
    for order in orders:
        for slot, ref in enumerate(order):
            slot_of[ref] = slot
    plates = []
    for pi, r in enumerate(p.relators):
        strips = tuple(
            Strip(abs(x) - 1, 1 if x > 0 else -1, slot_of[(pi, pos)])
            for pos, x in enumerate(r)
        )
        plates.append(Plate(pi, strips))
    return HandleStructure(p.generator_count, tuple(plates), tuple(tuple(o) for o in orders))


def _piece_of_beam(h: HandleStructure) -> dict[int, int]:
    out = {}
    for pi, comp in enumerate(structure_components(h)):
        for b in comp["beams"]:
            out[b] = pi
    return out


def _closing_bridge_circle(h: HandleStructure, lookup: dict, plate: int) -> int:
    """Circle along the base-point bridge of a plate (its exit-side rail)."""
    L = len(h.plates[plate].strips)
    return lookup[(((plate, L - 1), 0), 0)]


def _insertion_gap_circle(g: StickyRibbonGraph, lookup: dict, island: int) -> int:
    """Circle through the wrap-around corner of an island, where strips
    appended to the beam order will sit."""
    slots = g.island_slots[island]
    if not slots:
        return lookup[("island", island)]
    return lookup[(slots[-1], 1)]


def compile_move(h: HandleStructure, m: ACMove) -> tuple[HandleStructure, TopologyTrace]:
    """Compile one primitive move in concatenation mode: returns the post
    structure (with the adjacency placement) and its topology trace."""
    p = reconstruct_presentation(h)
    p2 = apply_move(p, m, reduce=False)
    for r in p2.relators:
        if not r:
            raise EmptyRelatorError("move produces an empty relator")

    if isinstance(m, Invert):
        i = m.relator - 1
        L = len(p.relators[i])
        orders = [
            [((pi, L - 1 - pos) if pi == i else (pi, pos)) for pi, pos in order]
            for order in _orders_as_lists(h)
        ]
        return _rebuild(p2, orders), TopologyTrace((), m)

    ts = from_handle_structure(h)
    g = sticky_end(h)
    lookup = circle_lookup(boundary_circles(g))
    piece_of_beam = _piece_of_beam(h)

    if isinstance(m, Conjugate):
        i = m.relator - 1
        beam = m.generator - 1
        L = len(p.relators[i])
        shifted = [
            [((pi, pos + 1) if pi == i else (pi, pos)) for pi, pos in order]
            for order in _orders_as_lists(h)
        ]
        # the conjugating pair goes next to each other somewhere on the beam;
        # for s=+1 their loop bridge sits on the Top island and the old
        # base-point bridge is pierced at the Bottom gap, and conversely.
        # Scan the insertion gaps for the one whose glue site reproduces the
        # boundary-circle count of the structure actually built.
        pair = [(i, 0), (i, L + 1)] if m.sign > 0 else [(i, L + 1), (i, 0)]
        base = shifted[beam]
        k = len(base)
        c_y = _closing_bridge_circle(h, lookup, i)
        pre_circles = len(ts.circles)
        bottom_slots = g.island_slots[bottom_island(beam)]
        top_slots = g.island_slots[top_island(beam)]
        post_signs = [tuple(1 if x > 0 else -1 for x in r) for r in p2.relators]
        for gap in range(max(k, 1)):
            orders = [list(o) for o in shifted]
            orders[beam] = base[:gap] + pair + base[gap:]
            if k == 0:
                pierced = bottom_island(beam) if m.sign > 0 else top_island(beam)
                c_x = lookup[("island", pierced)]
            elif m.sign > 0:
                c_x = lookup[(bottom_slots[(gap - 1) % k], 1)]
            else:
                c_x = lookup[(top_slots[k - 1 - gap], 1)]
            post_circles = fast_circle_count(p2.generator_count, post_signs, orders)
            if post_circles == pre_circles + (1 if c_x == c_y else -1) + 1:
                h2 = _rebuild(p2, orders)
                site_x = Site(ts.component_of_circle(c_x), c_x, 0)
                site_y = Site(ts.component_of_circle(c_y), c_y, 1 if c_x == c_y else 0)
                glued_circle = len(ts.circles)  # first circle the glue will create
                punct = PunctureOp(None, glued_circle, piece_of_beam[beam])
                return h2, TopologyTrace((GlueOp(site_x, site_y), punct), m)
        raise RuntimeError(f"no conjugation placement matches the trace for {p.relators} {m}")

    assert isinstance(m, MultiplyRight)
    i, j = m.target - 1, m.source - 1
    L_i, L_j = len(p.relators[i]), len(p.relators[j])
    c_x = _closing_bridge_circle(h, lookup, i)
    c_y = _closing_bridge_circle(h, lookup, j)
    pre_circles = len(ts.circles)
    target_circles = pre_circles + (1 if c_x == c_y else -1) + (L_j - 1)
    post_signs = [tuple(1 if x > 0 else -1 for x in r) for r in p2.relators]
    # each new strip flanks the source strip it copies, on the side its sign
    # dictates; if that ever failed to realize the glue-and-puncture
    # accounting, fall back to scanning the remaining flank choices
    h2 = None
    base_orders = _orders_as_lists(h)
    sign_combo = tuple("after" if x > 0 else "before" for x in p.relators[j])
    candidates = itertools.chain(
        (sign_combo,), itertools.product(("after", "before"), repeat=L_j)
    )
    for combo in candidates:
        orders = []
        for order in base_orders:
            out = []
            for ref in order:
                if ref[0] == j and combo[ref[1]] == "before":
                    out.append((i, L_i + ref[1]))
                out.append(ref)
                if ref[0] == j and combo[ref[1]] == "after":
                    out.append((i, L_i + ref[1]))
            orders.append(out)
        if fast_circle_count(p2.generator_count, post_signs, orders) == target_circles:
            h2 = _rebuild(p2, orders)
            break
    if h2 is None:
        raise RuntimeError(f"no multiply placement matches the trace for {p.relators} {m}")

    site_x = Site(ts.component_of_circle(c_x), c_x, 0)
    site_y = Site(ts.component_of_circle(c_y), c_y, 1 if c_x == c_y else 0)
    glued_circle = len(ts.circles)  # first circle the glue will create
    ops: list = [GlueOp(site_x, site_y)]
    for t in range(1, L_j):
        beam = abs(p.relators[j][t]) - 1
        ops.append(PunctureOp(None, glued_circle, piece_of_beam[beam]))
    return h2, TopologyTrace(tuple(ops), m)


# ---------------------------------------------------------------------------
# Cancellation: quadrilateral then bigon
# ---------------------------------------------------------------------------


class _Shadow:
    """A mutable copy of the sticky end that mirrors, band surgery by band
    surgery, the circle ids the tracked engine will assign."""

    def __init__(self, ts: TrackedSpace, g: StickyRibbonGraph):
        self.slots = [list(s) for s in g.island_slots]
        self.next_tracked = len(ts.circles)
        self._recompute()
        # boundary_circles order defines the initial tracked id order
        self.tracked_of = {idx: idx for idx in range(len(self.circles))}

    def graph(self) -> StickyRibbonGraph:
        return StickyRibbonGraph(len(self.slots), tuple(tuple(s) for s in self.slots))

    def _recompute(self):
        self.circles = boundary_circles(self.graph())
        self.lookup = circle_lookup(self.circles)
        self.island_of_ref = {}
        for isl, slots in enumerate(self.slots):
            for ref in slots:
                self.island_of_ref[ref] = isl

    def tracked_circle(self, point) -> int:
        return self.tracked_of[self.lookup[point]]

    def rail_circles(self, key) -> tuple[int, int]:
        return (
            self.tracked_circle(((key, 0), 0)),
            self.tracked_circle(((key, 0), 1)),
        )

    def circle_island(self, idx: int) -> int:
        pt = next(iter(self.circles[idx]))
        return pt[1] if pt[0] == "island" else self.island_of_ref[pt[0]]

    def _rewire(self, mutate) -> None:
        """Apply a surgery and advance the bimap exactly as the tracked
        engine advances its circle ids."""
        old = {c: i for i, c in enumerate(self.circles)}
        old_tracked = self.tracked_of
        mutate()
        self._recompute()
        new_ids = []
        self.tracked_of = {}
        for idx, circle in enumerate(self.circles):
            if circle in old:
                self.tracked_of[idx] = old_tracked[old[circle]]
            else:
                new_ids.append(idx)
        for idx in new_ids:  # fresh tracked ids in deterministic order
            self.tracked_of[idx] = self.next_tracked
            self.next_tracked += 1

    def remove_band(self, key):
        def mutate():
            for isl in range(len(self.slots)):
                self.slots[isl] = [s for s in self.slots[isl] if s[0] != key]

        self._rewire(mutate)

    def set_island_slots(self, new_slots: dict[int, list]):
        def mutate():
            for isl, slots in new_slots.items():
                self.slots[isl] = list(slots)

        self._rewire(mutate)

    def gap_circle_before_spot(self, island: int, walk_back_from: list, target) -> int:
        """Tracked circle through the corner at the angular spot of a removed
        slot: the corner after the nearest surviving predecessor."""
        slots = self.slots[island]
        if not slots:
            return self.tracked_circle(("island", island))
        idx = walk_back_from.index(target)
        n = len(walk_back_from)
        for k in range(1, n + 1):
            cand = walk_back_from[(idx - k) % n]
            if cand in slots:
                return self.tracked_circle((cand, 1))
        raise RuntimeError("no surviving slot on island")


def compile_cancellation(
    h: HandleStructure, relator: int, position: int, side: str = LEFT
) -> tuple[HandleStructure, TopologyTrace]:
    """Compile the cancellation of the adjacent inverse pair at ``position``
    (cyclic adjacency allowed) in the given relator (1-based)."""
    p = reconstruct_presentation(h)
    rel = relator - 1
    if not 0 <= rel < len(p.relators):
        raise NoCancellablePairError(f"relator {relator} out of range")
    w = p.relators[rel]
    L = len(w)
    if L < 2:
        raise NoCancellablePairError("relator too short to cancel")
    pos2 = (position + 1) % L
    if not 0 <= position < L or w[position] != -w[pos2]:
        raise NoCancellablePairError(f"no inverse pair at position {position}")
    if L == 2:
        raise EmptyRelatorError("cancelling the whole relator leaves an empty word")

    # post presentation and beam orders
    if pos2 == 0:
        w2 = w[1 : L - 1]
        removed = {position, 0}
        shift = {q: q - 1 for q in range(1, L - 1)}
    else:
        w2 = w[:position] + w[position + 2 :]
        removed = {position, pos2}
        shift = {q: (q if q < position else q - 2) for q in range(L) if q not in removed}
    relators = p.relators[:rel] + (w2,) + p.relators[rel + 1 :]
    p2 = Presentation(p.generator_count, relators, p.names)
    orders = []
    for order in h.beam_orders:
        out = []
        for pi, q in order:
            if pi == rel:
                if q in removed:
                    continue
                out.append((pi, shift[q]))
            else:
                out.append((pi, q))
        orders.append(out)
    h2 = _rebuild(p2, orders)

    b_before = (rel, (position - 1) % L)
    b_loop = (rel, position)
    b_after = (rel, pos2)
    quad_key = ("quad", rel, position)

    # gate candidates: the kept side reproduces the cancelled word; the wrong
    # side closes the pair into a null plate of its own and opens the main one
    p_wrong = Presentation(
        p.generator_count,
        p.relators[:rel] + ((w[position], w[pos2]),) + p.relators[rel + 1 :],
        p.names,
    )
    gate = QuadGate(pre=p, left=p2, right=p_wrong)

    ts0 = from_handle_structure(h)
    shadow = _Shadow(ts0, sticky_end(h))
    g0_slots = [list(s) for s in shadow.slots]

    def end_ref_island(ref):
        for isl, slots in enumerate(g0_slots):
            if ref in slots:
                return isl
        raise RuntimeError(f"end {ref!r} not found")

    far_before_ref = (b_before, 0)
    far_after_ref = (b_after, 1)
    isl0 = end_ref_island(far_before_ref)
    isl1 = end_ref_island(far_after_ref)

    cut1 = shadow.rail_circles(b_before)
    shadow.remove_band(b_before)
    cut2 = shadow.rail_circles(b_after)
    shadow.remove_band(b_after)

    # the included disc copy becomes a band joining the far ends of the two
    # cut bridges, at exactly the angular spots those ends occupied
    band_args = (
        shadow.gap_circle_before_spot(isl0, g0_slots[isl0], far_before_ref),
        shadow.gap_circle_before_spot(isl1, g0_slots[isl1], far_after_ref),
    )
    dead = {b_before, b_loop, b_after}
    new_slots: dict[int, list] = {}
    for isl in {isl0, isl1}:
        out = []
        for ref in g0_slots[isl]:
            if ref == far_before_ref:
                out.append((quad_key, 0))
            elif ref == far_after_ref:
                out.append((quad_key, 1))
            elif ref[0] in (b_before, b_after):
                continue
            else:
                out.append(ref)
        new_slots[isl] = out
    shadow.set_island_slots(new_slots)

    quad_op = CutQuadOp(
        component=ts0.component_of_circle(cut1[0]),
        cut1=cut1,
        cut2=cut2,
        band=band_args,
        side=side,
        gate=gate,
    )
    ts1 = cut_quad(ts0, quad_op.component, quad_op.cut1, quad_op.cut2, quad_op.band, side, gate)
    if len(ts1.circles) != shadow.next_tracked:
        raise RuntimeError("shadow circle accounting diverged from the tracked engine")

    bigon_args = shadow.rail_circles(b_loop)
    shadow.remove_band(b_loop)

    declared_split, split = _split_declaration(h, h2, rel, shadow)
    bigon_op = CutBigonOp(
        component=ts1.component_of_circle(bigon_args[0]),
        circle_a=bigon_args[0],
        circle_b=bigon_args[1],
        declared_split=declared_split,
        split=split,
    )
    return h2, TopologyTrace((quad_op, bigon_op), Cancellation(relator, position))


def _split_declaration(h, h2, rel, shadow: _Shadow):
    """Declared component split of the bigon cut, read off the post structure."""
    pre_comps = structure_components(h)
    post_comps = structure_components(h2)
    if len(post_comps) == len(pre_comps):
        return False, None
    piece_of_beam = _piece_of_beam(h)
    groups: dict[int, list[dict]] = {}
    for comp in post_comps:
        if comp["beams"]:
            groups.setdefault(piece_of_beam[comp["beams"][0]], []).append(comp)
    moved = None
    for piece, comps in groups.items():
        if len(comps) > 1:
            moved = next(c for c in comps if rel not in c["plates"])
            break
    if moved is None:
        return False, None

    moved_islands = set()
    for b in moved["beams"]:
        moved_islands.add(bottom_island(b))
        moved_islands.add(top_island(b))
    moved_circles = {
        shadow.tracked_of[idx]
        for idx in range(len(shadow.circles))
        if shadow.circle_island(idx) in moved_islands
    }
    roots = _island_components(shadow.graph())
    moved_s = len({roots[i] for i in moved_islands})
    split = BigonSplit(
        moved_pieces=frozenset(),
        carve_euler_m=moved["euler_m"],
        carve_euler_s=moved["euler_s"],
        carve_s_count=moved_s,
        moved_circles=frozenset(moved_circles),
    )
    return True, split


# ---------------------------------------------------------------------------
# Replay and verification
# ---------------------------------------------------------------------------


def replay_trace(ts: TrackedSpace, trace: TopologyTrace) -> TrackedSpace:
    return apply_ops(ts, trace.ops)


def expected_post_presentation(pre: Presentation, move: ACMove | Cancellation) -> Presentation:
    if isinstance(move, Cancellation):
        rel = move.relator - 1
        w = pre.relators[rel]
        L = len(w)
        pos2 = (move.position + 1) % L
        if pos2 == 0:
            w2 = w[1 : L - 1]
        else:
            w2 = w[: move.position] + w[move.position + 2 :]
        return Presentation(
            pre.generator_count,
            pre.relators[:rel] + (w2,) + pre.relators[rel + 1 :],
            pre.names,
        )
    return apply_move(pre, move, reduce=False)


def structure_space_invariants(h: HandleStructure):
    """Directly computed pair invariants of a structure, totals only."""
    from .topology import SpaceInvariants

    strips = h.strip_count()
    signs = [tuple(s.sign for s in pl.strips) for pl in h.plates]
    return SpaceInvariants(
        euler_m=h.beam_count + len(h.plates) - strips,
        euler_s=2 * h.beam_count - strips,
        components=structure_component_count(h),
        boundary_circles_s=fast_circle_count(h.beam_count, signs, h.beam_orders),
    )


def verify_trace(
    pre: HandleStructure,
    move: ACMove | Cancellation,
    trace: TopologyTrace,
    post: HandleStructure,
) -> ConsistencyReport:
    """Replay the trace deltas from the pre structure and compare with the
    directly computed invariants and reconstruction of the post structure."""
    ts = replay_trace(from_handle_structure(pre), trace)
    want = structure_space_invariants(post)
    got = ts.invariants
    mismatches = []
    compared = {}
    for name in ("euler_m", "euler_s", "components", "boundary_circles_s"):
        g_val, w_val = getattr(got, name), getattr(want, name)
        compared[name] = (g_val, w_val)
        if g_val != w_val:
            mismatches.append(f"{name}: trace {g_val} != structure {w_val}")
    expected = expected_post_presentation(reconstruct_presentation(pre), move)
    rebuilt = reconstruct_presentation(post)
    if rebuilt.relators == expected.relators:
        compared["canonical_key"] = "equal"
    else:
        key_post = canonical_form(rebuilt)
        key_expected = canonical_form(expected)
        compared["canonical_key"] = (key_post.decode(), key_expected.decode())
        if key_post != key_expected:
            mismatches.append("reconstructed presentation differs from the move result")
    return ConsistencyReport(not mismatches, compared, tuple(mismatches))


def compile_certificate(
    start_structure: HandleStructure, certificate
) -> tuple[HandleStructure, list[tuple[HandleStructure, TopologyTrace, HandleStructure]]]:
    """Compile every move and scheduled cancellation of a certificate.

    Returns the final structure and a list of (pre, trace, post) steps; each
    trace's circle ids refer to the tracking of its own pre structure."""
    h = start_structure
    steps = []
    for m, sched in certificate.steps:
        h2, trace = compile_move(h, m)
        steps.append((h, trace, h2))
        h = h2
        for pos in sched:
            h2, trace = compile_cancellation(h, move_target(m), pos)
            steps.append((h, trace, h2))
            h = h2
    return h, steps


def serialize_trace(trace: TopologyTrace) -> str:
    from .topology import serialize_history

    if isinstance(trace.move, Cancellation):
        head = f"MOVE CANCEL {trace.move.relator} {trace.move.position}"
    elif isinstance(trace.move, Invert):
        head = f"MOVE INV {trace.move.relator}"
    elif isinstance(trace.move, Conjugate):
        head = f"MOVE CONJ {trace.move.relator} {trace.move.generator} {trace.move.sign:+d}"
    else:
        head = f"MOVE MULR {trace.move.target} {trace.move.source}"
    fake = TrackedSpace.__new__(TrackedSpace)
    object.__setattr__(fake, "history", trace.ops)
    body = serialize_history(fake)
    return head + "\n" + body
