"""Handle structures associated with group presentations.

A presentation with n generators and relators r_1..r_m yields a structure
with one beam (thickened 1-handle) per generator and one plate (thickened
2-handle) per relator.  A plate's attaching annulus is divided into strips
(where it runs over a beam, one per letter) alternating with bridges.  The
islands (two per beam, Bottom and Top) together with the bridges form the
sticky end S, a ribbon-graph surface; the beams and plates form the total
space M.

Conventions fixed here and validated against the named example surfaces:

* A strip with sign +1 enters the Bottom island and exits the Top; sign -1
  is the reverse.
* Bridge k of a plate runs from the exit island of strip k to the entry
  island of strip k+1 (cyclically); the wrap-around bridge carries the base
  point.
* On a Bottom island the strips appear counterclockwise in the beam's
  attachment order; on the Top island in the reversed order.  Each strip
  contributes one band end per island it crosses: the incoming bridge at its
  entry island, the outgoing bridge at its exit island.
"""

from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass, field

from .words import Presentation, Word, snf_diagonal

# A strip is addressed as (plate index, letter position); a band end as
# ((band key, end index), ...) where end 0 sits at the exit island of the
# bridge's predecessor strip and end 1 at the entry island of its successor.
StripRef = tuple[int, int]
BandKey = tuple
EndRef = tuple[BandKey, int]


class EmptyRelatorError(ValueError):
    pass


@dataclass(frozen=True)
class Strip:
    beam: int
    sign: int
    slot: int


@dataclass(frozen=True)
class Plate:
    relator_index: int
    strips: tuple[Strip, ...]


@dataclass(frozen=True)
class AttachmentChoice:
    """Per beam, a cyclic order of the strips attached to it.

    Orders are stored rotated so the smallest strip reference comes first;
    two choices are equal iff they are equal as cyclic orders.
    """

    beam_orders: tuple[tuple[StripRef, ...], ...]

    @staticmethod
    def normalize_cycle(order: tuple[StripRef, ...]) -> tuple[StripRef, ...]:
        if not order:
            return order
        k = order.index(min(order))
        return order[k:] + order[:k]

    def __post_init__(self):
        object.__setattr__(
            self,
            "beam_orders",
            tuple(self.normalize_cycle(tuple(o)) for o in self.beam_orders),
        )


@dataclass(frozen=True)
class HandleStructure:
    beam_count: int
    plates: tuple[Plate, ...]
    beam_orders: tuple[tuple[StripRef, ...], ...]

    def strip(self, ref: StripRef) -> Strip:
        return self.plates[ref[0]].strips[ref[1]]

    def strip_count(self) -> int:
        return sum(len(p.strips) for p in self.plates)


@dataclass(frozen=True)
class StickyRibbonGraph:
    """Islands with a cyclic order of band-end slots, plus untwisted-by-default
    bands (the bridges)."""

    island_count: int
    island_slots: tuple[tuple[EndRef, ...], ...]
    twisted_bands: frozenset = frozenset()

    def band_ends(self) -> dict:
        """band key -> {end index: (island, slot position)}"""
        out: dict = {}
        for isl, slots in enumerate(self.island_slots):
            for pos, (key, end) in enumerate(slots):
                out.setdefault(key, {})[end] = (isl, pos)
        return out

    def band_count(self) -> int:
        return sum(len(s) for s in self.island_slots) // 2


@dataclass(frozen=True)
class SurfaceInvariants:
    components: int
    euler: int
    boundary_circles: int
    orientable: bool
    genus_per_component: tuple[int, ...]


@dataclass(frozen=True)
class ChoiceEnumeration:
    choices: tuple[AttachmentChoice, ...]
    truncated: bool
    total: int


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _strip_refs_per_beam(p: Presentation) -> list[list[StripRef]]:
    per_beam: list[list[StripRef]] = [[] for _ in range(p.generator_count)]
    for pi, r in enumerate(p.relators):
        for pos, letter in enumerate(r):
            per_beam[abs(letter) - 1].append((pi, pos))
    return per_beam


def default_choice(p: Presentation) -> AttachmentChoice:
    """Strips ordered on each beam by (relator index, letter position)."""
    return AttachmentChoice(tuple(tuple(sorted(refs)) for refs in _strip_refs_per_beam(p)))


def enumerate_choices(p: Presentation, limit: int | None = None) -> ChoiceEnumeration:
    """All attachment choices: the product over beams of the (k-1)! cyclic
    orders of the k strips on that beam, truncated at ``limit``."""
    per_beam = [sorted(refs) for refs in _strip_refs_per_beam(p)]
    total = 1
    for refs in per_beam:
        for v in range(1, len(refs)):
            total *= v

    def cycles(refs: list[StripRef]):
        if not refs:
            yield ()
            return
        head, rest = refs[0], refs[1:]
        for perm in itertools.permutations(rest):
            yield (head,) + perm

    out: list[AttachmentChoice] = []
    truncated = False
    for combo in itertools.product(*(cycles(refs) for refs in per_beam)):
        if limit is not None and len(out) >= limit:
            truncated = True
            break
        out.append(AttachmentChoice(tuple(combo)))
    return ChoiceEnumeration(tuple(out), truncated, total)


def random_attachment_choice(p: Presentation, rng: random.Random) -> AttachmentChoice:
    orders = []
    for refs in _strip_refs_per_beam(p):
        refs = sorted(refs)
        if len(refs) > 2:
            rest = refs[1:]
            rng.shuffle(rest)
            refs = [refs[0]] + rest
        orders.append(tuple(refs))
    return AttachmentChoice(tuple(orders))


def build_handle_structure(
    p: Presentation, choice: AttachmentChoice | None = None
) -> HandleStructure:
    """One beam per generator, one plate per relator, one strip per letter.

    The attachment choice fixes each beam's cyclic strip order; slots record
    the position of each strip in that order.
    """
    for r in p.relators:
        if not r:
            raise EmptyRelatorError("handle construction requires non-empty relators")
    if choice is None:
        choice = default_choice(p)
    if len(choice.beam_orders) != p.generator_count:
        raise ValueError("attachment choice does not match generator count")
    expected = [sorted(refs) for refs in _strip_refs_per_beam(p)]
    slot_of: dict[StripRef, int] = {}
    for b, order in enumerate(choice.beam_orders):
        if sorted(order) != expected[b]:
            raise ValueError(f"attachment choice for beam {b} does not list its strips")
        for slot, ref in enumerate(order):
            slot_of[ref] = slot
    plates = []
    for pi, r in enumerate(p.relators):
        strips = tuple(
            Strip(abs(letter) - 1, 1 if letter > 0 else -1, slot_of[(pi, pos)])
            for pos, letter in enumerate(r)
        )
        plates.append(Plate(pi, strips))
    return HandleStructure(p.generator_count, tuple(plates), choice.beam_orders)


def reconstruct_presentation(h: HandleStructure) -> Presentation:
    """Read each plate's strip sequence back into a relator word."""
    cached = getattr(h, "_reconstructed", None)
    if cached is None:
        relators = tuple(
            tuple(s.sign * (s.beam + 1) for s in plate.strips) for plate in h.plates
        )
        cached = Presentation(h.beam_count, relators)
        object.__setattr__(h, "_reconstructed", cached)
    return cached


def total_space_euler(h: HandleStructure) -> int:
    """Euler characteristic of the total space: beams + plates - strips."""
    return h.beam_count + len(h.plates) - h.strip_count()


def quotient_homology(h: HandleStructure) -> tuple[int, ...]:
    """Invariant-factor diagonal of H1 of the reconstructed presentation."""
    return snf_diagonal(reconstruct_presentation(h))


# ---------------------------------------------------------------------------
# The sticky end as a ribbon graph
# ---------------------------------------------------------------------------


def bottom_island(beam: int) -> int:
    return 2 * beam


def top_island(beam: int) -> int:
    return 2 * beam + 1


def sticky_graph(beam_count: int, plate_signs: list[tuple[int, ...]], beam_orders) -> StickyRibbonGraph:
    """Sticky end from raw plate letter signs and beam orders."""
    lengths = [len(s) for s in plate_signs]
    slots: list[list[EndRef]] = [[] for _ in range(2 * beam_count)]
    for b in range(beam_count):
        order = beam_orders[b]
        for (pi, pos) in order:
            L = lengths[pi]
            if plate_signs[pi][pos] > 0:  # enters Bottom: incoming bridge's 'to' end
                slots[bottom_island(b)].append(((pi, (pos - 1) % L), 1))
            else:  # exits Bottom: outgoing bridge's 'from' end
                slots[bottom_island(b)].append(((pi, pos), 0))
        for (pi, pos) in reversed(order):
            L = lengths[pi]
            if plate_signs[pi][pos] > 0:  # exits Top
                slots[top_island(b)].append(((pi, pos), 0))
            else:  # enters Top
                slots[top_island(b)].append(((pi, (pos - 1) % L), 1))
    return StickyRibbonGraph(2 * beam_count, tuple(tuple(s) for s in slots))


def sticky_end(h: HandleStructure) -> StickyRibbonGraph:
    """Islands and bridges of the structure, with band ends placed by the
    fixed corner convention."""
    cached = getattr(h, "_sticky", None)
    if cached is None:
        signs = [tuple(s.sign for s in p.strips) for p in h.plates]
        cached = sticky_graph(h.beam_count, signs, h.beam_orders)
        object.__setattr__(h, "_sticky", cached)
    return cached


# Boundary circles.  Points of the walk are (end ref, side) pairs: side 0 is
# where counterclockwise travel meets the attachment arc, side 1 where it
# leaves.  Corners join side 1 of a slot to side 0 of the next slot; a band's
# two rails join (e0,0)-(e1,1) and (e1,0)-(e0,1) when untwisted, or
# (e0,0)-(e1,0) and (e0,1)-(e1,1) when twisted.  Every point then has exactly
# two neighbours, and the boundary circles are the resulting cycles.
# Islands with no slots are single-circle discs.


@functools.lru_cache(maxsize=16384)
def boundary_circles(g: StickyRibbonGraph) -> tuple[frozenset, ...]:
    # serial index every slot; each has two walk points (enter/leave sides)
    refs: list[EndRef] = []
    by_key: dict = {}
    first_serial = []
    for isl, slots in enumerate(g.island_slots):
        first_serial.append(len(refs))
        for ref in slots:
            by_key.setdefault(ref[0], []).append((len(refs), ref[1]))
            refs.append(ref)
    P = 2 * len(refs)
    nb0 = [-1] * P
    nb1 = [-1] * P

    def link(a, b):
        if nb0[a] < 0:
            nb0[a] = b
        else:
            nb1[a] = b
        if nb0[b] < 0:
            nb0[b] = a
        else:
            nb1[b] = a

    for isl, slots in enumerate(g.island_slots):
        k = len(slots)
        base = first_serial[isl]
        for posn in range(k):
            link(2 * (base + posn) + 1, 2 * (base + (posn + 1) % k))
    for key, ends in by_key.items():
        if len(ends) != 2 or {e[1] for e in ends} != {0, 1}:
            raise ValueError(f"band {key!r} does not have exactly two ends")
        (sa, ea), (sb, eb) = ends
        if ea == 1:
            sa, sb = sb, sa
        if key in g.twisted_bands:
            link(2 * sa, 2 * sb)
            link(2 * sa + 1, 2 * sb + 1)
        else:
            link(2 * sa, 2 * sb + 1)
            link(2 * sb, 2 * sa + 1)

    circles = []
    seen = [False] * P
    for start in range(P):
        if seen[start]:
            continue
        cycle = []
        prev = -1
        cur = start
        while True:
            cycle.append(cur)
            seen[cur] = True
            nxt = nb0[cur] if nb0[cur] != prev else nb1[cur]
            prev, cur = cur, nxt
            if cur == start:
                break
        circles.append((start, frozenset((refs[p >> 1], p & 1) for p in cycle)))
    for isl, slots in enumerate(g.island_slots):
        if not slots:
            circles.append((P + isl, frozenset({("island", isl)})))

    # walk order from serial 0 is already by (island, slot position, side)
    circles.sort(key=lambda c: c[0])
    return tuple(c for _, c in circles)


def fast_circle_count(beam_count: int, plate_signs, beam_orders) -> int:
    """Boundary-circle count of the sticky end, computed without building the
    ribbon graph.  Points alternate corner and rail edges, so the circles are
    the orbits of rail-then-corner."""
    lengths = [len(s) for s in plate_signs]
    offsets = [0]
    for L in lengths:
        offsets.append(offsets[-1] + L)
    total = offsets[-1]
    end_from = [-1] * total  # slot serial of a bridge's exit-side end
    end_to = [-1] * total  # slot serial of a bridge's entry-side end

    island_bases: list[tuple[int, int]] = []  # (first serial, slot count)
    serial = 0
    isolated = 0
    for b in range(beam_count):
        order = beam_orders[b]
        if not order:
            isolated += 2
            continue
        k = len(order)
        island_bases.append((serial, k))
        for (pi, pos) in order:  # Bottom island
            if plate_signs[pi][pos] > 0:
                end_to[offsets[pi] + (pos - 1) % lengths[pi]] = serial
            else:
                end_from[offsets[pi] + pos] = serial
            serial += 1
        island_bases.append((serial, k))
        for (pi, pos) in reversed(order):  # Top island
            if plate_signs[pi][pos] > 0:
                end_from[offsets[pi] + pos] = serial
            else:
                end_to[offsets[pi] + (pos - 1) % lengths[pi]] = serial
            serial += 1

    P = 2 * serial
    cn = [0] * P
    for base, k in island_bases:
        for idx in range(k):
            a = 2 * (base + idx) + 1
            bpt = 2 * (base + (idx + 1) % k)
            cn[a] = bpt
            cn[bpt] = a
    rn = [0] * P
    for e in range(total):
        sa, sb = end_from[e], end_to[e]
        rn[2 * sa] = 2 * sb + 1
        rn[2 * sb + 1] = 2 * sa
        rn[2 * sb] = 2 * sa + 1
        rn[2 * sa + 1] = 2 * sb

    count = isolated
    seen = bytearray(P)
    for start in range(P):
        if seen[start]:
            continue
        count += 1
        cur = start
        while True:
            seen[cur] = 1
            nxt = rn[cur]
            seen[nxt] = 1
            cur = cn[nxt]
            if cur == start:
                break
    return count


def boundary_circle_count(g: StickyRibbonGraph) -> int:
    """Number of boundary circles, without materializing them."""
    refs = 0
    by_key: dict = {}
    first_serial = []
    for slots in g.island_slots:
        first_serial.append(refs)
        for ref in slots:
            by_key.setdefault(ref[0], []).append((refs, ref[1]))
            refs += 1
    P = 2 * refs
    nb0 = [-1] * P
    nb1 = [-1] * P

    def link(a, b):
        if nb0[a] < 0:
            nb0[a] = b
        else:
            nb1[a] = b
        if nb0[b] < 0:
            nb0[b] = a
        else:
            nb1[b] = a

    isolated = 0
    for isl, slots in enumerate(g.island_slots):
        k = len(slots)
        if k == 0:
            isolated += 1
            continue
        base = first_serial[isl]
        for posn in range(k):
            link(2 * (base + posn) + 1, 2 * (base + (posn + 1) % k))
    for key, ends in by_key.items():
        (sa, ea), (sb, eb) = ends
        if ea == 1:
            sa, sb = sb, sa
        if key in g.twisted_bands:
            link(2 * sa, 2 * sb)
            link(2 * sa + 1, 2 * sb + 1)
        else:
            link(2 * sa, 2 * sb + 1)
            link(2 * sb, 2 * sa + 1)

    count = isolated
    seen = [False] * P
    for start in range(P):
        if seen[start]:
            continue
        count += 1
        prev = -1
        cur = start
        while True:
            seen[cur] = True
            nxt = nb0[cur] if nb0[cur] != prev else nb1[cur]
            prev, cur = cur, nxt
            if cur == start:
                break
    return count


@functools.lru_cache(maxsize=16384)
def circle_lookup(circles: tuple[frozenset, ...]) -> dict:
    out = {}
    for idx, circle in enumerate(circles):
        for pt in circle:
            out[pt] = idx
    return out


def _island_components(g: StickyRibbonGraph) -> list[int]:
    parent = list(range(g.island_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for key, ends in g.band_ends().items():
        a = find(ends[0][0])
        b = find(ends[1][0])
        if a != b:
            parent[a] = b
    return [find(i) for i in range(g.island_count)]


def surface_invariants(g: StickyRibbonGraph) -> SurfaceInvariants:
    """Components, Euler characteristic, boundary circles, orientability and
    per-component genus of the sticky end."""
    roots = _island_components(g)
    comp_ids = sorted(set(roots))
    comp_index = {r: i for i, r in enumerate(comp_ids)}
    n_comp = len(comp_ids)

    islands_in = [0] * n_comp
    bands_in = [0] * n_comp
    for isl in range(g.island_count):
        islands_in[comp_index[roots[isl]]] += 1
    ends = g.band_ends()
    for key, e in ends.items():
        bands_in[comp_index[roots[e[0][0]]]] += 1

    circles = boundary_circles(g)
    circles_in = [0] * n_comp
    for circle in circles:
        pt = next(iter(circle))
        isl = pt[1] if pt[0] == "island" else ends[pt[0][0]][pt[0][1]][0]
        circles_in[comp_index[roots[isl]]] += 1

    # orientability: islands get +-1, untwisted bands preserve the sign,
    # twisted bands flip it; a conflict means a non-orientable component
    orient = [0] * g.island_count
    adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(g.island_count)}
    for key, e in ends.items():
        flip = -1 if key in g.twisted_bands else 1
        a, b = e[0][0], e[1][0]
        adj[a].append((b, flip))
        adj[b].append((a, flip))
    orientable_comp = [True] * n_comp
    for seed in range(g.island_count):
        if orient[seed]:
            continue
        orient[seed] = 1
        stack = [seed]
        while stack:
            cur = stack.pop()
            for nxt, flip in adj[cur]:
                want = orient[cur] * flip
                if orient[nxt] == 0:
                    orient[nxt] = want
                    stack.append(nxt)
                elif orient[nxt] != want:
                    orientable_comp[comp_index[roots[nxt]]] = False

    genus = []
    for c in range(n_comp):
        chi = islands_in[c] - bands_in[c]
        if orientable_comp[c]:
            genus.append((2 - chi - circles_in[c]) // 2)
        else:
            # cross-cap count for the non-orientable case
            genus.append(2 - chi - circles_in[c])

    return SurfaceInvariants(
        components=n_comp,
        euler=g.island_count - g.band_count(),
        boundary_circles=len(circles),
        orientable=all(orientable_comp),
        genus_per_component=tuple(genus),
    )


# ---------------------------------------------------------------------------
# Structure components (of the total space M)
# ---------------------------------------------------------------------------


def structure_component_count(h: HandleStructure) -> int:
    n, m = h.beam_count, len(h.plates)
    parent = list(range(n + m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pi, plate in enumerate(h.plates):
        for s in plate.strips:
            a, b = find(s.beam), find(n + pi)
            if a != b:
                parent[a] = b
    return len({find(x) for x in range(n + m)})


def structure_components(h: HandleStructure) -> list[dict]:
    cached = getattr(h, "_components", None)
    if cached is None:
        cached = _structure_components_uncached(h)
        object.__setattr__(h, "_components", cached)
    return cached


def _structure_components_uncached(h: HandleStructure) -> list[dict]:
    """Connected components of M: each is a dict with the beams, plates and
    restricted invariants of that component.  Ordered by smallest beam/plate."""
    n, m = h.beam_count, len(h.plates)
    parent = list(range(n + m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pi, plate in enumerate(h.plates):
        for s in plate.strips:
            a, b = find(s.beam), find(n + pi)
            if a != b:
                parent[a] = b

    groups: dict[int, dict] = {}
    for b in range(n):
        groups.setdefault(find(b), {"beams": [], "plates": []})["beams"].append(b)
    for pi in range(m):
        groups.setdefault(find(n + pi), {"beams": [], "plates": []})["plates"].append(pi)

    out = []
    for root in sorted(groups, key=lambda r: (min(groups[r]["beams"]) if groups[r]["beams"] else n + min(groups[r]["plates"]))):
        grp = groups[root]
        strips = sum(len(h.plates[pi].strips) for pi in grp["plates"])
        grp["euler_m"] = len(grp["beams"]) + len(grp["plates"]) - strips
        grp["euler_s"] = 2 * len(grp["beams"]) - strips
        out.append(grp)
    return out


# ---------------------------------------------------------------------------
# Serialization: sections BEAMS, PLATES (strip triples), ORDERS
# ---------------------------------------------------------------------------


def serialize_handle_structure(h: HandleStructure) -> str:
    lines = [f"BEAMS {h.beam_count}", f"PLATES {len(h.plates)}"]
    for plate in h.plates:
        lines.append(f"PLATE {plate.relator_index}")
        for s in plate.strips:
            lines.append(f"STRIP {s.beam} {s.sign:+d} {s.slot}")
    lines.append("ORDERS")
    for b, order in enumerate(h.beam_orders):
        refs = " ".join(f"{pi}:{pos}" for pi, pos in order)
        lines.append(f"ORDER {b} {refs}".rstrip())
    return "\n".join(lines) + "\n"


def parse_handle_structure(text: str) -> HandleStructure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    it = iter(lines)
    head = next(it).split()
    if head[0] != "BEAMS":
        raise ValueError("expected BEAMS")
    beam_count = int(head[1])
    head = next(it).split()
    if head[0] != "PLATES":
        raise ValueError("expected PLATES")
    plate_count = int(head[1])
    plates = []
    line = next(it)
    for _ in range(plate_count):
        parts = line.split()
        if parts[0] != "PLATE":
            raise ValueError("expected PLATE")
        relator_index = int(parts[1])
        strips = []
        line = next(it)
        while line.startswith("STRIP"):
            _, beam, sign, slot = line.split()
            strips.append(Strip(int(beam), int(sign), int(slot)))
            line = next(it)
        plates.append(Plate(relator_index, tuple(strips)))
    if line != "ORDERS":
        raise ValueError("expected ORDERS")
    orders: list[tuple[StripRef, ...]] = [()] * beam_count
    for line in it:
        parts = line.split()
        if parts[0] != "ORDER":
            raise ValueError("expected ORDER")
        b = int(parts[1])
        refs = tuple((int(x.split(":")[0]), int(x.split(":")[1])) for x in parts[2:])
        orders[b] = refs
    return HandleStructure(beam_count, tuple(plates), tuple(orders))
