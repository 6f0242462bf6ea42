"""Bounded search for trivialization certificates.

States are canonical forms of presentations (relators freely and cyclically
reduced, identified up to rotation, inversion and reordering).  Inversion and
conjugation never change the canonical class, so the effective edges are the
multiplications r_i <- u . w where u ranges over the rotations/inversion of
r_i and w over those of r_j.  Dressing a multiplication with conjugations in
this way keeps the class graph representative-independent: any primitive move
sequence projects onto a path whose length is its number of multiplications.

Every edge is realized as a primitive move block, so a found path replays as
an exact certificate; certificates are always re-verified before a search
reports success.
"""

from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field

from .moves import (
    ACMove,
    Certificate,
    CertStep,
    Conjugate,
    Invert,
    MultiplyRight,
    apply_move_with_schedule,
    apply_steps,
    canonical_key_tuple,
    invert_move,
    verify_certificate,
)
from .words import (
    Presentation,
    Word,
    cyclic_reduce,
    cyclic_reduce_with_conjugator,
    free_reduce,
    free_reduce_with_positions,
    inverse_word,
    is_perfect_abelianization,
    snf_diagonal,
    standard_presentation,
)


class Strategy(enum.Enum):
    BFS = "bfs"
    IDDFS = "iddfs"
    BIDIRECTIONAL = "bidirectional"


@dataclass(frozen=True)
class SearchBounds:
    max_depth: int = 8
    max_relator_length: int = 16
    max_states: int = 500_000
    max_memory_bytes: int = 256 * 2**20
    strategy: Strategy = Strategy.BIDIRECTIONAL

    def __post_init__(self):
        for name in ("max_depth", "max_relator_length", "max_states", "max_memory_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


TRIVIALIZED = "trivialized"
NON_TRIVIAL_ABELIANIZATION = "non_trivial_abelianization"
EXHAUSTED = "exhausted"
ABORTED = "aborted"


@dataclass
class SearchReport:
    outcome: str
    certificate: Certificate | None = None
    snf_diagonal: tuple[int, ...] | None = None
    bound_hit: str | None = None
    reason: str | None = None
    states_expanded: int = 0
    frontier_peak: int = 0
    wall_time_ms: int = 0


# ---------------------------------------------------------------------------
# Neighbor enumeration
# ---------------------------------------------------------------------------


def neighbors(p: Presentation, bounds: SearchBounds) -> list[tuple[ACMove, Presentation]]:
    """All single primitive moves applied to ``p``, with the changed relator
    freely and cyclically reduced, filtered by the relator length bound.
    Deterministic order: inversions, conjugations, multiplications."""
    out = []
    m = len(p.relators)
    moves: list[ACMove] = [Invert(i) for i in range(1, m + 1)]
    moves += [
        Conjugate(i, g, s)
        for i in range(1, m + 1)
        for g in range(1, p.generator_count + 1)
        for s in (1, -1)
    ]
    moves += [
        MultiplyRight(i, j)
        for i in range(1, m + 1)
        for j in range(1, m + 1)
        if i != j
    ]
    for mv in moves:
        q, _ = apply_move_with_schedule(p, mv)
        idx = (mv.target if isinstance(mv, MultiplyRight) else mv.relator) - 1
        w = cyclic_reduce(q.relators[idx])
        if len(w) > bounds.max_relator_length:
            continue
        relators = q.relators[:idx] + (w,) + q.relators[idx + 1 :]
        out.append((mv, Presentation(p.generator_count, relators, p.names)))
    return out


def _orbit(w: Word) -> list[Word]:
    """Distinct rotations of w and of its inverse, deterministic order."""
    seen = []
    seen_set = set()
    for cand in (w, inverse_word(w)):
        L = len(cand)
        doubled = cand + cand
        for s in range(max(L, 1)):
            rot = doubled[s : s + L]
            if rot not in seen_set:
                seen_set.add(rot)
                seen.append(rot)
    return seen


def _class_edges(relators: tuple[Word, ...], maxlen: int):
    """Yield ((i, j, target_word, mult_word), new_relators) for every dressed
    multiplication available from this representative."""
    m = len(relators)
    for i in range(m):
        orbit_i = _orbit(relators[i])
        for j in range(m):
            if i == j:
                continue
            orbit_j = _orbit(relators[j])
            for target in orbit_i:
                for w in orbit_j:
                    product = cyclic_reduce(free_reduce(target + w))
                    if len(product) > maxlen:
                        continue
                    yield (i, j, target, w), relators[:i] + (product,) + relators[i + 1 :]


def _edge_block(
    p: Presentation, params: tuple[int, int, Word, Word]
) -> tuple[Presentation, tuple[CertStep, ...]]:
    """Materialize a class edge as primitive moves with schedules: align the
    target and multiplicand rotations by conjugations/inversions, multiply,
    restore the multiplicand, and cyclically reduce the product."""
    i, j, target, mult = params
    moves: list[ACMove] = []

    def rotate_into(idx: int, current: Word, want: Word) -> Word:
        if current == want:
            return current
        if want not in _orbit(current):
            raise ValueError("unreachable rotation")
        work = current
        if want not in {work[k:] + work[:k] for k in range(max(len(work), 1))}:
            moves.append(Invert(idx + 1))
            work = inverse_word(work)
        while work != want:
            c = work[0]
            moves.append(Conjugate(idx + 1, abs(c), 1 if c > 0 else -1))
            work = work[1:] + (c,)
        return work

    r_i = rotate_into(i, p.relators[i], target)
    pre_mult_moves = len(moves)
    r_j = rotate_into(j, p.relators[j], mult)
    restore: list[ACMove] = []
    for mv in reversed(moves[pre_mult_moves:]):
        restore.extend(invert_move(mv))
    moves.append(MultiplyRight(i + 1, j + 1))
    moves.extend(restore)
    # cyclic reduction of the product, realized by conjugations
    product = free_reduce(target + mult)
    core, conjugator = cyclic_reduce_with_conjugator(product)
    for c in conjugator:
        moves.append(Conjugate(i + 1, abs(c), 1 if c > 0 else -1))
    final, steps = apply_steps(p, moves)
    return final, steps


def normalization_steps(p: Presentation) -> tuple[Presentation, tuple[CertStep, ...]]:
    """Certificate steps reducing every relator freely and cyclically.

    Free reduction is realized by a double inversion whose second move
    carries the cancellation schedule; cyclic trimming by conjugations.
    """
    steps: list[CertStep] = []
    relators = list(p.relators)
    for idx, r in enumerate(relators):
        reduced, sched = free_reduce_with_positions(r)
        if sched:
            steps.append((Invert(idx + 1), ()))
            inv_sched = free_reduce_with_positions(inverse_word(r))[1]
            steps.append((Invert(idx + 1), inv_sched))
            reduced = free_reduce(r)
        core, conjugator = cyclic_reduce_with_conjugator(reduced)
        work = reduced
        for c in conjugator:
            mv = Conjugate(idx + 1, abs(c), 1 if c > 0 else -1)
            word = (-c,) + work + (c,)
            work, sched2 = free_reduce_with_positions(word)
            steps.append((mv, sched2))
        relators[idx] = core
    return Presentation(p.generator_count, tuple(relators), p.names), tuple(steps)


def _alignment_steps(
    u: Presentation, v: Presentation
) -> tuple[tuple[CertStep, ...], list[int]]:
    """Moves turning each relator of ``u`` into the exact word of the matched
    relator of ``v`` (canonical keys must already agree), plus the index map
    pi with u-position a holding v's relator pi[a] afterwards."""
    from .moves import canonical_word

    by_canon: dict = {}
    for pos, r in enumerate(v.relators):
        by_canon.setdefault(canonical_word(r), []).append(pos)
    pi: list[int] = []
    targets: list[Word] = []
    for r in u.relators:
        pool = by_canon[canonical_word(r)]
        pi.append(pool.pop(0))
        targets.append(v.relators[pi[-1]])

    steps: list[CertStep] = []
    work = u
    for a, want in enumerate(targets):
        current = work.relators[a]
        if current == want:
            continue
        moves: list[ACMove] = []
        rotations = {current[k:] + current[:k] for k in range(max(len(current), 1))}
        if want not in rotations:
            moves.append(Invert(a + 1))
        probe = inverse_word(current) if want not in rotations else current
        while probe != want:
            c = probe[0]
            moves.append(Conjugate(a + 1, abs(c), 1 if c > 0 else -1))
            probe = probe[1:] + (c,)
        work, block = apply_steps(work, moves)
        steps.extend(block)
    return tuple(steps), pi


# ---------------------------------------------------------------------------
# The search proper
# ---------------------------------------------------------------------------


@dataclass
class _Node:
    relators: tuple[Word, ...]
    parent: tuple | None  # (parent_key, edge_params)
    depth: int


def _estimate_bytes(relators: tuple[Word, ...]) -> int:
    return 120 + 40 * sum(len(r) for r in relators) + 60 * len(relators)


def scramble(
    p: Presentation, k: int, seed: int, length_cap: int
) -> tuple[Presentation, Certificate]:
    """Apply k seeded random primitive moves, keeping every relator within
    the length cap; returns the result and the certificate of applied moves."""
    rng = random.Random(seed)
    steps: list[CertStep] = []
    current = p
    m = len(p.relators)
    for _ in range(k):
        candidates: list[ACMove] = [Invert(i) for i in range(1, m + 1)]
        candidates += [
            Conjugate(i, g, s)
            for i in range(1, m + 1)
            for g in range(1, p.generator_count + 1)
            for s in (1, -1)
        ]
        candidates += [
            MultiplyRight(i, j) for i in range(1, m + 1) for j in range(1, m + 1) if i != j
        ]
        admissible = []
        for mv in candidates:
            q, sched = apply_move_with_schedule(current, mv)
            if all(len(r) <= length_cap for r in q.relators) and all(q.relators):
                admissible.append((mv, q, sched))
        if not admissible:
            break
        mv, q, sched = admissible[rng.randrange(len(admissible))]
        steps.append((mv, sched))
        current = q
    return current, Certificate(p, tuple(steps))


def trivialization_search(p: Presentation, bounds: SearchBounds | None = None) -> SearchReport:
    """Search for a certificate carrying ``p`` to the standard presentation.

    Returns NonTrivialAbelianization immediately (and soundly) when the
    exponent matrix does not have unit invariant factors of full rank.
    A Trivialized outcome always carries a certificate that has been
    re-verified against the standard presentation.
    """
    if bounds is None:
        bounds = SearchBounds()
    if not p.balanced:
        raise ValueError("trivialization search requires a balanced presentation")
    start_time = time.monotonic()

    def ms() -> int:
        return int((time.monotonic() - start_time) * 1000)

    if not is_perfect_abelianization(p):
        return SearchReport(
            outcome=NON_TRIVIAL_ABELIANIZATION,
            snf_diagonal=snf_diagonal(p),
            wall_time_ms=ms(),
        )

    n = p.generator_count
    target = standard_presentation(n)
    root, prologue = normalization_steps(p)
    if any(len(r) > bounds.max_relator_length for r in root.relators):
        return SearchReport(
            outcome=EXHAUSTED, bound_hit="max_relator_length", wall_time_ms=ms()
        )

    root_key = canonical_key_tuple(root)
    target_key = canonical_key_tuple(target)

    try:
        if bounds.strategy == Strategy.BIDIRECTIONAL:
            result = _bidirectional(root, root_key, target, target_key, bounds)
        elif bounds.strategy == Strategy.BFS:
            result = _forward_bfs(root, root_key, target_key, bounds)
        else:
            result = _iddfs(root, root_key, target_key, bounds)
    except KeyboardInterrupt:
        return SearchReport(outcome=ABORTED, reason="signal", wall_time_ms=ms())
    except MemoryError:
        return SearchReport(outcome=ABORTED, reason="memory", wall_time_ms=ms())

    status, payload, stats = result
    states_expanded, frontier_peak = stats
    if status != "found":
        outcome = ABORTED if status == "aborted" else EXHAUSTED
        return SearchReport(
            outcome=outcome,
            bound_hit=payload if outcome == EXHAUSTED else None,
            reason=payload if outcome == ABORTED else None,
            states_expanded=states_expanded,
            frontier_peak=frontier_peak,
            wall_time_ms=ms(),
        )

    steps = prologue + payload
    certificate = Certificate(p, steps)
    if not verify_certificate(certificate, target):
        raise AssertionError("internal error: reconstructed certificate failed to verify")
    return SearchReport(
        outcome=TRIVIALIZED,
        certificate=certificate,
        states_expanded=states_expanded,
        frontier_peak=frontier_peak,
        wall_time_ms=ms(),
    )


def _chain_steps(
    visited: dict, key: tuple, side_root: Presentation
) -> tuple[Presentation, tuple[CertStep, ...]]:
    """Replay the stored parent chain from the side's root to ``key``."""
    chain = []
    cur = key
    while visited[cur].parent is not None:
        parent_key, params = visited[cur].parent
        chain.append(params)
        cur = parent_key
    chain.reverse()
    work = side_root
    steps: list[CertStep] = []
    for params in chain:
        work, block = _edge_block(work, params)
        steps.extend(block)
    return work, tuple(steps)


def _invert_steps(
    end: Presentation, steps: tuple[CertStep, ...]
) -> tuple[Presentation, tuple[CertStep, ...]]:
    moves: list[ACMove] = []
    for mv, _ in reversed(steps):
        moves.extend(invert_move(mv))
    return apply_steps(end, moves)


def _reindex_move(mv: ACMove, mapping: dict[int, int]) -> ACMove:
    if isinstance(mv, Invert):
        return Invert(mapping[mv.relator])
    if isinstance(mv, Conjugate):
        return Conjugate(mapping[mv.relator], mv.generator, mv.sign)
    return MultiplyRight(mapping[mv.target], mapping[mv.source])


def _join_paths(
    visited_f: dict,
    visited_b: dict,
    meet_key: tuple,
    root_f: Presentation,
    root_b: Presentation,
) -> tuple[CertStep, ...]:
    """Certificate steps root_f -> meet -> root_b (up to canonical form)."""
    u, steps_f = _chain_steps(visited_f, meet_key, root_f)
    v, steps_b = _chain_steps(visited_b, meet_key, root_b)
    align, pi = _alignment_steps(u, v)
    # undo the backward path, acting through the relator correspondence
    _, back_steps = _invert_steps(v, steps_b)
    mapping = {pi[a] + 1: a + 1 for a in range(len(pi))}
    work, _ = apply_steps(u, [mv for mv, _ in align])
    reindexed: list[CertStep] = []
    for mv, _ in back_steps:
        reindexed.append((_reindex_move(mv, mapping), ()))
    final, reindexed_steps = apply_steps(work, [mv for mv, _ in reindexed])
    return steps_f + align + reindexed_steps


def _bidirectional(root, root_key, target, target_key, bounds: SearchBounds):
    visited_f = {root_key: _Node(root.relators, None, 0)}
    visited_b = {target_key: _Node(target.relators, None, 0)}
    if root_key == target_key:
        steps = _join_paths(visited_f, visited_b, root_key, root, target)
        return "found", steps, (0, 1)
    frontier_f = [root_key]
    frontier_b = [target_key]
    expanded = 0
    peak = 2
    memory = _estimate_bytes(root.relators) + _estimate_bytes(target.relators)
    depth_f = depth_b = 0
    generators = root.generator_count

    while frontier_f and frontier_b and depth_f + depth_b < bounds.max_depth:
        forward = len(frontier_f) <= len(frontier_b)
        frontier = frontier_f if forward else frontier_b
        visited = visited_f if forward else visited_b
        other = visited_b if forward else visited_f
        if forward:
            depth_f += 1
        else:
            depth_b += 1
        next_frontier = []
        for key in frontier:
            node = visited[key]
            expanded += 1
            for params, relators in _class_edges(node.relators, bounds.max_relator_length):
                new_key = canonical_key_tuple(
                    Presentation(generators, relators)
                )
                if new_key in visited:
                    continue
                if len(visited_f) + len(visited_b) >= bounds.max_states:
                    return "exhausted", "max_states", (expanded, peak)
                memory += _estimate_bytes(relators)
                if memory > bounds.max_memory_bytes:
                    return "aborted", "memory", (expanded, peak)
                visited[new_key] = _Node(relators, (key, params), node.depth + 1)
                next_frontier.append(new_key)
                if new_key in other:
                    steps = _join_paths(visited_f, visited_b, new_key, root, target)
                    return "found", steps, (expanded, peak)
        if forward:
            frontier_f = next_frontier
        else:
            frontier_b = next_frontier
        peak = max(peak, len(frontier_f) + len(frontier_b))
    return "exhausted", "max_depth", (expanded, peak)


def _forward_bfs(root, root_key, target_key, bounds: SearchBounds):
    visited = {root_key: _Node(root.relators, None, 0)}
    if root_key == target_key:
        return "found", (), (0, 1)
    frontier = [root_key]
    expanded = 0
    peak = 1
    memory = _estimate_bytes(root.relators)
    n = root.generator_count
    for depth in range(bounds.max_depth):
        next_frontier = []
        for key in frontier:
            node = visited[key]
            expanded += 1
            for params, relators in _class_edges(node.relators, bounds.max_relator_length):
                new_key = canonical_key_tuple(Presentation(n, relators))
                if new_key in visited:
                    continue
                if len(visited) >= bounds.max_states:
                    return "exhausted", "max_states", (expanded, peak)
                memory += _estimate_bytes(relators)
                if memory > bounds.max_memory_bytes:
                    return "aborted", "memory", (expanded, peak)
                visited[new_key] = _Node(relators, (key, params), node.depth + 1)
                next_frontier.append(new_key)
                if new_key == target_key:
                    _, steps = _chain_steps(visited, new_key, Presentation(n, root.relators))
                    return "found", steps, (expanded, peak)
        frontier = next_frontier
        peak = max(peak, len(frontier))
        if not frontier:
            break
    return "exhausted", "max_depth", (expanded, peak)


def _iddfs(root, root_key, target_key, bounds: SearchBounds):
    n = root.generator_count
    expanded = 0
    for limit in range(bounds.max_depth + 1):
        visited = {root_key: _Node(root.relators, None, 0)}
        if root_key == target_key:
            return "found", (), (expanded, 1)
        stack = [(root_key, 0)]
        while stack:
            key, depth = stack.pop()
            node = visited[key]
            if depth >= limit:
                continue
            expanded += 1
            for params, relators in _class_edges(node.relators, bounds.max_relator_length):
                new_key = canonical_key_tuple(Presentation(n, relators))
                known = visited.get(new_key)
                if known is not None and known.depth <= depth + 1:
                    continue
                if len(visited) >= bounds.max_states:
                    return "exhausted", "max_states", (expanded, len(stack))
                visited[new_key] = _Node(relators, (key, params), depth + 1)
                if new_key == target_key:
                    _, steps = _chain_steps(visited, new_key, Presentation(n, root.relators))
                    return "found", steps, (expanded, len(stack))
                stack.append((new_key, depth + 1))
    return "exhausted", "max_depth", (expanded, 0)
