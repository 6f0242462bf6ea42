"""The Andrews-Curtis move calculus: primitive moves, derived moves,
replayable certificates and canonical forms for deduplication.

Primitive moves (relator and generator indices are 1-based):

* ``Invert(i)``            -- r_i <- r_i^-1
* ``Conjugate(i, g, s)``   -- r_i <- g^-s . r_i . g^s
* ``MultiplyRight(i, j)``  -- r_i <- r_i . r_j   (i != j)

Left multiplication and conjugation by a word are derived, not primitive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .words import (
    Presentation,
    Word,
    apply_cancellation,
    cyclic_reduce,
    free_reduce,
    free_reduce_with_positions,
    inverse_word,
    parse_presentation,
    presentation_text,
)


class InvalidMove(ValueError):
    pass


class CertificateReplayError(ValueError):
    """The move sequence itself is ill-formed (bad index, bad cancellation)."""


@dataclass(frozen=True)
class Invert:
    relator: int


@dataclass(frozen=True)
class Conjugate:
    relator: int
    generator: int
    sign: int


@dataclass(frozen=True)
class MultiplyRight:
    target: int
    source: int


ACMove = Invert | Conjugate | MultiplyRight


def _check_move(p: Presentation, m: ACMove) -> None:
    mcount = len(p.relators)
    if isinstance(m, Invert):
        if not 1 <= m.relator <= mcount:
            raise InvalidMove(f"relator index {m.relator} out of range")
    elif isinstance(m, Conjugate):
        if not 1 <= m.relator <= mcount:
            raise InvalidMove(f"relator index {m.relator} out of range")
        if not 1 <= m.generator <= p.generator_count:
            raise InvalidMove(f"generator index {m.generator} out of range")
        if m.sign not in (1, -1):
            raise InvalidMove(f"sign must be +-1, got {m.sign}")
    elif isinstance(m, MultiplyRight):
        if not 1 <= m.target <= mcount or not 1 <= m.source <= mcount:
            raise InvalidMove("relator index out of range")
        if m.target == m.source:
            raise InvalidMove("MultiplyRight requires distinct relators")
    else:
        raise InvalidMove(f"unknown move {m!r}")


def move_target(m: ACMove) -> int:
    return m.target if isinstance(m, MultiplyRight) else m.relator


def moved_word(p: Presentation, m: ACMove) -> Word:
    """The changed relator after ``m``, by plain concatenation (no cancellation)."""
    _check_move(p, m)
    if isinstance(m, Invert):
        return inverse_word(p.relators[m.relator - 1])
    if isinstance(m, Conjugate):
        g = m.generator if m.sign > 0 else -m.generator
        return (-g,) + p.relators[m.relator - 1] + (g,)
    return p.relators[m.target - 1] + p.relators[m.source - 1]


def apply_move(p: Presentation, m: ACMove, reduce: bool = True) -> Presentation:
    """Apply one primitive move.

    With ``reduce`` the changed relator is freely reduced; without it the
    word is kept as the bare concatenation.
    """
    w = moved_word(p, m)
    if reduce:
        w = free_reduce(w)
    idx = move_target(m) - 1
    relators = p.relators[:idx] + (w,) + p.relators[idx + 1 :]
    return Presentation(p.generator_count, relators, p.names)


def apply_move_with_schedule(p: Presentation, m: ACMove) -> tuple[Presentation, tuple[int, ...]]:
    """Apply ``m`` with full free reduction, returning the cancellation schedule."""
    w, sched = free_reduce_with_positions(moved_word(p, m))
    idx = move_target(m) - 1
    relators = p.relators[:idx] + (w,) + p.relators[idx + 1 :]
    return Presentation(p.generator_count, relators, p.names), sched


def invert_move(m: ACMove) -> tuple[ACMove, ...]:
    """A primitive sequence undoing ``m`` exactly (on reduced relators)."""
    if isinstance(m, Invert):
        return (m,)
    if isinstance(m, Conjugate):
        return (Conjugate(m.relator, m.generator, -m.sign),)
    return (Invert(m.source), MultiplyRight(m.target, m.source), Invert(m.source))


def conjugate_by_word(relator: int, w: Word) -> tuple[ACMove, ...]:
    """Letter-by-letter expansion of r <- w^-1 . r . w."""
    return tuple(Conjugate(relator, abs(x), 1 if x > 0 else -1) for x in w)


def multiply_left(target: int, source: int) -> tuple[ACMove, ...]:
    """Expansion of r_i <- r_j . r_i as invert / right-multiply / invert."""
    return (
        Invert(target),
        Invert(source),
        MultiplyRight(target, source),
        Invert(source),
        Invert(target),
    )


def derived_moves(p: Presentation) -> list[tuple[str, tuple[ACMove, ...]]]:
    """All left-multiplications available on ``p`` as primitive sequences."""
    out = []
    m = len(p.relators)
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            if i != j:
                out.append((f"mull {i} {j}", multiply_left(i, j)))
    return out


# ---------------------------------------------------------------------------
# Canonical forms
# ---------------------------------------------------------------------------


def canonical_word(w: Word) -> Word:
    """Lexicographically least word among all rotations of w and of w^-1.

    ``w`` is assumed freely and cyclically reduced.
    """
    if not w:
        return w
    best: Word | None = None
    L = len(w)
    for cand in (w, inverse_word(w)):
        doubled = cand + cand
        for s in range(L):
            rot = doubled[s : s + L]
            if best is None or rot < best:
                best = rot
    return best  # type: ignore[return-value]


def canonical_relators(p: Presentation) -> tuple[Word, ...]:
    normed = [canonical_word(cyclic_reduce(r)) for r in p.relators]
    normed.sort(key=lambda w: (len(w), w))
    return tuple(normed)


def _relabel_letter(x: int, perm: tuple[int, ...], flips: tuple[int, ...]) -> int:
    g = abs(x) - 1
    y = perm[g] * flips[g]
    return y if x > 0 else -y


def canonical_key_tuple(p: Presentation, relabel: bool = False) -> tuple:
    """Hashable key equal across free/cyclic reduction, relator inversion and
    reordering; with ``relabel``, also across generator permutation/inversion."""
    base = canonical_relators(p)
    if not relabel:
        return (p.generator_count, base)
    n = p.generator_count
    best = None
    for perm in itertools.permutations(range(1, n + 1)):
        for mask in range(1 << n):
            flips = tuple(-1 if mask >> k & 1 else 1 for k in range(n))
            normed = [
                canonical_word(tuple(_relabel_letter(x, perm, flips) for x in r))
                for r in base
            ]
            normed.sort(key=lambda w: (len(w), w))
            cand = tuple(normed)
            if best is None or cand < best:
                best = cand
    return (n, best)


def canonical_form(p: Presentation, relabel: bool = False) -> bytes:
    """Opaque byte key for search deduplication."""
    n, rels = canonical_key_tuple(p, relabel)
    body = b";".join(b",".join(b"%d" % x for x in r) for r in rels)
    return b"%d|" % n + body


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

CertStep = tuple[ACMove, tuple[int, ...]]


@dataclass(frozen=True)
class Certificate:
    """A replayable witness: a start presentation plus moves, each followed by
    its scheduled free cancellations."""

    start: Presentation
    steps: tuple[CertStep, ...]

    @property
    def moves(self) -> tuple[ACMove, ...]:
        return tuple(m for m, _ in self.steps)

    @property
    def cancellation_schedule(self) -> tuple[tuple[int, ...], ...]:
        return tuple(s for _, s in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def replay_certificate(c: Certificate) -> Presentation:
    """Replay moves with their schedules; raises CertificateReplayError on
    any ill-formed step."""
    p = c.start
    for m, sched in c.steps:
        try:
            p = apply_move(p, m, reduce=False)
        except InvalidMove as e:
            raise CertificateReplayError(str(e)) from e
        idx = move_target(m) - 1
        w = p.relators[idx]
        for pos in sched:
            try:
                w = apply_cancellation(w, pos)
            except ValueError as e:
                raise CertificateReplayError(str(e)) from e
        relators = p.relators[:idx] + (w,) + p.relators[idx + 1 :]
        p = Presentation(p.generator_count, relators, p.names)
    return p


def verify_certificate(c: Certificate, expected: Presentation) -> bool:
    """True iff the replay of ``c`` matches ``expected`` up to canonical form."""
    final = replay_certificate(c)
    return canonical_key_tuple(final) == canonical_key_tuple(expected)


def concat_certificates(a: Certificate, b: Certificate) -> Certificate:
    if replay_certificate(a) != b.start:
        raise CertificateReplayError("second certificate does not start where the first ends")
    return Certificate(a.start, a.steps + b.steps)


def apply_steps(p: Presentation, moves) -> tuple[Presentation, tuple[CertStep, ...]]:
    """Apply moves with full free reduction, collecting certificate steps."""
    steps = []
    for m in moves:
        p, sched = apply_move_with_schedule(p, m)
        steps.append((m, sched))
    return p, tuple(steps)


def reverse_certificate(c: Certificate) -> Certificate:
    """A certificate from the replay endpoint back to (a conjugate-equivalent
    of) the start, built move-by-move via invert_move."""
    end = replay_certificate(c)
    moves = []
    for m, _ in reversed(c.steps):
        moves.extend(invert_move(m))
    final, steps = apply_steps(end, moves)
    return Certificate(end, steps)


# --- certificate text format ----------------------------------------------
#
#   START <presentation-text>
#   INV i | CONJ i g s | MULR i j      one move per line
#   REDUCE i pos                       scheduled cancellation (0-based pos)


def serialize_certificate(c: Certificate) -> str:
    lines = [f"START {presentation_text(c.start)}"]
    for m, sched in c.steps:
        if isinstance(m, Invert):
            lines.append(f"INV {m.relator}")
        elif isinstance(m, Conjugate):
            lines.append(f"CONJ {m.relator} {m.generator} {m.sign:+d}")
        else:
            lines.append(f"MULR {m.target} {m.source}")
        for pos in sched:
            lines.append(f"REDUCE {move_target(m)} {pos}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str) -> Certificate:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("START "):
        raise CertificateReplayError("certificate must begin with a START line")
    start = parse_presentation(lines[0][len("START ") :])
    steps: list[CertStep] = []
    current: tuple[ACMove, list[int]] | None = None

    def flush():
        if current is not None:
            steps.append((current[0], tuple(current[1])))

    for ln in lines[1:]:
        parts = ln.split()
        op = parts[0]
        if op == "INV":
            flush()
            current = (Invert(int(parts[1])), [])
        elif op == "CONJ":
            flush()
            current = (Conjugate(int(parts[1]), int(parts[2]), int(parts[3])), [])
        elif op == "MULR":
            flush()
            current = (MultiplyRight(int(parts[1]), int(parts[2])), [])
        elif op == "REDUCE":
            if current is None:
                raise CertificateReplayError("REDUCE before any move")
            if int(parts[1]) != move_target(current[0]):
                raise CertificateReplayError("REDUCE relator does not match the move target")
            current[1].append(int(parts[2]))
        else:
            raise CertificateReplayError(f"unknown certificate line {ln!r}")
    flush()
    return Certificate(start, tuple(steps))
