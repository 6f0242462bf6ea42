"""Free-group words, presentations and integer homology primitives.

A word is a tuple of nonzero ints: ``+g`` is the generator with index ``g``
(1-based), ``-g`` its inverse.  Presentations are immutable; every operation
returns a new value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Word = tuple[int, ...]


class ParseError(ValueError):
    """Raised on malformed presentation text; carries the offending position."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class Presentation:
    """A group presentation: a generator count and a list of relator words.

    ``names`` is display metadata only and does not take part in equality.
    Relators may be empty words (search states pass through them) but handle
    construction rejects them.
    """

    generator_count: int
    relators: tuple[Word, ...]
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.generator_count < 0:
            raise ValueError("generator count must be non-negative")
        for r in self.relators:
            for letter in r:
                if letter == 0 or abs(letter) > self.generator_count:
                    raise ValueError(f"letter {letter} outside generator range 1..{self.generator_count}")
        if self.names is not None and len(self.names) != self.generator_count:
            raise ValueError("names must match generator count")

    @property
    def balanced(self) -> bool:
        return len(self.relators) == self.generator_count

    def generator_names(self) -> tuple[str, ...]:
        if self.names is not None:
            return self.names
        if self.generator_count > 26:
            raise ValueError("default names support at most 26 generators")
        return tuple("abcdefghijklmnopqrstuvwxyz"[: self.generator_count])


def standard_presentation(n: int) -> Presentation:
    """The presentation with generators x1..xn and relators x1,...,xn."""
    return Presentation(n, tuple((i,) for i in range(1, n + 1)))


def inverse_word(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def free_reduce(w: Word) -> Word:
    """Delete adjacent inverse pairs until none remain.

    The result is the unique reduced word freely equal to ``w``.
    """
    out: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def free_reduce_with_positions(w: Word) -> tuple[Word, tuple[int, ...]]:
    """Free reduction plus the cancellation schedule that replays it.

    Each schedule entry is the index of the first letter of the cancelled
    pair in the word as it stood when that cancellation was applied.
    """
    out: list[int] = []
    positions: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            positions.append(len(out) - 1)
            out.pop()
        else:
            out.append(x)
    return tuple(out), tuple(positions)


def apply_cancellation(w: Word, pos: int) -> Word:
    """Delete the inverse pair at (pos, pos+1); used by certificate replay."""
    if pos < 0 or pos + 1 >= len(w):
        raise ValueError(f"cancellation position {pos} out of range")
    if w[pos] != -w[pos + 1]:
        raise ValueError(f"letters at {pos},{pos + 1} are not inverse")
    return w[:pos] + w[pos + 2 :]


def cyclic_reduce(w: Word) -> Word:
    """A minimal-length word in the conjugacy class of ``w``.

    Free-reduces, then trims matching first/last letters.
    """
    r = free_reduce(w)
    lo, hi = 0, len(r)
    while hi - lo >= 2 and r[lo] == -r[hi - 1]:
        lo += 1
        hi -= 1
    return r[lo:hi]


def cyclic_reduce_with_conjugator(w: Word) -> tuple[Word, Word]:
    """Return (core, u) with free_reduce(w) == u . core . u^-1 exactly."""
    r = free_reduce(w)
    lo, hi = 0, len(r)
    while hi - lo >= 2 and r[lo] == -r[hi - 1]:
        lo += 1
        hi -= 1
    return r[lo:hi], r[:lo]


def word_length(w: Word) -> int:
    return len(w)


# ---------------------------------------------------------------------------
# Presentation text format
#
# presentation := '<' ident (',' ident)* '|' [relator (',' relator)*] '>'
# relator      := term+
# term         := letter ('^' signed_int)?
#
# Lowercase letter = generator, uppercase = its inverse; whitespace is
# insignificant between tokens.  An empty relator list ("<a,b|>") denotes a
# free presentation.
# ---------------------------------------------------------------------------


def parse_presentation(text: str) -> Presentation:
    """Parse presentation text; relators are kept exactly as written."""
    i = 0
    n = len(text)

    def skip_ws():
        nonlocal i
        while i < n and text[i].isspace():
            i += 1

    skip_ws()
    if i >= n or text[i] != "<":
        raise ParseError("expected '<'", i)
    i += 1

    names: list[str] = []
    while True:
        skip_ws()
        if i >= n:
            raise ParseError("unterminated generator list", i)
        c = text[i]
        if not c.isalpha() or not c.islower():
            raise ParseError(f"expected lowercase generator name, got {c!r}", i)
        start = i
        i += 1
        if i < n and (text[i].isalnum() or text[i] == "_"):
            raise ParseError("generator names must be single lowercase letters", start)
        if c in names:
            raise ParseError(f"duplicate generator name {c!r}", start)
        names.append(c)
        skip_ws()
        if i < n and text[i] == ",":
            i += 1
            continue
        break

    skip_ws()
    if i >= n or text[i] != "|":
        raise ParseError("expected '|'", i)
    i += 1

    index = {c: k + 1 for k, c in enumerate(names)}
    relators: list[Word] = []
    skip_ws()
    if i < n and text[i] == ">":
        i += 1
    else:
        while True:
            letters: list[int] = []
            while True:
                skip_ws()
                if i >= n:
                    raise ParseError("unterminated relator", i)
                c = text[i]
                if c in ",>":
                    break
                if not c.isalpha():
                    raise ParseError(f"unexpected character {c!r}", i)
                low = c.lower()
                if low not in index:
                    raise ParseError(f"unknown generator {c!r}", i)
                letter = index[low] if c.islower() else -index[low]
                i += 1
                power = 1
                if i < n and text[i] == "^":
                    i += 1
                    sign = 1
                    if i < n and text[i] in "+-":
                        sign = -1 if text[i] == "-" else 1
                        i += 1
                    if i >= n or not text[i].isdigit():
                        raise ParseError("expected integer exponent", i)
                    start = i
                    while i < n and text[i].isdigit():
                        i += 1
                    power = sign * int(text[start:i])
                if power >= 0:
                    letters.extend([letter] * power)
                else:
                    letters.extend([-letter] * (-power))
            if not letters:
                raise ParseError("empty relator", i)
            relators.append(tuple(letters))
            if text[i] == ",":
                i += 1
                continue
            i += 1  # consume '>'
            break
    skip_ws()
    if i != n:
        raise ParseError("trailing input after '>'", i)
    return Presentation(len(names), tuple(relators), tuple(names))


def word_text(w: Word, names: tuple[str, ...]) -> str:
    out = []
    for x in w:
        c = names[abs(x) - 1]
        out.append(c if x > 0 else c.upper())
    return "".join(out)


def presentation_text(p: Presentation) -> str:
    """Render a presentation in the text grammar (inverse of parsing)."""
    names = p.generator_names()
    gens = ", ".join(names)
    rels = ", ".join(word_text(r, names) for r in p.relators)
    return f"<{gens} | {rels}>" if rels else f"<{gens} |>"


# ---------------------------------------------------------------------------
# Integer matrices and Smith normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegerMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entry shape does not match rows x cols")

    @staticmethod
    def identity(n: int) -> "IntegerMatrix":
        return IntegerMatrix(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @staticmethod
    def from_rows(rows: list[list[int]]) -> "IntegerMatrix":
        return IntegerMatrix(len(rows), len(rows[0]) if rows else 0, tuple(tuple(r) for r in rows))

    def mul(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                row.append(sum(self.entries[i][k] * other.entries[k][j] for k in range(self.cols)))
            out.append(tuple(row))
        return IntegerMatrix(self.rows, other.cols, tuple(out))


def abelianization_matrix(p: Presentation) -> IntegerMatrix:
    """Relator-by-generator exponent sums (the presentation matrix of H1)."""
    rows = []
    for r in p.relators:
        row = [0] * p.generator_count
        for x in r:
            row[abs(x) - 1] += 1 if x > 0 else -1
        rows.append(tuple(row))
    return IntegerMatrix(len(p.relators), p.generator_count, tuple(rows))


def smith_normal_form(m: IntegerMatrix) -> tuple[tuple[int, ...], IntegerMatrix, IntegerMatrix]:
    """Diagonalize over the integers: returns (diagonal, left, right).

    ``left . m . right`` is diagonal with non-negative entries d_i | d_{i+1};
    left and right are unimodular.  Python ints make overflow impossible.
    """
    R, C = m.rows, m.cols
    a = [list(row) for row in m.entries]
    left = [[1 if i == j else 0 for j in range(R)] for i in range(R)]
    right = [[1 if i == j else 0 for j in range(C)] for i in range(C)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        left[i], left[j] = left[j], left[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in right:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, q):
        # row[dst] += q * row[src]
        arow, lsrc, ldst = a[src], left[src], left[dst]
        adst = a[dst]
        for k in range(C):
            adst[k] += q * arow[k]
        for k in range(R):
            ldst[k] += q * lsrc[k]

    def add_col(src, dst, q):
        for row in a:
            row[dst] += q * row[src]
        for row in right:
            row[dst] += q * row[src]

    t = 0
    limit = min(R, C)
    while t < limit:
        # pivot: minimal |entry| in the remaining block
        pivot = None
        best = None
        for i in range(t, R):
            for j in range(t, C):
                v = a[i][j]
                if v != 0 and (best is None or abs(v) < best):
                    best = abs(v)
                    pivot = (i, j)
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])
        while True:
            # clear column t
            dirty = False
            for i in range(t + 1, R):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    add_row(t, i, -q)
                    if a[i][t]:
                        swap_rows(t, i)
                        dirty = True
            if dirty:
                continue
            for j in range(t + 1, C):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    add_col(t, j, -q)
                    if a[t][j]:
                        swap_cols(t, j)
                        dirty = True
                        break
            if dirty:
                continue
            # enforce divisibility: d_t must divide the remaining block
            offender = None
            d = a[t][t]
            for i in range(t + 1, R):
                for j in range(t + 1, C):
                    if a[i][j] % d:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(offender, t, 1)
        if a[t][t] < 0:
            a[t] = [-v for v in a[t]]
            left[t] = [-v for v in left[t]]
        t += 1

    diagonal = tuple(a[k][k] for k in range(limit))
    return (
        diagonal,
        IntegerMatrix(R, R, tuple(tuple(row) for row in left)),
        IntegerMatrix(C, C, tuple(tuple(row) for row in right)),
    )


def snf_diagonal(p: Presentation) -> tuple[int, ...]:
    return smith_normal_form(abelianization_matrix(p))[0]


def homology_summary(p: Presentation) -> dict:
    """H1 of the presented group as free rank plus torsion orders."""
    diag = snf_diagonal(p)
    rank_mat = sum(1 for d in diag if d != 0)
    return {
        "free_rank": p.generator_count - rank_mat,
        "torsion": [d for d in diag if d > 1],
        "snf_diagonal": list(diag),
    }


def is_perfect_abelianization(p: Presentation) -> bool:
    """True when the exponent matrix has full rank n with unit invariant factors.

    A balanced presentation of the trivial group always satisfies this, so a
    failure soundly refutes triviality.
    """
    diag = snf_diagonal(p)
    return len(diag) >= p.generator_count and all(d == 1 for d in diag[: p.generator_count])
