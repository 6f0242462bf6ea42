import random

import pytest
from hypothesis import given, settings, strategies as st

from acwb.moves import (
    Certificate,
    CertificateReplayError,
    Conjugate,
    Invert,
    InvalidMove,
    MultiplyRight,
    apply_move,
    apply_steps,
    canonical_form,
    canonical_key_tuple,
    concat_certificates,
    conjugate_by_word,
    derived_moves,
    invert_move,
    multiply_left,
    parse_certificate,
    replay_certificate,
    reverse_certificate,
    serialize_certificate,
    verify_certificate,
)
from acwb.words import Presentation, free_reduce, parse_presentation, snf_diagonal


def random_presentation(rng, n=2, relators=2, maxlen=6):
    rels = []
    for _ in range(relators):
        while True:
            w = free_reduce(
                tuple(rng.choice([1, -1]) * rng.randint(1, n) for _ in range(rng.randint(1, maxlen)))
            )
            if w:
                rels.append(w)
                break
    return Presentation(n, tuple(rels))


class TestApplyMove:
    def test_conjugate_example(self):
        p = parse_presentation("<a, b | a, b>")
        q = apply_move(p, Conjugate(2, 1, 1), reduce=False)
        assert q == parse_presentation("<a, b | a, AbA^-1>") or q.relators == ((1,), (-1, 2, 1))

    def test_multiply_example(self):
        p = parse_presentation("<a, b | b, a>")
        q = apply_move(p, MultiplyRight(2, 1), reduce=False)
        assert q.relators == ((2,), (1, 2))

    def test_invert(self):
        p = parse_presentation("<x | x>")
        assert apply_move(p, Invert(1)).relators == ((-1,),)

    def test_concatenation_keeps_cancellable_pairs(self):
        p = Presentation(2, ((1,), (-1,)))
        q = apply_move(p, MultiplyRight(1, 2), reduce=False)
        assert q.relators[0] == (1, -1)
        q = apply_move(p, MultiplyRight(1, 2), reduce=True)
        assert q.relators[0] == ()

    def test_index_errors(self):
        p = parse_presentation("<x | x>")
        with pytest.raises(InvalidMove):
            apply_move(p, Invert(2))
        with pytest.raises(InvalidMove):
            apply_move(p, Conjugate(1, 2, 1))
        with pytest.raises(InvalidMove):
            apply_move(p, MultiplyRight(1, 1))


class TestInvertMove:
    def test_involution(self):
        assert invert_move(Invert(1)) == (Invert(1),)

    def test_conjugate(self):
        assert invert_move(Conjugate(2, 1, 1)) == (Conjugate(2, 1, -1),)

    def test_multiply_round_trip_on_random_presentations(self):
        rng = random.Random(5)
        for _ in range(100):
            p = random_presentation(rng)
            for m in (
                MultiplyRight(1, 2),
                MultiplyRight(2, 1),
                Invert(1),
                Conjugate(2, 1, -1),
            ):
                q = apply_move(p, m)
                for inv in invert_move(m):
                    q = apply_move(q, inv)
                assert q == p


class TestDerivedMoves:
    def test_multiply_left_replay(self):
        p = parse_presentation("<a, b | a, b>")
        q, _ = apply_steps(p, multiply_left(2, 1))
        assert q.relators == ((1,), (1, 2))  # r2 <- r1 . r2

    def test_conjugate_by_word_replay(self):
        rng = random.Random(11)
        for _ in range(50):
            p = random_presentation(rng)
            w = tuple(rng.choice([1, -1]) * rng.randint(1, 2) for _ in range(rng.randint(0, 4)))
            q, _ = apply_steps(p, conjugate_by_word(1, w))
            want = free_reduce(tuple(-x for x in reversed(w)) + p.relators[0] + w)
            assert q.relators[0] == want

    def test_conjugate_by_empty_word(self):
        assert conjugate_by_word(1, ()) == ()

    def test_enumeration_replays(self):
        p = parse_presentation("<a, b | a, b>")
        for name, seq in derived_moves(p):
            q, _ = apply_steps(p, seq)
            i, j = (int(x) for x in name.split()[1:])
            want = free_reduce(p.relators[j - 1] + p.relators[i - 1])
            assert q.relators[i - 1] == want


class TestCanonicalForm:
    def test_conjugates_collapse(self):
        a = Presentation(2, ((1, 2, -1),))
        b = Presentation(2, ((2,),))
        assert canonical_form(a) == canonical_form(b)

    def test_sorting(self):
        a = parse_presentation("<x, y | y, x>")
        b = parse_presentation("<x, y | x, y>")
        assert canonical_form(a) == canonical_form(b)

    def test_inversion(self):
        assert canonical_form(parse_presentation("<x | X>")) == canonical_form(
            parse_presentation("<x | x>")
        )

    def test_relabel_flag(self):
        a = parse_presentation("<x, y | xx, y>")
        b = parse_presentation("<x, y | yy, x>")
        assert canonical_form(a) != canonical_form(b)
        assert canonical_form(a, relabel=True) == canonical_form(b, relabel=True)

    @given(st.data())
    @settings(max_examples=150, deadline=None)
    def test_invariance_under_non_multiplying_moves(self, data):
        rng = random.Random(data.draw(st.integers(0, 10**6)))
        p = random_presentation(rng)
        key = canonical_key_tuple(p)
        moves = [Invert(1), Invert(2)] + [
            Conjugate(i, g, s) for i in (1, 2) for g in (1, 2) for s in (1, -1)
        ]
        m = moves[data.draw(st.integers(0, len(moves) - 1))]
        assert canonical_key_tuple(apply_move(p, m)) == key

    @given(st.data())
    @settings(max_examples=150, deadline=None)
    def test_snf_preserved_by_every_move(self, data):
        rng = random.Random(data.draw(st.integers(0, 10**6)))
        p = random_presentation(rng)
        moves = [Invert(1), MultiplyRight(1, 2), MultiplyRight(2, 1)] + [
            Conjugate(i, g, s) for i in (1, 2) for g in (1, 2) for s in (1, -1)
        ]
        m = moves[data.draw(st.integers(0, len(moves) - 1))]
        assert snf_diagonal(apply_move(p, m)) == snf_diagonal(p)


class TestCertificates:
    def test_conjugation_example(self):
        start = parse_presentation("<a, b | a, b>")
        expected = Presentation(2, ((1,), (-1, 2, 1)))
        cert = Certificate(start, ((Conjugate(2, 1, 1), ()),))
        assert verify_certificate(cert, expected)

    def test_empty_certificate(self):
        p = parse_presentation("<x | x>")
        assert verify_certificate(Certificate(p, ()), p)

    def test_inversion_matches_canonically(self):
        p = parse_presentation("<x | x>")
        cert = Certificate(p, ((Invert(1), ()),))
        assert verify_certificate(cert, p)

    def test_replay_failure_is_distinct(self):
        p = parse_presentation("<x | x>")
        cert = Certificate(p, ((Invert(3), ()),))
        with pytest.raises(CertificateReplayError):
            replay_certificate(cert)

    def test_bad_schedule(self):
        p = parse_presentation("<x | x>")
        cert = Certificate(p, ((Invert(1), (0,)),))
        with pytest.raises(CertificateReplayError):
            replay_certificate(cert)

    def test_serialization_round_trip(self):
        start = parse_presentation("<a, b | a, b>")
        moves = [Conjugate(2, 1, 1), MultiplyRight(1, 2), Invert(2)]
        final, steps = apply_steps(start, moves)
        cert = Certificate(start, steps)
        text = serialize_certificate(cert)
        assert parse_certificate(text) == cert
        assert replay_certificate(parse_certificate(text)) == final

    def test_concat_and_reverse(self):
        rng = random.Random(3)
        p = random_presentation(rng)
        mid, steps1 = apply_steps(p, [Conjugate(1, 2, 1), MultiplyRight(2, 1)])
        end, steps2 = apply_steps(mid, [Invert(1)])
        a = Certificate(p, steps1)
        b = Certificate(mid, steps2)
        joined = concat_certificates(a, b)
        assert replay_certificate(joined) == end
        back = reverse_certificate(joined)
        assert canonical_key_tuple(replay_certificate(back)) == canonical_key_tuple(p)
