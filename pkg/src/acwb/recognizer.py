"""The recognition loop: cap, test each component, cut tracked annuli,
repeat — with a restricted, honest step 2 and step 3.

The product test for a capped component is replaced by necessary
combinatorial checks (capped sticky surface a sphere) combined with either
of two sufficient oracles:

* greedy collapse — iterated elementary collapses of the component's handle
  structure: cancel adjacent inverse strip pairs (choosing slots freely),
  discard emptied plates as capped spheres, and cancel beam/plate pairs that
  meet in a single strip;
* certificate search — a verified trivialization certificate for the
  component's presentation witnesses sphere-likeness.

Because the annulus family in step 3 is only the tracked one (not provably
maximal), a failed loop never refutes: the verdict degrades to Unknown.
Only the abelianization gate can return NotSphereLike.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .handles import (
    HandleStructure,
    build_handle_structure,
    enumerate_choices,
    structure_components,
)
from .moves import Certificate
from .search import (
    TRIVIALIZED,
    SearchBounds,
    trivialization_search,
)
from .topology import TrackedSpace, cap_off, from_handle_structure
from .topology import cut_tracked_annuli as _cut_tracked_annuli
from .words import (
    Presentation,
    cyclic_reduce,
    is_perfect_abelianization,
    snf_diagonal,
)

SPHERE_LIKE = "sphere_like"
NOT_SPHERE_LIKE = "not_sphere_like"
UNKNOWN = "unknown"

NONTRIVIAL_HOMOLOGY = "nontrivial_homology"


@dataclass(frozen=True)
class OracleConfig:
    use_certificate_oracle: bool = True
    use_greedy_oracle: bool = True
    search_bounds: SearchBounds = field(default_factory=SearchBounds)

    def __post_init__(self):
        if not (self.use_certificate_oracle or self.use_greedy_oracle):
            raise ValueError("at least one oracle must be enabled")


@dataclass
class Verdict:
    kind: str
    reason: str | None = None
    witness: list | None = None  # transcript lines and/or certificates
    choices_tried: int = 0
    iterations: int = 0
    measure_trace: list[int] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def cut_tracked_annuli(ts: TrackedSpace) -> TrackedSpace:
    """Cut along all tracked vertical annuli (see topology module)."""
    return _cut_tracked_annuli(ts)


def complexity_measure(ts: TrackedSpace) -> int:
    """Open boundary circles, plus tracked annuli, plus the per-component
    sphere defect of the sticky surface.  Strictly decreases across every
    working loop iteration, bounding the number of iterations."""
    measure = ts.invariants.boundary_circles_s
    measure += len(ts.tracked_annuli())
    for comp in ts.components():
        measure += max(0, 2 - comp.euler_s)
    return measure


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def _component_presentation(base: HandleStructure, pieces: frozenset) -> Presentation | None:
    """The sub-presentation spanned by the given base pieces."""
    comps = structure_components(base)
    beams: list[int] = []
    plates: list[int] = []
    for piece in sorted(pieces):
        if piece >= len(comps):
            return None
        beams.extend(comps[piece]["beams"])
        plates.extend(comps[piece]["plates"])
    beams.sort()
    remap = {b: k + 1 for k, b in enumerate(beams)}
    relators = []
    for pi in sorted(plates):
        word = tuple(
            (1 if s.sign > 0 else -1) * remap[s.beam] for s in base.plates[pi].strips
        )
        relators.append(word)
    return Presentation(len(beams), tuple(relators))


def greedy_collapse_words(p: Presentation) -> tuple[bool, list[str]]:
    """Word-level elementary collapse: cancel adjacent (and wrap-around)
    inverse pairs, discard emptied relators, and remove a relator consisting
    of a single letter whose generator occurs nowhere else, together with
    that generator.  True iff everything collapses away."""
    relators = [list(r) for r in p.relators]
    alive_gens = set(range(1, p.generator_count + 1))
    transcript: list[str] = []
    changed = True
    while changed:
        changed = False
        for idx, w in enumerate(relators):
            reduced = list(cyclic_reduce(tuple(w)))
            if len(reduced) < len(w):
                transcript.append(f"cancel pairs in relator {idx}: {len(w)}->{len(reduced)}")
                relators[idx] = reduced
                changed = True
        kept = []
        for idx, w in enumerate(relators):
            if w:
                kept.append(w)
            else:
                transcript.append("discard emptied plate as a capped sphere")
                changed = True
        relators = kept
        counts: dict[int, int] = {}
        for w in relators:
            for x in w:
                counts[abs(x)] = counts.get(abs(x), 0) + 1
        for idx, w in enumerate(relators):
            if len(w) == 1 and counts.get(abs(w[0]), 0) == 1:
                g = abs(w[0])
                transcript.append(f"cancel beam {g} against its single-strip plate")
                relators.pop(idx)
                alive_gens.discard(g)
                changed = True
                break
    success = not relators and not alive_gens
    transcript.append("collapsed to nothing" if success else "stuck")
    return success, transcript


def oracle_greedy_collapse(ts: TrackedSpace, component_id: int) -> bool:
    """Greedy collapse of a fully capped component; False when stuck or when
    the component no longer corresponds to base pieces."""
    ok, _ = _greedy_with_transcript(ts, component_id)
    return ok


def _greedy_with_transcript(ts: TrackedSpace, component_id: int) -> tuple[bool, list[str]]:
    comp = ts.components()[component_id]
    if comp.live_circles:
        return False, ["component is not fully capped"]
    if ts.base is None:
        return False, ["component has no underlying handle structure"]
    sub = _component_presentation(ts.base, comp.pieces)
    if sub is None:
        return False, ["component pieces are not base pieces"]
    return greedy_collapse_words(sub)


def oracle_certificate(p: Presentation, bounds: SearchBounds) -> Certificate | None:
    """A verified trivialization certificate, when the bounded search finds
    one; absence is never a refutation."""
    if not p.balanced or not all(p.relators):
        return None
    report = trivialization_search(p, bounds)
    if report.outcome == TRIVIALIZED:
        return report.certificate
    return None


# ---------------------------------------------------------------------------
# The recognition loop
# ---------------------------------------------------------------------------


def _component_passes(
    ts: TrackedSpace, comp, cfg: OracleConfig, witness: list, diagnostics: list[str]
) -> bool:
    if comp.s_count == 0:
        diagnostics.append(
            f"component {comp.id} has an empty sticky part after capping"
        )
        return False
    sphere_shaped = (
        not comp.live_circles and comp.euler_s == 2 and comp.s_count == 1
    )
    if sphere_shaped and cfg.use_greedy_oracle:
        ok, transcript = _greedy_with_transcript(ts, comp.id)
        if ok:
            witness.append({"component": comp.id, "greedy": transcript})
            return True
    if cfg.use_certificate_oracle and ts.base is not None:
        sub = _component_presentation(ts.base, comp.pieces)
        if sub is not None:
            cert = oracle_certificate(sub, cfg.search_bounds)
            if cert is not None:
                witness.append({"component": comp.id, "certificate": cert})
                return True
    return False


def recognize(
    p: Presentation, cfg: OracleConfig | None = None, choice_limit: int = 8
) -> Verdict:
    """Run the restricted recognition algorithm over the attachment choices
    of ``p`` (up to ``choice_limit``).

    A failed abelianization gate refutes soundly; oracle failure alone never
    does, because the tracked annulus family is not known to be maximal.
    """
    if cfg is None:
        cfg = OracleConfig()
    if not p.balanced:
        raise ValueError("recognition requires a balanced presentation")
    if not all(p.relators):
        raise ValueError("recognition requires non-empty relators")

    if not is_perfect_abelianization(p):
        return Verdict(
            kind=NOT_SPHERE_LIKE,
            reason=NONTRIVIAL_HOMOLOGY,
            diagnostics=[f"invariant factors {snf_diagonal(p)}"],
        )

    enumeration = enumerate_choices(p, choice_limit)
    verdict = Verdict(kind=UNKNOWN, reason="choices_exhausted")
    total_iterations = 0
    for choice_index, choice in enumerate(enumeration.choices):
        h = build_handle_structure(p, choice)
        ts = from_handle_structure(h)
        measure = complexity_measure(ts)
        trace = [measure]
        diagnostics: list[str] = []
        witness: list = []
        while True:
            before = measure
            capped = cap_off(ts)
            worked = capped is not ts
            ts = capped
            if all(
                _component_passes(ts, comp, cfg, witness, diagnostics)
                for comp in ts.components()
            ):
                trace.append(complexity_measure(ts))
                return Verdict(
                    kind=SPHERE_LIKE,
                    witness=witness,
                    choices_tried=choice_index + 1,
                    iterations=total_iterations + 1,
                    measure_trace=trace,
                    diagnostics=diagnostics,
                )
            cut = _cut_tracked_annuli(ts)
            if cut is not ts:
                ts = cut
                worked = True
            measure = complexity_measure(ts)
            if not worked:
                diagnostics.append("step 3 exhausted: no tracked annuli to cut")
                break
            total_iterations += 1
            trace.append(measure)
            if measure >= before:
                diagnostics.append("measure failed to decrease; stopping this choice")
                break
        verdict = Verdict(
            kind=UNKNOWN,
            reason="choices_exhausted",
            choices_tried=choice_index + 1,
            iterations=total_iterations,
            measure_trace=trace,
            diagnostics=diagnostics,
        )
    if enumeration.truncated:
        verdict.reason = "choice_limit_reached"
    return verdict
