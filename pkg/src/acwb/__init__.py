"""Andrews-Curtis workbench: move calculus, handle structures, topology-op
compilation, bounded trivialization search and sphere-like recognition for
balanced group presentations."""

__version__ = "0.1.0"

from .words import (  # noqa: F401
    ParseError,
    Presentation,
    abelianization_matrix,
    cyclic_reduce,
    free_reduce,
    parse_presentation,
    presentation_text,
    smith_normal_form,
    snf_diagonal,
    standard_presentation,
)
from .moves import (  # noqa: F401
    ACMove,
    Certificate,
    Conjugate,
    Invert,
    MultiplyRight,
    apply_move,
    canonical_form,
    verify_certificate,
)
from .handles import (  # noqa: F401
    AttachmentChoice,
    HandleStructure,
    build_handle_structure,
    enumerate_choices,
    reconstruct_presentation,
    sticky_end,
    surface_invariants,
    total_space_euler,
)
from .search import SearchBounds, SearchReport, scramble, trivialization_search  # noqa: F401
from .recognizer import OracleConfig, Verdict, recognize  # noqa: F401
