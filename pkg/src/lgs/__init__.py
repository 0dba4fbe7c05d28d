"""Labeled Bratteli systems: subshifts, groupoids, algebras, certificates.

The package models finite truncations of labeled Bratteli diagrams with
shift dynamics.  :mod:`lgs.core` holds the system type and validation,
:mod:`lgs.sms` the symbolic matrix presentation, :mod:`lgs.language`
word/cylinder enumeration and the aperiodicity and freeness tests,
:mod:`lgs.groupoid` the finite model of the shift groupoid,
:mod:`lgs.algebra` the exact rational relation algebra, and
:mod:`lgs.equivalence` certificates and checkers for orbit equivalence,
eventual conjugacy, and two-sided conjugacy together with the groupoid
transports they induce.  :mod:`lgs.io` reads and writes the text
formats, and :mod:`lgs.cli` exposes everything as the ``lgs`` command.
"""

from .core import (
    DepthBudgetError,
    Edge,
    LabeledGraph,
    LambdaGraphSystem,
    LgsError,
    Symbol,
    ValidationReport,
    VertexRef,
    Violation,
    WindowTooSmallError,
    canonical_lgs,
    from_labeled_graph,
    full_shift,
    transition_matrices,
    truncate,
)
from .sms import (
    CompatibilityMismatch,
    CompatibilityReport,
    SymbolicMatrixSystem,
    from_lgs,
    to_lgs,
    verify_compatibility,
)
from .io import (
    CertificateSpec,
    FormatError,
    format_vertex,
    format_word,
    load_path,
    parse_cert,
    parse_cylinder_token,
    parse_graph,
    parse_lgs,
    parse_sms,
    parse_vertex_token,
    serialize_graph,
    serialize_lgs,
    serialize_sms,
    tokenize_word,
)
from .language import (
    ConditionReport,
    FreenessCell,
    FreenessReport,
    check_condition_i,
    check_essential_freeness,
    cylinders,
    gamma_plus,
    words,
)
from .groupoid import (
    BasicBisection,
    StableBisection,
    bisection,
    cocycle_value,
    compose,
    enumerate_elements,
    inverse,
    is_admissible,
    stable_cocycle,
    stable_compose,
    words_into,
)
from .algebra import (
    AlgebraElement,
    ExpressionError,
    Monomial,
    RelationCheck,
    RelationReport,
    generator,
    parse_expression,
    partial_isometry,
    projection,
    raise_level,
    stable_multiply,
    unit,
    verify_relations,
    word_operator,
    zero,
)
from .equivalence import (
    CheckResult,
    CodeApplicationError,
    CodeResolutionError,
    CoeCertificate,
    CylinderFunction,
    EcCertificate,
    EquivalenceReport,
    Fragment,
    GroupoidMap,
    OneSidedCode,
    PastClasses,
    StableIso,
    TwoSidedCertificate,
    all_fragments,
    build_stable_iso,
    certificate_from_spec,
    check_coe,
    check_eventual_conjugacy,
    check_groupoid_iso,
    check_two_sided,
    coe_to_groupoid_iso,
    past_equivalence_classes,
    shift_fragment,
    window_of,
)

__version__ = "0.1.0"
