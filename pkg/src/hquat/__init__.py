"""Quaternion function theory: algebra, exp/log, noncommutative word calculus,
line integrals, Cauchy/Laurent/residue machinery and Cauchy-Riemann checks."""

from .errors import (
    BranchDegeneracy,
    ConvergenceError,
    DomainError,
    PoleOnPath,
    QuatError,
    UnsupportedShape,
)
from .quat import BASIS, I, INF, J, K, L, ZERO, Quaternion, chordal, config, conj, inv, mul, project, tolerance
from .elementary import ArgVector, arg, exp, exp_derivative, ln_principal, polar
from .words import (
    ConjugatePhrase,
    Phrase,
    SandwichForm,
    Word,
    canonicalize,
    derivative,
    derivative_I,
    divisor_and_singularity,
    eliminate_conjugate,
    eval_phrase,
    extend_complex,
    hat_apply,
    left_form,
    monomial,
    primitive,
    recenter,
)
from .paths import Circle, Polyline, integral_dln, line_integral, stieltjes_integral, total_variation
from .cauchy import (
    argument_principle_check,
    cauchy_derivative,
    cauchy_eval,
    find_root,
    laurent_components,
    quaternion_index,
    residue_closed_form,
    residue_numeric,
    residue_theorem_check,
    residue_word_reduction,
    topological_index,
)
from .crcheck import check_conformal, check_cr, check_harmonic, frechet_jacobian

__version__ = "0.1.0"
