"""Typed lambda calculi with exponential modalities: terms, sharing
terms, sized type derivations, principal typing with exponent
constraints, reduction, and elementary bounds."""

import sys as _sys

# derivations and translations recurse along term spines; the default
# interpreter limit is too tight for the large generated inputs
if _sys.getrecursionlimit() < 20000:
    _sys.setrecursionlimit(20000)

from .eatypes import (EAType, TAlg, TArrow, TBang, TVar, bang, is_modal,
                      parse_type, strip_bangs, type_to_str)
from .terms import (Abs, App, Const, EAbs, EApp, EContract, EPromote, EVar,
                    NameGen, Term, alpha_eq, free_vars, is_value, length,
                    parse_eaterm, parse_term, eaterm_to_str, term_to_str)
from .etas import (ContextTriple, EtasCheckError, EtasDerivation,
                   LevelProfile, check_etas_derivation, is_typing, measures,
                   reduce_derivation, rename_free, transform)
from .schemes import (SchemeSubstitution, Substitution, TypeScheme,
                      scheme_to_str)
from .unify import UnifyFailure, unify, unify_with_instance
from .linsolve import solve, entails
from .infer import InstantiateError, PrincipalTyping, instantiate, pt, typable
from .ea import (NealCheckError, NealDerivation, check_neal, ea_step,
                 etas_to_neal, is_expansion, neal_to_etas,
                 reduce_administrative, simulate_cbv, translate_sharp,
                 translate_star)
from .algebra import (AlgebraError, AlgebraSignature, coerc_term, exp_term,
                      load_signature, numeral, numeral_value, tower_term,
                      unary_signature)
from .evaluate import (BoundTable, EvalError, FuelExhausted, Trace,
                       delta_reduce_derivation, elementary_bounds,
                       instrumented_reduce, normalize, step)
from .serial import (SerialError, etas_from_text, etas_to_text,
                     neal_from_text, neal_to_text)
