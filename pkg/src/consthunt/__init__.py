"""consthunt: propose exact closed forms that a float plausibly approximates."""

from .numcore import BigFloat, SignificandKey, agreement, parse_float_input
from .exprs import (
    Catalog,
    DEFAULT_CATALOG,
    Expr,
    entropy10,
    evaluate,
    length_complexity,
    parse_text,
    simplify,
    to_text,
)
from .rank import Candidate, score
from .pipeline import HuntReport, HuntRequest, hunt, hunt_with_persistence, nsimplify

__version__ = "0.1.0"

__all__ = [
    "BigFloat", "SignificandKey", "agreement", "parse_float_input",
    "Catalog", "DEFAULT_CATALOG", "Expr", "entropy10", "evaluate",
    "length_complexity", "parse_text", "simplify", "to_text",
    "Candidate", "score",
    "HuntReport", "HuntRequest", "hunt", "hunt_with_persistence", "nsimplify",
    "__version__",
]
