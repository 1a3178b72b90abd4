"""Free-Boolean independence with amalgamation over matrix algebras.

Combinatorics of interval-noncrossing partitions, operator-valued moment
functionals and cumulants, a truncated reduced free product model, and
numerical checks built on top of them.
"""
from .partitions import *  # noqa: F401,F403
from .inc import *  # noqa: F401,F403
from .moebius import *  # noqa: F401,F403
from .bvalued import *  # noqa: F401,F403
from .cumulants import *  # noqa: F401,F403
from .fock import *  # noqa: F401,F403
from . import partitions, inc, moebius, bvalued, cumulants, fock

__version__ = "0.1.0"

__all__ = (
    partitions.__all__ + inc.__all__ + moebius.__all__ + bvalued.__all__ + cumulants.__all__ + fock.__all__
    + ["__version__"]
)
