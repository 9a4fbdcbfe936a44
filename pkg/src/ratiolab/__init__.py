"""Ratios Conjecture predictions and explicit-formula 1-level densities for
families of holomorphic newforms of weight k and level N."""
from .errors import (ConvergenceError, CoverageError, DataError, DomainError, NetworkError,
                     NotFoundError, PoleError, RatioLabError)
from .gammafactor import GammaFactorParams
from .ntside import Newform, NewformFamily, compare, d1_nt
from .ratios import DensityBreakdown, d1_ratios_unweighted, d1_ratios_weighted, m_phi
from .testfn import TestFunctionPair, make_fejer, make_smooth_bump

__version__ = "0.1.0"
