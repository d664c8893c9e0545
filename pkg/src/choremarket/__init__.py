"""Competitive equilibria and fair allocations for divisible chores."""

from .bivalued import (
    BivaluedError,
    BivaluedResult,
    IntegralAllocation,
    check_ef1,
    check_pef1,
    check_po_certificate,
    solve_bivalued,
)
from .flow import BalanceResult, FlowError, balance_allocation, check_local_balance, max_flow
from .generate import generate
from .instance import (
    Instance,
    InstanceError,
    StructuralError,
    analyze_structure,
    decompose_ceei,
    instance_to_json,
    load_instance,
    make_instance,
    validate_instance,
)
from .mpb import MarketNetwork, MpbStructure, build_market_network, mpb_structure
from .numeric import APPROX, EXACT, INF, is_inf
from .reduction import (
    LayeredLabels,
    PolymatrixGame,
    ReductionError,
    ReductionParams,
    brute_force_ne,
    build_reduction,
    check_reduction_properties,
    check_symmetric_ce,
    extract_strategy,
    validate_polymatrix,
    verify_polymatrix_ne,
)
from .solver import CeeiResult, SolverError, solve_exact_rounded, solve_fptas
from .verify import CeReport, nash_welfare, verify_ce

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
