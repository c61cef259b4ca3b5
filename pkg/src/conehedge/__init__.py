"""Exact-arithmetic superhedging duality on finite scenario trees.

Markets with proportional transaction costs are modeled by per-node
solvency cones, portfolio constraints by nested constraint cones, and
model uncertainty by finite kernel sets per node.  The package computes
and certifies, in exact rational arithmetic: the backward reduction of
the dual cones, no-strict-arbitrage with explicit witnesses, primal and
dual superhedging prices with re-checkable certificates, the
atom-enlarged frictionless market bracketing the price, and semi-static
pricing against quoted options.
"""

from conehedge._rat import parse_rat, rat, rat_str
from conehedge.cones import (
    ConeSection,
    PolyhedralCone,
    conic_hull_of_union,
    contains,
    convert,
    dual_cone,
    has_nonempty_interior,
    intersect,
    is_subset,
    minkowski_sum,
    normalized_section,
)
from conehedge.market import (
    MarketSpec,
    MarketValidationError,
    Node,
    PolarClassification,
    ScenarioTree,
    bar_extension,
    load_market,
    loads_market,
    polar_classification,
    quasi_sure_support,
    serialize_market,
    solvency_from_bidask,
)
from conehedge.pricing import (
    HedgingStrategy,
    PriceReport,
    PriceSystem,
    SemiStaticSpec,
    dual_scps,
    duality_report,
    na_semistatic_check,
    primal_superhedge,
    recover_scps,
    semistatic_price,
    verify_superhedge,
)
from conehedge.randomized import (
    EnlargedTree,
    build_enlarged_market,
    dp_value,
    equality_check,
    frictionless_superhedge,
)
from conehedge.recursion import (
    ArbitrageWitness,
    RecursionResult,
    backward_dual_cones,
    interior_diagnostic,
    strict_arbitrage_search,
    tilde_decomposition_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
