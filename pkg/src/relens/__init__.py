"""Relational lenses with incremental (delta-based) put."""
from .delta import Delta, delta_apply, oracle_delta, query_deval, rel_diff
from .dsl import parse_predicate, parse_program
from .errors import LensTypeError, ParseError, RelensError, SchemaViolation
from .fdeps import FunDep, FunDepSet
from .lenses import (
    RelationType,
    check_view_delta,
    dput_derived,
    lens_build,
    lens_delta_get,
    lens_delta_put,
    lens_get,
    lens_put_drop_bohannon,
    lens_put_naive,
)
from .relalg import Relation

__all__ = [
    "Delta", "FunDep", "FunDepSet", "LensTypeError", "ParseError", "Relation", "RelationType", "RelensError",
    "SchemaViolation", "check_view_delta", "delta_apply", "dput_derived", "lens_build", "lens_delta_get",
    "lens_delta_put", "lens_get", "lens_put_drop_bohannon", "lens_put_naive", "oracle_delta", "parse_predicate",
    "parse_program", "query_deval", "rel_diff",
]
