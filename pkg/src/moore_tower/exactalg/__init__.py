"""Exact linear algebra over Z and Z/m."""
from .matrix import ExactMatrix, RingSpec, ZZ, block_diag, block_matrix, hstack, vstack
from .snf import (IntegerSolver, ext_gcd, integer_kernel, matrix_kernel, smith_normal_form,
                  snf_data)
from .modules import (FgModule, IllDefinedMap, ModuleMap, NotLiftable, Subquotient,
                      canonical_presentation, direct_sum, induced_map, map_subquotients,
                      module_from_presentation, product_map, stack_maps)
from .homext import HomModule, hom_and_ext, hom_module, tensor, tor1
from .extensions import (ExtensionClass, UnsupportedOracleInput, enumerate_extensions,
                         extensions_equivalent)

__all__ = [
    "ExactMatrix", "RingSpec", "ZZ", "block_diag", "block_matrix", "hstack", "vstack",
    "IntegerSolver", "ext_gcd", "integer_kernel", "matrix_kernel", "smith_normal_form", "snf_data",
    "FgModule", "IllDefinedMap", "ModuleMap", "NotLiftable", "Subquotient",
    "canonical_presentation", "direct_sum", "induced_map", "map_subquotients",
    "module_from_presentation", "product_map", "stack_maps",
    "HomModule", "hom_and_ext", "hom_module", "tensor", "tor1",
    "ExtensionClass", "UnsupportedOracleInput", "enumerate_extensions", "extensions_equivalent",
]
