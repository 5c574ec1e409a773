"""Exact computations with gapped filtered A-infinity structures over Z/2."""
from .ainfty import (AInftyHomomorphism, Counterexample, FilteredAlgebra, FilteredBimodule,
                     FilteredRightModule, GappedOperationTable, InconsistentInput, MCViolation,
                     StructureError, bimodule_twisted_differential, check_algebra_relations,
                     check_bimodule_relations, check_homomorphism, check_module_relations,
                     diagonal_bimodule, evaluate, opposite_algebra, realize_phi_b, regular_module,
                     twist_algebra, twist_bimodule, twist_module, twisted_differential, unit_defect)
from .lincomb import (Basis, Element, HomologyReport, LinearMap, NotAComplex, compose, homology,
                      valuation_normal_form)
from .mc import (BoundingCochain, CyclicElementCertificate, NotCyclic, certify_cyclic,
                 oracle_bounding_cochains, solve_bounding_cochain, verify_mc)
from .novikov import DiscreteMonoid, NovikovScalar, monoid_levels, nov_invert
from .pairing import (FloerComplexData, GluingTensor, check_pairing_relation, induced_gluing_map,
                      realize_floer_boundary, verify_gluing)
from .specfmt import ParseError, StructureDocument, load, parse, serialize

__all__ = [
    "AInftyHomomorphism", "Basis", "BoundingCochain", "Counterexample", "CyclicElementCertificate",
    "DiscreteMonoid", "Element", "FilteredAlgebra", "FilteredBimodule", "FilteredRightModule",
    "FloerComplexData", "GappedOperationTable", "GluingTensor", "HomologyReport",
    "InconsistentInput", "LinearMap", "MCViolation", "NotAComplex", "NotCyclic", "NovikovScalar",
    "ParseError", "StructureDocument", "StructureError", "bimodule_twisted_differential",
    "certify_cyclic", "check_algebra_relations", "check_bimodule_relations", "check_homomorphism",
    "check_module_relations", "check_pairing_relation", "compose", "diagonal_bimodule", "evaluate",
    "homology", "induced_gluing_map", "load", "monoid_levels", "nov_invert", "opposite_algebra",
    "oracle_bounding_cochains", "parse", "realize_floer_boundary", "realize_phi_b",
    "regular_module", "serialize", "solve_bounding_cochain", "twist_algebra", "twist_bimodule",
    "twist_module", "twisted_differential", "unit_defect", "valuation_normal_form",
    "verify_gluing", "verify_mc",
]
