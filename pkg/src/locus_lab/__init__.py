"""Connectedness locus toolkit for pairs of diagonal affine contractions of the plane."""
from .bseries import BSeries, ZeroReport, find_real_zeros, property_u_probe
from .errors import DomainError, LocusError, TrapCheckFailure
from .escape import EscapeResult, RenderJob, membership, membership_M, render
from .hull import GapSegment, HullVertexList, analytic_vertices, gap_segment, numeric_hull, trap_like_vector
from .ifs import Params, PlanePoint, SignedWord, attractor_sample, cylinder_offset, eval_address, normalized_translation
from .traps import PerturbationSolve, TrapCertificate, certify_interior, solve_perturbation, verify_trap

__version__ = "0.1.0"

__all__ = [
    "BSeries",
    "ZeroReport",
    "find_real_zeros",
    "property_u_probe",
    "DomainError",
    "LocusError",
    "TrapCheckFailure",
    "EscapeResult",
    "RenderJob",
    "membership",
    "membership_M",
    "render",
    "GapSegment",
    "HullVertexList",
    "analytic_vertices",
    "gap_segment",
    "numeric_hull",
    "trap_like_vector",
    "Params",
    "PlanePoint",
    "SignedWord",
    "attractor_sample",
    "cylinder_offset",
    "eval_address",
    "normalized_translation",
    "PerturbationSolve",
    "TrapCertificate",
    "certify_interior",
    "solve_perturbation",
    "verify_trap",
]
