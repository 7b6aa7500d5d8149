# -*- coding: utf-8 -*-
"""
Error types for the forward performance library

Every failure carries a short machine-readable code and the process exit
status the CLI uses for it: 2 for validation problems, 3 for numerical ones.
"""

from typing import Optional


EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class ForwardPerformanceError(Exception):
    """Base class for all library errors"""
    code = "ERROR"
    exit_code = 1

    def to_dict(self) -> dict:
        """Machine-readable form, shared by the CLI and the HTTP API"""
        return {"success": False, "error": str(self), "code": self.code}


# ============ Validation Errors ============

class InvalidModelError(ForwardPerformanceError, ValueError):
    """A model invariant does not hold (rank, PSD, density mass, centering)"""
    code = "INVALID_MODEL"
    exit_code = EXIT_VALIDATION


class ConfigError(ForwardPerformanceError, ValueError):
    """The run configuration cannot be parsed or fails schema validation"""
    code = "CONFIG"
    exit_code = EXIT_VALIDATION


class RegimeError(ForwardPerformanceError, ValueError):
    """Riccati parameters fall outside every admissible regime"""
    code = "REGIME"
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, failed_case: str):
        super().__init__(f"{message} (failed case: {failed_case})")
        self.failed_case = failed_case


# ============ Numeric Errors ============

class NumericError(ForwardPerformanceError, ArithmeticError):
    """Quadrature, root-finding or derivative evaluation failed"""
    code = "NUMERIC"
    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, achieved_tolerance: Optional[float] = None):
        if achieved_tolerance is not None:
            message = f"{message} (achieved tolerance {achieved_tolerance:.3e})"
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance


class RangeError(NumericError):
    """A value lies outside the range of the map being inverted"""
    code = "RANGE"


class ConcavityError(NumericError):
    """The value surface is not strictly concave where it must be"""
    code = "CONCAVITY"
