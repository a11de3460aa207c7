"""Exception types for the deformation workbench

Every error derives from WorkbenchError and from the closest builtin, so
callers can catch either one:

    try:
        star = kontsevich2(pi)
    except NotPoissonError as e:
        debug_error('star', 'Poisson check failed', exception=e)
"""


class WorkbenchError(Exception):
    """Base class for all workbench errors"""


class DimensionMismatchError(WorkbenchError, ValueError):
    """Operands live on charts of different dimension or have incompatible shapes"""


class VariableIndexError(WorkbenchError, IndexError):
    """Variable index outside 1..dim"""


class OrderMismatchError(WorkbenchError, ValueError):
    """Truncated series or products have different truncation orders"""


class NotADerivationError(WorkbenchError, ValueError):
    """Transform is not the exponential of a series of derivations"""


class NotPoissonError(WorkbenchError, ValueError):
    """Bivector does not satisfy [pi, pi] = 0"""


class NotConstantError(WorkbenchError, ValueError):
    """Object was required to have constant coefficients"""


class NotABivectorError(WorkbenchError, ValueError):
    """Skew part of an operator is not a bivector field"""


class DegenerateBivectorError(WorkbenchError, ArithmeticError):
    """Bivector matrix is not invertible"""


class AnsatzUnsolvableError(WorkbenchError, ArithmeticError):
    """Linear system of an operator ansatz has no solution"""


class FirstOrderMismatchError(WorkbenchError, ValueError):
    """Two star products have different first order terms"""


class NormalizationError(WorkbenchError, ArithmeticError):
    """A star product could not be brought into normal form"""


class NotIdempotentError(WorkbenchError, ValueError):
    """Matrix does not satisfy P0 * P0 = P0"""


class NotInImageError(WorkbenchError, ValueError):
    """Column is not in the image of the projection"""


class NotInCornerError(WorkbenchError, ValueError):
    """Matrix is not in the corner P0 M P0"""


class RankError(WorkbenchError, ValueError):
    """Projection does not have the required rank"""


class LiftingError(WorkbenchError, ArithmeticError):
    """Idempotent lifting left a nonzero defect"""


class OperatorRecoveryError(WorkbenchError, ArithmeticError):
    """Evaluation-based product is not reproduced by the recovered operators"""


class CurvatureNotScalarError(WorkbenchError, ArithmeticError):
    """Curvature does not act by a scalar on sections"""


class LatticeError(WorkbenchError, ValueError):
    """Vector or matrix is not integral, or an automorphism is not unimodular"""


class ClassMismatchError(WorkbenchError, ValueError):
    """Characteristic class data is inconsistent"""


class LiteralSyntaxError(WorkbenchError, ValueError):
    """Malformed polynomial, multivector or class literal"""

    def __init__(self, message: str, column: int = 1):
        super().__init__(f"column {column}: {message}")
        self.reason = message
        self.column = column


class ScenarioError(WorkbenchError, ValueError):
    """Scenario file could not be parsed or validated"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        location = f"line {line}, column {column}: " if line else ''
        super().__init__(f"{location}{message}")
        self.reason = message
        self.line = line
        self.column = column
