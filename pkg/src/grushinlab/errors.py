"""Exception hierarchy shared by every module of the library."""


class GrushinLabError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(GrushinLabError):
    """Argument or block shapes are incompatible."""


class SingularMatrix(GrushinLabError):
    """A direct solve hit a matrix that is singular at the rank tolerance."""


class ConvergenceFailure(GrushinLabError):
    """An iterative decomposition (SVD/eigenvalue QR) did not converge."""


class NonConvergent(GrushinLabError):
    """Quadrature doubling hit its node cap; args carry the last two estimates."""


class IllPosed(GrushinLabError):
    """Bordered system is singular or its condition estimate exceeds the
    well-posedness threshold; args carry the offending estimate."""


class EffectiveSingular(GrushinLabError):
    """The effective Hamiltonian block fails the rank tolerance."""


class CornerSingular(GrushinLabError):
    """The lower-right block of a two-by-two split is not invertible."""


class RankAmbiguous(GrushinLabError):
    """A singular value sits inside the tolerance band, so the numerical rank
    (and anything integer-valued derived from it) is not well defined."""


class TransferSingular(GrushinLabError):
    """The border-transfer system is not invertible: the new problem is ill posed."""


class InnerSingular(GrushinLabError):
    """The inner system of an iterated bordered problem is not invertible."""


class ComplementSingular(GrushinLabError):
    """The complementary diagonal block is singular at the requested point."""


class OutsideConvergenceRegime(GrushinLabError):
    """Series parameters violate the convergence assumptions."""


class BasisNotOrthonormal(GrushinLabError):
    """Supplied basis columns are not orthonormal at tolerance."""


class ContractionViolated(GrushinLabError):
    """The contraction norm is >= 1, so the Neumann series does not converge."""


class DegenerateLeadingMatrix(GrushinLabError):
    """Leading perturbation coefficients coincide; the asymptotics need them distinct."""


class ThresholdOnSingularValue(GrushinLabError):
    """A singular value sits on the projector threshold; the captured dimension
    is not well defined."""


class OnSpectrum(GrushinLabError):
    """The probe point is an eigenvalue at tolerance; the resolvent does not exist."""


class OnContourSingular(GrushinLabError):
    """A quadrature node hit (or nearly hit) the spectrum."""


class NonInteger(GrushinLabError):
    """A counting integral did not land on an integer within tolerance."""


class IllPosedOnContour(GrushinLabError):
    """The bordered problem is ill posed at some quadrature node."""


class SingularAtNode(GrushinLabError):
    """A loop-family value is singular at a quadrature node."""


class ContractionCertificateFails(GrushinLabError):
    """A sampled homotopy certificate contains a non-invertible system."""


class SupportViolation(GrushinLabError):
    """The transform support check failed at the band edge."""


class NeumannEigenvalue(GrushinLabError):
    """The shift coincides with a discrete Neumann eigenvalue."""


class ConsistencyError(GrushinLabError):
    """Two routes that must agree by exact algebra disagreed beyond tolerance."""


class IoFailure(GrushinLabError):
    """Report serialization could not be written."""
