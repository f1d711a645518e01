"""Exception types shared across the package."""


class NearlightError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(NearlightError):
    """A configuration file or dictionary is malformed.

    The message names the offending key.
    """


class DegenerateBasis(NearlightError):
    """The two basis pairs are (near-)parallel; no 2D decomposition exists."""


class RigNotMetric(NearlightError):
    """The rig lacks absolute_radius / offset_truth needed for metric placement."""


class NoIntersection(NearlightError):
    """A camera ray misses the scene geometry."""


class EqualRadii(NearlightError):
    """All radius ratios are equal; the position-recovery denominator vanishes."""


class NegativeRadicand(NearlightError):
    """The depth radicand is negative for every light at this pixel."""


class RankDeficient(NearlightError):
    """The per-pixel light-direction system has numeric rank below 3."""


class DegenerateNullSpace(NearlightError):
    """The stacked constraint matrix has a null space of dimension above one."""


class PrincipalPointDegenerate(NearlightError):
    """Collinear-path pixel sits on the principal point; the x/y ratio is undefined."""


class UnsupportedArrangement(NearlightError):
    """The light arrangement does not support surface recovery."""


class DegenerateFit(NearlightError):
    """Depth alignment cannot be fit (constant estimate over the mask)."""
