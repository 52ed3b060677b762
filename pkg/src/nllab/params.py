"""Problem parameters and the normalisation constants of the kernels."""

from dataclasses import dataclass, field
import math

from .errors import DomainError

__all__ = [
    "ProblemParams",
    "KernelConstants",
    "normalization_constant",
    "riesz_constant",
    "critical_gamma",
    "kernel_constants",
    "sphere_area",
]


def sphere_area(d):
    """Surface measure of the unit sphere S^{d-1} in R^d (|S^0| = 2)."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``d``, fractional order ``s`` and integrability exponent ``p``.

    ``p_conj`` is derived and can be omitted.
    """

    d: int
    s: float
    p: float = 2.0
    p_conj: float = field(default=None)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")
        if not self.p > 1.0:
            raise DomainError(f"p must exceed 1, got {self.p}")
        pc = self.p / (self.p - 1.0)
        if self.p_conj is None:
            object.__setattr__(self, "p_conj", pc)
        elif abs(1.0 / self.p + 1.0 / self.p_conj - 1.0) > 1e-12:
            raise DomainError(f"p_conj={self.p_conj} is not conjugate to p={self.p}")

    @property
    def d_gt_2s(self):
        return self.d > 2.0 * self.s

    def with_p(self, p):
        return ProblemParams(self.d, self.s, p)


def normalization_constant(params):
    """C_{d,s} = 4^s Gamma(d/2+s) / (pi^{d/2} |Gamma(-s)|)."""
    d, s = params.d, params.s
    return 4.0 ** s * math.gamma(d / 2.0 + s) / (math.pi ** (d / 2.0) * abs(math.gamma(-s)))


def riesz_constant(params):
    """kappa_{d,s} = Gamma((d-2s)/2) / (4^s pi^{d/2} Gamma(s)), for d > 2s."""
    d, s = params.d, params.s
    if not d > 2.0 * s:
        raise DomainError(f"Riesz kernel undefined for d <= 2s (d={d}, s={s})")
    return math.gamma((d - 2.0 * s) / 2.0) / (4.0 ** s * math.pi ** (d / 2.0) * math.gamma(s))


def critical_gamma(params):
    """Critical weight exponent d - (p/2)(d - 2s); equals 2s when p = 2."""
    return params.d - 0.5 * params.p * (params.d - 2.0 * params.s)


@dataclass(frozen=True)
class KernelConstants:
    c_ds: float
    kappa_ds: float = None

    def __post_init__(self):
        if not self.c_ds > 0:
            raise DomainError("c_ds must be positive")
        if self.kappa_ds is not None and not self.kappa_ds > 0:
            raise DomainError("kappa_ds must be positive")


def kernel_constants(params):
    kappa = riesz_constant(params) if params.d_gt_2s else None
    return KernelConstants(normalization_constant(params), kappa)
