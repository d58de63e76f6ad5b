"""Closed-form tail rate functions and entropy-based certificates.

``h0`` governs the lower tail at speed n (through the factor 2*h0), ``u0``
the upper tail at speed sqrt(n); ``u_mu`` rescales ``u0`` by the sample's
law-of-large-numbers constant.  ``entropy_certificate`` turns a candidate
tilt density into a certified one-sided bound on the lower-tail rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Density, relative_entropy


@dataclass(frozen=True)
class RateValue:
    """A rate-function evaluation with its argument and provenance."""

    which: str
    argument: float
    value: float
    jbar: float | None = None

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError(f"{self.which} came out negative at {self.argument}")

    def __float__(self) -> float:
        return self.value


def h0(c: float) -> RateValue:
    """Lower-tail shape functional on -2 < c <= 0, zero exactly at c = 0.

    h0(c) = -1/2 + (2+c)^2/8 + log((c+2)/2)
            - (1 + (2+c)^2/4) * log(2(2+c)^2 / (4 + (2+c)^2)).
    """
    c = float(c)
    if not -2.0 < c <= 0.0:
        raise ValueError(f"h0 is defined on (-2, 0], got {c}")
    if c == 0.0:
        return RateValue("h0", 0.0, 0.0)
    w = 2.0 + c
    w2 = w * w
    value = (
        -0.5
        + w2 / 8.0
        + math.log(w / 2.0)
        - (1.0 + w2 / 4.0) * math.log(2.0 * w2 / (4.0 + w2))
    )
    return RateValue("h0", c, max(value, 0.0) if -1e-15 < value < 0 else value)


def b0(c: float) -> float:
    """Support endpoint of the optimal lower-tail profile on (-2, 0].

    Diverges as c decreases to -2; overflow is reported as inf.
    """
    c = float(c)
    if not -2.0 < c <= 0.0:
        raise ValueError(f"b0 is defined on (-2, 0], got {c}")
    w = 2.0 + c
    try:
        return 1.0 / w - w / 4.0 + math.sqrt(2.0 + w * w / 2.0)
    except OverflowError:
        return math.inf


def u0(c: float) -> RateValue:
    """Upper-tail rate on c >= 0, zero exactly at c = 0.

    u0(c) = 2(2+c) arccosh(c/2 + 1) - 2 sqrt(c^2 + 4c), with arccosh
    evaluated in the log1p form that is exact at the left endpoint.
    """
    c = float(c)
    if c < 0.0:
        raise ValueError(f"u0 is defined on [0, inf), got {c}")
    if c == 0.0:
        return RateValue("u0", 0.0, 0.0)
    acosh = math.log1p(c / 2.0 + math.sqrt(c + c * c / 4.0))
    value = 2.0 * (2.0 + c) * acosh - 2.0 * math.sqrt(c * c + 4.0 * c)
    return RateValue("u0", c, value)


def u_mu(c: float, jbar: float) -> RateValue:
    """Upper-tail rate for a general density: jbar * u0(c / jbar)."""
    if not jbar > 0:
        raise ValueError("jbar must be positive")
    c = float(c)
    return RateValue("u_mu", c, jbar * u0(c / jbar).value, jbar=jbar)


class CertificateRejection(ValueError):
    """Raised when a tilt density cannot be certified at the requested level.

    Carries the achieved bracket of 2*Jbar for the tilt.
    """

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


def entropy_certificate(
    nu: Density,
    mu: Density,
    d: float,
    jbar_solver=None,
) -> RateValue:
    """Certified upper bound on the lower-tail exponent at level d.

    Runs the variational solver on ``nu``; when the upper end of the 2*Jbar
    bracket is at most ``d`` the relative entropy H(nu | mu) is a valid
    upper bound on the infimum-entropy rate at d (equivalently,
    exp(-n H(nu|mu)) lower-bounds the tail up to the solver bracket).
    Otherwise raises :class:`CertificateRejection` with the bracket achieved.
    """
    if not d > 0:
        raise ValueError("d must be positive")
    if jbar_solver is None:
        from .variational import solve_jbar

        jbar_solver = solve_jbar
    result = jbar_solver(nu)
    lo, hi = 2.0 * result.j_low, 2.0 * result.j_high
    if hi > d:
        raise CertificateRejection(
            f"tilt not certified: 2*Jbar bracket [{lo:.6g}, {hi:.6g}] exceeds d={d:.6g}",
            bracket=(lo, hi),
        )
    ent = relative_entropy(nu, mu)
    return RateValue("entropy_certificate", float(d), ent.value, jbar=result.j_high)
