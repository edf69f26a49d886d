"""Scalar special functions used by the composite-fading densities.

Everything here is real-valued and restricted to the parameter ranges that
actually occur in the channel model: positive gamma/beta arguments, Gauss
2F1 at non-positive argument, and the one Meijer-G parameter pattern that
the sub-channel and composite densities are written in.  The 2F1 evaluator
uses the Pfaff transformation so the series argument always lands in
[0, 1); no branch-cut handling is needed on this domain.
"""

from __future__ import annotations

import math

__all__ = [
    "ConvergenceError",
    "ln_gamma",
    "beta",
    "gauss_2f1",
    "meijer_g_2212",
    "gamma_ratio_epsilon",
]

#: cap on the number of series terms before giving up
SERIES_TERM_CAP = 100_000
#: stop once |term| / |partial sum| drops below this
SERIES_RTOL = 1e-16


class ConvergenceError(RuntimeError):
    """A series failed to reach tolerance within the term cap."""


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0.

    Backed by the C library's lgamma, which is accurate to a few ulp on
    the positive axis; the negative axis (reflection) is deliberately not
    supported because no caller needs it.
    """
    if not x > 0.0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def beta(a: float, b: float) -> float:
    """Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b) for a, b > 0.

    Computed through ln_gamma so large arguments (shapes of order K*N*m,
    i.e. hundreds) do not overflow.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"beta requires positive arguments, got ({a}, {b})")
    return math.exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric 2F1(a, b; c; z) for z <= 0.

    The argument is mapped through the Pfaff transformation

        2F1(a, b; c; z) = (1 - z)^(-a) * 2F1(a, c - b; c; z / (z - 1)),

    which sends z <= 0 to w = z/(z-1) in [0, 1), and the transformed
    series is summed term by term.  When b == c the transformed series
    collapses to its constant term and the value (1 - z)^(-a) is exact;
    this is the parameter collapse every fading density relies on.
    """
    if z > 0.0:
        raise ValueError(f"gauss_2f1 is restricted to z <= 0, got z={z}")
    if c <= 0.0 and c == math.floor(c):
        raise ValueError(f"gauss_2f1 undefined for non-positive integer c={c}")
    if z == 0.0:
        return 1.0

    w = z / (z - 1.0)
    bt = c - b
    total = 1.0
    term = 1.0
    for n in range(SERIES_TERM_CAP):
        term *= (a + n) * (bt + n) / ((c + n) * (n + 1.0)) * w
        total += term
        if abs(term) <= SERIES_RTOL * abs(total):
            break
    else:
        raise ConvergenceError(
            f"2F1 series did not converge within {SERIES_TERM_CAP} terms "
            f"(a={a}, b={b}, c={c}, z={z})"
        )
    # (1-z) >= 1 here, so the prefactor only ever underflows, never overflows
    return math.exp(-a * math.log1p(-z)) * total


def meijer_g_2212(x: float, s1: float, s2: float, t1: float, t2: float) -> float:
    """Meijer G^{1,2}_{2,2}(x | s1, s2; t1, t2) for the fading-density pattern.

    Only the parameter shape (s1, s2) = (-A, 0), (t1, t2) = (B-1, 0) with
    A, B > 0 is supported; that is the form both the sub-channel and the
    composite power-gain densities are printed in.  Shifting the parameter
    rows by B and inverting the 2F1 representation

        2F1(alpha, beta; gamma; -x)
            = Gamma(gamma) x / (Gamma(alpha) Gamma(beta))
              * G^{1,2}_{2,2}(x | -alpha, -beta; -1, -gamma)

    with (alpha, beta, gamma) = (A + B, B, B) gives

        G = x^(B-1) * Gamma(A + B) * 2F1(A + B, B; B; -x).

    The value itself can overflow for large A + B; callers evaluating
    densities at large aggregate shapes should use the elementary
    log-space forms instead (see the channel module).
    """
    if not x > 0.0:
        raise ValueError(f"meijer_g_2212 requires x > 0, got {x}")
    if s2 != 0.0 or t2 != 0.0:
        raise ValueError(
            f"unsupported parameter pattern: expected s2 = t2 = 0, got ({s2}, {t2})"
        )
    a_shape = -s1
    b_shape = t1 + 1.0
    if not (a_shape > 0.0 and b_shape > 0.0):
        raise ValueError(
            f"unsupported parameter pattern: need s1 < 0 and t1 > -1, got ({s1}, {t1})"
        )
    f21 = gauss_2f1(a_shape + b_shape, b_shape, b_shape, -x)
    ln_pre = ln_gamma(a_shape + b_shape) + (b_shape - 1.0) * math.log(x)
    if f21 > 0.0:
        return math.exp(ln_pre + math.log(f21))
    return 0.0


def gamma_ratio_epsilon(a: float, b: float) -> float:
    """Gamma(a-1)Gamma(b+1) / (Gamma(a)Gamma(b)), evaluated exactly.

    The gamma recurrence telescopes the ratio to b / (a - 1); no
    approximation is involved, so this is also the exact value of the
    quantity the closed-form outage threshold abbreviates.  Note the ratio
    is <= 1 only when b <= a - 1, slightly stronger than b <= a.
    """
    if not a > 1.0:
        raise ValueError(f"gamma_ratio_epsilon requires a > 1, got {a}")
    if not b > 0.0:
        raise ValueError(f"gamma_ratio_epsilon requires b > 0, got {b}")
    return b / (a - 1.0)
