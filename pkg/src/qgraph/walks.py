"""Quantum-walk statistics from the transmission generating function.

With unit-length edges the transmission amplitude t(z), z = e^{ikl}, is a
generating function: the coefficient c_m of z^m sums the amplitudes of every
lead-to-lead path of m steps.  P(m) = |c_m|^2 is the probability of exiting
in exactly m steps, p_out = sum P(m) the total exit probability through the
exit lead, and h = sum m P(m) / p_out the conditional hitting time.

Coefficients come from two independent routes that cross-check each other:
a linear recurrence on the rational amplitude, and direct power iteration of
the bond map.  Both attach a geometric tail bound so the statistics can
certify their truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .closedforms import RationalAmplitude, UnitCirclePoleError
from .graphs import QuantumGraph, subdivide_integral
from .solver import assemble_bond_system

# Bond-map eigenvalues at least this close to the unit circle belong to
# perfectly trapped (non-observable) modes and are excluded from the decay
# estimate; observable modes of an open graph decay strictly.
MARGINAL_MODE_CUTOFF = 1e-9

# A root of the denominator counts as a genuine pole only when the numerator
# is clearly nonzero there; common roots are removable and do not limit the
# coefficient decay.
_GENUINE_POLE_NUM_TOL = 1e-8


class TruncationError(ArithmeticError):
    """The truncated series cannot certify the requested tolerance."""


@dataclass(frozen=True, eq=False)
class WalkSeries:
    """Walk coefficients c_0..c_M plus a geometric tail estimate.

    ``tail_bound`` estimates the neglected mass sum_{m>M} m |c_m|^2 from the
    observed decay; it is 0 for exactly terminating series.  Total weight
    sum |c_m|^2 above 1 (beyond roundoff) is rejected: these coefficients
    only make sense for flux-conserving amplitudes.
    """

    coefficients: np.ndarray
    order: int
    tail_bound: float

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.order + 1,):
            raise ValueError(
                f"expected {self.order + 1} coefficients, got shape {c.shape}"
            )
        weight = float(np.sum(np.abs(c) ** 2))
        if weight > 1.0 + 1e-9:
            raise ValueError(
                f"total weight {weight:.6f} exceeds 1; amplitude is not flux-conserving"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)


@dataclass(frozen=True, eq=False)
class WalkStats:
    """Step distribution summary: P(m), exit probability, hitting time.

    ``p_of_m[m]`` is P(m); the array is empty when the statistics came from
    quadrature, which integrates the distribution without resolving it.
    """

    p_of_m: np.ndarray
    p_out: float
    hitting_time: float


def _recurrence(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients of num/den via c_m = (num_m - sum den_j c_{m-j})/den_0."""
    c = np.zeros(order + 1, dtype=complex)
    d0 = den[0]
    for m in range(order + 1):
        acc = num[m] if m < len(num) else 0.0
        jmax = min(m, len(den) - 1)
        if jmax:
            acc -= np.dot(den[1:jmax + 1], c[m - 1::-1][:jmax])
        c[m] = acc / d0
    return c


def _geometric_tail(coeffs: np.ndarray, order: int, rho: float) -> float:
    """Bound sum_{m>order} m |c_m|^2 assuming |c_m| <= C rho^(-m).

    C is calibrated on the trailing window of observed coefficients, so the
    estimate tracks the actual asymptotic amplitude rather than a worst-case
    constant.  Everything runs in log space to survive large rho^m.
    """
    if not np.isfinite(rho) or rho <= 1.0:
        return float("inf")
    q = rho ** -2
    window = coeffs[max(0, order - 31): order + 1]
    mags = np.abs(window)
    if not mags.any():
        return 0.0
    ms = np.arange(order + 1 - len(window), order + 1, dtype=float)
    mask = mags > 0
    log_c = np.max(np.log(mags[mask]) + ms[mask] * np.log(rho))
    log_tail = (
        2.0 * log_c
        + (order + 1) * np.log(q)
        + np.log((order + 1) - order * q)
        - 2.0 * np.log1p(-q)
    )
    return float(np.exp(log_tail))


def _genuine_pole_radius(amp: RationalAmplitude):
    """Smallest modulus among non-removable denominator roots, or None.

    Raises if a genuine pole sits on (or inside) the unit circle, which
    cannot happen for flux-conserving amplitudes.
    """
    den = np.trim_zeros(amp.den, "b")
    if len(den) <= 1:
        return None
    roots = np.roots(den[::-1])
    num_scale = max(1.0, float(np.sum(np.abs(amp.num))))
    genuine = [
        z for z in roots
        if abs(npoly.polyval(z, amp.num)) > _GENUINE_POLE_NUM_TOL * num_scale
    ]
    if not genuine:
        return None
    rho = min(abs(z) for z in genuine)
    if rho <= 1.0 + MARGINAL_MODE_CUTOFF:
        raise UnitCirclePoleError(
            f"genuine pole at |z| = {rho:.12f}; the walk series does not decay"
        )
    return rho


def _fix_sign(c: np.ndarray) -> np.ndarray:
    """Flip the global sign so the first nonzero coefficient has Re > 0.

    The shortest lead-to-lead path only crosses vertices forward, so for NK
    graphs its amplitude is a product of positive transmissions; this pins
    the physical sign that rational forms leave ambiguous.
    """
    idx = np.nonzero(np.abs(c) > 1e-12)[0]
    if idx.size and c[idx[0]].real < 0:
        return -c
    return c


def taylor_coefficients(amp: RationalAmplitude, max_order: int) -> WalkSeries:
    """Walk coefficients c_0..c_max_order of a rational amplitude.

    Runs the linear recurrence induced by num = den * sum c_m z^m, then
    normalizes the global sign (see _fix_sign).  The tail bound uses the
    smallest genuine pole radius; series whose denominator divides the
    numerator terminate exactly and get an exact residual instead.
    """
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    if abs(amp.den[0]) == 0:
        raise ValueError("denominator constant term is zero")
    c = _fix_sign(_recurrence(amp.num, amp.den, max_order))
    rho = _genuine_pole_radius(amp)
    if rho is not None:
        tail = _geometric_tail(c, max_order, rho)
    elif max_order >= len(amp.num) - 1:
        tail = 0.0
    else:
        # Polynomial case: finish the expansion and sum the leftover exactly.
        full = _recurrence(amp.num, amp.den, len(amp.num) - 1)
        ms = np.arange(max_order + 1, len(full), dtype=float)
        tail = float(np.sum(ms * np.abs(full[max_order + 1:]) ** 2))
    return WalkSeries(coefficients=c, order=max_order, tail_bound=tail)


def coefficients_via_power_iteration(graph: QuantumGraph, max_order: int) -> WalkSeries:
    """Walk coefficients read off the bond map, one matrix product per step.

    Edges of integer length q are first subdivided into q unit edges through
    perfectly transparent degree-2 NK vertices, after which one application
    of the bond matrix advances the walk by exactly one step.  Independent
    of the rational-function machinery, which makes it the cross-check
    oracle for taylor_coefficients.
    """
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    system = assemble_bond_system(subdivide_integral(graph))
    c = np.zeros(max_order + 1, dtype=complex)
    c[0] = system.direct_t
    if max_order >= 1:
        a = system.inj.copy()
        c[1] = a @ system.out_t
        for m in range(2, max_order + 1):
            a = system.smatrix @ a
            c[m] = a @ system.out_t

    moduli = np.abs(np.linalg.eigvals(system.smatrix))
    decaying = moduli[moduli < 1.0 - MARGINAL_MODE_CUTOFF]
    if decaying.size == 0:
        # Only marginal modes: nothing certifies decay.
        tail = float("inf")
    elif decaying.max() > 0.0:
        tail = _geometric_tail(c, max_order, 1.0 / float(decaying.max()))
    else:
        # Nilpotent bond map: the walk terminates within one pass over the
        # bonds, so the leftover mass can be summed exactly.
        extra = 0.0
        aa = system.inj.copy()
        for m in range(1, system.bond_count + 2):
            if m > 1:
                aa = system.smatrix @ aa
            if m > max_order:
                extra += m * abs(aa @ system.out_t) ** 2
        tail = float(extra)
    return WalkSeries(coefficients=c, order=max_order, tail_bound=tail)


def walk_stats(series: WalkSeries, tolerance: float = 1e-8) -> WalkStats:
    """P(m), p_out, and conditional hitting time from a truncated series.

    The tail bound must keep the hitting-time truncation error below
    ``tolerance``; otherwise a TruncationError asks for a larger order.
    Step counts start at m = 1 (c_0 is a zero-step process, nonzero only
    when both leads share a vertex, and is excluded from the sums).
    """
    p = np.abs(series.coefficients) ** 2
    p_out = float(p[1:].sum())
    if p_out <= 0.0:
        raise TruncationError("no transmitted weight up to this order")
    first_moment = float(np.dot(np.arange(1, len(p), dtype=float), p[1:]))
    h = first_moment / p_out
    err = series.tail_bound * (1.0 + h) / p_out
    if not (err < tolerance):
        raise TruncationError(
            f"order {series.order} leaves hitting-time error ~{err:.3e} "
            f"(> {tolerance:.1e}); increase max_order"
        )
    if h < 1.0:
        raise ArithmeticError(f"hitting time {h} < 1; series is inconsistent")
    return WalkStats(p_of_m=p, p_out=p_out, hitting_time=h)


def walk_stats_to_tolerance(
    amp: RationalAmplitude, tolerance: float = 1e-8, order_cap: int = 32768
) -> WalkStats:
    """walk_stats with the truncation order grown until the tail certifies.

    Doubles the order until the geometric tail bound drops below a tenth of
    the tolerance (the stats then certify comfortably) or the cap is hit, in
    which case walk_stats raises.
    """
    order = 64
    while True:
        series = taylor_coefficients(amp, order)
        if series.tail_bound < tolerance / 10.0 or order >= order_cap:
            return walk_stats(series, tolerance)
        order *= 2


def walk_stats_by_quadrature(amp: RationalAmplitude) -> WalkStats:
    """p_out and hitting time by quadrature on the unit circle.

    Parseval turns the coefficient sums into circle averages:
    sum |c_m|^2 is the mean of |T|^2 and sum m |c_m|^2 the mean of
    Re[conj(T) z T'(z)].  Periodic trapezoid sums converge exponentially for
    these analytic integrands; nodes are offset half a step so removable
    points at z = 1 and z = -1 never coincide with a sample, and any other
    near-zero denominator hit is patched by two-sided averaging.  P(m) is not
    resolved by this route, so p_of_m comes back empty.
    """
    rho = _genuine_pole_radius(amp)  # raises on a genuine unit-circle pole
    del rho
    dnum = npoly.polyder(amp.num)
    dden = npoly.polyder(amp.den)
    den_scale = max(1.0, float(np.sum(np.abs(amp.den))))

    def integrands(theta):
        z = np.exp(1j * theta)
        nv = npoly.polyval(z, amp.num)
        dv = npoly.polyval(z, amp.den)
        bad = np.abs(dv) < 1e-10 * den_scale
        if np.any(bad):
            safe = ~bad
            w2 = np.empty_like(theta)
            s1 = np.empty_like(theta)
            w2[safe], s1[safe] = integrands(theta[safe])
            lo2, lo1 = integrands(theta[bad] - 1e-6)
            hi2, hi1 = integrands(theta[bad] + 1e-6)
            w2[bad] = 0.5 * (lo2 + hi2)
            s1[bad] = 0.5 * (lo1 + hi1)
            return w2, s1
        t = nv / dv
        dt = (npoly.polyval(z, dnum) * dv - nv * npoly.polyval(z, dden)) / dv**2
        return np.abs(t) ** 2, np.real(np.conj(t) * z * dt)

    prev = None
    n = 512
    while n <= (1 << 19):
        theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        w2, s1 = integrands(theta)
        p_out = float(np.mean(w2))
        moment = float(np.mean(s1))
        if prev is not None:
            d0 = abs(p_out - prev[0])
            d1 = abs(moment - prev[1])
            if d0 < 1e-12 * max(p_out, 1e-3) and d1 < 1e-12 * max(abs(moment), 1e-3):
                break
        prev = (p_out, moment)
        n *= 2
    else:
        raise ArithmeticError("circle quadrature did not converge")

    if not (0.0 < p_out <= 1.0 + 1e-9):
        raise ValueError(
            f"mean |T|^2 = {p_out:.6f} is outside (0, 1]; "
            "amplitude is not flux-conserving"
        )
    h = moment / p_out
    return WalkStats(p_of_m=np.zeros(0), p_out=p_out, hitting_time=h)
