"""Directed-bond scattering solver: the ground truth for every closed form.

Each internal edge e contributes two directed bonds 2e (u to v) and 2e+1
(v to u).  A wave arriving at a vertex along one bond scatters into the
bonds leaving that vertex with the amplitudes of the vertex matrix, and a
bond of length n picks up the propagation phase z^n, z = e^{i kl}.  Writing
a_b for the amplitude arriving at the end of bond b and injecting a unit
wave from the entrance lead, the stationary state solves

    a = D(z) S a + D(z) b_in,

with S the bond-to-bond vertex amplitudes and D(z) the diagonal of phases;
transmission and reflection are linear readouts of a plus the direct
lead-to-lead vertex amplitude.  The linear system is tiny (2E unknowns), so
everything uses dense LAPACK solves, batched over wavenumber grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .closedforms import RationalAmplitude
from .graphs import QuantumGraph, integral_lengths, validate_graph

# A solve at real kl whose output breaks |t|^2 + |r|^2 = 1 worse than this is
# treated as on-shell singular (the matrix is numerically rank deficient at a
# perfectly trapped mode); callers fall back to the two-sided limit policy.
SINGULAR_UNITARITY_TOL = 1e-6
LIMIT_OFFSET = 1e-9

# Element budget per LAPACK batch; keeps peak memory modest on fine sweeps.
_BATCH_ELEMENTS = 1 << 21


class ShellSingularityError(ArithmeticError):
    """The bond system was numerically singular at a real wavenumber."""

    def __init__(self, kl):
        super().__init__(
            f"bond system is singular on the energy shell at kl={kl!r}; "
            "re-evaluate at kl +- 1e-9 or use scattering_limit"
        )
        self.kl = kl


@dataclass(frozen=True, eq=False)
class BondSystem:
    """Assembled bond-scattering data for a two-lead graph.

    ``smatrix[b2, b1]`` is the amplitude from bond b1 arriving at a vertex
    into bond b2 leaving it; ``lengths`` holds per-bond phase exponents.
    ``inj`` injects the unit entrance wave, ``out_t``/``out_r`` read out the
    exit and entrance lead channels, and the ``direct_*`` terms cover
    lead-to-lead scattering at a shared vertex.
    """

    smatrix: np.ndarray
    lengths: np.ndarray
    inj: np.ndarray
    out_t: np.ndarray
    out_r: np.ndarray
    direct_t: complex
    direct_r: complex
    bond_ends: tuple

    @property
    def bond_count(self) -> int:
        return self.smatrix.shape[0]


@dataclass(frozen=True)
class ScatteringResult:
    """Two-port amplitudes at one wavenumber."""

    kl: complex
    t_global: complex
    r_global: complex

    @property
    def t2(self) -> float:
        return abs(self.t_global) ** 2

    @property
    def r2(self) -> float:
        return abs(self.r_global) ** 2


def assemble_bond_system(graph: QuantumGraph) -> BondSystem:
    """Build S, the injection vector, and the readout rows for a valid graph."""
    report = validate_graph(graph)
    if not report.ok:
        raise ValueError("cannot assemble an invalid graph:\n" + str(report))
    if len(graph.leads) != 2:
        raise ValueError(f"scattering needs exactly 2 leads, got {len(graph.leads)}")
    return _assemble_cached(graph)


@lru_cache(maxsize=128)
def _assemble_cached(graph: QuantumGraph) -> BondSystem:
    ends = [(e.u, e.v) for e in graph.edges]
    nbonds = 2 * len(ends)

    # Ports at a vertex: incident edge ends sorted by (edge index, end),
    # then leads in channel order.  This fixes every matrix row/column.
    port_index = {}
    for vid in graph.vertex_ids:
        keys = [
            (ei, end)
            for ei, (u, v) in enumerate(ends)
            for end in (0, 1)
            if (u, v)[end] == vid
        ]
        keys.sort()
        keys += [("lead", li) for li, lv in enumerate(graph.leads) if lv == vid]
        port_index[vid] = {key: pos for pos, key in enumerate(keys)}

    vmat = {vid: graph.vertex_matrix(vid) for vid in graph.vertex_ids}

    # Bond 2e+d departs from end d of edge e and arrives at end 1-d.
    smatrix = np.zeros((nbonds, nbonds), dtype=complex)
    for ei, (u, v) in enumerate(ends):
        for arr_end in (0, 1):
            vid = (u, v)[arr_end]
            b_in = 2 * ei + (1 - arr_end)
            col = port_index[vid][(ei, arr_end)]
            m = vmat[vid]
            for (kind, idx), row in port_index[vid].items():
                if kind == "lead":
                    continue
                b_out = 2 * kind + idx
                smatrix[b_out, b_in] = m[row, col]

    v_in, v_out = graph.leads
    lead_in = port_index[v_in][("lead", 0)]
    lead_out = port_index[v_out][("lead", 1)]

    inj = np.zeros(nbonds, dtype=complex)
    for (kind, idx), row in port_index[v_in].items():
        if kind != "lead":
            inj[2 * kind + idx] = vmat[v_in][row, lead_in]

    out_t = np.zeros(nbonds, dtype=complex)
    for ei, (u, v) in enumerate(ends):
        for arr_end in (0, 1):
            if (u, v)[arr_end] == v_out:
                b_in = 2 * ei + (1 - arr_end)
                out_t[b_in] = vmat[v_out][lead_out, port_index[v_out][(ei, arr_end)]]

    out_r = np.zeros(nbonds, dtype=complex)
    for ei, (u, v) in enumerate(ends):
        for arr_end in (0, 1):
            if (u, v)[arr_end] == v_in:
                b_in = 2 * ei + (1 - arr_end)
                out_r[b_in] = vmat[v_in][lead_in, port_index[v_in][(ei, arr_end)]]

    direct_r = complex(vmat[v_in][lead_in, lead_in])
    direct_t = complex(vmat[v_in][lead_out, lead_in]) if v_out == v_in else 0.0

    lengths = np.repeat([e.length for e in graph.edges], 2).astype(float)
    bond_ends = tuple(
        (u, v) if d == 0 else (v, u) for (u, v) in ends for d in (0, 1)
    )
    for arr in (smatrix, lengths, inj, out_t, out_r):
        arr.setflags(write=False)
    return BondSystem(
        smatrix=smatrix, lengths=lengths, inj=inj,
        out_t=out_t, out_r=out_r,
        direct_t=direct_t, direct_r=direct_r,
        bond_ends=bond_ends,
    )


def _solve_bonds(system: BondSystem, kl: np.ndarray) -> np.ndarray:
    """Arriving bond amplitudes for a 1-D array of (possibly complex) kl."""
    nb = system.bond_count
    phases = np.exp(1j * np.multiply.outer(kl, system.lengths))
    m = np.eye(nb, dtype=complex)[None, :, :] - phases[:, :, None] * system.smatrix
    rhs = phases * system.inj
    return np.linalg.solve(m, rhs[..., None])[..., 0]


def solve_many(graph: QuantumGraph, kl: np.ndarray):
    """Vectorized (t, r) over an array of wavenumbers; no singularity policy.

    Points where the system is near-singular come back non-finite or far from
    unitary; sweep-level code repairs them.  Evaluation is batched to bound
    peak memory, and results are deterministic for a fixed input order.
    """
    system = assemble_bond_system(graph)
    kl = np.asarray(kl)
    flat = np.atleast_1d(kl).astype(complex)
    nb = system.bond_count
    step = max(1, _BATCH_ELEMENTS // (nb * nb))
    t = np.empty(flat.shape, dtype=complex)
    r = np.empty(flat.shape, dtype=complex)
    for lo in range(0, flat.size, step):
        a = _solve_bonds(system, flat[lo:lo + step])
        t[lo:lo + step] = a @ system.out_t + system.direct_t
        r[lo:lo + step] = a @ system.out_r + system.direct_r
    if kl.ndim == 0:
        return t[0], r[0]
    return t, r


def scattering_matrix(graph: QuantumGraph, kl) -> ScatteringResult:
    """Two-port amplitudes at one wavenumber, real or complex.

    Real kl must be nonzero; complex kl must keep |e^{i kl}| <= 1 + 1e-9
    (no exponential growth along the edges).  A numerically singular on-shell
    solve raises ShellSingularityError so the caller can apply the two-sided
    limit policy.
    """
    kl = complex(kl)
    if kl.imag == 0.0:
        if kl.real == 0.0:
            raise ValueError("kl must be nonzero")
    elif kl.imag < -1e-9:
        raise ValueError(
            f"complex kl={kl!r} makes |e^(i kl)| = {np.exp(-kl.imag):.6g} > 1"
        )

    t, r = solve_many(graph, np.array([kl]))
    t, r = complex(t[0]), complex(r[0])
    on_shell = kl.imag == 0.0
    if not (np.isfinite(t) and np.isfinite(r)):
        raise ShellSingularityError(kl)
    if on_shell and abs(abs(t) ** 2 + abs(r) ** 2 - 1.0) > SINGULAR_UNITARITY_TOL:
        raise ShellSingularityError(kl)
    out_kl = kl.real if on_shell else kl
    return ScatteringResult(kl=out_kl, t_global=t, r_global=r)


def scattering_limit(graph: QuantumGraph, kl: float) -> ScatteringResult:
    """Limit policy at an on-shell singular point.

    Averages evaluations at kl +- 1e-9; the odd error terms cancel, so a
    removable singularity is recovered with relative error of order 1e-18.
    """
    lo = scattering_matrix(graph, kl - LIMIT_OFFSET)
    hi = scattering_matrix(graph, kl + LIMIT_OFFSET)
    return ScatteringResult(
        kl=kl,
        t_global=0.5 * (lo.t_global + hi.t_global),
        r_global=0.5 * (lo.r_global + hi.r_global),
    )


def scattering_or_limit(graph: QuantumGraph, kl: float) -> ScatteringResult:
    try:
        return scattering_matrix(graph, kl)
    except ShellSingularityError:
        return scattering_limit(graph, kl)


def green_function_value(graph: QuantumGraph, x_i: float, x_f: float, kl: float) -> complex:
    """Lead-to-lead Green's function T(k)/(ik) e^{ik(x_i + x_f)}.

    x_i and x_f are distances along the entrance and exit leads from their
    attachment vertices; units are natural (hbar = m = base length = 1), so
    k equals kl.  kl = 0 is rejected because of the 1/k prefactor.
    """
    if kl == 0:
        raise ValueError("kl must be nonzero (prefactor pole at k = 0)")
    if x_i < 0 or x_f < 0:
        raise ValueError("lead coordinates must be non-negative")
    res = scattering_or_limit(graph, kl)
    return res.t_global / (1j * kl) * np.exp(1j * kl * (x_i + x_f))


# ---------------------------------------------------------------------------
# Rational amplitude extraction.
#
# For integer edge lengths, t(z), r(z) and det(I - D(z)S) are polynomials (or
# ratios of polynomials) in z of degree at most L = total directed length.
# Sampling t*det and det on a circle |z| = rho < 1 and taking an FFT recovers
# the polynomial coefficients to near machine precision; this avoids the
# accuracy loss of eigendecomposition-based formulas when S has repeated
# unit-modulus eigenvalues.
# ---------------------------------------------------------------------------

_EXTRACT_RHO = 0.95


def extract_rational_amplitude(graph: QuantumGraph, channel: str = "transmission") -> RationalAmplitude:
    """Exact rational form of the transmission (or reflection) amplitude.

    Requires integral edge lengths.  The result is normalized to den(0) = 1
    and carries the solver's (physical) sign convention, so its Taylor
    coefficients are the walk amplitudes directly.
    """
    if channel not in ("transmission", "reflection"):
        raise ValueError(f"channel must be transmission or reflection, got {channel!r}")
    system = assemble_bond_system(graph)
    bond_lengths = np.repeat(integral_lengths(graph), 2)
    total = int(bond_lengths.sum())

    n = 1 << max(3, int(np.ceil(np.log2(8 * (total + 2)))))
    rho = _EXTRACT_RHO
    theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    z = rho * np.exp(1j * theta)

    powers = z[:, None] ** bond_lengths[None, :]
    m = np.eye(system.bond_count, dtype=complex)[None] - powers[:, :, None] * system.smatrix
    dets = np.linalg.det(m)
    a = np.linalg.solve(m, (powers * system.inj)[..., None])[..., 0]
    if channel == "transmission":
        vals = a @ system.out_t + system.direct_t
    else:
        vals = a @ system.out_r + system.direct_r

    def poly_coeffs(samples, degree):
        raw = np.fft.fft(samples)[: degree + 1]
        k = np.arange(degree + 1)
        # Undo the half-sample rotation and the sampling radius.
        return raw * np.exp(-1j * np.pi * k / n) / n * rho ** (-k.astype(float))

    den = poly_coeffs(dets, total)
    num = poly_coeffs(vals * dets, total)
    num = num / den[0]
    den = den / den[0]

    # Trailing coefficients below the sampling noise floor are artifacts.
    keep = np.abs(den) > 1e-11 * np.max(np.abs(den))
    den = den[: keep.nonzero()[0].max() + 1]
    keepn = np.abs(num) > 1e-11 * max(float(np.max(np.abs(num))), 1e-30)
    num = num[: keepn.nonzero()[0].max() + 1] if keepn.any() else np.zeros(1, complex)
    return RationalAmplitude(num, den, family="custom", params=(channel,))
