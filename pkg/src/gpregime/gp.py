"""Gross-Pitaevskii ground state in a trap and its linearization.

The radial problem is solved in the variable u = r phi on a uniform grid,
where the 3D Laplacian reduces to -u'' with u(0) = 0. One symmetric
pentadiagonal fourth-order stencil plays the Laplacian everywhere: the
gradient flow, the Euler-Lagrange residual, and the linearized operator all
share it. That self-consistency is the point: the minimizer is then an
eigenvector of the linearization up to solver tolerance, not up to
discretization error, which is what the zero-mode checks require.

Conventions: minimization of E[phi] = int |grad phi|^2 + V phi^2
+ 4 pi a0 phi^4 over unit-mass radial phi, so the Euler-Lagrange equation is
-Delta phi + V phi + 8 pi a0 phi^3 = eps phi with eps = E + 4 pi a0 ||phi||_4^4,
and the linearized operator is h = -Delta + V + 8 pi a0 phi^2 - eps, which
annihilates phi exactly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded, eig_banded

from .errors import InvalidParameterError, SolverFailureError
from .radial import radial_fourier

_DEFAULT_GRIDS = {"harmonic": (8.0, 800), "quartic": (5.0, 500)}


# ---------------------------------------------------------------------------
# the shared discrete Laplacian
# ---------------------------------------------------------------------------

def kinetic_band(n_interior, h):
    """Upper banded form of the fourth-order -d^2/dr^2 on u_1..u_{n-1}.

    Interior stencil (1, -16, 30, -16, 1) / (12 h^2). The first row uses the
    antisymmetric ghost u(-h) = -u(h), valid because u = r phi is odd for
    smooth even phi; that keeps the operator symmetric and fourth-order up to
    the origin. Its periodic symbol is (c - 1)(c - 7)/(3 h^2) >= 0 for
    c = cos(theta) in [-1, 1], so the matrix is positive definite.
    """
    m = n_interior
    band = np.zeros((3, m))
    band[2, :] = 30.0
    band[2, 0] = 29.0  # ghost fold-back at the origin
    band[1, 1:] = -16.0
    band[0, 2:] = 1.0
    return band / (12.0 * h * h)


def band_matvec(band, u):
    """Apply the symmetric banded operator stored in upper form."""
    out = band[2] * u
    out[:-1] += band[1, 1:] * u[1:]
    out[1:] += band[1, 1:] * u[:-1]
    out[:-2] += band[0, 2:] * u[2:]
    out[2:] += band[0, 2:] * u[:-2]
    return out


# ---------------------------------------------------------------------------
# state container
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GpState:
    """Converged minimizer with its energy decomposition.

    phi is sampled on the full node set including r = 0 (even-symmetric
    extrapolation) and r_max (where it vanishes). Energies are reported so
    that total is exactly the sum of the three parts; eps_gp equals
    total + 4 pi a0 ||phi||_4^4 by construction of the shared quadrature.
    """

    grid: np.ndarray
    phi: np.ndarray
    a0: float
    energy: dict
    eps_gp: float
    residual: float
    iterations: int
    trap_kind: str
    u: np.ndarray          # u = r phi on interior nodes 1..n-1
    h: float
    v_nodes: np.ndarray    # trap samples on interior nodes
    energy_trace: tuple    # accepted-step energies, first to last

    @property
    def quartic_norm(self):
        """||phi||_4^4 with the energy quadrature."""
        r = self.grid[1:-1]
        return 4.0 * np.pi * self.h * float(np.sum(self.u ** 4 / r ** 2))


def _phi_from_u(u, r_grid):
    """Assemble phi on all nodes; even-symmetric O(h^6) value at the origin."""
    phi = np.zeros(r_grid.size)
    phi[1:-1] = u / r_grid[1:-1]
    phi[0] = 1.5 * phi[1] - 0.6 * phi[2] + 0.1 * phi[3]
    return phi


def _energy_parts(u, kin_band, v_nodes, r_int, h, a0):
    w = 4.0 * np.pi * h
    kinetic = w * float(u @ band_matvec(kin_band, u))
    trap = w * float(np.sum(v_nodes * u * u))
    quart = w * float(np.sum(u ** 4 / r_int ** 2))
    interaction = 4.0 * np.pi * a0 * quart
    return kinetic, trap, interaction, quart


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

def minimize_gp(trap, a0, r_max=None, n_pts=None, tol=1e-11, max_iter=5000,
                init_phi=None):
    """Ground state by a normalized semi-implicit gradient flow.

    Each step solves (I + tau (K + V + 8 pi a0 u^2/r^2)) u* = u with the
    cubic term frozen at the current iterate, then renormalizes; the fixed
    point of that map satisfies the discrete Euler-Lagrange equation exactly.
    Steps that fail to decrease the energy are retried with a smaller tau.
    Convergence is declared on the Euler-Lagrange residual in L^2(d^3x).
    """
    if a0 < 0:
        raise InvalidParameterError(f"scattering length must be >= 0, got {a0}")
    if r_max is None or n_pts is None:
        d_rmax, d_n = _DEFAULT_GRIDS.get(trap.kind, (8.0, 800))
        r_max = d_rmax if r_max is None else r_max
        n_pts = d_n if n_pts is None else n_pts
    n = int(n_pts)
    if n < 64:
        raise InvalidParameterError("need at least 64 grid intervals")
    h = r_max / n
    r_grid = np.arange(n + 1) * h
    r_int = r_grid[1:-1]
    v_nodes = trap(r_int)
    kin = kinetic_band(n - 1, h)
    c = 8.0 * np.pi * a0
    w_norm = 4.0 * np.pi * h

    if init_phi is not None:
        u = np.asarray(init_phi, dtype=float)[1:-1] * r_int
    else:
        u = r_int * np.exp(-r_int ** 2 / 2.0)
    u = u / np.sqrt(w_norm * np.sum(u * u))

    # roundoff floor of the residual: applying the stencil loses ~1/h^2 ulps
    eff_tol = max(tol, 5e-15 / (h * h))

    def el_pieces(u):
        hu = band_matvec(kin, u) + v_nodes * u + c * u ** 3 / r_int ** 2
        eps = w_norm * float(u @ hu)
        res = hu - eps * u
        return eps, np.sqrt(w_norm * float(res @ res))

    kinetic, trap_e, inter, _ = _energy_parts(u, kin, v_nodes, r_int, h, a0)
    energy = kinetic + trap_e + inter
    trace = [energy]
    tau = 0.05
    iterations = 0
    for iterations in range(max_iter + 1):
        eps, res = el_pieces(u)
        if res <= eff_tol:
            break
        if iterations == max_iter:
            raise SolverFailureError(
                f"no convergence after {max_iter} steps; residual {res:.3e}")
        for _ in range(60):
            band = kin * tau
            band[2] += 1.0 + tau * (v_nodes + c * u ** 2 / r_int ** 2)
            u_new = solveh_banded(band, u, lower=False)
            u_new /= np.sqrt(w_norm * np.sum(u_new * u_new))
            k2, t2, i2, _ = _energy_parts(u_new, kin, v_nodes, r_int, h, a0)
            e_new = k2 + t2 + i2
            if e_new <= energy + 1e-13 * max(abs(energy), 1.0):
                u = u_new
                kinetic, trap_e, inter = k2, t2, i2
                energy = e_new
                trace.append(energy)
                tau = min(tau * 1.2, 2.0)
                break
            tau *= 0.5
        else:
            raise SolverFailureError("step size collapsed without progress")

    eps, res = el_pieces(u)
    phi = _phi_from_u(u, r_grid)
    return GpState(
        grid=r_grid, phi=phi, a0=float(a0),
        energy={"kinetic": kinetic, "trap": trap_e, "interaction": inter,
                "total": kinetic + trap_e + inter},
        eps_gp=kinetic + trap_e + 2.0 * inter,
        residual=float(res), iterations=iterations, trap_kind=trap.kind,
        u=u, h=float(h), v_nodes=v_nodes, energy_trace=tuple(trace))


def el_residual(state, trap=None, phi=None):
    """Euler-Lagrange residual in L^2(d^3x) of phi against the discrete
    operator of the state's grid.

    With phi omitted this measures self-consistency of the minimizer and
    sits at solver tolerance. Injecting an analytic phi measures the
    discretization error of the stencil instead, which shrinks at fourth
    order under grid refinement.
    """
    r_int = state.grid[1:-1]
    h = state.h
    v = state.v_nodes if trap is None else trap(r_int)
    if phi is None:
        u = state.u
    else:
        u = np.asarray(phi, dtype=float)[1:-1] * r_int
        u = u / np.sqrt(4.0 * np.pi * h * np.sum(u * u))
    kin = kinetic_band(u.size, h)
    c = 8.0 * np.pi * state.a0
    hu = band_matvec(kin, u) + v * u + c * u ** 3 / r_int ** 2
    w_norm = 4.0 * np.pi * h
    eps = w_norm * float(u @ hu)
    res = hu - eps * u
    return float(np.sqrt(w_norm * float(res @ res)))


# ---------------------------------------------------------------------------
# linearization spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HgpSpectrum:
    """Lowest eigenpairs of h = -Delta + V + 8 pi a0 phi^2 - eps (s-wave)."""

    values: np.ndarray
    vectors_u: np.ndarray     # columns, on interior nodes
    gap: float
    ground_overlap: float
    grid: np.ndarray


def hgp_spectrum(state, k=6):
    """Lowest k s-wave eigenpairs of the linearization around the minimizer.

    The operator reuses the minimizer's stencil and grid, so the minimizer
    itself is its zero mode up to the solver residual: lambda_0 is small
    compared to lambda_1 and the ground eigenvector overlaps u to roundoff.
    """
    if k < 2:
        raise InvalidParameterError("need at least two eigenvalues")
    r_int = state.grid[1:-1]
    band = kinetic_band(state.u.size, state.h).copy()
    band[2] += state.v_nodes + 8.0 * np.pi * state.a0 \
        * state.u ** 2 / r_int ** 2 - state.eps_gp
    vals, vecs = eig_banded(band, lower=False, select="i",
                            select_range=(0, k - 1))
    gnorm = np.linalg.norm(vecs[:, 0]) * np.linalg.norm(state.u)
    overlap = abs(float(vecs[:, 0] @ state.u)) / gnorm
    return HgpSpectrum(values=vals, vectors_u=vecs,
                       gap=float(vals[1] - vals[0]),
                       ground_overlap=float(overlap), grid=state.grid)


# ---------------------------------------------------------------------------
# decay certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecayReport:
    """sup |g| e^{nu r} over the resolvable grid for g = phi, phi', lap phi."""

    nu: float
    c_phi: float
    c_dphi: float
    c_lap: float
    divergent: bool
    window_maxima: tuple


def _window_growth(weighted, n_win=6):
    """True when the tail-window maxima keep growing toward the edge."""
    m = weighted.size
    if m < 4 * n_win:
        return False, tuple()
    tail = weighted[m // 2:]
    blocks = np.array_split(tail, n_win)
    maxima = np.array([b.max() for b in blocks])
    growing = bool(np.all(np.diff(maxima) > 0)
                   and maxima[-1] > 1.05 * maxima[0])
    return growing, tuple(float(x) for x in maxima)


def verify_decay(state, nu, phi=None):
    """Exponential-envelope constants for phi and its first two derivatives.

    Nodes where |phi| has fallen below 1e-13 of its peak are excluded: there
    the second difference is roundoff noise amplified by 1/h^2 and would
    report a spurious envelope. A non-decaying injected profile (for example
    a constant) keeps all its nodes and is flagged as divergent instead of
    being assigned a constant.
    """
    if nu <= 0:
        raise InvalidParameterError("decay rate nu must be positive")
    r = state.grid
    h = state.h
    if phi is None:
        phi_vals = state.phi
    else:
        phi_vals = np.asarray(phi, dtype=float)
    u = phi_vals[1:-1] * r[1:-1]
    r_int = r[1:-1]

    keep = np.abs(phi_vals) >= 1e-13 * np.max(np.abs(phi_vals))
    keep_int = keep[1:-1]

    kin = kinetic_band(u.size, h)
    lap_phi = -band_matvec(kin, u) / r_int

    # 4th-order centered du/dr; the two edge nodes per side have no centered
    # stencil and are dropped from the derivative sup altogether
    du = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * h)
    dphi = (du * r_int[2:-2] - u[2:-2]) / r_int[2:-2] ** 2
    keep_d = keep_int[2:-2]

    wphi = np.abs(phi_vals[keep]) * np.exp(nu * r[keep])
    wdphi = np.abs(dphi[keep_d]) * np.exp(nu * r_int[2:-2][keep_d])
    wlap = np.abs(lap_phi[keep_int]) * np.exp(nu * r_int[keep_int])

    growing, maxima = _window_growth(wphi)
    return DecayReport(
        nu=float(nu), c_phi=float(np.max(wphi)), c_dphi=float(np.max(wdphi)),
        c_lap=float(np.max(wlap)), divergent=growing, window_maxima=maxima)


@dataclass(frozen=True, eq=False)
class FourierDecayReport:
    """Transform samples with the (1+p)^4-weighted envelope certificate."""

    p: np.ndarray
    phat: np.ndarray
    sup_weighted: float
    argmax_p: float
    slope_resolved: float
    floor: float


def fourier_decay(state, p_grid=None):
    """Transform of phi and its quartic-weighted sup.

    The sup of (1+p)^4 |phat| sits at moderate p where the transform is far
    above roundoff, so it is refinement-stable. The log-log slope is fitted
    only on the resolvable band (values above 1e3 times the roundoff floor);
    beyond it the transform of a smooth state underflows into noise and
    fitting there would be meaningless.
    """
    if p_grid is None:
        p_grid = np.geomspace(0.02, 6.0, 241)
    phat = radial_fourier(state.phi, state.h, p_grid)
    weighted = (1.0 + p_grid) ** 4 * np.abs(phat)
    k = int(np.argmax(weighted))

    mag = np.abs(phat)
    floor = max(mag.min(), 1e-300)
    resolved = mag > 1e3 * floor
    slope = 0.0
    if np.count_nonzero(resolved) >= 8:
        sel = np.nonzero(resolved)[0]
        # fit on the outer resolvable decade where the decay law is visible
        hi = p_grid[sel[-1]]
        band = resolved & (p_grid > hi / 10.0)
        if np.count_nonzero(band) >= 4:
            slope = float(np.polyfit(np.log(p_grid[band]),
                                     np.log(mag[band] + 1e-300), 1)[0])
    return FourierDecayReport(
        p=p_grid, phat=phat, sup_weighted=float(weighted[k]),
        argmax_p=float(p_grid[k]), slope_resolved=slope, floor=float(floor))


@dataclass(frozen=True)
class VextPhiReport:
    """Pointwise and L^2 size of V_ext phi for the interaction estimates."""

    sup_vphi: float
    argmax_r: float
    int_v2_phi2: float


def vext_phi_bound(state, trap):
    """sup_r V(r) |phi(r)| and int V^2 phi^2 d^3x on the state's grid."""
    r = state.grid
    v = trap(r)
    prod = v * np.abs(state.phi)
    k = int(np.argmax(prod))
    r_int = r[1:-1]
    integral = 4.0 * np.pi * state.h * float(
        np.sum(trap(r_int) ** 2 * state.u ** 2))
    return VextPhiReport(sup_vphi=float(prod[k]), argmax_r=float(r[k]),
                         int_v2_phi2=float(integral))
