"""Truncated bosonic sandbox for the excitation-map operator algebra.

Works on the space of occupation vectors (n_1 .. n_M) with total at most
N_cap. The modified ladder operators b = sqrt((N - NUM)/N) a stay inside
the truncation, the condensate-relabeling map U sends the top sector
onto the zero-condensate sub-basis, and the quadratic-form decomposition
of the two-body Hamiltonian is assembled by exact operator algebra, so
the energy identity

    <psi, H psi> = <U psi, Gamma L Gamma U psi>

holds to roundoff for every state in the top sector. Generator
exponentials use dense scaling-and-squaring; growth lemmas are checked
as generalized-eigenvalue ratios swept over the particle cap.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from .errors import (
    InvalidParameterError,
    ResourceLimitError,
    SolverFailureError,
)

_EXPM_DIM_CAP = 5000
_UNITARY_TOL = 1e-12


# ---------------------------------------------------------------------------
# the truncated space
# ---------------------------------------------------------------------------

def _enumerate_basis(M, N_cap):
    """Occupation vectors with total <= N_cap, graded by total."""
    out = []
    for total in range(N_cap + 1):
        # multisets of `total` mode labels <-> occupations with that total
        for combo in combinations_with_replacement(range(M), total):
            occ = [0] * M
            for i in combo:
                occ[i] += 1
            out.append(tuple(occ))
    return tuple(out)


@dataclass(frozen=True)
class FockSpace:
    """Occupation basis of at most N_cap bosons in M modes."""

    M: int
    N_cap: int
    basis: tuple = field(repr=False)
    index: dict = field(repr=False)
    dim: int

    def number_diag(self):
        return np.array([sum(n) for n in self.basis], dtype=float)

    def sector_indices(self, total):
        return np.array([k for k, n in enumerate(self.basis)
                         if sum(n) == total], dtype=int)

    def excitation_indices(self, mode0=0):
        return np.array([k for k, n in enumerate(self.basis)
                         if n[mode0] == 0], dtype=int)


def build_fock_space(M, N_cap):
    if M < 1:
        raise InvalidParameterError(f"need at least one mode, got {M}")
    if N_cap < 0:
        raise InvalidParameterError(f"negative particle cap {N_cap}")
    basis = _enumerate_basis(M, N_cap)
    dim = comb(M + N_cap, M)
    if len(basis) != dim:
        raise SolverFailureError("basis enumeration lost states")
    index = {n: k for k, n in enumerate(basis)}
    return FockSpace(M=M, N_cap=N_cap, basis=basis, index=index, dim=dim)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockOperator:
    """Sparse operator on a FockSpace with bookkeeping flags.

    number_offset is the change in total occupation the operator
    induces, or None when the matrix mixes different offsets.
    """

    space: FockSpace
    matrix: sparse.csr_matrix = field(repr=False)
    hermitian: bool
    number_offset: object = None


def hermiticity_defect(op):
    d = op.matrix - op.matrix.conj().T
    return 0.0 if d.nnz == 0 else float(np.max(np.abs(d.data)))


def number_offset_of(space, mat):
    """The unique total-occupation shift of a matrix, or None if mixed."""
    coo = sparse.coo_matrix(mat)
    if coo.nnz == 0:
        return 0
    totals = space.number_diag()
    shifts = np.unique(totals[coo.row] - totals[coo.col])
    return int(shifts[0]) if shifts.size == 1 else None


def _lowering(space, i):
    rows, cols, vals = [], [], []
    for col, n in enumerate(space.basis):
        if n[i] == 0:
            continue
        m = list(n)
        m[i] -= 1
        rows.append(space.index[tuple(m)])
        cols.append(col)
        vals.append(np.sqrt(n[i]))
    return sparse.csr_matrix((vals, (rows, cols)),
                             shape=(space.dim, space.dim))


@dataclass(frozen=True)
class Ladder:
    """Plain and truncation-modified ladder matrices for one mode."""

    a: sparse.csr_matrix = field(repr=False)
    a_dag: sparse.csr_matrix = field(repr=False)
    b: sparse.csr_matrix = field(repr=False)
    b_dag: sparse.csr_matrix = field(repr=False)


def build_ladder(space, i):
    if not 0 <= i < space.M:
        raise InvalidParameterError(
            f"mode {i} outside 0..{space.M - 1}")
    if space.N_cap < 1:
        raise InvalidParameterError(
            "ladder operators need a positive particle cap")
    a = _lowering(space, i)
    depletion = sparse.diags(
        np.sqrt(np.clip((space.N_cap - space.number_diag())
                        / space.N_cap, 0.0, None)))
    b = depletion @ a
    return Ladder(a=a, a_dag=a.T.tocsr(), b=b.tocsr(),
                  b_dag=b.T.tocsr())


def number_op(space):
    return FockOperator(space=space,
                        matrix=sparse.diags(space.number_diag()).tocsr(),
                        hermitian=True, number_offset=0)


def dGamma(space, A):
    """Second quantization of a one-body matrix."""
    A = np.asarray(A, dtype=float)
    if A.shape != (space.M, space.M):
        raise InvalidParameterError(
            f"one-body matrix must be {space.M}x{space.M}")
    ladders = [build_ladder(space, i) for i in range(space.M)]
    out = sparse.csr_matrix((space.dim, space.dim))
    for i in range(space.M):
        for j in range(space.M):
            if A[i, j] != 0.0:
                out = out + A[i, j] * (ladders[i].a_dag @ ladders[j].a)
    return FockOperator(space=space, matrix=out.tocsr(),
                        hermitian=bool(np.allclose(A, A.T)),
                        number_offset=0)


# ---------------------------------------------------------------------------
# commutator identities
# ---------------------------------------------------------------------------

def _comm(X, Y):
    return X @ Y - Y @ X


def _max_abs(mat):
    mat = sparse.csr_matrix(mat)
    return 0.0 if mat.nnz == 0 else float(np.max(np.abs(mat.data)))


def verify_b_commutators(space, seed=0):
    """Max deviation over the modified-ladder commutator identities.

    Checks [b_i, b*_j] = (1 - NUM/N) delta_ij - a*_j a_i / N,
    [b_i, b_j] = 0, [b_i, a*_j a_k] = delta_ij b_k, [b_i, NUM] = b_i,
    and a random contraction of the mixed identity.
    """
    N = space.N_cap
    lad = [build_ladder(space, i) for i in range(space.M)]
    eye = sparse.identity(space.dim, format="csr")
    num = sparse.diags(space.number_diag()).tocsr()
    worst = 0.0
    for i in range(space.M):
        for j in range(space.M):
            lhs = _comm(lad[i].b, lad[j].b_dag)
            rhs = -(lad[j].a_dag @ lad[i].a) / N
            if i == j:
                rhs = rhs + (eye - num / N)
            worst = max(worst, _max_abs(lhs - rhs))
            worst = max(worst, _max_abs(_comm(lad[i].b, lad[j].b)))
            for k in range(space.M):
                lhs = _comm(lad[i].b, lad[j].a_dag @ lad[k].a)
                rhs = lad[k].b if i == j else None
                diff = lhs - rhs if rhs is not None else lhs
                worst = max(worst, _max_abs(diff))
        worst = max(worst, _max_abs(_comm(lad[i].b, num) - lad[i].b))
    # contracted form: [b(f), a*(g) a(h)] = <f, g> b(h)
    rng = np.random.default_rng(seed)
    f, g, h = rng.normal(size=(3, space.M))
    bf = sum(f[i] * lad[i].b for i in range(space.M))
    ag = sum(g[i] * lad[i].a_dag for i in range(space.M))
    ah = sum(h[i] * lad[i].a for i in range(space.M))
    bh = sum(h[i] * lad[i].b for i in range(space.M))
    worst = max(worst, _max_abs(_comm(bf, ag @ ah) - float(f @ g) * bh))
    return worst


# ---------------------------------------------------------------------------
# the condensate relabeling map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcitationMap:
    """Isometry from the top sector onto the zero-condensate sub-basis."""

    space: FockSpace
    mode0: int
    matrix: sparse.csr_matrix = field(repr=False)
    sector: np.ndarray = field(repr=False)
    image: np.ndarray = field(repr=False)


def build_UN(space, mode0=0):
    if not 0 <= mode0 < space.M:
        raise InvalidParameterError(f"condensate mode {mode0} out of range")
    if space.N_cap < 1:
        raise InvalidParameterError("relabeling needs at least one particle")
    sector = space.sector_indices(space.N_cap)
    image = space.excitation_indices(mode0)
    rows, cols = [], []
    for col, k in enumerate(sector):
        n = list(space.basis[k])
        n[mode0] = 0
        rows.append(space.index[tuple(n)])
        cols.append(col)
    mat = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)),
                            shape=(space.dim, sector.size))
    return ExcitationMap(space=space, mode0=mode0, matrix=mat,
                         sector=sector, image=image)


def gamma_projector(space, mode0=0):
    """Second-quantized projection onto states with an empty condensate."""
    diag = np.array([1.0 if n[mode0] == 0 else 0.0 for n in space.basis])
    return FockOperator(space=space, matrix=sparse.diags(diag).tocsr(),
                        hermitian=True, number_offset=0)


def verify_un(space, mode0=0):
    """Max deviation over unitarity and the four conjugation relations.

    Each relation compares U X U* for a condensate bilinear X, read off
    the top sector, against its excitation-space image sandwiched by the
    empty-condensate projector.
    """
    un = build_UN(space, mode0)
    U = un.matrix
    N = space.N_cap
    lad = [build_ladder(space, i) for i in range(space.M)]
    a0, a0d = lad[mode0].a, lad[mode0].a_dag
    P = gamma_projector(space, mode0).matrix
    eye_s = sparse.identity(un.sector.size, format="csr")
    eye = sparse.identity(space.dim, format="csr")
    num = sparse.diags(space.number_diag()).tocsr()
    sel = sparse.csr_matrix(
        (np.ones(un.sector.size), (un.sector, np.arange(un.sector.size))),
        shape=(space.dim, un.sector.size))

    def conj(op):
        return U @ (sel.T @ op @ sel) @ U.T

    worst = _max_abs(U.T @ U - eye_s)
    worst = max(worst, _max_abs(U @ U.T - P))
    worst = max(worst, _max_abs(conj(a0d @ a0)
                                - P @ (N * eye - num) @ P))
    sqrtN = np.sqrt(N)
    for p in range(space.M):
        if p == mode0:
            continue
        worst = max(worst, _max_abs(conj(lad[p].a_dag @ a0)
                                    - sqrtN * (P @ lad[p].b_dag @ P)))
        worst = max(worst, _max_abs(conj(a0d @ lad[p].a)
                                    - sqrtN * (P @ lad[p].b @ P)))
        for q in range(space.M):
            if q == mode0:
                continue
            hop = lad[p].a_dag @ lad[q].a
            worst = max(worst, _max_abs(conj(hop) - P @ hop @ P))
    # the pure condensate relabels to the bare vacuum
    pure_full = space.index[tuple(N if i == mode0 else 0
                                  for i in range(space.M))]
    pure = np.zeros(un.sector.size)
    pure[int(np.flatnonzero(un.sector == pure_full)[0])] = 1.0
    vac = np.zeros(space.dim)
    vac[space.index[(0,) * space.M]] = 1.0
    worst = max(worst, float(np.max(np.abs(U @ pure - vac))))
    return worst


# ---------------------------------------------------------------------------
# coefficient sets and the quadratic-form decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSet:
    """Mode-space coefficients for the two-body problem.

    h is the one-body matrix, v the two-body tensor with bosonic
    symmetries v_ijkl = v_jikl = v_ijlk = v_klij (real case), eta the
    symmetric pair-kernel matrix, nu and g the field-kernel and lowpass
    coefficient matrices. mode0 names the condensate mode.
    """

    mode0: int
    h: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)


def validate_coefficients(coeff, M):
    h, v = coeff.h, coeff.v
    if h.shape != (M, M) or not np.allclose(h, h.T, atol=1e-13):
        raise InvalidParameterError("one-body matrix must be symmetric")
    if v.shape != (M, M, M, M):
        raise InvalidParameterError("two-body tensor has the wrong shape")
    for perm, name in ((v.transpose(1, 0, 2, 3), "creator exchange"),
                       (v.transpose(0, 1, 3, 2), "annihilator exchange"),
                       (v.transpose(2, 3, 0, 1), "pair swap")):
        if not np.allclose(v, perm, atol=1e-13):
            raise InvalidParameterError(
                f"two-body tensor breaks {name} symmetry")
    if not np.allclose(coeff.eta, coeff.eta.T, atol=1e-13):
        raise InvalidParameterError("pair-kernel matrix must be symmetric")


def make_random_coefficients(M, seed=0, mode0=0, scale=1.0):
    """Random real coefficient tensors with the symmetries built in."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(M, M))
    h = scale * (x + x.T) / 2.0
    t = rng.normal(size=(M, M, M, M))
    t = (t + t.transpose(1, 0, 2, 3)) / 2.0
    t = (t + t.transpose(0, 1, 3, 2)) / 2.0
    v = scale * (t + t.transpose(2, 3, 0, 1)) / 2.0
    e = rng.normal(size=(M, M))
    eta = scale * (e + e.T) / 2.0
    nu = scale * rng.normal(size=(M, M))
    g = scale * rng.normal(size=(M, M))
    return CoefficientSet(mode0=mode0, h=h, v=v, eta=eta, nu=nu, g=g)


def build_HN(coeff, space):
    """dGamma(h) + (1/2) sum v_ijkl a*_i a*_j a_l a_k on the full basis."""
    validate_coefficients(coeff, space.M)
    lad = [build_ladder(space, i) for i in range(space.M)]
    out = dGamma(space, coeff.h).matrix
    for i in range(space.M):
        for j in range(space.M):
            left = lad[i].a_dag @ lad[j].a_dag
            for k in range(space.M):
                for l in range(space.M):
                    c = coeff.v[i, j, k, l]
                    if c != 0.0:
                        out = out + 0.5 * c * (left @ lad[l].a @ lad[k].a)
    return FockOperator(space=space, matrix=out.tocsr(), hermitian=True,
                        number_offset=0)


def build_LN(coeff, space):
    """The five-piece decomposition of the relabeled Hamiltonian.

    Assembled directly from the coefficients by the exact substitution
    rules for condensate pairs, with every square-root weight kept in
    operator form, so the comparison with the conjugated Hamiltonian is
    an identity rather than an expansion.
    """
    validate_coefficients(coeff, space.M)
    M, N = space.M, space.N_cap
    m0 = coeff.mode0
    h, v = coeff.h, coeff.v
    lad = [build_ladder(space, i) for i in range(space.M)]
    eye = sparse.identity(space.dim, format="csr")
    num = sparse.diags(space.number_diag()).tocsr()
    N0 = N * eye - num
    sqrtN = np.sqrt(N)
    exc = [p for p in range(M) if p != m0]
    zero = sparse.csr_matrix((space.dim, space.dim))

    L0 = h[m0, m0] * N0 + 0.5 * v[m0, m0, m0, m0] * (N0 @ (N0 - eye))

    X1 = zero
    for p in exc:
        X1 = X1 + sqrtN * h[p, m0] * lad[p].b_dag
        X1 = X1 + sqrtN * v[p, m0, m0, m0] * (lad[p].b_dag @ (N0 - eye))
    L1 = X1 + X1.T

    L2 = zero
    pair = zero
    for p in exc:
        for q in exc:
            hop = lad[p].a_dag @ lad[q].a
            L2 = L2 + (h[p, q] - 2.0 * v[p, m0, q, m0]) * hop
            L2 = L2 + 2.0 * N * v[p, m0, q, m0] * (lad[p].b_dag @ lad[q].b)
            pair = pair + 0.5 * N * v[p, q, m0, m0] * (lad[p].b_dag
                                                       @ lad[q].b_dag)
    L2 = L2 + pair + pair.T

    X3 = zero
    for p in exc:
        for q in exc:
            for r in exc:
                c = v[p, q, r, m0]
                if c != 0.0:
                    X3 = X3 + sqrtN * c * (lad[p].b_dag
                                           @ lad[q].a_dag @ lad[r].a)
    L3 = X3 + X3.T

    L4 = zero
    for p in exc:
        for q in exc:
            left = lad[p].a_dag @ lad[q].a_dag
            for r in exc:
                for s in exc:
                    c = v[p, q, r, s]
                    if c != 0.0:
                        L4 = L4 + 0.5 * c * (left @ lad[s].a @ lad[r].a)

    pieces = {"L0": L0, "L1": L1, "L2": L2, "L3": L3, "L4": L4}
    return {name: FockOperator(space=space, matrix=mat.tocsr(),
                               hermitian=True, number_offset=None)
            for name, mat in pieces.items()}


def verify_energy_identity(coeff, space, n_states=20, seed=0):
    """Max relative defect of <psi, H psi> = <U psi, G L G U psi>."""
    H = build_HN(coeff, space).matrix
    L = sum(op.matrix for op in build_LN(coeff, space).values())
    un = build_UN(space, coeff.mode0)
    G = gamma_projector(space, coeff.mode0).matrix
    GLG = G @ L @ G
    rng = np.random.default_rng(seed)
    worst = 0.0
    scale = max(_max_abs(H), 1.0)
    for _ in range(n_states):
        psi = rng.normal(size=un.sector.size)
        psi /= np.linalg.norm(psi)
        full = np.zeros(space.dim)
        full[un.sector] = psi
        lhs = float(full @ (H @ full))
        up = un.matrix @ psi
        rhs = float(up @ (GLG @ up))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# generators and exponentials
# ---------------------------------------------------------------------------

def build_B(space, eta):
    """Pair generator (1/2) sum eta_ij (b*_i b*_j - b_i b_j).

    Assembled as X - X.T from the creation half, so antisymmetry is
    exact at the floating-point level, not up to rounding.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (space.M, space.M) or not np.allclose(
            eta, eta.T, atol=1e-13):
        raise InvalidParameterError("pair generator needs a symmetric matrix")
    lad = [build_ladder(space, i) for i in range(space.M)]
    X = sparse.csr_matrix((space.dim, space.dim))
    for i in range(space.M):
        for j in range(space.M):
            c = eta[i, j]
            if c != 0.0:
                X = X + 0.5 * c * (lad[i].b_dag @ lad[j].b_dag)
    out = X - X.T
    return FockOperator(space=space, matrix=out.tocsr(), hermitian=False,
                        number_offset=None)


def build_A(space, nu, g, mode0=0):
    """Cubic generator (1/sqrt N) sum nu_xy g_xz (b*_x a*_y a_z - h.c.)."""
    nu = np.asarray(nu, dtype=float)
    g = np.asarray(g, dtype=float)
    if nu.shape != (space.M, space.M) or g.shape != (space.M, space.M):
        raise InvalidParameterError("coefficient matrices must be MxM")
    lad = [build_ladder(space, i) for i in range(space.M)]
    out = sparse.csr_matrix((space.dim, space.dim))
    for x in range(space.M):
        for y in range(space.M):
            if nu[x, y] == 0.0:
                continue
            for z in range(space.M):
                c = nu[x, y] * g[x, z]
                if c != 0.0:
                    term = lad[x].b_dag @ lad[y].a_dag @ lad[z].a
                    out = out + c * (term - term.T)
    out = out / np.sqrt(space.N_cap)
    return FockOperator(space=space, matrix=out.tocsr(), hermitian=False,
                        number_offset=None)


def exp_generator(op):
    """Unitary exponential of an antisymmetric generator."""
    if op.space.dim > _EXPM_DIM_CAP:
        raise ResourceLimitError(
            f"exponential dimension {op.space.dim} exceeds {_EXPM_DIM_CAP}")
    skew = _max_abs(op.matrix + op.matrix.T)
    if skew > 1e-12:
        raise InvalidParameterError(
            f"generator is not antisymmetric: defect {skew:.2e}")
    mat = sparse.csr_matrix(op.matrix).copy()
    mat.eliminate_zeros()
    if mat.nnz == 0:
        return np.eye(op.space.dim)
    Q = expm(mat.toarray())
    defect = np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0])))
    if not np.isfinite(defect) or defect > 1e-10:
        raise SolverFailureError(
            f"exponential lost unitarity: defect {defect:.2e}")
    return Q


# ---------------------------------------------------------------------------
# growth lemmas as eigenvalue sweeps
# ---------------------------------------------------------------------------

def _growth_ratio(space, gen_matrix, n):
    """Largest eigenvalue of the conjugated-number ratio operator."""
    gen_matrix = sparse.csr_matrix(gen_matrix).copy()
    gen_matrix.eliminate_zeros()
    if gen_matrix.nnz == 0:
        return 1.0
    Q = expm(gen_matrix.toarray())
    shifted = space.number_diag() + 1.0
    mid = Q.T @ np.diag(shifted ** n) @ Q
    ratio = np.diag(shifted ** (-n / 2.0)) @ mid @ np.diag(
        shifted ** (-n / 2.0))
    ratio = (ratio + ratio.T) / 2.0
    return float(np.linalg.eigvalsh(ratio)[-1])


@dataclass(frozen=True)
class GrowthReport:
    """Ratio table for a number-growth lemma across particle caps."""

    n: int
    caps: tuple
    ratios: tuple
    sup: float
    generator_norm: float


def verify_B_number_growth(M, eta_unit, scale, n, caps=(2, 3, 4, 5, 6)):
    """Ratios of (NUM+1)^n under pair-generator conjugation, per cap."""
    if not -2 <= n <= 2:
        raise InvalidParameterError(f"power {n} outside -2..2")
    eta_unit = np.asarray(eta_unit, dtype=float)
    ratios = []
    for cap in caps:
        space = build_fock_space(M, cap)
        B = build_B(space, scale * eta_unit)
        ratios.append(_growth_ratio(space, B.matrix, n))
    return GrowthReport(n=n, caps=tuple(caps), ratios=tuple(ratios),
                        sup=float(max(ratios)),
                        generator_norm=float(
                            scale * np.linalg.norm(eta_unit)))


def verify_A_number_growth(M, nu, g, k, t_grid=(-1.0, -0.5, 0.5, 1.0),
                           caps=(2, 3, 4, 5, 6), mode0=0):
    """Ratios of (NUM+1)^k under scaled cubic-generator conjugation."""
    if not -2 <= k <= 2:
        raise InvalidParameterError(f"power {k} outside -2..2")
    nu = np.asarray(nu, dtype=float)
    g = np.asarray(g, dtype=float)
    reports = []
    for t in t_grid:
        ratios = []
        for cap in caps:
            space = build_fock_space(M, cap)
            A = build_A(space, nu, g, mode0)
            ratios.append(_growth_ratio(space, t * A.matrix, k))
        reports.append(GrowthReport(
            n=k, caps=tuple(caps), ratios=tuple(ratios),
            sup=float(max(ratios)),
            generator_norm=float(abs(t) * np.linalg.norm(nu)
                                 * np.linalg.norm(g))))
    return tuple(reports)


# ---------------------------------------------------------------------------
# the conjugation remainder
# ---------------------------------------------------------------------------

def _b_vector(space, f):
    lad = [build_ladder(space, i) for i in range(space.M)]
    b = sum(float(f[i]) * lad[i].b for i in range(space.M))
    return b, lad


@dataclass(frozen=True)
class RemainderReport:
    """Weighted operator-norm data for the conjugation remainder."""

    cap: int
    n: int
    ratio: float
    d_norm: float


def compute_d_eta(space, eta, f, n=0):
    """Remainder d of e^{-B} b(f) e^B = b(cosh f) + b*(sinh f) + d.

    The hyperbolic functions act on the mode vector through the spectral
    decomposition of the symmetric matrix eta. The report carries
    sup_xi |(NUM+1)^{n/2} d xi| / (|f| |(NUM+1)^{(n+3)/2} xi|), the
    weighted norm whose decay in the particle cap is the content of the
    remainder bound.
    """
    eta = np.asarray(eta, dtype=float)
    f = np.asarray(f, dtype=float)
    if not np.allclose(eta, eta.T, atol=1e-13):
        raise InvalidParameterError("pair matrix must be symmetric")
    B = build_B(space, eta)
    bmat = sparse.csr_matrix(B.matrix).copy()
    bmat.eliminate_zeros()
    bf, lad = _b_vector(space, f)
    if bmat.nnz == 0:
        d = sparse.csr_matrix((space.dim, space.dim))
    else:
        Q = expm(bmat.toarray())
        w, V = np.linalg.eigh(eta)
        cosh_f = V @ (np.cosh(w) * (V.T @ f))
        sinh_f = V @ (np.sinh(w) * (V.T @ f))
        conj = Q.T @ bf.toarray() @ Q
        bc = sum(float(cosh_f[i]) * lad[i].b for i in range(space.M))
        bs = sum(float(sinh_f[i]) * lad[i].b_dag for i in range(space.M))
        d = sparse.csr_matrix(conj - bc.toarray() - bs.toarray())
    shifted = space.number_diag() + 1.0
    fn = float(np.linalg.norm(f))
    if fn == 0.0:
        raise InvalidParameterError("remainder needs a nonzero mode vector")
    weighted = (np.diag(shifted ** (n / 2.0)) @ d.toarray()
                @ np.diag(shifted ** (-(n + 3) / 2.0))) / fn
    ratio = float(np.linalg.norm(weighted, 2))
    op = FockOperator(space=space, matrix=d.tocsr(), hermitian=False,
                      number_offset=None)
    return op, RemainderReport(cap=space.N_cap, n=n, ratio=ratio,
                               d_norm=float(
                                   np.linalg.norm(d.toarray(), 2)))


def sweep_d_eta(M, eta_unit, scale, f, n=0, caps=(2, 3, 4, 5, 6)):
    """Remainder ratio reports across particle caps at fixed eta."""
    eta_unit = np.asarray(eta_unit, dtype=float)
    out = []
    for cap in caps:
        space = build_fock_space(M, cap)
        _, rep = compute_d_eta(space, scale * eta_unit, f, n)
        out.append(rep)
    return tuple(out)
