"""Cascaded master equation for a chirally coupled chain of driven atoms.

Atoms are two-level systems with |g> = 0 and |e> = 1.  Each atom emits
into the guided mode at Gamma = beta*Gamma_tot and into free space at
gamma = (1 - beta)*Gamma_tot.  The resonant drive, alpha = sqrt(photon_flux),
enters at atom 1 and reaches every downstream atom through the cascade;
resonant propagation phases are gauged away.  In the rotating frame

    H = i sqrt(Gamma) sum_m (alpha sigma_m - alpha sigma_m^dag)
        + i Gamma/2 sum_{m<n} (sigma_m^dag sigma_n - sigma_n^dag sigma_m)

with jump operators sqrt(Gamma) sum_m sigma_m (collective, guided) and
sqrt(gamma) sigma_m (loss).  The transmitted field is
a = alpha + sqrt(Gamma) sum_m sigma_m.

Superoperators act on column-stacked density matrices.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.sparse import linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from correlators import CorrelationGrid, GridKind, Method
from errors import CapacityError, ConfigValidationError, SteadyStateError

MAX_ATOMS = 11
STEADY_STATE_TOL = 1e-10
# superoperator dimension up to which the steady state is factorized exactly
DIRECT_LIMIT = 4**6
ILU_DROP_TOL = 1e-4
ILU_FILL_FACTOR = 10
KRYLOV_RTOL = 1e-13
KRYLOV_RESTART = 50
KRYLOV_MAXITER = 10
# relaxation times in units of 1/Gamma_tot
RELAXATION_STEP = 20.0
RELAXATION_TIME = 400.0

SIGMA = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


@dataclass(frozen=True)
class HilbertSpace:
    num_atoms: int
    cap: int = MAX_ATOMS

    def __post_init__(self):
        if self.num_atoms > self.cap:
            raise CapacityError(
                f"{self.num_atoms} atoms need a {2**self.num_atoms}-dimensional space; "
                f"the density-matrix oracle is capped at M={self.cap}"
            )

    @property
    def dimension(self):
        return 2**self.num_atoms

    def lowering(self, site):
        left = sp.identity(2**site, dtype=complex, format="csr")
        right = sp.identity(2 ** (self.num_atoms - site - 1), dtype=complex, format="csr")
        return sp.kron(sp.kron(left, SIGMA), right, format="csr")

    def identity(self):
        return sp.identity(self.dimension, dtype=complex, format="csr")


@dataclass
class LiouvilleOperator:
    matrix: sp.csr_matrix
    params: object
    space: HilbertSpace
    hamiltonian: sp.csr_matrix
    jumps: list

    @property
    def dimension(self):
        return self.space.dimension


@dataclass
class SteadyState:
    rho: np.ndarray
    residual: float
    method: str

    @property
    def hermiticity(self):
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    @property
    def trace(self):
        return complex(np.trace(self.rho))

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())


def spre(operator):
    n = operator.shape[0]
    return sp.kron(sp.identity(n, dtype=complex), operator, format="csr")


def spost(operator):
    n = operator.shape[0]
    return sp.kron(operator.T, sp.identity(n, dtype=complex), format="csr")


def sandwich(left, right):
    """Superoperator of rho -> left rho right."""
    return sp.kron(right.T, left, format="csr")


def dissipator(jump):
    number = (jump.conj().T @ jump).tocsr()
    return sandwich(jump, jump.conj().T) - 0.5 * spre(number) - 0.5 * spost(number)


def vectorize(matrix):
    return np.asarray(matrix).reshape(-1, order="F")


def unvectorize(vector, dimension):
    return np.asarray(vector).reshape((dimension, dimension), order="F")


def drive_amplitude(params):
    return math.sqrt(params.photon_flux)


def build_liouvillian(params, cap=MAX_ATOMS):
    space = HilbertSpace(params.num_atoms, cap)
    dimension = space.dimension
    alpha = drive_amplitude(params)
    guided = math.sqrt(params.gamma)
    lowering = [space.lowering(m) for m in range(params.num_atoms)]

    hamiltonian = sp.csr_matrix((dimension, dimension), dtype=complex)
    for sigma in lowering:
        hamiltonian = hamiltonian + 1j * guided * alpha * (sigma - sigma.conj().T)
    for m, upstream in enumerate(lowering):
        for downstream in lowering[m + 1 :]:
            exchange = upstream.conj().T @ downstream
            hamiltonian = hamiltonian + 0.5j * params.gamma * (exchange - exchange.conj().T)

    jumps = []
    if lowering:
        jumps.append(guided * sum(lowering[1:], lowering[0]))
        loss = math.sqrt(params.gamma_loss)
        jumps.extend(loss * sigma for sigma in lowering)

    matrix = -1j * (spre(hamiltonian) - spost(hamiltonian))
    for jump in jumps:
        matrix = matrix + dissipator(jump)
    logging.info(
        f"Liouvillian for M={params.num_atoms}: dimension {dimension**2}, {matrix.nnz} nonzeros"
    )
    return LiouvilleOperator(matrix.tocsr(), params, space, hamiltonian.tocsr(), jumps)


def output_field_ops(params, cap=MAX_ATOMS):
    """Transmitted-field annihilation operator and its adjoint."""
    space = HilbertSpace(params.num_atoms, cap)
    field = drive_amplitude(params) * space.identity()
    guided = math.sqrt(params.gamma)
    for m in range(params.num_atoms):
        field = field + guided * space.lowering(m)
    field = field.tocsr()
    return field, field.conj().T.tocsr()


def ground_state(dimension):
    rho = np.zeros((dimension, dimension), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _normalized(vector, dimension):
    rho = unvectorize(vector, dimension)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho)


def _residual(liouvillian, rho):
    return float(np.linalg.norm(liouvillian.matrix @ vectorize(rho)))


def _trace_augmented(liouvillian):
    """L plus a weighted trace row in row 0; solving A x = w e_0 fixes Tr = 1."""
    matrix = liouvillian.matrix
    dimension = liouvillian.dimension
    size = dimension**2
    weight = float(np.mean(np.abs(matrix.data))) if np.any(matrix.data) else 1.0
    trace_row = sp.csr_matrix(
        (weight * np.ones(dimension), (np.zeros(dimension, dtype=int), np.arange(dimension) * (dimension + 1))),
        shape=(size, size),
    )
    rhs = np.zeros(size, dtype=complex)
    rhs[0] = weight
    return (matrix + trace_row).tocsc(), rhs


def _krylov(solver, matrix, rhs, **options):
    try:
        return solver(matrix, rhs, rtol=KRYLOV_RTOL, atol=0.0, **options)
    except TypeError:
        return solver(matrix, rhs, tol=KRYLOV_RTOL, atol=0.0, **options)


def _solve_preconditioned(augmented, rhs, seed):
    """GMRES on the RCM-ordered system with an incomplete-LU preconditioner.

    Returns None when the factorization breaks down.
    """
    start = time.time()
    order = reverse_cuthill_mckee(augmented.tocsr(), symmetric_mode=False)
    permuted = augmented[order, :][:, order].tocsc()
    permuted.sort_indices()
    try:
        factor = spla.spilu(
            permuted,
            drop_tol=ILU_DROP_TOL,
            fill_factor=ILU_FILL_FACTOR,
            permc_spec="NATURAL",
            options={"ILU_MILU": "SMILU_2"},
        )
    except (RuntimeError, MemoryError) as error:
        logging.warning(f"Incomplete LU preconditioner failed: {error}")
        return None
    logging.info(
        f"ILU preconditioner in {time.time() - start:.2f} s, "
        f"fill {(factor.L.nnz + factor.U.nnz) / permuted.nnz:.1f}"
    )
    preconditioner = spla.LinearOperator(permuted.shape, matvec=factor.solve, dtype=complex)
    solution, info = _krylov(
        spla.gmres,
        permuted,
        rhs[order],
        x0=seed[order],
        M=preconditioner,
        restart=KRYLOV_RESTART,
        maxiter=KRYLOV_MAXITER,
    )
    if info != 0:
        logging.warning(f"Preconditioned GMRES stopped with info={info}")
    unpermuted = np.empty_like(solution)
    unpermuted[order] = solution
    return unpermuted


def _relax(liouvillian, rho, tol):
    """Propagate in steps of RELAXATION_STEP until the residual drops below ``tol``."""
    dimension = liouvillian.dimension
    step = liouvillian.matrix * (RELAXATION_STEP / liouvillian.params.gamma_tot)
    vector = vectorize(rho)
    elapsed = 0.0
    residual = _residual(liouvillian, rho)
    while residual > tol and elapsed < RELAXATION_TIME:
        vector = vectorize(_normalized(spla.expm_multiply(step, vector), dimension))
        elapsed += RELAXATION_STEP
        residual = _residual(liouvillian, unvectorize(vector, dimension))
    return unvectorize(vector, dimension), residual


def _converged(residual, tol):
    return np.isfinite(residual) and residual <= tol


def steady_state(liouvillian, tol=STEADY_STATE_TOL):
    """Trace-one null vector of the Liouvillian.

    Small superoperators are factorized exactly; larger ones go through
    preconditioned GMRES.  Either falls back to relaxation in time.
    """
    start = time.time()
    dimension = liouvillian.dimension
    augmented, rhs = _trace_augmented(liouvillian)
    seed = ground_state(dimension)
    if dimension**2 <= DIRECT_LIMIT:
        solution, method = spla.spsolve(augmented, rhs), "direct"
    else:
        solution, method = _solve_preconditioned(augmented, rhs, vectorize(seed)), "iterative"

    residual = math.inf
    if solution is not None and np.all(np.isfinite(solution)):
        rho = _normalized(solution, dimension)
        residual = _residual(liouvillian, rho)
    if not _converged(residual, tol):
        logging.warning(f"Steady-state residual {residual:.3e} above {tol:.1e} after {method} solve; relaxing in time")
        if np.isfinite(residual):
            seed = rho
        rho, residual = _relax(liouvillian, seed, tol)
        method = "relaxation"
        if not _converged(residual, tol):
            raise SteadyStateError("steady state did not converge", residual)
    logging.info(
        f"Steady state for M={liouvillian.params.num_atoms} by {method} in {time.time() - start:.2f} s, residual {residual:.2e}"
    )
    return SteadyState(rho, residual, method)


def propagate_direct(liouvillian, rho, times, rtol=1e-10, atol=1e-12):
    """Density matrices at ``times`` by explicit ODE integration from t = 0."""
    times = np.asarray(times, dtype=float)
    matrix = liouvillian.matrix
    solution = integrate.solve_ivp(
        lambda _, vector: matrix @ vector,
        (0.0, float(times[-1])),
        vectorize(rho).astype(complex),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        raise SteadyStateError(f"direct propagation failed: {solution.message}")
    dimension = liouvillian.dimension
    return [unvectorize(solution.y[:, i], dimension) for i in range(times.size)]


def _evolve(matrix, vector, times):
    """exp(L t) vector for ascending ``times``; rows follow ``times``."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros((0, vector.size), dtype=complex)
    steps = np.diff(times)
    if times.size > 2 and np.allclose(steps, steps[0], rtol=0.0, atol=1e-12 * max(1.0, times[-1])):
        return np.atleast_2d(
            spla.expm_multiply(matrix, vector, start=times[0], stop=times[-1], num=times.size, endpoint=True)
        )
    states = np.empty((times.size, vector.size), dtype=complex)
    current = vector
    previous = 0.0
    for i, moment in enumerate(times):
        if moment > previous:
            current = spla.expm_multiply(matrix * (moment - previous), current)
        states[i] = current
        previous = moment
    return states


class _Correlations:
    """Shared pieces of the regression-theorem correlators for one scenario."""

    def __init__(self, params, liouvillian=None, state=None, cap=MAX_ATOMS):
        if params.drive_power <= 0.0:
            raise ConfigValidationError("oracle correlators need a nonzero drive power")
        self.params = params
        self.liouvillian = liouvillian or build_liouvillian(params, cap)
        self.state = state or steady_state(self.liouvillian)
        field, field_dag = output_field_ops(params, cap)
        dimension = self.liouvillian.dimension
        self.emit = sandwich(field, field_dag)
        number = (field_dag @ field).toarray()
        # Tr[A X] = vec(A^T) . vec(X)
        self.count = number.reshape(-1)
        self.initial = vectorize(self.state.rho)
        self.flux = float(np.real(self.count @ self.initial))
        self.dimension = dimension

    def g2(self, taus):
        states = _evolve(self.liouvillian.matrix, self.emit @ self.initial, taus)
        return np.real(states @ self.count) / self.flux**2


def _ascending(grid, name):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigValidationError(f"{name} must be a non-empty one-dimensional grid")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ConfigValidationError(f"{name} must be non-negative and ascending")
    return grid


def output_power(params, state=None, cap=MAX_ATOMS):
    """Steady-state transmitted flux <a^dag a>, photons per unit time of ``gamma_tot``."""
    state = state or steady_state(build_liouvillian(params, cap))
    field, field_dag = output_field_ops(params, cap)
    return float(np.real(np.trace((field_dag @ field) @ state.rho)))


def qrt_g2(params, t_grid, liouvillian=None, state=None, cap=MAX_ATOMS):
    """Normalized g2(tau) of the transmitted light."""
    taus = _ascending(t_grid, "t_grid")
    correlations = _Correlations(params, liouvillian, state, cap)
    values = correlations.g2(taus / params.gamma_tot)
    return CorrelationGrid({"tau": taus}, values, GridKind.G2, params, Method.ORACLE)


def qrt_g3(params, t1_grid, t2_grid, connected=True, threads=None, liouvillian=None, state=None, cap=MAX_ATOMS):
    """g3(t1, t2, 0) or its connected part on the (t1, t2) grid.

    Three-time correlators are propagated in time order 0 <= ta <= tb,
    G3 = Tr[a^dag a exp(L (tb - ta)) (a exp(L ta)(a rho a^dag) a^dag)],
    and mapped back to (t1, t2); rows with distinct ta run in parallel.
    """
    first_axis = _ascending(t1_grid, "t1_grid")
    second_axis = _ascending(t2_grid, "t2_grid")
    correlations = _Correlations(params, liouvillian, state, cap)
    scale = params.gamma_tot
    t1, t2 = np.meshgrid(first_axis, second_axis, indexing="ij")
    early = np.minimum(t1, t2)
    gaps = np.maximum(t1, t2) - early

    starts = np.unique(early)
    needed = {start: np.unique(gaps[early == start]) for start in starts}
    matrix = correlations.liouvillian.matrix
    first_stage = _evolve(matrix, correlations.emit @ correlations.initial, starts / scale)

    def row(index):
        start = starts[index]
        states = _evolve(matrix, correlations.emit @ first_stage[index], needed[start] / scale)
        return dict(zip(needed[start], np.real(states @ correlations.count)))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(row, range(starts.size)))
    lookup = dict(zip(starts, rows))
    values = np.empty(t1.shape)
    for index in np.ndindex(t1.shape):
        values[index] = lookup[early[index]][gaps[index]]
    values = values / correlations.flux**3

    kind = GridKind.G3
    if connected:
        taus = np.unique(np.concatenate([first_axis, second_axis, np.abs(t1 - t2).ravel()]))
        pair = dict(zip(taus, correlations.g2(taus / scale)))
        lookup_g2 = np.vectorize(pair.__getitem__)
        values = 2.0 + values - lookup_g2(np.abs(t1 - t2)) - lookup_g2(t1) - lookup_g2(t2)
        kind = GridKind.G3_CONNECTED
    logging.info(f"QRT {kind.value} grid {values.shape} for M={params.num_atoms}, P_in={params.drive_power}")
    return CorrelationGrid({"t1": first_axis, "t2": second_axis}, values, kind, params, Method.ORACLE)
