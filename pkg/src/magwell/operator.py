"""Discrete magnetic Schrodinger operator on a Dirichlet box.

The quadratic form  q(u) = int [ (1/a)|ih du/ds + A0 u|^2 + |ih du/dt|^2
+ V |u|^2 ] sqrt(a) ds dt  is discretized in flux form on a rectangular
grid: each s-edge carries the unit-modulus link phase
tau = exp(-(i/h) int A0 ds) (Gauss-Legendre integrated), so the stiffness
matrix is Hermitian by construction and gauge-covariant.  Dirichlet
nodes are eliminated; the mass matrix diag(sqrt(a) ds dt) is folded
symmetrically, leaving an ordinary Hermitian eigenproblem.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import (
    ConvergenceError,
    DomainError,
    GridMismatchError,
    GridResolutionError,
    RequestTooLargeError,
)

RESOLUTION_FACTOR = 8  # grid points per magnetic length sqrt(h/b0)

# Gauss-Legendre order 4 on [-1, 1]; integrates the link phase exponent
_GL_NODES = np.array(
    [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526]
)
_GL_WEIGHTS = np.array(
    [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]
)


@dataclass(frozen=True)
class GridSpec:
    """Dirichlet box with ns x nt interior unknowns.

    Nodes include the boundary; only interior nodes carry unknowns.
    """

    s_min: float
    s_max: float
    t_min: float
    t_max: float
    ns: int
    nt: int

    def __post_init__(self):
        if not (self.s_min < self.s_max and self.t_min < self.t_max):
            raise DomainError("grid box must have positive extent")
        if self.ns < 2 or self.nt < 2:
            raise DomainError("need at least 2 interior points per direction")

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / (self.ns + 1)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.nt + 1)

    @property
    def s_nodes(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.ns + 2)

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt + 2)

    @property
    def s_interior(self) -> np.ndarray:
        return self.s_nodes[1:-1]

    @property
    def t_interior(self) -> np.ndarray:
        return self.t_nodes[1:-1]

    @property
    def size(self) -> int:
        return self.ns * self.nt

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ns, self.nt)

    def resolves(self, h: float, b0: float) -> bool:
        """True if both spacings resolve the magnetic length sqrt(h/b0)."""
        if b0 <= 0:
            return True  # no magnetic length scale to resolve
        limit = math.sqrt(h / b0) / RESOLUTION_FACTOR
        return self.ds <= limit and self.dt <= limit

    def require_resolution(self, h: float, b0: float) -> None:
        if not self.resolves(h, b0):
            limit = math.sqrt(h / b0) / RESOLUTION_FACTOR
            raise GridResolutionError(
                f"grid spacing ({self.ds:.4g}, {self.dt:.4g}) exceeds "
                f"sqrt(h/b0)/{RESOLUTION_FACTOR} = {limit:.4g} at h = {h}"
            )

    @classmethod
    def for_box(
        cls,
        s_min: float,
        s_max: float,
        t_min: float,
        t_max: float,
        h: float,
        b0: float,
        factor: int = RESOLUTION_FACTOR,
        min_points: int = 16,
    ) -> "GridSpec":
        """Smallest grid on the box resolving the magnetic length at h."""
        if not h > 0:
            raise DomainError(f"h must be positive, got {h}")
        if b0 > 0:
            limit = math.sqrt(h / b0) / factor
            ns = max(min_points, math.ceil((s_max - s_min) / limit) - 1)
            nt = max(min_points, math.ceil((t_max - t_min) / limit) - 1)
        else:
            ns = nt = max(min_points, 64)
        return cls(s_min, s_max, t_min, t_max, ns, nt)

    def matches(self, other: "GridSpec") -> bool:
        return (
            self.ns == other.ns
            and self.nt == other.nt
            and math.isclose(self.s_min, other.s_min, abs_tol=1e-12)
            and math.isclose(self.s_max, other.s_max, abs_tol=1e-12)
            and math.isclose(self.t_min, other.t_min, abs_tol=1e-12)
            and math.isclose(self.t_max, other.t_max, abs_tol=1e-12)
        )


@dataclass(eq=False)
class DiscreteOperator:
    """Folded Hermitian matrix plus the quadrature data of its box."""

    h: float
    grid: GridSpec
    matrix: sp.csr_matrix            # M^{-1/2} K M^{-1/2}, Hermitian
    mass: np.ndarray                 # sqrt(a) ds dt per interior node
    bweight: np.ndarray              # field intensity b per interior node
    pot_diag: np.ndarray | None      # folded potential diagonal, or None
    field: object = None             # references kept for provenance only
    metric: object = None
    gauge: object = None

    @property
    def size(self) -> int:
        return self.grid.size


def assemble(
    h: float,
    field,
    metric,
    gauge,
    grid: GridSpec,
    potential=None,
) -> DiscreteOperator:
    """Discretize the magnetic Schrodinger form on the grid.

    gauge is the transverse-gauge potential A0(s, t) (A1 = 0); pass None
    for the free (zero-field) operator.  field may be None in that case;
    otherwise its b0 fixes the magnetic-length resolution requirement.
    potential, if given, is a real callable V(s, t) added pointwise.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    b0 = field.b0 if field is not None else 0.0
    grid.require_resolution(h, b0)
    band = metric.band
    if (
        grid.s_min < band.s_min
        or grid.s_max > band.s_max
        or grid.t_min < -band.t_halfwidth
        or grid.t_max > band.t_halfwidth
    ):
        raise GridMismatchError("grid box extends outside the metric band")

    ns, nt = grid.ns, grid.nt
    N = ns * nt
    ds, dt = grid.ds, grid.dt
    s_nodes, t_nodes = grid.s_nodes, grid.t_nodes
    s, t = grid.s_interior, grid.t_interior
    idx = np.arange(N).reshape(ns, nt)

    # s-edge weights: (h/ds)^2 a^{-1/2}(midpoint) ds dt, edges p = 0..ns
    s_mids = 0.5 * (s_nodes[:-1] + s_nodes[1:])
    a_smid = metric.coeff(s_mids[:, None], t[None, :])
    w_s = (h / ds) ** 2 * ds * dt / np.sqrt(a_smid)          # (ns+1, nt)

    # t-edge weights: (h/dt)^2 a^{1/2}(midpoint) ds dt, edges q = 0..nt
    t_mids = 0.5 * (t_nodes[:-1] + t_nodes[1:])
    a_tmid = metric.coeff(s[:, None], t_mids[None, :])
    w_t = (h / dt) ** 2 * ds * dt * np.sqrt(a_tmid)          # (ns, nt+1)

    # link phases tau = exp(-(i/h) int A0 ds) per s-edge
    if gauge is not None:
        sq = s_mids[:, None, None] + 0.5 * ds * _GL_NODES[None, :, None]
        av = np.asarray(gauge(sq, t[None, None, :]), dtype=float)
        av = np.broadcast_to(av, (ns + 1, 4, nt))
        line_int = 0.5 * ds * np.einsum("q,pqj->pj", _GL_WEIGHTS, av)
        tau = np.exp(-1j * line_int / h)
    else:
        tau = np.ones((ns + 1, nt), dtype=complex)

    diag = np.zeros(N)

    # interior-interior s-edges (edge p joins interior columns p-1, p)
    left = idx[:-1, :].ravel()
    right = idx[1:, :].ravel()
    w_in = w_s[1:-1, :].ravel()
    tau_in = tau[1:-1, :].ravel()
    np.add.at(diag, left, w_in)
    np.add.at(diag, right, w_in)
    rows = [left, right]
    cols = [right, left]
    data = [-w_in * tau_in, -w_in * np.conj(tau_in)]
    # boundary s-edges contribute only diagonal (Dirichlet endpoint)
    diag[idx[0, :]] += w_s[0, :]
    diag[idx[-1, :]] += w_s[-1, :]

    # t-edges (no phase: A1 = 0)
    low = idx[:, :-1].ravel()
    high = idx[:, 1:].ravel()
    wt_in = w_t[:, 1:-1].ravel()
    np.add.at(diag, low, wt_in)
    np.add.at(diag, high, wt_in)
    rows += [low, high]
    cols += [high, low]
    data += [-wt_in.astype(complex), -wt_in.astype(complex)]
    diag[idx[:, 0]] += w_t[:, 0]
    diag[idx[:, -1]] += w_t[:, -1]

    ss, tt = np.meshgrid(s, t, indexing="ij")
    mass = (np.sqrt(metric.coeff(ss, tt)) * ds * dt).ravel()

    pot_vals = None
    if potential is not None:
        pot_vals = np.broadcast_to(
            np.asarray(potential(ss, tt), dtype=float), (ns, nt)
        ).ravel()
        diag = diag + pot_vals * mass

    all_rows = np.concatenate(rows + [np.arange(N)])
    all_cols = np.concatenate(cols + [np.arange(N)])
    all_data = np.concatenate(data + [diag.astype(complex)])

    # symmetric mass folding; real scale factors computed identically for
    # both members of each conjugate pair keep Hermiticity bit-exact
    d = 1.0 / np.sqrt(mass)
    all_data *= d[all_rows] * d[all_cols]

    matrix = sp.coo_matrix((all_data, (all_rows, all_cols)), shape=(N, N)).tocsr()
    matrix.sort_indices()

    if field is not None:
        bweight = np.asarray(field.intensity(ss, tt), dtype=float).ravel()
    else:
        bweight = np.zeros(N)
    fold_pot = pot_vals if pot_vals is None else pot_vals.copy()
    return DiscreteOperator(
        h=h,
        grid=grid,
        matrix=matrix,
        mass=mass,
        bweight=bweight,
        pot_diag=fold_pot,
        field=field,
        metric=metric,
        gauge=gauge,
    )


@dataclass(eq=False)
class EigenResult:
    """Lowest eigenpairs of a DiscreteOperator, residual-verified."""

    h: float
    eigenvalues: np.ndarray          # ascending
    vectors: np.ndarray              # (N, m), folded coordinates, unit l2
    residuals: np.ndarray            # ||Hv - lambda v|| / lambda per pair
    iterations: int                  # total inner solves performed
    seed: int
    method: str                      # "lanczos" or "subspace"
    grid: GridSpec
    mass: np.ndarray | None = None

    def function_state(self, i: int) -> np.ndarray:
        """Eigenvector in function space (mass unfolded), shape (ns, nt)."""
        if self.mass is None:
            raise DomainError("mass weights not available on this result")
        v = self.vectors[:, i] / np.sqrt(self.mass)
        return v.reshape(self.grid.shape)


def _subspace_iteration(matrix, lu, m, tol, rng, max_sweeps=250, extra=None):
    """Block inverse iteration with Rayleigh-Ritz; robust on clusters.

    Converges the returned eigenvalues to residual <= tol when the
    spectrum allows it; quasi-degenerate clusters wider than the block
    stall at the cluster's internal spread, which the caller sees in the
    returned residuals.
    """
    N = matrix.shape[0]
    block = m + (extra if extra is not None else max(8, m))
    block = min(block, N)
    X = rng.standard_normal((N, block)) + 1j * rng.standard_normal((N, block))
    nsolve = 0
    best = np.inf
    stall = 0
    for _ in range(max_sweeps):
        X = lu.solve(X)
        nsolve += block
        Q, _ = np.linalg.qr(X)
        H = Q.conj().T @ (matrix @ Q)
        H = 0.5 * (H + H.conj().T)
        w, S = np.linalg.eigh(H)
        X = Q @ S
        R = matrix @ X[:, :m] - X[:, :m] * w[:m]
        res = np.linalg.norm(R, axis=0) / np.maximum(np.abs(w[:m]), 1e-300)
        worst = float(np.max(res))
        if worst <= tol:
            break
        if worst > 0.98 * best:
            stall += 1
            if stall >= 12:
                break  # cluster-limited plateau
        else:
            stall = 0
        best = min(best, worst)
    return w[:m], X[:, :m], res, nsolve


def lowest_eigenpairs(
    op: DiscreteOperator,
    m: int,
    tol: float = 1e-8,
    seed: int = 0,
    maxiter: int = 40,
    ncv: int | None = None,
) -> EigenResult:
    """m smallest eigenpairs by shift-invert Lanczos at shift 0.

    Inner solves use a sparse LU of the operator; the Lanczos basis is
    fully reorthogonalized (ARPACK).  Quasi-degenerate clusters that
    defeat the restarted iteration fall back to block inverse iteration,
    whose Ritz values are still residual-verified.  Deterministic for a
    fixed seed.
    """
    N = op.matrix.shape[0]
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if m > N - 2:
        raise RequestTooLargeError(
            f"requested {m} pairs of an operator with only {N} unknowns"
        )
    A = op.matrix.tocsc()
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise ConvergenceError(f"shift-0 factorization failed: {exc}") from exc

    count = [0]

    def matvec(x):
        count[0] += 1
        return lu.solve(x)

    opinv = LinearOperator(A.shape, matvec=matvec, dtype=A.dtype)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)

    vals = vecs = None
    method = "lanczos"
    try:
        w, V = eigsh(
            op.matrix,
            k=m,
            sigma=0,
            which="LM",
            OPinv=opinv,
            v0=v0,
            tol=max(tol * 1e-3, 1e-14),
            ncv=ncv,
            maxiter=maxiter,
        )
        order = np.argsort(w.real)
        vals, vecs = w.real[order], V[:, order]
    except (ArpackNoConvergence, ArpackError):
        pass

    def residuals_of(vals_, vecs_):
        R = op.matrix @ vecs_ - vecs_ * vals_
        return np.linalg.norm(R, axis=0) / np.maximum(np.abs(vals_), 1e-300)

    if vals is not None:
        res = residuals_of(vals, vecs)
        if np.max(res) <= tol:
            return EigenResult(
                h=op.h, eigenvalues=vals, vectors=vecs, residuals=res,
                iterations=count[0], seed=seed, method=method, grid=op.grid,
                mass=op.mass,
            )

    # restarted Lanczos failed or missed the tolerance: block fallback
    vals, vecs, res, nsolve = _subspace_iteration(op.matrix, lu, m, tol, rng)
    count[0] += nsolve
    method = "subspace"
    if np.max(res) > tol:
        raise ConvergenceError(
            f"eigen-iteration stalled: worst relative residual {np.max(res):.3e} "
            f"> tol {tol:g} after {count[0]} inner solves (m={m}, N={N}); "
            "likely a quasi-degenerate cluster, try a larger tol"
        )
    return EigenResult(
        h=op.h, eigenvalues=vals, vectors=vecs, residuals=res,
        iterations=count[0], seed=seed, method=method, grid=op.grid,
        mass=op.mass,
    )


@dataclass(frozen=True)
class FormValues:
    """Magnetic energy, field-weighted mass, and a boundary-contact flag.

    Iterates as the pair (q_magnetic, mass_b) for tuple unpacking.
    """
    q_magnetic: float
    mass_b: float
    boundary_contact: bool

    def __iter__(self):
        return iter((self.q_magnetic, self.mass_b))


def quadratic_form(op: DiscreteOperator, u: np.ndarray) -> FormValues:
    """Magnetic energy and field-weighted mass of a grid function u.

    q_magnetic = ||(ih d + A) u||^2 and mass_b = h int b |u|^2 dx_g, both
    with the assembler's quadrature.  u is in function space on the
    interior nodes.  A warning flag marks support touching the outermost
    interior ring (the Dirichlet wall then truncates the state).
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != op.grid.shape:
        if u.size == op.size:
            u = u.reshape(op.grid.shape)
        else:
            raise GridMismatchError(
                f"state shape {u.shape} does not match grid {op.grid.shape}"
            )
    flat = u.ravel()
    v = flat * np.sqrt(op.mass)
    q = float(np.real(np.vdot(v, op.matrix @ v)))
    if op.pot_diag is not None:
        q -= float(np.sum(op.pot_diag * np.abs(flat) ** 2 * op.mass))
    mass_b = float(op.h * np.sum(op.bweight * np.abs(flat) ** 2 * op.mass))

    peak = float(np.max(np.abs(flat))) if flat.size else 0.0
    ring = 0.0
    if peak > 0:
        ring = max(
            float(np.max(np.abs(u[0, :]))),
            float(np.max(np.abs(u[-1, :]))),
            float(np.max(np.abs(u[:, 0]))),
            float(np.max(np.abs(u[:, -1]))),
        )
    return FormValues(
        q_magnetic=q, mass_b=mass_b, boundary_contact=bool(ring > 1e-12 * peak)
    )


@dataclass(frozen=True)
class MontgomeryReport:
    """Outcome of the magnetic lower-bound check over a trial set."""

    passed: bool
    min_slack_rel: float     # min over trials of (q - mass_b)/max(mass_b, tiny)
    eps_disc: float          # calibrated discretization slack
    saturation: float | None  # ground-state q/mass_b - 1, if computed
    n_trials: int


def _random_bumps(grid: GridSpec, n: int, h: float, rng) -> list[np.ndarray]:
    s, t = grid.s_interior, grid.t_interior
    ss, tt = np.meshgrid(s, t, indexing="ij")
    span_s = grid.s_max - grid.s_min
    span_t = grid.t_max - grid.t_min
    out = []
    for _ in range(n):
        s0 = rng.uniform(grid.s_min + 0.3 * span_s, grid.s_max - 0.3 * span_s)
        t0 = rng.uniform(grid.t_min + 0.3 * span_t, grid.t_max - 0.3 * span_t)
        ws = rng.uniform(0.03, 0.1) * span_s
        wt = rng.uniform(0.03, 0.1) * span_t
        ps = rng.uniform(-0.5, 0.5) / math.sqrt(h)
        pt = rng.uniform(-0.5, 0.5) / math.sqrt(h)
        u = np.exp(
            -((ss - s0) ** 2) / (2 * ws**2)
            - ((tt - t0) ** 2) / (2 * wt**2)
            + 1j * (ps * ss + pt * tt)
        )
        out.append(u)
    return out


def montgomery_check(
    field,
    metric,
    h: float,
    grid: GridSpec,
    trials=None,
    n_trials: int = 100,
    include_ground_state: bool = True,
    seed: int = 0,
    gauge=None,
) -> MontgomeryReport:
    """Check q_magnetic >= mass_b - eps_disc over a set of trial states.

    eps_disc is calibrated on the uniform field b = b0 with the same
    metric, grid and h: the discrete Landau ground state sits slightly
    below the exact bound by O(grid spacing squared), and twice that
    measured deviation is allowed as slack.
    """
    from .field import gauge_potential, uniform_field

    if gauge is None:
        gauge = gauge_potential(field, metric)
    op = assemble(h, field, metric, gauge, grid)

    # calibration: uniform field at b0, same grid
    flat_field = uniform_field(field.b0, band=metric.band)
    flat_gauge = gauge_potential(flat_field, metric)
    flat_op = assemble(h, flat_field, metric, flat_gauge, grid)
    flat_gs = lowest_eigenpairs(flat_op, 1, tol=1e-3, seed=seed)
    u_flat = flat_gs.function_state(0)
    fv = quadratic_form(flat_op, u_flat)
    eps_disc = 2.0 * abs(fv.q_magnetic / fv.mass_b - 1.0) + 1e-12

    rng = np.random.default_rng(seed)
    if trials is None:
        trials = _random_bumps(grid, n_trials, h, rng)
    trials = list(trials)

    saturation = None
    if include_ground_state:
        gs = lowest_eigenpairs(op, 1, tol=1e-3, seed=seed)
        u0 = gs.function_state(0)
        gv = quadratic_form(op, u0)
        saturation = gv.q_magnetic / gv.mass_b - 1.0
        trials.append(u0)

    min_slack = np.inf
    for u in trials:
        q, mb = quadratic_form(op, u)
        scale = max(mb, 1e-300)
        min_slack = min(min_slack, (q - mb) / scale)
    if not trials:
        min_slack = 0.0
    return MontgomeryReport(
        passed=bool(min_slack >= -eps_disc),
        min_slack_rel=float(min_slack),
        eps_disc=float(eps_disc),
        saturation=saturation,
        n_trials=len(trials),
    )


def residual_norm(op: DiscreteOperator, bundle) -> float:
    """||H Phi - lambda Phi|| / ||Phi|| in the sqrt(a)-weighted norm.

    Stores the value back into bundle.residual.
    """
    if not op.grid.matches(bundle.grid) and not (
        getattr(bundle.grid, "ns", None) == op.grid.ns
        and getattr(bundle.grid, "nt", None) == op.grid.nt
    ):
        raise GridMismatchError("bundle grid does not match operator grid")
    values = np.asarray(bundle.values, dtype=complex)
    if values.shape != op.grid.shape:
        raise GridMismatchError(
            f"bundle shape {values.shape} does not match grid {op.grid.shape}"
        )
    v = values.ravel() * np.sqrt(op.mass)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise DomainError("bundle state is identically zero")
    r = float(np.linalg.norm(op.matrix @ v - bundle.lambda_h * v) / nrm)
    bundle.residual = r
    return r


### binary container (magic "MGW1") and CSV summaries

_MAGIC = b"MGW1"
_REC_OPERATOR = 1
_REC_EIGEN = 2


def _write_array(f, arr, dtype):
    a = np.ascontiguousarray(arr).astype(dtype)
    f.write(a.tobytes())


def _read_array(f, count, dtype):
    dt = np.dtype(dtype)
    buf = f.read(count * dt.itemsize)
    if len(buf) != count * dt.itemsize:
        raise DomainError("truncated container file")
    return np.frombuffer(buf, dtype=dt).copy()


def save_operator(op: DiscreteOperator, path) -> None:
    m = op.matrix.tocsr()
    m.sort_indices()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<HH", 1, _REC_OPERATOR))
        f.write(struct.pack("<d", op.h))
        g = op.grid
        f.write(struct.pack("<qq", g.ns, g.nt))
        f.write(struct.pack("<dddd", g.s_min, g.s_max, g.t_min, g.t_max))
        flags = 1 if op.pot_diag is not None else 0
        f.write(struct.pack("<QQQ", flags, m.shape[0], m.nnz))
        _write_array(f, m.indptr, "<i8")
        _write_array(f, m.indices, "<i8")
        _write_array(f, m.data, "<c16")
        _write_array(f, op.mass, "<f8")
        _write_array(f, op.bweight, "<f8")
        if op.pot_diag is not None:
            _write_array(f, op.pot_diag, "<f8")


def load_operator(path) -> DiscreteOperator:
    """Rehydrate an operator; field/metric/gauge references are not stored."""
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise DomainError(f"{path}: not a MGW1 container")
        version, rec = struct.unpack("<HH", f.read(4))
        if rec != _REC_OPERATOR:
            raise DomainError(f"{path}: expected an operator record, got type {rec}")
        (h,) = struct.unpack("<d", f.read(8))
        ns, nt = struct.unpack("<qq", f.read(16))
        s_min, s_max, t_min, t_max = struct.unpack("<dddd", f.read(32))
        flags, N, nnz = struct.unpack("<QQQ", f.read(24))
        indptr = _read_array(f, N + 1, "<i8")
        indices = _read_array(f, nnz, "<i8")
        data = _read_array(f, nnz, "<c16")
        mass = _read_array(f, N, "<f8")
        bweight = _read_array(f, N, "<f8")
        pot = _read_array(f, N, "<f8") if flags & 1 else None
    grid = GridSpec(s_min, s_max, t_min, t_max, int(ns), int(nt))
    matrix = sp.csr_matrix((data, indices, indptr), shape=(int(N), int(N)))
    return DiscreteOperator(
        h=h, grid=grid, matrix=matrix, mass=mass, bweight=bweight, pot_diag=pot
    )


def save_eigenresult(result: EigenResult, path, with_vectors: bool = True) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<HH", 1, _REC_EIGEN))
        f.write(struct.pack("<d", result.h))
        g = result.grid
        f.write(struct.pack("<qq", g.ns, g.nt))
        f.write(struct.pack("<dddd", g.s_min, g.s_max, g.t_min, g.t_max))
        method_code = 1 if result.method == "lanczos" else 2
        m = len(result.eigenvalues)
        vec_flag = 1 if (with_vectors and result.vectors is not None) else 0
        f.write(struct.pack("<QQQQQ", m, result.iterations, result.seed,
                            method_code, vec_flag))
        _write_array(f, result.eigenvalues, "<f8")
        _write_array(f, result.residuals, "<f8")
        if vec_flag:
            _write_array(f, result.vectors.T, "<c16")  # row-major per pair


def load_eigenresult(path) -> EigenResult:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise DomainError(f"{path}: not a MGW1 container")
        version, rec = struct.unpack("<HH", f.read(4))
        if rec != _REC_EIGEN:
            raise DomainError(f"{path}: expected an eigenresult record, got {rec}")
        (h,) = struct.unpack("<d", f.read(8))
        ns, nt = struct.unpack("<qq", f.read(16))
        s_min, s_max, t_min, t_max = struct.unpack("<dddd", f.read(32))
        m, iters, seed, method_code, vec_flag = struct.unpack("<QQQQQ", f.read(40))
        eigenvalues = _read_array(f, m, "<f8")
        residuals = _read_array(f, m, "<f8")
        grid = GridSpec(s_min, s_max, t_min, t_max, int(ns), int(nt))
        vectors = None
        if vec_flag:
            vectors = _read_array(f, m * grid.size, "<c16").reshape(m, grid.size).T
    return EigenResult(
        h=h, eigenvalues=eigenvalues, vectors=vectors, residuals=residuals,
        iterations=int(iters), seed=int(seed),
        method="lanczos" if method_code == 1 else "subspace", grid=grid,
    )


def eigenresult_to_csv(result: EigenResult, path) -> None:
    """Summary table (no vectors): one row per eigenvalue."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("index,h,eigenvalue,residual,iterations,seed,method\n")
        for i, (lam, r) in enumerate(zip(result.eigenvalues, result.residuals)):
            f.write(
                f"{i},{result.h:.17g},{lam:.17g},{r:.17g},"
                f"{result.iterations},{result.seed},{result.method}\n"
            )


def eigenresult_from_csv(path) -> EigenResult:
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as f:
        reader = _csv.DictReader(f)
        rows = list(reader)
    if not rows:
        raise DomainError(f"{path}: empty eigenvalue summary")
    eigenvalues = np.array([float(r["eigenvalue"]) for r in rows])
    residuals = np.array([float(r["residual"]) for r in rows])
    first = rows[0]
    # grid is not part of the summary; a 2x2 placeholder keeps the type valid
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 2, 2)
    return EigenResult(
        h=float(first["h"]), eigenvalues=eigenvalues, vectors=None,
        residuals=residuals, iterations=int(first["iterations"]),
        seed=int(first["seed"]), method=first["method"], grid=grid,
    )
