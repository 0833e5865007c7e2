"""Model density matrices and Z_n symmetry data on open or periodic chains.

The Z_n realization is fixed throughout the package: the global symmetry is
the product of per-site shift operators ``X|k> = |k+1 mod n>`` and the
charged operator at site ``i`` is the clock ``Z|k> = omega^k |k>`` with
``omega = exp(2 pi i / n)``. Site 0 is the leftmost tensor factor.

Genuine U(1) symmetry has no finite-dimensional unitary charge raiser and is
not modelled.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import matcore
from .errors import DimensionCapExceeded, DimensionMismatch, InvalidState

DEFAULT_MAX_DIM = 4096
STATE_TOL = 1e-10
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class SystemSpec:
    """Chain of ``n_sites`` qudits of dimension ``local_dim``."""

    n_sites: int
    local_dim: int = 2
    spatial_dim: int = 1
    lattice_constant: float = 1.0
    boundary: str = "open"
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.local_dim < 2:
            raise ValueError("local_dim must be at least 2")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.spatial_dim < 1 or self.lattice_constant <= 0:
            raise ValueError("spatial_dim and lattice_constant must be positive")
        if self.dim > self.max_dim:
            raise DimensionCapExceeded(
                f"Hilbert dimension {self.local_dim}^{self.n_sites} = {self.dim} "
                f"exceeds the cap {self.max_dim}")

    @property
    def dim(self):
        return self.local_dim ** self.n_sites

    @property
    def center(self):
        return self.n_sites // 2

    def bonds(self):
        pairs = [(j, j + 1) for j in range(self.n_sites - 1)]
        if self.boundary == "periodic" and self.n_sites > 2:
            pairs.append((self.n_sites - 1, 0))
        return pairs

    def distance(self, i, j):
        r = abs(i - j)
        if self.boundary == "periodic":
            r = min(r, self.n_sites - r)
        return r


def shift_operator(n):
    return np.roll(np.eye(n, dtype=complex), 1, axis=0)


def clock_operator(n):
    return np.diag(np.exp(2j * np.pi * np.arange(n) / n))


def embed(op, site, system):
    """Dense ``I x ... x op x ... x I`` with ``op`` on ``site``."""
    n = system.local_dim
    left = np.eye(n ** site)
    right = np.eye(n ** (system.n_sites - site - 1))
    return np.kron(np.kron(left, op), right)


def _multiply_site(op, site, m, system, side):
    """``op_site @ m`` (side='left') or ``m @ op_site`` (side='right')."""
    n, d = system.local_dim, m.shape[0]
    left, right = n ** site, n ** (system.n_sites - site - 1)
    if side == "left":
        t = m.reshape(left, n, right, d)
        return np.einsum("ab,xbyz->xayz", op, t).reshape(d, d)
    t = m.reshape(d, left, n, right)
    return np.einsum("zxby,ba->zxay", t, op).reshape(d, d)


def _is_diagonal(op):
    return np.count_nonzero(op - np.diag(np.diag(op))) == 0


@dataclass(frozen=True, eq=False)
class ChargeOperatorSet:
    """Per-site charged unitaries ``O_i`` and the global symmetry ``U``.

    ``eta`` is 4 when every ``O_i`` is self-adjoint (Z_2 order parameter)
    and 1 otherwise.
    """

    system: SystemSpec
    local_operator: np.ndarray
    local_symmetry: np.ndarray
    eta: int = field(init=False)

    def __post_init__(self):
        op = np.asarray(self.local_operator, dtype=complex)
        n = self.system.local_dim
        if op.shape != (n, n):
            raise DimensionMismatch(f"local operator must be {n}x{n}")
        if np.max(np.abs(op.conj().T @ op - np.eye(n))) > STATE_TOL:
            raise ValueError("charged operator is not unitary")
        object.__setattr__(self, "local_operator", op)
        self_adjoint = np.max(np.abs(op - op.conj().T)) < STATE_TOL
        object.__setattr__(self, "eta", 4 if self_adjoint else 1)

    @classmethod
    def clock_shift(cls, system):
        n = system.local_dim
        return cls(system, clock_operator(n), shift_operator(n))

    @property
    def n_sites(self):
        return self.system.n_sites

    @cached_property
    def _diagonals(self):
        if not _is_diagonal(self.local_operator):
            return None
        n, big_n = self.system.local_dim, self.system.n_sites
        diag = np.diag(self.local_operator)
        return [np.kron(np.kron(np.ones(n ** i), diag), np.ones(n ** (big_n - i - 1)))
                for i in range(big_n)]

    def site_operator(self, i):
        self._check_site(i)
        return embed(self.local_operator, i, self.system)

    @property
    def site_operators(self):
        return [self.site_operator(i) for i in range(self.n_sites)]

    @cached_property
    def symmetry_unitary(self):
        u = np.ones((1, 1), dtype=complex)
        for _ in range(self.n_sites):
            u = np.kron(u, self.local_symmetry)
        return u

    @cached_property
    def omega(self):
        """Phase ``c`` in ``O U = c U O`` (a primitive n-th root of unity)."""
        o, x = self.local_operator, self.local_symmetry
        ratio = o @ x @ o.conj().T @ x.conj().T
        return complex(ratio[0, 0])

    def _check_site(self, i):
        if not 0 <= i < self.n_sites:
            raise IndexError(f"site {i} out of range for {self.n_sites} sites")

    def conj(self, i, m):
        """``O_i m O_i^dagger``."""
        self._check_site(i)
        if self._diagonals is not None:
            return matcore.sandwich(self._diagonals[i], m)
        t = _multiply_site(self.local_operator, i, m, self.system, "left")
        return _multiply_site(self.local_operator.conj().T, i, t, self.system, "right")

    def conj_dag(self, i, m):
        """``O_i^dagger m O_i``."""
        self._check_site(i)
        if self._diagonals is not None:
            return matcore.sandwich(self._diagonals[i].conj(), m)
        t = _multiply_site(self.local_operator.conj().T, i, m, self.system, "left")
        return _multiply_site(self.local_operator, i, t, self.system, "right")

    def apply_power(self, i, m, power, side="left"):
        """``O_i^power @ m`` or ``m @ O_i^power`` (negative powers use the adjoint)."""
        self._check_site(i)
        op = np.linalg.matrix_power(self.local_operator, int(power)) if power >= 0 else \
            np.linalg.matrix_power(self.local_operator.conj().T, -int(power))
        return _multiply_site(op, i, m, self.system, side)

    def twisted(self, i, j, m):
        """``O_i^dagger O_j m O_j^dagger O_i``."""
        return self.conj_dag(i, self.conj(j, m))

    def apply_symmetry(self, m, side="left"):
        """``U @ m`` (or ``m @ U^dagger`` for side='right') without forming U."""
        x = self.local_symmetry if side == "left" else self.local_symmetry.conj().T
        for i in range(self.n_sites):
            m = _multiply_site(x, i, m, self.system, side)
        return m

    def charged_condition_defect(self, i):
        """``max |O_i U - omega U O_i|`` for the dense site operator."""
        o = self.site_operator(i)
        u = self.symmetry_unitary
        return float(np.max(np.abs(o @ u - self.omega * u @ o)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace PSD matrix plus the chain it lives on (may be None)."""

    matrix: np.ndarray
    system: SystemSpec | None = None
    trace_defect: float = 0.0

    @classmethod
    def from_array(cls, m, system=None, validate=True, tol=STATE_TOL):
        """Wrap an array, optionally checking Hermiticity, trace and positivity.

        Negative eigenvalues of magnitude at most ``tol`` are clipped and the
        state renormalized; larger negatives raise :class:`InvalidState`.
        """
        herm = matcore.HermitianMatrix.from_array(matcore.as_array(m))
        mat = herm.entries
        if system is not None and mat.shape[0] != system.dim:
            raise DimensionMismatch(f"matrix dim {mat.shape[0]} != system dim {system.dim}")
        tr = float(np.real(np.trace(mat)))
        if validate:
            if herm.hermiticity_defect > tol:
                raise InvalidState(f"hermiticity defect {herm.hermiticity_defect:.3e}")
            if abs(tr - 1.0) > tol:
                raise InvalidState(f"trace {tr!r} differs from 1")
            w, v = np.linalg.eigh(mat)
            if w[0] < -tol:
                raise InvalidState(f"negative eigenvalue {w[0]:.3e}")
            if w[0] < -matcore.noise_floor(mat.shape[0], 1.0):
                w = np.clip(w, 0.0, None)
                w = w / w.sum()
                mat = matcore.hermitize((v * w) @ v.conj().T)
                tr = float(np.real(np.trace(mat)))
        return cls(mat, system, abs(tr - 1.0))

    @property
    def dim(self):
        return self.matrix.shape[0]

    @cached_property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def purity(self):
        return float(np.sum(np.abs(self.matrix) ** 2))


def _wrap(m, system, validate=False):
    m = matcore.hermitize(m)
    return DensityMatrix(m, system, abs(float(np.real(np.trace(m))) - 1.0)) if not validate \
        else DensityMatrix.from_array(m, system)


def pure(psi, system=None):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return _wrap(np.outer(psi, psi.conj()), system)


def sector_projector(ops, charge=0):
    """Projector onto the eigenspace of ``U`` with eigenvalue ``exp(2 pi i charge / n)``."""
    n = ops.system.local_dim
    u = ops.symmetry_unitary
    p = np.zeros_like(u)
    uk = np.eye(u.shape[0], dtype=complex)
    phase = np.exp(-2j * np.pi * charge / n)
    for k in range(n):
        p += phase ** k * uk
        uk = u @ uk
    return p / n


def build_fixed_point(system, kind):
    """Fixed-point states and their charge operators.

    Args:
        system: chain specification.
        kind: ``"src"`` (product of uniform superpositions), ``"swssb"``
            (normalized projector onto the charge-0 sector of U) or ``"ghz"``
            (cat state ``sum_k |k...k> / sqrt(n)``).

    Returns:
        ``(DensityMatrix, ChargeOperatorSet)``.
    """
    ops = ChargeOperatorSet.clock_shift(system)
    n, big_n = system.local_dim, system.n_sites
    if kind == "src":
        psi = np.ones(1, dtype=complex)
        for _ in range(big_n):
            psi = np.kron(psi, np.ones(n) / np.sqrt(n))
        return pure(psi, system), ops
    if kind == "ghz":
        psi = np.zeros(system.dim, dtype=complex)
        stride = sum(n ** k for k in range(big_n))
        for k in range(n):
            psi[k * stride] = 1.0
        return pure(psi, system), ops
    if kind == "swssb":
        p = sector_projector(ops, 0)
        return _wrap(p / np.real(np.trace(p)), system), ops
    raise ValueError(f"unsupported fixed point {kind!r}")


def bond_channel(ops, bond, q, m):
    """``(1-q) m + q/(n-1) sum_{k=1}^{n-1} B^k m B^-k`` with ``B = O_j O_{j+1}^dagger``."""
    j, l = bond
    n = ops.system.local_dim
    out = (1.0 - q) * m
    for k in range(1, n):
        t = ops.apply_power(j, ops.apply_power(l, m, -k), k)
        t = ops.apply_power(l, ops.apply_power(j, t, -k, "right"), k, "right")
        out = out + (q / (n - 1)) * t
    return out


def build_bond_dephased(system, q):
    """SRC fixed point dephased on every bond with strength ``q``.

    ``q = 0`` gives the SRC fixed point and, on open chains,
    ``q = (n-1)/n`` gives the SW-SSB fixed point. Each Kraus operator is a
    charge-neutral bond string and commutes with U, so strong symmetry is
    preserved for every ``q``.
    """
    n = system.local_dim
    qmax = (n - 1) / n
    if not -1e-15 <= q <= qmax + 1e-15:
        raise ValueError(f"q={q} outside [0, {qmax}]")
    rho, ops = build_fixed_point(system, "src")
    m = rho.matrix
    for bond in system.bonds():
        m = bond_channel(ops, bond, q, m)
    return _wrap(m, system), ops


def build_model(system, model, q=None):
    """Dispatch on model name: a fixed-point kind or ``"bond_dephased"``."""
    if model == "bond_dephased":
        if q is None:
            raise ValueError("bond_dephased requires q")
        return build_bond_dephased(system, q)
    return build_fixed_point(system, model)


def random_symmetric_state(system, rng, charge=0, rank=None):
    """Random state supported inside one charge sector of U (strongly symmetric)."""
    ops = ChargeOperatorSet.clock_shift(system)
    p = sector_projector(ops, charge)
    d = system.dim
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    g = p @ g
    m = g @ g.conj().T
    return _wrap(m / np.real(np.trace(m)), system), ops


class SymmetryCheck(NamedTuple):
    strong: bool
    phase: complex | None
    weak: bool


def check_strong_symmetry(rho, u, tol=SYMMETRY_TOL):
    """Classify ``rho`` as strongly (``U rho = e^{i theta} rho``) and/or weakly
    (``U rho U^dagger = rho``) symmetric.

    ``u`` may be a dense unitary or a :class:`ChargeOperatorSet`.
    """
    m = matcore.as_array(rho)
    if isinstance(u, ChargeOperatorSet):
        um = u.apply_symmetry(m)
        umu = u.apply_symmetry(um, side="right")
    else:
        u = np.asarray(u)
        if u.shape != m.shape:
            raise DimensionMismatch(f"dimension mismatch: {u.shape} vs {m.shape}")
        um = u @ m
        umu = um @ u.conj().T
    weak = float(np.max(np.abs(umu - m))) < tol
    a, b = np.unravel_index(int(np.argmax(np.abs(m))), m.shape)
    phase = um[a, b] / m[a, b]
    strong = abs(abs(phase) - 1.0) < tol and float(np.max(np.abs(um - phase * m))) < tol
    return SymmetryCheck(bool(strong), complex(phase) if strong else None, bool(weak))


def save_state(path, rho):
    """Write ``rho`` as a plain-text container.

    Format: a ``dim D`` header line, an optional ``system N n boundary``
    line, then ``D*D`` lines holding ``real imag`` of each entry in
    row-major order, 17 significant digits (exact round trip).
    """
    m = matcore.as_array(rho)
    system = getattr(rho, "system", None)
    lines = [f"dim {m.shape[0]}"]
    if system is not None:
        lines.append(f"system {system.n_sites} {system.local_dim} {system.boundary}")
    flat = m.reshape(-1)
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in flat)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_state(path, validate=True):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    head = lines[0].split()
    if head[0] != "dim":
        raise ValueError(f"{path}: missing 'dim' header")
    d = int(head[1])
    system = None
    body = lines[1:]
    if body and body[0].startswith("system"):
        _, big_n, n, boundary = body[0].split()
        system = SystemSpec(int(big_n), int(n), boundary=boundary, max_dim=max(d, DEFAULT_MAX_DIM))
        body = body[1:]
    if len(body) != d * d:
        raise ValueError(f"{path}: expected {d * d} entries, found {len(body)}")
    vals = np.array([[float(x) for x in ln.split()] for ln in body])
    m = (vals[:, 0] + 1j * vals[:, 1]).reshape(d, d)
    return DensityMatrix.from_array(m, system) if validate else DensityMatrix(m, system)
