"""Fourier-space representation of real, mean-zero vector fields on the unit 3-torus.

Coefficients follow the convention

    u(x) = sum_k  u_hat[k] * exp(2 pi i k . x),     x in [0, 1)^3,

with integer wavevectors k in {-N..N}^3, so that -Laplacian has symbol
4 pi^2 |k|^2 and every derivative carries the multiplier 2 pi i k.

Fields are stored as dense complex arrays of shape (3, 2N+1, 2N+1, 2N+1)
indexed by k + N.  The k = 0 slot is kept (products of fields have a mean)
but velocity constructors always leave it at zero.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.fft

from .exceptions import LatticeMismatchError, SnapshotFormatError, ZeroMeanError

__all__ = [
    "DEALIAS_RULES",
    "Lattice",
    "SpectralField",
    "PhysicalField",
    "leray_project",
    "symmetrize_real",
    "random_solenoidal",
    "taylor_green",
    "to_physical",
    "to_spectral",
    "dealiased_product",
    "direct_convolution",
    "gradient",
    "iter_triads",
    "write_snapshot",
    "read_snapshot",
]

DEALIAS_RULES = ("two-thirds", "none")


@dataclass(frozen=True)
class Lattice:
    """Truncated integer lattice {-N..N}^3 together with a dealiasing rule.

    Under the two-thirds rule only modes with every |k_i| <= floor(2N/3) are
    retained; with ``dealias="none"`` the whole cube is retained.
    """

    N: int
    dealias: str = "two-thirds"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"lattice resolution must be a positive integer, got {self.N!r}")
        if self.dealias not in DEALIAS_RULES:
            raise ValueError(f"unknown dealias rule {self.dealias!r}; expected one of {DEALIAS_RULES}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def n(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple:
        return (3, self.n, self.n, self.n)

    @property
    def cutoff(self) -> int:
        """Largest |k_i| kept by the dealiasing rule."""
        if self.dealias == "two-thirds":
            return (2 * self.N) // 3
        return self.N

    @property
    def grid_size(self) -> int:
        """Points per axis of the collocation grid used by to_physical."""
        return 2 * self.N + 2

    @property
    def product_grid_size(self) -> int:
        # 3K+1 points keep aliased content of a product of dealiased modes
        # off the dealias set.
        return scipy.fft.next_fast_len(3 * self.cutoff + 1, real=True)

    @cached_property
    def k1d(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Integer wavevector components, shape (3, n, n, n)."""
        return np.stack(np.meshgrid(self.k1d, self.k1d, self.k1d, indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        return np.sum(self.kvec**2, axis=0).astype(float)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def nonzero(self) -> np.ndarray:
        return self.ksq > 0

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Modes kept by the dealiasing rule (k = 0 included)."""
        return np.all(np.abs(self.kvec) <= self.cutoff, axis=0)

    @cached_property
    def retained(self) -> np.ndarray:
        """Modes of the Galerkin space: dealias mask without k = 0."""
        return self.dealias_mask & self.nonzero

    def wavevectors(self) -> np.ndarray:
        """All of {-N..N}^3 minus the origin, as an (M, 3) integer array."""
        return self.kvec[:, self.nonzero].T.copy()

    @cached_property
    def retained_modes(self) -> np.ndarray:
        return self.kvec[:, self.retained].T.copy()

    def index(self, k) -> tuple:
        kx, ky, kz = (int(c) for c in k)
        if max(abs(kx), abs(ky), abs(kz)) > self.N:
            raise IndexError(f"wavevector {k} outside lattice N={self.N}")
        return (kx + self.N, ky + self.N, kz + self.N)


def _flip(c: np.ndarray) -> np.ndarray:
    """Array re-indexed by -k (all three spatial axes reversed)."""
    return c[..., ::-1, ::-1, ::-1]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex 3-vector Fourier coefficients on a truncated lattice (immutable)."""

    lattice: Lattice
    coeff: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeff, dtype=complex)
        if c.shape != self.lattice.shape:
            raise LatticeMismatchError(
                f"coefficient array has shape {c.shape}, lattice N={self.lattice.N} needs {self.lattice.shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeff", c)

    @classmethod
    def zeros(cls, lattice: Lattice) -> "SpectralField":
        return cls(lattice, np.zeros(lattice.shape, dtype=complex))

    @classmethod
    def from_modes(cls, lattice: Lattice, modes: dict, hermitian: bool = True) -> "SpectralField":
        """Build a field from ``{k: (u1, u2, u3)}``.

        With ``hermitian=True`` the partner -k is filled with the conjugate,
        so only one of each +-k pair needs listing.
        """
        c = np.zeros(lattice.shape, dtype=complex)
        for k, vec in modes.items():
            c[(slice(None),) + lattice.index(k)] = np.asarray(vec, dtype=complex)
            if hermitian:
                kneg = tuple(-int(x) for x in k)
                c[(slice(None),) + lattice.index(kneg)] = np.conj(np.asarray(vec, dtype=complex))
        return cls(lattice, c)

    def mode(self, k) -> np.ndarray:
        return self.coeff[(slice(None),) + self.lattice.index(k)].copy()

    def max_amplitude(self) -> float:
        return float(np.max(np.sqrt(np.sum(np.abs(self.coeff) ** 2, axis=0))))

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.coeff - np.conj(_flip(self.coeff))), initial=0.0))

    def divergence_defect(self) -> float:
        """max |k . u_hat_k|, relative to the largest coefficient."""
        amp = self.max_amplitude()
        if amp == 0:
            return 0.0
        kdotu = np.sum(self.lattice.kvec * self.coeff, axis=0)
        return float(np.max(np.abs(kdotu)) / amp)

    def is_solenoidal(self, tol: float = 1e-12) -> bool:
        return self.divergence_defect() <= tol

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.lattice != self.lattice:
            raise LatticeMismatchError(f"lattices differ: {self.lattice} vs {other.lattice}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.lattice, self.coeff + other.coeff)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.lattice, self.coeff - other.coeff)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SpectralField(self.lattice, self.coeff * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.lattice, -self.coeff)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Samples of a real 3-vector on the uniform (2N+2)^3 grid of [0,1)^3."""

    lattice: Lattice
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        g = self.lattice.grid_size
        if v.shape != (3, g, g, g):
            raise LatticeMismatchError(
                f"grid samples have shape {v.shape}; lattice N={self.lattice.N} expects {(3, g, g, g)}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> np.ndarray:
        x = np.arange(self.lattice.grid_size) / self.lattice.grid_size
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


# --------------------------------------------------------------------------
# transforms between the centred coefficient layout and real FFT grids


@lru_cache(maxsize=32)
def _layout(lattice: Lattice, g: int):
    """Index maps between centred coefficients and an rfftn array of size g.

    Grids coarser than 2N+1 only address the dealias set.
    """
    if g >= 2 * lattice.N + 1:
        support = np.ones(lattice.ksq.shape, dtype=bool)
    elif g >= 2 * lattice.cutoff + 1:
        support = lattice.dealias_mask
    else:
        raise ValueError(f"grid of {g} points cannot hold the dealias set of lattice N={lattice.N}")
    kx, ky, kz = lattice.kvec
    half = (kz >= 0) & support
    # positions in the half spectrum for modes with kz >= 0
    fwd = (kx[half] % g, ky[half] % g, kz[half])
    # modes with kz < 0 are read back as conjugates of their -k partner
    neg = (kz < 0) & support
    back = ((-kx[neg]) % g, (-ky[neg]) % g, -kz[neg])
    return half, fwd, neg, back


def _to_grid(coeff: np.ndarray, lattice: Lattice, g: int) -> np.ndarray:
    """Evaluate Hermitian coefficients on a g^3 grid (leading axes preserved)."""
    half, fwd, _, _ = _layout(lattice, g)
    lead = coeff.shape[:-3]
    h = np.zeros(lead + (g, g, g // 2 + 1), dtype=complex)
    h[(Ellipsis,) + fwd] = coeff[..., half]
    return scipy.fft.irfftn(h, s=(g, g, g), axes=(-3, -2, -1), norm="forward")


def _from_grid(values: np.ndarray, lattice: Lattice, g: int) -> np.ndarray:
    """Fourier coefficients (on the lattice) of real grid samples."""
    half, fwd, neg, back = _layout(lattice, g)
    spec = scipy.fft.rfftn(values, axes=(-3, -2, -1), norm="forward")
    lead = values.shape[:-3]
    n = lattice.n
    c = np.zeros(lead + (n, n, n), dtype=complex)
    c[..., half] = spec[(Ellipsis,) + fwd]
    c[..., neg] = np.conj(spec[(Ellipsis,) + back])
    return c


def to_physical(u: SpectralField) -> PhysicalField:
    """Synthesize grid samples on the (2N+2)^3 collocation grid."""
    lat = u.lattice
    return PhysicalField(lat, _to_grid(u.coeff, lat, lat.grid_size))


def to_spectral(p: PhysicalField, lattice: Lattice | None = None) -> SpectralField:
    """Analyse grid samples back onto the lattice.

    Content at the grid's unpaired Nyquist frequency -(N+1) has no lattice slot
    and is dropped.  A nonzero mean is rejected.
    """
    lattice = p.lattice if lattice is None else lattice
    g = lattice.grid_size
    values = np.asarray(p.values)
    if values.shape != (3, g, g, g):
        raise LatticeMismatchError(
            f"grid samples have shape {values.shape}; lattice N={lattice.N} expects {(3, g, g, g)}"
        )
    c = _from_grid(values, lattice, g)
    mean = c[(slice(None),) + lattice.index((0, 0, 0))]
    scale = max(float(np.max(np.abs(values), initial=0.0)), np.finfo(float).tiny)
    if np.max(np.abs(mean)) > 1e-12 * scale:
        raise ZeroMeanError(f"physical field has nonzero mean {np.real(mean)}; fields must be mean-free")
    c[(slice(None),) + lattice.index((0, 0, 0))] = 0
    return SpectralField(lattice, 0.5 * (c + np.conj(_flip(c))))


# --------------------------------------------------------------------------
# projections and field constructors


def leray_project(u: SpectralField) -> SpectralField:
    """Per-mode orthogonal projection onto divergence-free fields."""
    lat = u.lattice
    k = lat.kvec
    ksq = np.where(lat.nonzero, lat.ksq, 1.0)
    kdotu = np.sum(k * u.coeff, axis=0)
    c = u.coeff - k * (kdotu / ksq)
    c[:, ~lat.nonzero] = 0
    return SpectralField(lat, c)


def symmetrize_real(u: SpectralField) -> SpectralField:
    """Replace u_hat[k] by (u_hat[k] + conj(u_hat[-k]))/2, the nearest real field."""
    return SpectralField(u.lattice, 0.5 * (u.coeff + np.conj(_flip(u.coeff))))


def random_solenoidal(lattice: Lattice, slope: float = 3.0, seed: int = 0) -> SpectralField:
    """Random real divergence-free field on the retained modes.

    Amplitudes follow |k|^-slope times a unit-variance complex Gaussian per
    component; the result is symmetrized and Leray-projected.
    """
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)) / np.sqrt(2.0)
    weight = np.zeros(lattice.ksq.shape)
    weight[lattice.retained] = lattice.kmag[lattice.retained] ** (-float(slope))
    return leray_project(symmetrize_real(SpectralField(lattice, c * weight)))


def taylor_green(lattice: Lattice, A: float = 1.0) -> SpectralField:
    """Taylor-Green datum A(sin X cos Y cos Z, -cos X sin Y cos Z, 0), X = 2 pi x etc.

    Expanding each sine and cosine into exponentials puts all energy on the
    eight wavevectors (+-1, +-1, +-1) with coefficients (-i A sx/8, i A sy/8, 0).
    """
    if not A > 0:
        raise ValueError(f"Taylor-Green amplitude must be positive, got {A}")
    if lattice.cutoff < 1:
        raise ValueError(f"lattice N={lattice.N} retains no |k_i| = 1 modes")
    c = np.zeros(lattice.shape, dtype=complex)
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                idx = lattice.index((sx, sy, sz))
                c[(0,) + idx] = -1j * A * sx / 8
                c[(1,) + idx] = 1j * A * sy / 8
    return SpectralField(lattice, c)


def gradient(u: SpectralField) -> np.ndarray:
    """Coefficients of d_j u_i as an array of shape (3 [j], 3 [i], n, n, n)."""
    k = u.lattice.kvec
    return 2j * np.pi * k[:, None] * u.coeff[None, :]


# --------------------------------------------------------------------------
# products


def _dealiased_product_coeffs(a: np.ndarray, b: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Exact truncated convolution of coefficient stacks, restricted to the dealias set."""
    g = lattice.product_grid_size
    mask = lattice.dealias_mask
    prod = _to_grid(a * mask, lattice, g) * _to_grid(b * mask, lattice, g)
    return _from_grid(prod, lattice, g) * mask


def dealiased_product(u: SpectralField, v: SpectralField) -> SpectralField:
    """Componentwise pointwise product u_i v_i, computed pseudo-spectrally.

    Inputs are restricted to the dealias set and the product is evaluated on a
    grid fine enough that no aliased content reaches a retained mode, so the
    result equals sum_q u_hat[k-q] v_hat[q] (k, q, k-q all retained) exactly.
    """
    if u.lattice != v.lattice:
        raise LatticeMismatchError(f"lattices differ: {u.lattice} vs {v.lattice}")
    return SpectralField(u.lattice, _dealiased_product_coeffs(u.coeff, v.coeff, u.lattice))


def direct_convolution(u: SpectralField, v: SpectralField) -> SpectralField:
    """O(M^2) reference for dealiased_product: explicit sums over the dealias set."""
    if u.lattice != v.lattice:
        raise LatticeMismatchError(f"lattices differ: {u.lattice} vs {v.lattice}")
    lat = u.lattice
    mask = lat.dealias_mask
    modes = lat.kvec[:, mask].T
    uk = u.coeff[:, mask].T
    vk = v.coeff[:, mask].T
    lookup = np.full((lat.n,) * 3, -1)
    lookup[tuple((modes + lat.N).T)] = np.arange(len(modes))
    out = np.zeros(lat.shape, dtype=complex)
    K = lat.cutoff
    for k in modes:
        p = k - modes
        ok = np.all(np.abs(p) <= K, axis=1)
        j = lookup[tuple((p[ok] + lat.N).T)]
        out[(slice(None),) + lat.index(k)] = np.sum(uk[j] * vk[ok], axis=0)
    return SpectralField(lat, out)


# --------------------------------------------------------------------------
# triad enumeration for the direct double sums


def _triad_chunk(lattice: Lattice, lookup: np.ndarray, modes: np.ndarray, rows: np.ndarray):
    K = lattice.cutoff
    p = modes[rows, None, :] - modes[None, :, :]
    inside = np.all(np.abs(p) <= K, axis=2)
    idx = np.full(inside.shape, -1, dtype=np.int64)
    pi = p[inside] + lattice.N
    idx[inside] = lookup[pi[:, 0], pi[:, 1], pi[:, 2]]
    i, j = np.nonzero(idx >= 0)
    return (rows[i]).astype(np.int32), j.astype(np.int32), idx[i, j].astype(np.int32)


@lru_cache(maxsize=4)
def _cached_triads(lattice: Lattice):
    return tuple(_triads_uncached(lattice, chunk_pairs=10**9))


def _triads_uncached(lattice: Lattice, chunk_pairs: int):
    modes = lattice.retained_modes
    m = len(modes)
    lookup = np.full((lattice.n,) * 3, -1, dtype=np.int64)
    lookup[tuple((modes + lattice.N).T)] = np.arange(m)
    step = max(1, chunk_pairs // max(m, 1))
    for start in range(0, m, step):
        yield _triad_chunk(lattice, lookup, modes, np.arange(start, min(m, start + step)))


def iter_triads(lattice: Lattice, chunk_pairs: int = 4_000_000):
    """Yield (I, J, P) index chunks over triads k = modes[I], q = modes[J], k - q = modes[P].

    All three wavevectors range over the retained (nonzero, dealiased) modes.
    Small lattices are enumerated once and cached.
    """
    m = len(lattice.retained_modes)
    if m * m <= 4 * chunk_pairs:
        yield from _cached_triads(lattice)
    else:
        yield from _triads_uncached(lattice, chunk_pairs)


# --------------------------------------------------------------------------
# SPECFIELD v1 snapshots

_HEADER = re.compile(r"^SPECFIELD v1 N=(\d+)\s*$")


def _canonical(k) -> bool:
    for c in k:
        if c != 0:
            return c > 0
    return False


def write_snapshot(u: SpectralField, path) -> Path:
    """Write u in SPECFIELD v1 text format (one line per canonical wavevector)."""
    lat = u.lattice
    path = Path(path)
    lines = [f"SPECFIELD v1 N={lat.N}"]
    modes = lat.wavevectors()
    for k in modes:
        if not _canonical(k):
            continue
        v = u.coeff[(slice(None),) + lat.index(k)]
        nums = " ".join(f"{x:.17g}" for c in v for x in (c.real, c.imag))
        lines.append(f"{k[0]} {k[1]} {k[2]} {nums}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot(path, dealias: str = "two-thirds") -> SpectralField:
    """Read a SPECFIELD v1 file; Hermitian partners are filled in."""
    path = Path(path)
    text = path.read_text().splitlines()
    if not text:
        raise SnapshotFormatError(f"{path}: empty file")
    m = _HEADER.match(text[0].strip())
    if m is None:
        raise SnapshotFormatError(f"{path}: bad header {text[0]!r}")
    lat = Lattice(int(m.group(1)), dealias)
    c = np.zeros(lat.shape, dtype=complex)
    seen = set()
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        tok = line.split()
        if len(tok) != 9:
            raise SnapshotFormatError(f"{path}:{lineno}: expected 9 fields, got {len(tok)}")
        try:
            k = tuple(int(t) for t in tok[:3])
            vals = [float(t) for t in tok[3:]]
        except ValueError as exc:
            raise SnapshotFormatError(f"{path}:{lineno}: {exc}") from None
        if max(abs(x) for x in k) > lat.N:
            raise SnapshotFormatError(f"{path}:{lineno}: wavevector {k} outside N={lat.N}")
        if not _canonical(k):
            raise SnapshotFormatError(f"{path}:{lineno}: wavevector {k} is not canonical")
        if k in seen:
            raise SnapshotFormatError(f"{path}:{lineno}: duplicate wavevector {k}")
        seen.add(k)
        vec = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        c[(slice(None),) + lat.index(k)] = vec
        c[(slice(None),) + lat.index(tuple(-x for x in k))] = np.conj(vec)
    return SpectralField(lat, c)
