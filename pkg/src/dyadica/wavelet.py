"""Daubechies wavelet families and discrete multiresolution transforms.

The filter pair is constructed from the orthogonality/moment equations by
spectral factorization; point values of the scaling function and mother
wavelet come from the cascade iteration run to a fixed point on a dyadic
refinement grid.

Atoms on a root box are built by exact filter refinement of unit cell
vectors, so the family ``{sqrt(|Q|) * phi_Q}`` is orthonormal to machine
precision at every admissible scale, discrete vanishing moments hold exactly
up to order N-1, and the analysis/synthesis pair inverts exactly on spans of
interior atoms.  Point-value tables are kept alongside as the
continuous-function reference (moment quadrature, class-constant
measurements, template seeds).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .dyadic import DyadicCube, RootBox

SQRT2 = np.sqrt(2.0)


class CascadeError(RuntimeError):
    """Cascade iteration failed to reach its fixed point."""


def daubechies_filter(N: int) -> np.ndarray:
    """Lowpass filter of the order-N Daubechies family (2N taps).

    Solves the orthonormality and vanishing-moment equations by spectral
    factorization of the binomial half-band polynomial, keeping the
    minimal-phase root set.  N=1 returns the Haar filter.
    """
    if N < 1:
        raise ValueError("order must be >= 1")
    if N == 1:
        return np.array([1.0, 1.0]) / SQRT2
    poly_y = [comb(N - 1 + k, k) for k in range(N)]
    yroots = np.roots(poly_y[::-1])
    factor = np.poly1d([1.0])
    for y in yroots:
        # y = (2 - z - 1/z)/4  <=>  z^2 + (4y - 2) z + 1 = 0
        zs = sorted(np.roots(np.array([1.0, 4.0 * y - 2.0, 1.0])), key=abs)
        factor *= np.poly1d([1.0, -zs[0]])
    factor /= np.polyval(factor, 1.0)
    spread = np.poly1d([1.0])
    for _ in range(N):
        spread *= np.poly1d([0.5, 0.5])
    h = (spread * factor).coeffs.real * SQRT2
    return h.copy()


def mirror_filter(h: np.ndarray) -> np.ndarray:
    """Highpass filter g_n = (-1)^n h_{M-1-n}."""
    M = len(h)
    return np.array([(-1) ** n * h[M - 1 - n] for n in range(M)])


def cascade_table(h: np.ndarray, refine: int, cap: int = 500, tol: float = 1e-11):
    """Fixed-point cascade for scaling/wavelet values on the grid 2^-refine * Z.

    Returns (x, phi, psi, residual, iterations).  The iteration map reads
    values of the previous iterate at the coarser half-grid, so the dyadic
    table is closed under it; the start is the unit box indicator.
    """
    M = len(h)
    width = M - 1
    step = 1 << refine
    n = width * step + 1
    x = np.arange(n) / step
    v = ((x >= 0.0) & (x < 1.0)).astype(float)
    base = 2 * np.arange(n)
    residual = np.inf
    iterations = 0
    for iterations in range(1, cap + 1):
        vn = np.zeros_like(v)
        for kk, hk in enumerate(h):
            idx = base - kk * step
            m = (idx >= 0) & (idx < n)
            vn[m] += SQRT2 * hk * v[idx[m]]
        residual = float(np.max(np.abs(vn - v)))
        v = vn
        if residual < tol:
            break
    g = mirror_filter(h)
    psi = np.zeros_like(v)
    for kk, gk in enumerate(g):
        idx = base - kk * step
        m = (idx >= 0) & (idx < n)
        psi[m] += SQRT2 * gk * v[idx[m]]
    return x, v, psi, residual, iterations


def _table_class_constant(x: np.ndarray, vals: np.ndarray, rho: float,
                          probe: float = 2.0 ** -6) -> float:
    """Measured size-and-smoothness constant of a tabulated profile.

    Centered coordinates; the Lipschitz quotient is probed at dyadic strides
    down to ``probe`` (a measurement, never an assertion: rough families
    have resolution-limited quotients).
    """
    xc = x - 0.5 * (x[0] + x[-1])
    weight = (1.0 + np.abs(xc)) ** (1.0 + rho)
    const = float(np.max(weight * np.abs(vals)))
    dx = x[1] - x[0]
    stride = max(1, int(round(probe / dx)))
    while stride < len(x):
        q = np.abs(vals[stride:] - vals[:-stride]) / (stride * dx)
        w = np.minimum(weight[stride:], weight[:-stride])
        const = max(const, float(np.max(w * q)))
        stride *= 2
    return const


@dataclass(frozen=True)
class WaveletFamily:
    """Daubechies filter pair plus cascaded point values.

    ``k`` is the smoothness budget callers may spend: atoms carry k+1 exact
    discrete vanishing moments (orders 0..k), which requires k + 1 <= N.
    ``w`` is the odd dilation factor with supp(phi_Q) inside wQ.
    """

    N: int
    k: int
    refine: int
    lowpass: np.ndarray
    highpass: np.ndarray
    w: int
    xgrid: np.ndarray
    phi_table: np.ndarray
    psi_table: np.ndarray
    cascade_residual: float
    cascade_iterations: int
    class_constant: float

    @property
    def support_width(self) -> int:
        return 2 * self.N - 1

    def descriptor(self) -> dict:
        return {"N": self.N, "k": self.k, "r": self.refine, "w": self.w}

    def table_moment(self, alpha: int, kind: str = "psi") -> float:
        """Riemann-sum moment of a tabulated profile (the quadrature oracle)."""
        vals = self.psi_table if kind == "psi" else self.phi_table
        dx = self.xgrid[1] - self.xgrid[0]
        return float(np.sum(self.xgrid ** alpha * vals) * dx)

    def table_values(self, pts: np.ndarray, kind: str = "psi") -> np.ndarray:
        """Linear interpolation of the point-value table (zero outside)."""
        vals = self.psi_table if kind == "psi" else self.phi_table
        return np.interp(pts, self.xgrid, vals, left=0.0, right=0.0)


def build_family(N: int, refine: int = 8, k: int | None = None,
                 w: int | None = None, cap: int = 500) -> WaveletFamily:
    """Construct the order-N family with point values at resolution 2^-refine."""
    if N < 1:
        raise ValueError("order must be >= 1")
    if refine < 6:
        raise ValueError("refinement must be >= 6")
    if k is None:
        k = N - 1
    if not (0 <= k <= N - 1):
        raise ValueError(f"smoothness budget k={k} needs k + 1 <= N={N}")
    h = daubechies_filter(N)
    g = mirror_filter(h)
    x, phi, psi, residual, iterations = cascade_table(h, refine, cap=cap)
    if residual > 1e-10:
        raise CascadeError(
            f"cascade residual {residual:.3e} above 1e-10 after {iterations} iterations")
    if w is None:
        w = max(2 * N - 1, 1)
        if w % 2 == 0:
            w += 1
    if w % 2 != 1 or w < 2 * N - 1:
        raise ValueError("dilation w must be odd and cover the atom support")
    const = _table_class_constant(x, psi, rho=float(k + 1))
    return WaveletFamily(N=N, k=k, refine=refine, lowpass=h, highpass=g, w=w,
                         xgrid=x, phi_table=phi, psi_table=psi,
                         cascade_residual=residual, cascade_iterations=iterations,
                         class_constant=const)


class CoefficientTree:
    """Finitely supported map from admissible cubes to coefficients.

    Backed by one dense array per scale; cancellative coefficients live at
    scales J+1..L (one refinement step below the grid is needed to realize
    a wavelet atom).
    """

    def __init__(self, root: RootBox, dtype=float):
        self.root = root
        self.data: dict[int, np.ndarray] = {}
        self.dtype = dtype

    def _array(self, scale: int) -> np.ndarray:
        if not (self.root.J + 1 <= scale <= self.root.L):
            raise ValueError(f"scale {scale} outside [{self.root.J + 1}, {self.root.L}]")
        if scale not in self.data:
            n = self.root.positions_per_side(scale)
            self.data[scale] = np.zeros((n,) * self.root.d, dtype=self.dtype)
        return self.data[scale]

    def __getitem__(self, cube: DyadicCube):
        if cube.scale not in self.data:
            return self.dtype(0)
        return self.data[cube.scale][cube.pos]

    def __setitem__(self, cube: DyadicCube, value):
        if not self.root.contains_cube(cube):
            raise ValueError(f"cube {cube.token()} not admissible")
        self._array(cube.scale)[cube.pos] = value

    def items(self):
        """(cube, coefficient) pairs over the nonzero support, canonical order."""
        for scale in sorted(self.data, reverse=True):
            arr = self.data[scale]
            for pos in zip(*np.nonzero(arr)):
                yield DyadicCube(scale, tuple(int(p) for p in pos)), arr[pos]

    def support(self):
        return [cube for cube, _ in self.items()]

    def n_nonzero(self) -> int:
        return int(sum(np.count_nonzero(a) for a in self.data.values()))

    def copy(self) -> "CoefficientTree":
        out = CoefficientTree(self.root, dtype=self.dtype)
        out.data = {s: a.copy() for s, a in self.data.items()}
        return out

    def scaled(self, factor) -> "CoefficientTree":
        out = self.copy()
        for s in out.data:
            out.data[s] = out.data[s] * factor
        return out

    def __add__(self, other: "CoefficientTree") -> "CoefficientTree":
        if other.root != self.root:
            raise ValueError("trees on different root boxes")
        out = self.copy()
        for s, arr in other.data.items():
            if s in out.data:
                out.data[s] = out.data[s] + arr
            else:
                out.data[s] = arr.copy()
        return out

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(a))) for a in self.data.values()),
                   default=0.0)


class AtomBasis:
    """Discrete wavelet/scaling atoms of a family realized on a root box.

    Atom vectors are exact filter refinements of unit cell vectors, recentered
    by N-1 positions so the atom of cube Q is supported in wQ and centered on
    Q.  All pairings are grid pairings with the cell measure; L^1
    normalization follows the family convention.
    """

    def __init__(self, family: WaveletFamily, root: RootBox):
        self.family = family
        self.root = root
        self._clip_cache: dict = {}
        self._wav: dict[int, np.ndarray] = {}
        self._scal: dict[int, np.ndarray] = {0: np.array([1.0])}
        h, g = family.lowpass, family.highpass
        for t in range(1, root.depth + 1):
            prev = self._scal[t - 1]
            self._scal[t] = self._refine(prev, h)
            if t == 1:
                self._wav[1] = self._refine(prev, g)
            else:
                self._wav[t] = self._refine(self._wav[t - 1], h)

    @staticmethod
    def _refine(c: np.ndarray, filt: np.ndarray) -> np.ndarray:
        out = np.zeros(2 * (len(c) - 1) + len(filt))
        for n, fn in enumerate(filt):
            out[n:n + 2 * len(c) - 1:2] += fn * c
        return out

    # -- geometry ---------------------------------------------------------

    def _shift(self, t: int, kind: str) -> int:
        if kind == "scaling" and t == 0:
            return 0
        return self.family.N - 1

    def _template(self, t: int, kind: str) -> np.ndarray:
        if kind == "wavelet":
            if t < 1:
                raise ValueError("wavelet atoms need one refinement level below the grid")
            return self._wav[t]
        return self._scal[t]

    def levels(self, cube: DyadicCube) -> int:
        return cube.scale - self.root.J

    def value_scale(self, cube: DyadicCube) -> float:
        """Coefficient-to-value factor giving the L^1-normalized atom."""
        d = self.root.d
        return 2.0 ** (-(self.root.J + cube.scale) * d / 2.0)

    def atom_start(self, cube: DyadicCube, kind: str) -> tuple[int, ...]:
        t = self.levels(cube)
        m = 1 << t
        sh = self._shift(t, kind)
        return tuple((p - sh) * m for p in cube.pos)

    def atom_values(self, cube: DyadicCube, kind: str = "wavelet"):
        """Clipped window slices plus the L^1-normalized values on them."""
        t = self.levels(cube)
        coeffs = self._template(t, kind)
        starts = self.atom_start(cube, kind)
        n = self.root.cells_per_side
        slices, pieces = [], []
        for s0 in starts:
            a, b = max(s0, 0), min(s0 + len(coeffs), n)
            if a >= b:
                return None, None
            slices.append(slice(a, b))
            pieces.append(coeffs[a - s0:b - s0])
        vals = pieces[0]
        for piece in pieces[1:]:
            vals = np.multiply.outer(vals, piece)
        return tuple(slices), vals * self.value_scale(cube)

    def atom_grid(self, cube: DyadicCube, kind: str = "wavelet") -> np.ndarray:
        out = np.zeros(self.root.shape)
        slices, vals = self.atom_values(cube, kind)
        if slices is not None:
            out[slices] = vals
        return out

    def pair(self, samples: np.ndarray, cube: DyadicCube, kind: str = "wavelet"):
        """L^1-normalized pairing atom(f) by the grid quadrature."""
        slices, vals = self.atom_values(cube, kind)
        if slices is None:
            return samples.dtype.type(0)
        return np.sum(samples[slices] * vals) * self.root.cell_measure

    def interior_cubes(self, smin: int | None = None, smax: int | None = None):
        smin = self.root.J + 1 if smin is None else smin
        smax = self.root.L if smax is None else smax
        out = []
        for scale in range(smax, smin - 1, -1):
            for cube in self.root.cubes_at_scale(scale):
                if self.root.is_interior(cube, self.family.w):
                    out.append(cube)
        return out

    # -- transforms -------------------------------------------------------

    def analyze(self, samples: np.ndarray) -> CoefficientTree:
        """Cancellative coefficients phi_Q(f) for every admissible cube."""
        samples = np.asarray(samples)
        tree = CoefficientTree(self.root, dtype=samples.dtype.type)
        for scale in range(self.root.J + 1, self.root.L + 1):
            tree.data[scale] = self._scale_coefficients(samples, scale)
        return tree

    def _scale_coefficients(self, samples: np.ndarray, scale: int) -> np.ndarray:
        t = scale - self.root.J
        m = 1 << t
        sh = self.family.N - 1
        npos = self.root.positions_per_side(scale)
        if self.root.d == 1:
            coeffs = self._wav[t] * self.value_scale(DyadicCube(scale, (0,)))
            corr = np.correlate(samples, coeffs, mode="full")
            idx = len(coeffs) - 1 + (np.arange(npos) - sh) * m
            return corr[idx] * self.root.cell_measure
        out = np.zeros((npos,) * self.root.d, dtype=samples.dtype)
        for pos in itertools.product(range(npos), repeat=self.root.d):
            out[pos] = self.pair(samples, DyadicCube(scale, pos), "wavelet")
        return out

    def synthesize(self, tree: CoefficientTree) -> np.ndarray:
        """Sum over cubes of |Q| t(Q) phi_Q sampled on the grid."""
        dtype = complex if any(np.iscomplexobj(a) for a in tree.data.values()) else float
        out = np.zeros(self.root.shape, dtype=dtype)
        for cube, value in tree.items():
            slices, vals = self.atom_values(cube, "wavelet")
            if slices is not None:
                out[slices] += (cube.measure * value) * vals
        return out

    # -- multiresolution identities ----------------------------------------

    def _positions_overlapping(self, scale: int, kind: str):
        """1-d position range whose atom window meets the box (may leave it)."""
        t = scale - self.root.J
        if kind == "wavelet":
            length = len(self._wav[t]) if t in self._wav else (
                (2 * self.family.N - 1) * ((1 << t) - 1) + 1)
        else:
            length = len(self._scal[t]) if t in self._scal else (
                (2 * self.family.N - 1) * ((1 << t) - 1) + 1)
        m = 1 << t
        sh = self._shift(t, kind)
        n = self.root.cells_per_side
        k_lo = sh - (length + m - 1) // m
        k_hi = sh + (n + m - 1) // m
        return range(k_lo, k_hi + 1)

    def _clipped_coeffs(self, scale: int, k: int, kind: str):
        """Atom coefficients on box cells for scales above the root scale.

        Top-down refinement clipping each level to a margin (in that level's
        position units) around the box, so arbitrarily coarse scales stay
        O(box) work.  Results are cached per (scale, position, kind).
        """
        key = (scale, k, kind)
        cached = self._clip_cache.get(key)
        if cached is not None:
            return cached
        t = scale - self.root.J
        sh = self._shift(t, kind)
        start = k - sh
        coeffs = np.array([1.0])
        level = scale
        margin = 2 * self.family.N
        while level > self.root.J:
            filt = self.family.highpass if (kind == "wavelet" and level == scale) \
                else self.family.lowpass
            nxt_start = 2 * start
            nxt = self._refine(coeffs, filt)
            level -= 1
            t_now = level - self.root.J
            npos_level = 1 << max(self.root.depth - t_now, 0)
            a = max(nxt_start, -margin)
            b = min(nxt_start + len(nxt), npos_level + margin)
            if a >= b:
                self._clip_cache[key] = (0, np.zeros(0))
                return self._clip_cache[key]
            coeffs = nxt[a - nxt_start:b - nxt_start]
            start = a
        self._clip_cache[key] = (start, coeffs)
        return self._clip_cache[key]

    def _projection_1d(self, samples: np.ndarray, scale: int, kind: str) -> np.ndarray:
        """Sum of |Q| atom_Q(f) atom_Q over all scale-``scale`` positions, d=1."""
        n = self.root.cells_per_side
        out = np.zeros(n, dtype=samples.dtype)
        t = scale - self.root.J
        sh = self._shift(t, kind)
        if t <= self.root.depth:
            coeffs = self._template(t, kind)
            vals = coeffs  # orthonormal-vector values up to the global h^{-1/2}
            corr = np.correlate(samples, vals, mode="full")
            m = 1 << t
            for k in self._positions_overlapping(scale, kind):
                o = (k - sh) * m
                c = corr[len(vals) - 1 + o] if 0 <= len(vals) - 1 + o < len(corr) else 0.0
                if c == 0.0:
                    continue
                a, b = max(o, 0), min(o + len(vals), n)
                out[a:b] += c * vals[a - o:b - o]
            return out
        for k in self._positions_overlapping(scale, kind):
            start, coeffs = self._clipped_coeffs(scale, k, kind)
            a, b = max(start, 0), min(start + len(coeffs), n)
            if a >= b:
                continue
            window = coeffs[a - start:b - start]
            c = np.sum(samples[a:b] * window)
            if c != 0.0:
                out[a:b] += c * window
        return out

    def high_low_residual(self, samples: np.ndarray, ell: int,
                          tail_levels: int = 64, tail_tol: float = 1e-9) -> float:
        """L^2 residual between the coarse wavelet sum and the scaling sum.

        The wavelet side runs over all cubes with side > 2^ell meeting the
        box; scales above the root are included until the remaining coarse
        tail is provably below ``tail_tol`` relative to ||f||_2.
        """
        if self.root.d != 1:
            raise NotImplementedError("high-low residual is implemented for d = 1")
        if not (self.root.J < ell <= self.root.L):
            raise ValueError("need J < ell <= L")
        samples = np.asarray(samples, dtype=float)
        lhs = np.zeros_like(samples)
        fnorm = l2_norm(samples, self.root)
        smax = self.root.L + tail_levels
        for scale in range(ell + 1, smax + 1):
            lhs += self._projection_1d(samples, scale, "wavelet")
            if scale >= self.root.L:
                tail = self._projection_1d(samples, scale, "scaling")
                if l2_norm(tail, self.root) < tail_tol * max(fnorm, 1e-300):
                    break
        rhs = self._projection_1d(samples, ell, "scaling")
        return l2_norm(lhs - rhs, self.root)

    def gram_matrix(self, cubes) -> np.ndarray:
        vecs = np.stack([np.sqrt(c.measure) * self.atom_grid(c).ravel() for c in cubes])
        return (vecs @ vecs.T) * self.root.cell_measure

    def gram_residual(self, cubes) -> float:
        G = self.gram_matrix(cubes)
        return float(np.max(np.abs(G - np.eye(len(G)))))


def l2_norm(samples: np.ndarray, root: RootBox) -> float:
    return float(np.sqrt(np.sum(np.abs(samples) ** 2) * root.cell_measure))
