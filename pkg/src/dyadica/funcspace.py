"""Grid functions and their calculus: local means, maximal operators,
Taylor projections, discrete derivatives, Sobolev norms.

All quadrature is the midpoint rule on the finest-level grid; functions are
extended by zero outside the root box, so derivatives never need one-sided
stencils on the test classes (interior-supported inputs).
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube, RootBox
from .wavelet import AtomBasis

_HEADER = struct.Struct("<qqqq")


@dataclass
class GridFunction:
    """Samples of a function at the midpoints of the finest-level cells."""

    root: RootBox
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.shape != self.root.shape:
            raise ValueError(
                f"sample shape {self.samples.shape} does not match box {self.root.shape}")

    @classmethod
    def zeros(cls, root: RootBox, dtype=float) -> "GridFunction":
        return cls(root, np.zeros(root.shape, dtype=dtype))

    @classmethod
    def from_callable(cls, root: RootBox, fn) -> "GridFunction":
        axes = [root.midpoints_1d()] * root.d
        grids = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(fn(*grids), dtype=float)
        return cls(root, np.broadcast_to(vals, root.shape).copy())

    def copy(self) -> "GridFunction":
        return GridFunction(self.root, self.samples.copy())

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.root, self.samples + other.samples)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.root, self.samples - other.samples)

    def __mul__(self, scalar) -> "GridFunction":
        return GridFunction(self.root, self.samples * scalar)

    __rmul__ = __mul__


def pairing(f: GridFunction, g: GridFunction) -> float:
    """Bilinear grid pairing <f, g> = sum f g * cell measure."""
    return np.sum(f.samples * g.samples) * f.root.cell_measure


def lp_norm(f: GridFunction, p: float) -> float:
    a = np.abs(f.samples)
    if np.isinf(p):
        return float(np.max(a))
    return float((np.sum(a ** p) * f.root.cell_measure) ** (1.0 / p))


def local_average(f: GridFunction, cube: DyadicCube, p: float,
                  dilation: int = 1) -> float:
    """<f>_{p, wQ} = |wQ|^{-1/p} ||f||_{L^p(wQ)} with zero extension.

    The normalizing measure is that of the full dilated cube even when the
    window is clipped by the box.
    """
    slices = f.root.window_slices(cube, dilation)
    window = np.abs(f.samples[slices])
    if np.isinf(p):
        return float(np.max(window)) if window.size else 0.0
    measure = (dilation * cube.side) ** f.root.d
    mass = np.sum(window ** p) * f.root.cell_measure
    return float((mass / measure) ** (1.0 / p)) if mass > 0 else 0.0


def block_mean(arr: np.ndarray, factor: int) -> np.ndarray:
    """Mean over aligned blocks of side ``factor`` along every axis."""
    if factor == 1:
        return arr
    d = arr.ndim
    shape = []
    for n in arr.shape:
        shape.extend([n // factor, factor])
    return arr.reshape(shape).mean(axis=tuple(range(1, 2 * d, 2)))


def block_max(arr: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return arr
    d = arr.ndim
    shape = []
    for n in arr.shape:
        shape.extend([n // factor, factor])
    return arr.reshape(shape).max(axis=tuple(range(1, 2 * d, 2)))


def expand_blocks(arr: np.ndarray, factor: int) -> np.ndarray:
    """Broadcast per-cube values back to their cells."""
    out = arr
    for ax in range(arr.ndim):
        out = np.repeat(out, factor, axis=ax)
    return out


def scale_averages(f: GridFunction, scale: int, p: float) -> np.ndarray:
    """Array over scale-``scale`` positions of <f>_{p,Q} (canonical layout)."""
    factor = 1 << (scale - f.root.J)
    a = np.abs(f.samples)
    if np.isinf(p):
        return block_max(a, factor)
    return block_mean(a ** p, factor) ** (1.0 / p)


def dilated_scale_averages(f: GridFunction, scale: int, p: float,
                           dilation: int) -> np.ndarray:
    """Array over scale-``scale`` positions of <f>_{p, wQ} (zero extension)."""
    from scipy import ndimage
    factor = 1 << (scale - f.root.J)
    a = np.abs(f.samples)
    if np.isinf(p):
        block = block_max(a, factor)
        return ndimage.maximum_filter(block, size=dilation, mode="constant", cval=0.0)
    block = block_mean(a ** p, factor)
    summed = ndimage.uniform_filter(block, size=dilation, mode="constant", cval=0.0)
    return summed ** (1.0 / p)


@dataclass(frozen=True)
class ExponentTuple:
    """Hoelder tuple (p_1, ..., p_m) with every p_j in (1, inf]."""

    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        for v in self.p:
            if not v > 1.0:
                raise ValueError(f"exponent {v} must exceed 1")

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def r(self) -> float:
        s = sum(0.0 if np.isinf(v) else 1.0 / v for v in self.p)
        if s == 0.0:
            return float("inf")
        return 1.0 / s


def maximal(fs, ps=None) -> GridFunction:
    """Dyadic multilinear maximal function: at each grid point the sup over
    admissible cubes containing it of the product of local p_j-means."""
    if isinstance(fs, GridFunction):
        fs = [fs]
    root = fs[0].root
    if ps is None:
        ps = [1.0] * len(fs)
    if len(ps) != len(fs):
        raise ValueError("one exponent per function")
    best = np.full(root.shape, -np.inf)
    for scale in range(root.J, root.L + 1):
        factor = 1 << (scale - root.J)
        prod = np.ones([root.cells_per_side // factor] * root.d)
        for f, p in zip(fs, ps):
            if f.root != root:
                raise ValueError("functions on different root boxes")
            prod = prod * scale_averages(f, scale, p)
        best = np.maximum(best, expand_blocks(prod, factor))
    return GridFunction(root, best)


# -- discrete calculus ------------------------------------------------------

def central_diff(samples: np.ndarray, root: RootBox, axis: int,
                 order: int = 1) -> np.ndarray:
    """Iterated central difference with zero extension outside the box."""
    h = root.cell_width
    out = samples
    for _ in range(order):
        padded = np.pad(out, [(1, 1) if ax == axis else (0, 0)
                              for ax in range(out.ndim)])
        hi = padded.take(range(2, padded.shape[axis]), axis=axis)
        lo = padded.take(range(0, padded.shape[axis] - 2), axis=axis)
        out = (hi - lo) / (2.0 * h)
    return out


def multi_indices(d: int, total: int):
    """Multi-indices alpha in N^d with |alpha| = total."""
    if d == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in multi_indices(d - 1, total - head):
            yield (head,) + rest


def multi_indices_upto(d: int, k: int):
    for total in range(k + 1):
        yield from multi_indices(d, total)


def derivative(f: GridFunction, alpha) -> GridFunction:
    out = f.samples
    for axis, order in enumerate(alpha):
        if order:
            out = central_diff(out, f.root, axis, order)
    return GridFunction(f.root, out)


def grad_norm(f: GridFunction, n: int) -> GridFunction:
    """Euclidean size of all order-n derivatives (one entry per multi-index)."""
    if n == 0:
        return GridFunction(f.root, np.abs(f.samples))
    acc = np.zeros(f.root.shape)
    for alpha in multi_indices(f.root.d, n):
        acc += np.abs(derivative(f, alpha).samples) ** 2
    return GridFunction(f.root, np.sqrt(acc))


# -- Taylor projection ------------------------------------------------------

def _theta_profile(u: np.ndarray) -> np.ndarray:
    """Smooth unit-cube bump exp(-1/(1 - |2u - 1|^2)), un-normalized."""
    r2 = np.sum((2.0 * u - 1.0) ** 2, axis=0)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def theta_weights(root: RootBox, cube: DyadicCube) -> np.ndarray:
    """theta_Q on the cells of Q, normalized to exact unit discrete mass."""
    slices = root.window_slices(cube)
    axes = []
    for sl, p in zip(slices, cube.pos):
        mids = (np.arange(sl.start, sl.stop) + 0.5) * root.cell_width
        axes.append((mids - p * cube.side) / cube.side)
    grids = np.meshgrid(*axes, indexing="ij")
    vals = _theta_profile(np.stack(grids))
    mass = np.sum(vals) * root.cell_measure
    if mass <= 0:
        raise ValueError("bump mass vanished; cube too small for the profile")
    return vals / mass


def taylor_poly(f: GridFunction, cube: DyadicCube, k: int,
                dilation: int = 1) -> GridFunction:
    """Taylor-type polynomial of order k adapted to f on Q, tabulated on the
    dilated cube (zero elsewhere).  k = 0 gives the zero function."""
    root = f.root
    out = GridFunction.zeros(root, dtype=f.samples.dtype)
    if k == 0:
        return out
    theta = theta_weights(root, cube)
    q_slices = root.window_slices(cube)
    w_slices = root.window_slices(cube, dilation)
    # per-axis difference tables (x - y) restricted to the windows
    h = root.cell_width
    xs = [(np.arange(sl.start, sl.stop) + 0.5) * h for sl in w_slices]
    ys = [(np.arange(sl.start, sl.stop) + 0.5) * h for sl in q_slices]
    diffs = [np.subtract.outer(x, y) for x, y in zip(xs, ys)]
    acc = np.zeros([len(x) for x in xs], dtype=f.samples.dtype)
    for alpha in multi_indices_upto(root.d, k - 1):
        df = derivative(f, alpha).samples[q_slices]
        weighted = theta * df * root.cell_measure
        fact = math.prod(math.factorial(a) for a in alpha)
        block = weighted
        # contract each y-axis against (x_i - y_i)^alpha_i, keeping axis order
        for axis in range(root.d):
            kern = diffs[axis] ** alpha[axis]
            block = np.moveaxis(np.tensordot(kern, block, axes=([1], [axis])), 0, axis)
        acc += block / fact
    out.samples[w_slices] = acc
    return out


# -- anti integration by parts ----------------------------------------------

def _forward_diff(samples: np.ndarray, h: float, order: int = 1) -> np.ndarray:
    out = samples
    for _ in range(order):
        out = (np.append(out[1:], 0.0) - out) / h
    return out


def anti_ibp_check(f: GridFunction, cube: DyadicCube, k: int,
                   basis: AtomBasis) -> dict:
    """Verify that the k-fold antidifferentiated atom converts the wavelet
    coefficient of f minus its Taylor projection into a coefficient of the
    k-th derivative.  Exact path is one-dimensional.

    The antiderivative is the cumulative sum dual to the forward difference,
    so the two sides agree by exact summation by parts; a central-difference
    variant of the right side is reported as the finite-difference floor.
    """
    root = f.root
    if root.d != 1:
        raise NotImplementedError("exact antidifferentiation path is d = 1")
    if k > basis.family.N:
        raise ValueError(
            f"atom has {basis.family.N} vanishing moments; cannot antidifferentiate {k} times")
    h = root.cell_width
    atom = basis.atom_grid(cube, "wavelet")
    p = taylor_poly(f, cube, k, dilation=basis.family.w)
    lhs = np.sum(atom * (f.samples - p.samples)) * h

    anti = atom.copy()
    for _ in range(k):
        mass = abs(np.sum(anti)) * h
        if mass > 1e-8 * max(np.max(np.abs(anti)) * cube.side, 1e-300):
            raise ValueError("antiderivative failed to close up (moment deficiency)")
        anti = np.cumsum(anti) * h
    phi_minus = ((-1.0) ** k) * anti / cube.side ** k
    rhs = cube.side ** k * np.sum(phi_minus * _forward_diff(f.samples, h, k)) * h
    rhs_central = cube.side ** k * np.sum(phi_minus * central_diff(f.samples, root, 0, k)) * h

    denom = max(abs(lhs), abs(rhs), 1e-300)
    const = float(cube.side * np.max(np.abs(phi_minus)))
    return {"lhs": float(lhs), "rhs": float(rhs), "rhs_central": float(rhs_central),
            "rel_gap": abs(lhs - rhs) / denom, "class_constant": const}


def neighbor_taylor_gap(f: GridFunction, p_cube: DyadicCube, q_cube: DyadicCube,
                        r_cube: DyadicCube, k: int, basis: AtomBasis) -> dict:
    """Two-cube Taylor difference paired against a noncancellative atom,
    compared with side(Q) * longdist(Q,R)^{k-1} * <|grad^k f|>_{1,wQ}."""
    from .dyadic import long_distance
    w = basis.family.w
    gap = taylor_poly(f, p_cube, k, dilation=w) - taylor_poly(f, q_cube, k, dilation=w)
    chi = basis.atom_grid(r_cube, "scaling")
    lhs = abs(np.sum(chi * gap.samples) * f.root.cell_measure)
    gk = grad_norm(f, k)
    rhs = q_cube.side * long_distance(q_cube, r_cube) ** (k - 1) \
        * local_average(gk, q_cube, 1.0, dilation=w)
    return {"lhs": float(lhs), "rhs": float(rhs)}


# -- Sobolev norms ----------------------------------------------------------

def sobolev_norm(f: GridFunction, kappa: int, r: float,
                 basis: AtomBasis | None = None) -> float:
    """W^{kappa, r} norm: finite differences for kappa >= 0, the wavelet
    square-function surrogate for kappa < 0 (no finite-difference realization
    exists there)."""
    if basis is not None and abs(kappa) > basis.family.k:
        raise ValueError(f"|kappa| = {abs(kappa)} exceeds family budget {basis.family.k}")
    if kappa >= 0:
        total = 0.0
        for alpha in multi_indices_upto(f.root.d, kappa):
            total += lp_norm(derivative(f, alpha), r)
        return total
    if basis is None:
        raise ValueError("negative smoothness needs an atom basis")
    tree = basis.analyze(f.samples)
    acc = np.zeros(f.root.shape)
    for scale in range(f.root.J + 1, f.root.L + 1):
        coeffs = np.abs(tree.data[scale]) * (2.0 ** (-kappa * scale))
        acc += expand_blocks(coeffs, 1 << (scale - f.root.J)) ** 2
    return lp_norm(GridFunction(f.root, np.sqrt(acc)), r)


# -- binary / CSV I/O -------------------------------------------------------

def save_gridfunction(path, f: GridFunction) -> None:
    if np.iscomplexobj(f.samples):
        raise ValueError("binary format stores real samples only")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(f.root.d, f.root.L, f.root.J, f.samples.size))
        fh.write(np.ascontiguousarray(f.samples, dtype="<f8").tobytes())


def load_gridfunction(path) -> GridFunction:
    with open(path, "rb") as fh:
        d, L, J, count = _HEADER.unpack(fh.read(_HEADER.size))
        root = RootBox(d=int(d), L=int(L), J=int(J))
        if count != root.n_cells:
            raise ValueError(f"sample count {count} does not match box {root.shape}")
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
    return GridFunction(root, data.reshape(root.shape).copy())


def save_gridfunction_csv(path, f: GridFunction) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"i{ax}" for ax in range(f.root.d)] + ["value"])
        for idx in itertools.product(*(range(n) for n in f.root.shape)):
            writer.writerow(list(idx) + [repr(float(f.samples[idx]))])
