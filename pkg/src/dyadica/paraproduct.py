"""Multilinear paraproducts, their adjoints, wavelet forms, and the
localized/intrinsic forms they are dominated by.

A paraproduct pairs a symbol tree with a cancellative output atom per cube
and a tensor of unit-integral averaging atoms per input slot; the associated
(m+2)-linear wavelet form then satisfies the duality identity exactly under
the shared grid quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube, RootBox
from .funcspace import GridFunction, dilated_scale_averages, local_average, pairing
from .tlnorm import TestDictionary
from .wavelet import AtomBasis, CoefficientTree


class ArityError(ValueError):
    """Number of input functions does not match the spec arity."""


def canonical_family(basis: AtomBasis, kind: str):
    """Cube -> (slices, values) map for the canonical discrete atoms."""
    def values(cube: DyadicCube):
        return basis.atom_values(cube, kind)
    return values


def dictionary_family(dictionary: TestDictionary, member: int, cancellative: bool):
    def values(cube: DyadicCube):
        if cancellative:
            return dictionary.member_values(cube, member)
        return dictionary.bump_values(cube, member)
    return values


def unit_bump_family(dictionary: TestDictionary, member: int = 0):
    """Smooth averaging family renormalized to exact unit discrete integral."""
    cell = dictionary.root.cell_measure

    def values(cube: DyadicCube):
        slices, vals = dictionary.bump_values(cube, member)
        if slices is None:
            return None, None
        mass = float(np.sum(vals)) * cell
        if mass <= 0:
            return None, None
        return slices, vals / mass
    return values


def _pair(values_fn, cube: DyadicCube, f: GridFunction):
    slices, vals = values_fn(cube)
    if slices is None:
        return 0.0
    return np.sum(f.samples[slices] * vals) * f.root.cell_measure


@dataclass
class ParaproductSpec:
    """Symbol plus atom families: output atoms beta_Q (cancellative) and the
    tensor averaging form zeta_Q(f_1,...,f_m) = prod_j chi_Q(f_j) with
    unit-integral chi_Q."""

    basis: AtomBasis
    symbol: CoefficientTree
    arity: int
    beta: object = None
    chi: object = None

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError("paraproduct arity must be >= 1")
        if self.beta is None:
            self.beta = canonical_family(self.basis, "wavelet")
        if self.chi is None:
            self.chi = canonical_family(self.basis, "scaling")

    def zeta(self, cube: DyadicCube, fs) -> float:
        out = 1.0
        for f in fs:
            out *= _pair(self.chi, cube, f)
        return out


def apply_paraproduct(spec: ParaproductSpec, fs) -> GridFunction:
    """Sum over the symbol support of |Q| b_Q zeta_Q(f) beta_Q."""
    if len(fs) != spec.arity:
        raise ArityError(f"expected {spec.arity} inputs, got {len(fs)}")
    root = spec.basis.root
    dtype = complex if any(np.iscomplexobj(a) for a in spec.symbol.data.values()) else float
    out = GridFunction.zeros(root, dtype=dtype)
    for cube, b in spec.symbol.items():
        z = spec.zeta(cube, fs)
        if z == 0.0:
            continue
        slices, vals = spec.beta(cube)
        if slices is None:
            continue
        out.samples[slices] += (cube.measure * b * z) * vals
    return out


def adjoint_apply(spec: ParaproductSpec, j: int, fs) -> GridFunction:
    """j-th adjoint: slot j pairs with the cancellative atom and the output
    rides on the averaging atom."""
    if not (1 <= j <= spec.arity):
        raise ValueError(f"slot index {j} outside 1..{spec.arity}")
    if len(fs) != spec.arity:
        raise ArityError(f"expected {spec.arity} inputs, got {len(fs)}")
    root = spec.basis.root
    out = GridFunction.zeros(root)
    others = [f for i, f in enumerate(fs, start=1) if i != j]
    for cube, b in spec.symbol.items():
        coeff = b * _pair(spec.beta, cube, fs[j - 1])
        for f in others:
            coeff *= _pair(spec.chi, cube, f)
        if coeff == 0.0:
            continue
        slices, vals = spec.chi(cube)
        if slices is None:
            continue
        out.samples[slices] += (cube.measure * coeff) * vals
    return out


@dataclass
class WaveletFormSpec:
    """(m+1)-linear wavelet form: cancellative first slot against phi_Q, the
    rest against per-slot atoms; optionally localized to a cube."""

    basis: AtomBasis
    arity: int  # number of trailing slots m; the form is (m+1)-linear
    phi: object = None
    slots: list = field(default_factory=list)
    localization: DyadicCube | None = None
    support: list | None = None  # optional explicit cube list

    def __post_init__(self):
        if self.phi is None:
            self.phi = canonical_family(self.basis, "wavelet")
        if not self.slots:
            raise ValueError("per-slot atom families required")
        if len(self.slots) != self.arity:
            raise ArityError("one atom family per trailing slot")

    def cubes(self):
        if self.support is not None:
            return self.support
        root = self.basis.root
        if self.localization is not None:
            return [c for c in root.descendants(self.localization)
                    if c.scale > root.J]
        return [c for c in root.all_cubes() if c.scale > root.J]


def duality_form(spec: ParaproductSpec) -> WaveletFormSpec:
    """The (m+2)-linear form with phi_Q canonical and psi_Q = beta_Q x zeta_Q,
    realizing <Pi_b(f), g> = V(b, g, f) for the symbol's function avatar."""
    return WaveletFormSpec(
        basis=spec.basis, arity=spec.arity + 1,
        slots=[spec.beta] + [spec.chi] * spec.arity,
        support=spec.symbol.support())


def form_eval(form: WaveletFormSpec, f: GridFunction, fs) -> float:
    """Sum over cubes of |Q| phi_Q(f) prod_j slot_j(f_j)."""
    if len(fs) != form.arity:
        raise ArityError(f"expected {form.arity} trailing inputs, got {len(fs)}")
    total = 0.0
    for cube in form.cubes():
        term = cube.measure * _pair(form.phi, cube, f)
        if term == 0.0:
            continue
        for slot_fn, g in zip(form.slots, fs):
            term *= _pair(slot_fn, cube, g)
            if term == 0.0:
                break
        total += term
    return total


def form_mass(form: WaveletFormSpec, f: GridFunction, fs) -> float:
    """Triangle-inequality majorant of form_eval: the scale against which a
    cancellation-dominated value counts as degenerate."""
    total = 0.0
    for cube in form.cubes():
        term = cube.measure * abs(_pair(form.phi, cube, f))
        for slot_fn, g in zip(form.slots, fs):
            term *= abs(_pair(slot_fn, cube, g))
        total += term
    return total


def intrinsic_form(q0: DyadicCube, f: GridFunction, fs,
                   dictionary: TestDictionary,
                   coeff_f=None, coeff_f1=None) -> float:
    """Intrinsic majorant of localized forms: sum over subcubes of
    |Q| Psi_Q(f) Psi_Q(f_1) prod_{j>=2} <f_j>_{1,wQ}."""
    root = f.root
    w = dictionary.family.w
    if coeff_f is None:
        coeff_f = dictionary.coeff_arrays(f)
    if coeff_f1 is None:
        coeff_f1 = dictionary.coeff_arrays(fs[0])
    total = 0.0
    for scale in range(root.J, q0.scale + 1):
        pos_slices = tuple(slice(p << (q0.scale - scale), (p + 1) << (q0.scale - scale))
                           for p in q0.pos)
        prod = coeff_f[scale][pos_slices] * coeff_f1[scale][pos_slices]
        for f_j in fs[1:]:
            prod = prod * dilated_scale_averages(f_j, scale, 1.0, w)[pos_slices]
        total += float(np.sum(prod)) * 2.0 ** (scale * root.d)
    return total


def localized_form(symbol: CoefficientTree, q0: DyadicCube, g: GridFunction,
                   fs, spec: ParaproductSpec) -> float:
    """V_Q: the paraproduct form restricted to subcubes of Q."""
    root = spec.basis.root
    total = 0.0
    for scale, arr in symbol.data.items():
        for pos in zip(*np.nonzero(arr)):
            cube = DyadicCube(scale, tuple(int(p) for p in pos))
            if not q0.contains(cube):
                continue
            term = cube.measure * arr[tuple(pos)] * _pair(spec.beta, cube, g)
            if term == 0.0:
                continue
            term *= spec.zeta(cube, fs)
            total += term
    return total
