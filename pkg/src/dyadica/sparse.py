"""Stopping-time builders for sparse cube collections and the executable
sparse-domination checks they support.

Selection is deterministic: scale-descending, lexicographic position scan,
a cube selected only when no selected ancestor exists.  The threshold is
doubled globally until every parent meets the configured packing ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .dyadic import DyadicCube, RootBox
from .funcspace import (GridFunction, dilated_scale_averages, grad_norm,
                        local_average, maximal, taylor_poly)
from .paraproduct import ParaproductSpec, intrinsic_form, localized_form
from .tlnorm import NormSpec, TestDictionary, square_function, tl_norm
from .wavelet import CoefficientTree


class ThetaCapError(RuntimeError):
    """Threshold doubling exceeded its cap without meeting the packing target."""


@dataclass
class StoppingConfig:
    theta: float = 16.0
    packing_target: float = 0.25
    max_depth: int | None = None
    theta_cap: float = 2.0 ** 20
    mode: str = "intest"

    def __post_init__(self):
        if self.theta <= 1.0:
            raise ValueError("threshold must exceed 1")
        if not (0.0 < self.packing_target < 1.0):
            raise ValueError("packing target must lie in (0, 1)")
        if self.mode not in ("intest", "mainiter"):
            raise ValueError(f"unknown stopping mode {self.mode!r}")


@dataclass
class SparseCollection:
    root_cube: DyadicCube
    generations: list = field(default_factory=list)
    packing_by_parent: dict = field(default_factory=dict)
    theta: float = 0.0
    truncated: bool = False
    stopped_square_checks: list = field(default_factory=list)

    def cubes(self):
        out = [self.root_cube]
        for gen in self.generations:
            out.extend(gen)
        return out

    def generation_ratios(self):
        """Per-generation mass relative to the root cube."""
        return [sum(c.measure for c in gen) / self.root_cube.measure
                for gen in self.generations]

    def total_measure(self) -> float:
        return sum(c.measure for c in self.cubes())


def _block_min(arr: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return arr
    d = arr.ndim
    shape = []
    for n in arr.shape:
        shape.extend([n // factor, factor])
    return arr.reshape(shape).min(axis=tuple(range(1, 2 * d, 2)))


def _select_maximal(root: RootBox, q0: DyadicCube, predicate) -> list[DyadicCube]:
    """Maximal subcubes of q0 satisfying the per-scale predicate arrays.

    ``predicate(scale)`` returns a boolean array over the positions of q0 at
    that scale (canonical layout).  Top-down scan; descendants of selected
    cubes are masked out.
    """
    selected = []
    covered = None
    for scale in range(q0.scale, root.J - 1, -1):
        shift = q0.scale - scale
        pred = predicate(scale)
        if covered is None:
            covered = np.zeros_like(pred, dtype=bool)
        cand = pred & ~covered
        if np.any(cand):
            base = [p << shift for p in q0.pos]
            for rel in np.argwhere(cand):
                pos = tuple(int(b + r) for b, r in zip(base, rel))
                selected.append(DyadicCube(scale, pos))
        covered = covered | cand
        if scale > root.J:
            for ax in range(root.d):
                covered = np.repeat(covered, 2, axis=ax)
    return selected


def _position_slices(q0: DyadicCube, scale: int):
    shift = q0.scale - scale
    return tuple(slice(p << shift, (p + 1) << shift) for p in q0.pos)


def stopping_children(q0: DyadicCube, b: GridFunction, g: GridFunction, fs,
                      cfg: StoppingConfig, dictionary: TestDictionary,
                      theta: float | None = None,
                      coeff_b=None, coeff_g=None) -> list[DyadicCube]:
    """Maximal subcubes where the anchored square function of b or g, or a
    masked maximal function of some later slot, exceeds its threshold."""
    root = b.root
    theta = cfg.theta if theta is None else theta
    w = dictionary.family.w
    sb = square_function(b, q0, 0.0, 2.0, dictionary, coeff_b).samples
    sg = square_function(g, q0, 0.0, 2.0, dictionary, coeff_g).samples
    thr_b = theta * float(np.mean(sb[root.window_slices(q0)]))
    thr_g = theta * float(np.mean(sg[root.window_slices(q0)]))
    masked_max = []
    thresholds = []
    wslices = root.window_slices(q0, w)
    for f in fs:
        masked = GridFunction.zeros(root)
        masked.samples[wslices] = f.samples[wslices]
        masked_max.append(maximal(masked).samples)
        thresholds.append(theta * local_average(f, q0, 1.0, w))

    def predicate(scale):
        factor = 1 << (scale - root.J)
        sl = _position_slices(q0, scale)
        pred = _block_min(sb, factor)[sl] > thr_b
        pred |= _block_min(sg, factor)[sl] > thr_g
        for mm, thr in zip(masked_max, thresholds):
            pred |= _block_min(mm, factor)[sl] > thr
        return pred

    return _select_maximal(root, q0, predicate)


def gradient_stopping_children(q0: DyadicCube, f1: GridFunction, n: int,
                               cfg: StoppingConfig, w: int,
                               theta: float | None = None) -> list[DyadicCube]:
    """Maximal subcubes Z whose dilated cube lies inside the superlevel set
    of the masked maximal function of the n-th gradient."""
    root = f1.root
    theta = cfg.theta if theta is None else theta
    gn = grad_norm(f1, n)
    masked = GridFunction.zeros(root)
    wslices = root.window_slices(q0, w)
    masked.samples[wslices] = gn.samples[wslices]
    mm = maximal(masked).samples
    thr = theta * local_average(gn, q0, 1.0, w)

    def predicate(scale):
        factor = 1 << (scale - root.J)
        block = _block_min(mm, factor)
        # containment of the whole dilated cube: min over the w-window of
        # per-cube minima; cells outside the box fail the containment
        dil = ndimage.minimum_filter(block, size=w, mode="constant", cval=-np.inf)
        return dil[_position_slices(q0, scale)] > thr

    return _select_maximal(root, q0, predicate)


def _stopped_square_max(q0: DyadicCube, coeffs, root: RootBox,
                        selected) -> float:
    """Max over q0 of the square function re-summed over non-stopped cubes."""
    sl_cells = root.window_slices(q0)
    acc = np.zeros([s.stop - s.start for s in sl_cells])
    blocked = None
    for scale in range(q0.scale, root.J - 1, -1):
        shift = q0.scale - scale
        npos_shape = [1 << shift] * root.d
        if blocked is None:
            blocked = np.zeros(npos_shape, dtype=bool)
        sel_here = np.zeros(npos_shape, dtype=bool)
        base = [p << shift for p in q0.pos]
        for cube in selected:
            if cube.scale == scale:
                rel = tuple(c - b for c, b in zip(cube.pos, base))
                sel_here[rel] = True
        blocked = blocked | sel_here
        vals = coeffs[scale][_position_slices(q0, scale)].copy()
        vals[blocked] = 0.0
        factor = 1 << (scale - root.J)
        expanded = vals ** 2
        for ax in range(root.d):
            expanded = np.repeat(expanded, factor, axis=ax)
        acc = acc + expanded
        if scale > root.J:
            for ax in range(root.d):
                blocked = np.repeat(blocked, 2, axis=ax)
    return float(np.sqrt(np.max(acc)))


def build_sparse(q0: DyadicCube, inputs: dict, cfg: StoppingConfig,
                 dictionary: TestDictionary) -> SparseCollection:
    """Recursive stopping-time construction with global threshold doubling.

    ``inputs``: for mode 'intest' keys b, g, fs; for mode 'mainiter' keys
    f1, n.  Square functions and thresholds re-anchor at every new root.
    """
    root = dictionary.root
    theta = cfg.theta
    max_depth = cfg.max_depth if cfg.max_depth is not None else root.depth + 1
    coeff_b = coeff_g = None
    if cfg.mode == "intest":
        coeff_b = dictionary.coeff_arrays(inputs["b"])
        coeff_g = dictionary.coeff_arrays(inputs["g"])
    while True:
        coll = SparseCollection(root_cube=q0, theta=theta)
        frontier = [q0]
        ok = True
        depth = 0
        while frontier:
            if depth >= max_depth:
                coll.truncated = True
                break
            nxt = []
            for node in frontier:
                if cfg.mode == "intest":
                    kids = stopping_children(node, inputs["b"], inputs["g"],
                                             inputs.get("fs", []), cfg,
                                             dictionary, theta, coeff_b, coeff_g)
                else:
                    kids = gradient_stopping_children(node, inputs["f1"],
                                                      inputs["n"], cfg,
                                                      dictionary.family.w, theta)
                ratio = sum(c.measure for c in kids) / node.measure
                coll.packing_by_parent[node] = ratio
                if ratio > cfg.packing_target:
                    ok = False
                    break
                if cfg.mode == "intest" and kids:
                    smax = _stopped_square_max(node, coeff_b, root, kids)
                    bound = theta * float(np.mean(
                        square_function(inputs["b"], node, 0.0, 2.0, dictionary,
                                        coeff_b).samples[root.window_slices(node)]))
                    coll.stopped_square_checks.append((smax, bound))
                nxt.extend(kids)
            if not ok:
                break
            if nxt:
                coll.generations.append(nxt)
            frontier = nxt
            depth += 1
        if ok:
            return coll
        theta *= 2.0
        if theta > cfg.theta_cap:
            raise ThetaCapError(
                f"threshold exceeded cap {cfg.theta_cap} before packing "
                f"{cfg.packing_target} was met")


def sparse_form_eval(coll: SparseCollection, b: GridFunction, g: GridFunction,
                     fs, dictionary: TestDictionary,
                     coeff_b=None, coeff_g=None) -> float:
    """Sum over the collection of |Q| <S b>_{1,Q} <S g>_{1,Q} prod <f_j>_{1,Q}."""
    root = b.root
    if coeff_b is None:
        coeff_b = dictionary.coeff_arrays(b)
    if coeff_g is None:
        coeff_g = dictionary.coeff_arrays(g)
    total = 0.0
    for cube in coll.cubes():
        sl = root.window_slices(cube)
        term = cube.measure
        term *= float(np.mean(square_function(b, cube, 0.0, 2.0, dictionary,
                                              coeff_b).samples[sl]))
        term *= float(np.mean(square_function(g, cube, 0.0, 2.0, dictionary,
                                              coeff_g).samples[sl]))
        for f in fs:
            term *= local_average(f, cube, 1.0)
        total += term
    return total


def check_exponents(p: float, q: float, ps) -> None:
    total = (0.0 if np.isinf(p) else 1.0 / p) + (0.0 if np.isinf(q) else 1.0 / q)
    total += sum(0.0 if np.isinf(v) else 1.0 / v for v in ps)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"exponents fail the Hoelder relation: sum 1/p = {total}")


def verify_domination(q0: DyadicCube, cfg: StoppingConfig,
                      dictionary: TestDictionary, *, exponents,
                      b: GridFunction | None = None, g: GridFunction = None,
                      fs=(), spec: ParaproductSpec | None = None,
                      f1: GridFunction | None = None, n: int = 0,
                      theta_power: int = 0) -> dict:
    """Sparse-domination report {lhs, rhs, ratio, ...} in either mode.

    mode 'intest': lhs is the intrinsic form of (b, g, fs); rhs both the
    sparse-form bound and the single-cube Hoelder bound.
    mode 'mainiter': lhs is the localized paraproduct form acting on
    f1 - Taylor(f1); rhs the gradient-sparse bound.
    """
    p, q = exponents[0], exponents[1]
    ps = list(exponents[2:])
    check_exponents(p, q, ps)
    root = dictionary.root
    w = dictionary.family.w
    if cfg.mode == "intest":
        coeff_b = dictionary.coeff_arrays(b)
        coeff_g = dictionary.coeff_arrays(g)
        lhs = intrinsic_form(q0, b, [g] + list(fs), dictionary,
                             coeff_f=coeff_b, coeff_f1=coeff_g)
        coll = build_sparse(q0, {"b": b, "g": g, "fs": list(fs)}, cfg, dictionary)
        rhs_sparse = sparse_form_eval(coll, b, g, fs, dictionary, coeff_b, coeff_g)
        holder = q0.measure * q0.side ** (-theta_power) \
            * tl_norm(b, NormSpec(0.0, -float(theta_power), p, 2.0), dictionary, coeff_b) \
            * local_average(g, q0, q, w)
        for f, pj in zip(fs, ps):
            holder *= local_average(f, q0, pj, w)
        return {"lhs": lhs, "rhs": rhs_sparse, "rhs_holder": holder,
                "ratio": lhs / rhs_sparse if rhs_sparse > 0 else np.inf,
                "theta": coll.theta, "collection": coll}
    if spec is None or f1 is None:
        raise ValueError("mainiter mode needs a paraproduct spec and f1")
    resid = f1 - taylor_poly(f1, q0, n, dilation=w)
    lhs = abs(localized_form(spec.symbol, q0, g, [resid] + list(fs), spec))
    coll = build_sparse(q0, {"f1": f1, "n": n}, cfg, dictionary)
    bfunc = GridFunction(root, spec.basis.synthesize(spec.symbol))
    gn = grad_norm(f1, n)
    total = 0.0
    for cube in coll.cubes():
        term = cube.measure * local_average(g, cube, q, w)
        term *= local_average(gn, cube, 1.0, w)
        for f, pj in zip(fs, ps):
            term *= local_average(f, cube, pj, w)
        total += term
    rhs = tl_norm(bfunc, NormSpec(0.0, -float(n), p, 2.0), dictionary) * total
    return {"lhs": lhs, "rhs": rhs,
            "ratio": lhs / rhs if rhs > 0 else np.inf,
            "theta": coll.theta, "collection": coll}


def taylor_telescoping_ratio(q0: DyadicCube, f1: GridFunction, n: int,
                             w: int) -> float:
    """Largest ratio over subcubes P of <f1 - T_{q0} f1>_{1,wP} against
    side(q0)^n inf_P M(masked grad^n f1)."""
    root = f1.root
    resid = f1 - taylor_poly(f1, q0, n, dilation=w)
    gn = grad_norm(f1, n)
    masked = GridFunction.zeros(root)
    wsl = root.window_slices(q0, w)
    masked.samples[wsl] = gn.samples[wsl]
    mm = maximal(masked).samples
    best = 0.0
    scale_factor = q0.side ** n
    for scale in range(root.J, q0.scale + 1):
        factor = 1 << (scale - root.J)
        sl = _position_slices(q0, scale)
        lhs = dilated_scale_averages(resid, scale, 1.0, w)[sl]
        rhs = scale_factor * _block_min(mm, factor)[sl]
        mask = rhs > 1e-14
        if np.any(mask):
            best = max(best, float(np.max(lhs[mask] / rhs[mask])))
    return best


def taylor_pair_ratio(q0: DyadicCube, children, f1: GridFunction, n: int,
                      w: int) -> float:
    """Largest ratio over selected Z and P in D(Z) of
    <T_Z f1 - T_{q0} f1>_{1,wP} against side(q0)^n inf_Z M(masked grad^n f1)."""
    root = f1.root
    gn = grad_norm(f1, n)
    masked = GridFunction.zeros(root)
    wsl = root.window_slices(q0, w)
    masked.samples[wsl] = gn.samples[wsl]
    mm = maximal(masked).samples
    p_big = taylor_poly(f1, q0, n, dilation=w)
    best = 0.0
    for z in children:
        gap = taylor_poly(f1, z, n, dilation=w) - p_big
        inf_z = float(np.min(mm[root.window_slices(z)]))
        rhs = q0.side ** n * inf_z
        if rhs <= 1e-14:
            continue
        for scale in range(root.J, z.scale + 1):
            sl = _position_slices(z, scale)
            lhs = dilated_scale_averages(gap, scale, 1.0, w)[sl]
            best = max(best, float(np.max(lhs)) / rhs)
    return best
