"""Degreewise localization and Cech cohomology on distinguished covers.

The graded localization M_f has graded pieces that are colimits
(M_f)_d = colim ( M_d -> M_{d+deg f} -> ... ), the maps being
multiplication by f.  We realize the colimit at a finite stage, the "cap":

    (M_f)_d at cap N  :=  M_{d + N deg f} / (stable kernel of f-powers),

an honest subspace of the true piece that grows with N.  The stable kernel
is certified exactly when the module knows its f-torsion (free modules,
monomial quotients, graded duals of finitely generated modules); otherwise
powers of f are iterated until two consecutive kernels agree and the piece
is flagged heuristic.

Cech complexes on a cover {D(f_1), ..., D(f_n)} use one uniform cap for
every intersection; the degree-d realization checks d o d = 0 outright.
Cohomology in a degree window is reported at a cap found by escalation:
start at (window width + 2), step by 2, accept once the dimensions are
unchanged for two consecutive increments, give up (CapExhausted) after
five escalations.  Sections over the cover then become an ordinary
DegreewiseModule whose elements can be multiplied by sections of the
structure sheaf, restricted to, and acted on by variables, with all
cross-cap bookkeeping handled here.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .exact_linalg import Mat, kernel_basis, rref, solve, _quotient_with_indices
from .graded_modules import (
    ALL_TORSION,
    DegreewiseModule,
    GradedModuleMap,
    GradedPiece,
    HomogPoly,
    PolyRing,
)

__all__ = [
    "CapExhausted",
    "CapPolicy",
    "DEFAULT_WINDOW",
    "OpenSubset",
    "LocalizedPiece",
    "localize_piece",
    "CechComplexWindow",
    "cech_complex",
    "SectionsModule",
    "sections_window",
    "H1Result",
    "h1_window",
    "restriction_to_sections",
    "SectionElement",
    "section_mult",
    "section_mult_block",
    "sections_induced_map",
]

DEFAULT_WINDOW = (-6, 6)


def _blockdiag(field, blocks) -> Mat:
    nr = sum(b.nrows for b in blocks)
    nc = sum(b.ncols for b in blocks)
    rows = [[field.zero] * nc for _ in range(nr)]
    r0 = c0 = 0
    for b in blocks:
        for r in range(b.nrows):
            brow = b.data[r]
            out = rows[r0 + r]
            for c in range(b.ncols):
                if brow[c]:
                    out[c0 + c] = brow[c]
        r0 += b.nrows
        c0 += b.ncols
    return Mat(field, nr, nc, rows)


class CapExhausted(RuntimeError):
    """Dimensions failed to stabilize within the cap escalation budget."""


@dataclass(frozen=True)
class CapPolicy:
    """Cap escalation: start (default window width + 2), step, budget."""

    start: int | None = None
    step: int = 2
    max_escalations: int = 5

    def start_cap(self, window) -> int:
        if self.start is not None:
            return self.start
        lo, hi = window
        return (hi - lo) + 2

    def caps(self, window) -> list[int]:
        c0 = self.start_cap(window)
        return [c0 + self.step * k for k in range(self.max_escalations + 1)]


DEFAULT_CAP_POLICY = CapPolicy()


class OpenSubset:
    """A union of distinguished opens D(f_1) u ... u D(f_n)."""

    def __init__(self, ring: PolyRing, denominators):
        denoms = tuple(denominators)
        if not denoms:
            raise ValueError("a cover needs at least one denominator")
        for f in denoms:
            if not isinstance(f, HomogPoly):
                raise TypeError("denominators must be HomogPoly")
            if f.is_zero():
                raise ValueError("zero is not allowed as a denominator")
        self.ring = ring
        self.denoms = denoms
        self._products: dict[tuple, HomogPoly] = {}

    @property
    def n(self) -> int:
        return len(self.denoms)

    def product(self, subset) -> HomogPoly:
        key = tuple(subset)
        got = self._products.get(key)
        if got is None:
            got = HomogPoly.constant(self.ring, self.ring.field.one)
            for i in key:
                got = got * self.denoms[i]
            self._products[key] = got
        return got

    def __repr__(self):
        return "D(" + ") u D(".join(str(f) for f in self.denoms) + ")"


class LocalizedPiece:
    """(M_f)_d realized at a finite cap.

    piece has the surviving numerator labels; incl embeds the realized
    basis into the numerator space M_{d + cap deg f}, proj is the quotient
    projection the other way.  status records whether the stable kernel
    was certified or found heuristically.
    """

    __slots__ = ("module", "f", "d", "cap", "num_degree", "status", "piece", "incl", "proj")

    def __init__(self, module, f, d, cap, num_degree, status, piece, incl, proj):
        self.module = module
        self.f = f
        self.d = d
        self.cap = cap
        self.num_degree = num_degree
        self.status = status
        self.piece = piece
        self.incl = incl
        self.proj = proj

    @property
    def dim(self) -> int:
        return self.piece.dim

    def __repr__(self):
        return f"LocalizedPiece(d={self.d}, cap={self.cap}, dim={self.dim}, {self.status})"


def localize_piece(module: DegreewiseModule, f: HomogPoly, d: int, cap: int) -> LocalizedPiece:
    """Realize (M_f)_d at the given cap; see the module docstring."""
    if f.is_zero():
        raise ValueError("cannot localize at zero")
    field = module.ring.field
    num_degree = d + cap * f.degree
    num = module.piece(num_degree)
    if num.dim == 0:
        empty = Mat.zeros(field, 0, 0)
        zero_piece = GradedPiece(field, ())
        return LocalizedPiece(module, f, d, cap, num_degree, "certified-in-window",
                              zero_piece, Mat.zeros(field, 0, 0), Mat.zeros(field, 0, 0))

    bound = module.torsion_bound(f)
    if bound == ALL_TORSION:
        stable = Mat.identity(field, num.dim)
        status = "certified-in-window"
    elif bound is not None:
        t = bound
        stable = (
            Mat.zeros(field, num.dim, 0)
            if t == 0
            else kernel_basis(module.power_act(f, t, num_degree))
        )
        status = "certified-in-window"
    else:
        prev = kernel_basis(module.power_act(f, 1, num_degree))
        t = 1
        while True:
            nxt = kernel_basis(module.power_act(f, t + 1, num_degree))
            if nxt.ncols == prev.ncols:
                break
            prev = nxt
            t += 1
            if t > num.dim + 1:  # the kernel chain cannot strictly grow this long
                raise ArithmeticError("stable kernel iteration failed to terminate")
        stable = prev
        status = f"heuristic({t})"

    if stable.ncols == 0:
        piece = GradedPiece(field, num.labels)
        ident = Mat.identity(field, num.dim)
        return LocalizedPiece(module, f, d, cap, num_degree, status, piece, ident, ident)
    coset, proj, idx = _quotient_with_indices(stable, num.dim)
    piece = GradedPiece(field, tuple(num.labels[j] for j in idx))
    return LocalizedPiece(module, f, d, cap, num_degree, status, piece, coset, proj)


class _CechDegree:
    """All realized pieces and differentials of the complex in one degree."""

    __slots__ = ("levels", "offsets", "diffs", "n", "field", "_h0_basis")

    def __init__(self, levels, offsets, diffs, n, field):
        self.levels = levels
        self.offsets = offsets
        self.diffs = diffs
        self.n = n
        self.field = field
        self._h0_basis = None

    def level_dim(self, k: int) -> int:
        return sum(p.dim for p in self.levels[k]) if k < len(self.levels) else 0

    def h0_basis(self) -> Mat:
        if self._h0_basis is None:
            if self.n == 1:
                self._h0_basis = Mat.identity(self.field, self.level_dim(0))
            else:
                self._h0_basis = kernel_basis(self.diffs[0])
        return self._h0_basis

    @property
    def h0_dim(self) -> int:
        return self.h0_basis().ncols

    @property
    def h1_dim(self) -> int:
        if self.n == 1:
            return 0
        rank_d0 = len(rref(self.diffs[0])[1])
        dim_c1 = self.level_dim(1)
        rank_d1 = len(rref(self.diffs[1])[1]) if self.n >= 3 else 0
        return (dim_c1 - rank_d1) - rank_d0

    def h1_parts(self) -> tuple[Mat, Mat]:
        """(basis of 1-cocycles, matrix of d0) for witness extraction."""
        if self.n == 1:
            raise ValueError("no H^1 on a single-element cover")
        if self.n >= 3:
            cocycles = kernel_basis(self.diffs[1])
        else:
            cocycles = Mat.identity(self.field, self.level_dim(1))
        return cocycles, self.diffs[0]

    def statuses(self) -> tuple[str, ...]:
        return tuple(p.status for level in self.levels for p in level)


class CechComplexWindow:
    """The Cech complex of a module on a cover, at one uniform cap.

    Degree realizations are lazy and memoized; building one verifies
    d o d = 0 on the spot.
    """

    def __init__(self, module: DegreewiseModule, cover: OpenSubset, window, cap: int):
        self.module = module
        self.cover = cover
        self.window = tuple(window)
        self.cap = cap
        self._subsets = [tuple(combinations(range(cover.n), k + 1)) for k in range(cover.n)]
        self._subset_index = [
            {s: i for i, s in enumerate(level)} for level in self._subsets
        ]
        self._degrees: dict[int, _CechDegree] = {}

    def degree(self, d: int) -> _CechDegree:
        got = self._degrees.get(d)
        if got is not None:
            return got
        field = self.module.ring.field
        n = self.cover.n
        levels = []
        offsets = []
        for k in range(n):
            pieces = [
                localize_piece(self.module, self.cover.product(S), d, self.cap)
                for S in self._subsets[k]
            ]
            offs = []
            acc = 0
            for p in pieces:
                offs.append(acc)
                acc += p.dim
            levels.append(pieces)
            offsets.append(offs)
        diffs = []
        for k in range(n - 1):
            src_pieces, tgt_pieces = levels[k], levels[k + 1]
            src_off, tgt_off = offsets[k], offsets[k + 1]
            nrows = sum(p.dim for p in tgt_pieces)
            ncols = sum(p.dim for p in src_pieces)
            rows = [[field.zero] * ncols for _ in range(nrows)]
            for ti, T in enumerate(self._subsets[k + 1]):
                tgt = tgt_pieces[ti]
                if tgt.dim == 0:
                    continue
                for pos in range(len(T)):
                    i = T[pos]
                    S = T[:pos] + T[pos + 1:]
                    si = self._subset_index[k][S]
                    src = src_pieces[si]
                    if src.dim == 0:
                        continue
                    mult = self.module.power_act(self.cover.denoms[i], self.cap, src.num_degree)
                    block = tgt.proj @ mult @ src.incl
                    neg = pos % 2 == 1
                    r0, c0 = tgt_off[ti], src_off[si]
                    for r, sup in enumerate(block.row_support()):
                        out = rows[r0 + r]
                        for c, e in sup:
                            out[c0 + c] = out[c0 + c] + (-e if neg else e)
            diffs.append(Mat(field, nrows, ncols, rows))
        for k in range(len(diffs) - 1):
            if not (diffs[k + 1] @ diffs[k]).is_zero():
                raise ArithmeticError(
                    f"Cech differential square is nonzero in degree {d} at cap {self.cap}"
                )
        got = _CechDegree(levels, offsets, diffs, n, field)
        self._degrees[d] = got
        return got


def cech_complex(module: DegreewiseModule, cover: OpenSubset, window=DEFAULT_WINDOW,
                 cap: int | None = None) -> CechComplexWindow:
    if cap is None:
        cap = DEFAULT_CAP_POLICY.start_cap(window)
    return CechComplexWindow(module, cover, window, cap)


class _SecPiece:
    __slots__ = ("cap", "cech", "basis", "piece", "certified")

    def __init__(self, cap, cech, basis, piece, certified):
        self.cap = cap
        self.cech = cech
        self.basis = basis
        self.piece = piece
        self.certified = certified


def _stabilize(dims_at, caps, what: str):
    """First cap in the escalation whose value repeats twice more."""
    seen = []
    for idx, c in enumerate(caps):
        seen.append(dims_at(c))
        if idx >= 2 and seen[-1] == seen[-2] == seen[-3]:
            return caps[idx - 2], seen[idx - 2]
    raise CapExhausted(
        f"{what}: dimensions {seen} did not stabilize at caps {list(caps)}"
    )


class SectionsModule(DegreewiseModule):
    """Gamma(W, ~M) as a degreewise module, W a union of distinguished opens.

    Each piece is the degree-d Cech H^0 at a per-degree stabilized cap.
    Variable actions, restriction from M, and multiplication by sections
    of the structure sheaf re-express their results across caps by lifting
    numerators (multiplying by powers of the denominators) and solving
    exactly in the stabilized basis; a failed solve means a cap lied and
    raises CapExhausted rather than guessing.
    """

    def __init__(self, base: DegreewiseModule, cover: OpenSubset, window=DEFAULT_WINDOW,
                 policy: CapPolicy | None = None, name: str | None = None):
        self.base = base
        self.cover = cover
        self.window = tuple(window)
        self.policy = policy or DEFAULT_CAP_POLICY
        self._complexes: dict[int, CechComplexWindow] = {}
        self._loc_memo: dict[tuple, LocalizedPiece] = {}
        self._lift_memo: dict[tuple, Mat] = {}
        self._sec: dict[int, _SecPiece] = {}
        super().__init__(
            base.ring,
            self._piece_at,
            self._act_at,
            name=name or f"sections({base.name})",
        )

    def _complex(self, cap: int) -> CechComplexWindow:
        got = self._complexes.get(cap)
        if got is None:
            got = CechComplexWindow(self.base, self.cover, self.window, cap)
            self._complexes[cap] = got
        return got

    def _realize(self, d: int) -> _SecPiece:
        got = self._sec.get(d)
        if got is not None:
            return got
        caps = self.policy.caps(self.window)
        cap, _dim = _stabilize(
            lambda c: self._complex(c).degree(d).h0_dim,
            caps,
            f"H0 of {self.base.name} in degree {d}",
        )
        cech = self._complex(cap).degree(d)
        basis = cech.h0_basis()
        piece = GradedPiece(self.ring.field, tuple(("sec", j) for j in range(basis.ncols)))
        certified = all(s.startswith("certified") for s in cech.statuses())
        got = _SecPiece(cap, cech, basis, piece, certified)
        self._sec[d] = got
        for i, lp in enumerate(cech.levels[0]):
            self._loc_memo.setdefault((i, d, cap), lp)
        return got

    def _piece_at(self, d: int) -> GradedPiece:
        return self._realize(d).piece

    def certified(self, d: int) -> bool:
        """Whether every localization entering degree d carried a certified
        torsion bound (as opposed to the kernel-chain heuristic)."""
        return self._realize(d).certified

    def stabilized_cap(self, d: int) -> int:
        return self._realize(d).cap

    def _loc(self, i: int, d: int, cap: int) -> LocalizedPiece:
        key = (i, d, cap)
        got = self._loc_memo.get(key)
        if got is None:
            got = localize_piece(self.base, self.cover.denoms[i], d, cap)
            self._loc_memo[key] = got
        return got

    def _lift(self, d: int, cap_from: int, cap_to: int) -> Mat:
        """Block-diagonal lift of C^0 coordinates from one cap to a larger one."""
        if cap_from == cap_to:
            dim = sum(self._loc(i, d, cap_from).dim for i in range(self.cover.n))
            return Mat.identity(self.ring.field, dim)
        key = (d, cap_from, cap_to)
        got = self._lift_memo.get(key)
        if got is not None:
            return got
        blocks = []
        for i in range(self.cover.n):
            src = self._loc(i, d, cap_from)
            tgt = self._loc(i, d, cap_to)
            mult = self.base.power_act(self.cover.denoms[i], cap_to - cap_from, src.num_degree)
            blocks.append(tgt.proj @ mult @ src.incl)
        got = _blockdiag(self.ring.field, blocks)
        self._lift_memo[key] = got
        return got

    def _express(self, d: int, vecs: Mat, cap: int) -> Mat:
        """Coordinates in piece(d) of C^0 vectors given at some cap."""
        r = self._realize(d)
        common = max(cap, r.cap)
        basis = self._lift(d, r.cap, common) @ r.basis
        lifted = self._lift(d, cap, common) @ vecs
        coords = solve(basis, lifted)
        if coords is None:
            raise CapExhausted(
                f"{self.name}: a section of degree {d} is not representable at the "
                f"stabilized cap {r.cap}"
            )
        return coords

    def c0_vector(self, d: int, coords: Mat) -> tuple[Mat, int]:
        """C^0 coordinates (and their cap) of an element of piece(d)."""
        r = self._realize(d)
        return r.basis @ coords, r.cap

    def block_numerator(self, d: int, cap: int, i: int, c0_vec: Mat) -> Mat:
        """Numerator coordinates of the i-th block of a C^0 vector."""
        lo = 0
        for j in range(i):
            lo += self._loc(j, d, cap).dim
        lp = self._loc(i, d, cap)
        block = Mat(self.ring.field, lp.dim, c0_vec.ncols,
                    [c0_vec.data[lo + r] for r in range(lp.dim)])
        return lp.incl @ block

    def _act_at(self, var: int, d: int) -> Mat:
        r = self._realize(d)
        blocks = []
        for i in range(self.cover.n):
            src = self._loc(i, d, r.cap)
            tgt = self._loc(i, d + 1, r.cap)
            blocks.append(tgt.proj @ self.base.act(var, src.num_degree) @ src.incl)
        acted = _blockdiag(self.ring.field, blocks) @ r.basis
        return self._express(d + 1, acted, r.cap)

    def restriction_matrix(self, d: int) -> Mat:
        """Matrix of the diagonal restriction M_d -> Gamma(W, ~M)_d."""
        r = self._realize(d)
        src_dim = self.base.piece(d).dim
        if src_dim == 0:
            return Mat.zeros(self.ring.field, r.piece.dim, 0)
        stacked = None
        for i in range(self.cover.n):
            lp = self._loc(i, d, r.cap)
            mult = self.base.power_act(self.cover.denoms[i], r.cap, d)
            block = lp.proj @ mult
            stacked = block if stacked is None else stacked.vstack(block)
        return self._express(d, stacked, r.cap)

    def degree_stats(self, d: int) -> dict:
        r = self._realize(d)
        return {"cap": r.cap, "dim": r.piece.dim, "certified": r.certified}

    def flags(self, window=None) -> list[str]:
        lo, hi = window or self.window
        caps = []
        heuristic = False
        for d in range(lo, hi + 1):
            st = self.degree_stats(d)
            caps.append(st["cap"])
            heuristic = heuristic or not st["certified"]
        out = [f"caps:{min(caps)}..{max(caps)}", "stabilized"]
        out.append("kernels-heuristic" if heuristic else "kernels-certified")
        return out


def sections_window(module: DegreewiseModule, cover: OpenSubset, window=DEFAULT_WINDOW,
                    policy: CapPolicy | None = None) -> SectionsModule:
    return SectionsModule(module, cover, window, policy)


class H1Result:
    """Per-degree H^1 dimensions over a window, with stabilization data."""

    def __init__(self, module, cover, window, policy):
        self.module = module
        self.cover = cover
        self.window = tuple(window)
        self.policy = policy or DEFAULT_CAP_POLICY
        self._complexes: dict[int, CechComplexWindow] = {}
        self.dims: dict[int, int] = {}
        self.caps: dict[int, int] = {}
        self.certified: dict[int, bool] = {}
        lo, hi = self.window
        for d in range(lo, hi + 1):
            cap, dim = _stabilize(
                lambda c: self._complex(c).degree(d).h1_dim,
                self.policy.caps(self.window),
                f"H1 of {module.name} in degree {d}",
            )
            self.dims[d] = dim
            self.caps[d] = cap
            self.certified[d] = all(
                s.startswith("certified") for s in self._complex(cap).degree(d).statuses()
            )

    def _complex(self, cap: int) -> CechComplexWindow:
        got = self._complexes.get(cap)
        if got is None:
            got = CechComplexWindow(self.module, self.cover, self.window, cap)
            self._complexes[cap] = got
        return got

    def realization(self, d: int) -> tuple[_CechDegree, int]:
        cap = self.caps[d]
        return self._complex(cap).degree(d), cap

    def flags(self) -> list[str]:
        caps = [self.caps[d] for d in sorted(self.caps)]
        out = [f"caps:{min(caps)}..{max(caps)}", "stabilized"]
        heuristic = not all(self.certified.values())
        out.append("kernels-heuristic" if heuristic else "kernels-certified")
        return out


def h1_window(module: DegreewiseModule, cover: OpenSubset, window=DEFAULT_WINDOW,
              policy: CapPolicy | None = None) -> H1Result:
    return H1Result(module, cover, window, policy)


def restriction_to_sections(module: DegreewiseModule, cover: OpenSubset,
                            window=DEFAULT_WINDOW, policy: CapPolicy | None = None,
                            sections: SectionsModule | None = None) -> GradedModuleMap:
    s = sections if sections is not None else sections_window(module, cover, window, policy)
    if s.base is not module:
        raise ValueError("sections module does not match the module being restricted")
    return GradedModuleMap(module, s, s.restriction_matrix, name=f"res({module.name})")


@dataclass
class SectionElement:
    """An element of Gamma(W, ~M)_degree, as coordinates in the piece basis."""

    module: SectionsModule
    degree: int
    coords: Mat


def _block_poly(sections_O: SectionsModule, piece_labels, numerator: Mat, degree: int) -> HomogPoly:
    # numerator coordinates of a structure-sheaf section are coefficients
    # of free-module labels (0, monomial)
    ring = sections_O.ring
    terms: dict = {}
    for r, lab in enumerate(piece_labels):
        c = numerator.data[r][0]
        if c:
            terms[lab[1]] = c
    return HomogPoly(ring, degree, terms)


def section_mult_block(a_module: SectionsModule, da: int, a_mat: Mat,
                       s: SectionElement) -> Mat:
    """Products a_j * s for every column a_j of a_mat (coordinates in
    Gamma(W, O)_da); returns the matrix of their coordinates in
    Gamma(W, ~M)_{da + ds}."""
    sm = s.module
    if a_module.cover is not sm.cover:
        raise ValueError("sections live on different covers")
    ra = a_module._realize(da)
    rs = sm._realize(s.degree)
    d_out = da + s.degree
    cap_out = ra.cap + rs.cap
    s_c0, _ = sm.c0_vector(s.degree, s.coords)
    field = sm.ring.field
    out_cols = []
    for j in range(a_mat.ncols):
        a_c0 = ra.basis @ a_mat.take_cols([j])
        parts = []
        for i in range(a_module.cover.n):
            a_num = a_module.block_numerator(da, ra.cap, i, a_c0)
            lp_a = a_module._loc(i, da, ra.cap)
            p = _block_poly(a_module, a_module.base.piece(lp_a.num_degree).labels,
                            a_num, lp_a.num_degree)
            s_num = sm.block_numerator(s.degree, rs.cap, i, s_c0)
            lp_s = sm._loc(i, s.degree, rs.cap)
            lp_out = sm._loc(i, d_out, cap_out)
            prod = sm.base.poly_apply(p, lp_s.num_degree, s_num)
            parts.append(lp_out.proj @ prod)
        col = parts[0]
        for b in parts[1:]:
            col = col.vstack(b)
        out_cols.append(col.col(0))
    total = sum(sm._loc(i, d_out, cap_out).dim for i in range(sm.cover.n))
    stacked = Mat.from_cols(field, out_cols, total)
    return sm._express(d_out, stacked, cap_out)


def section_mult(a: SectionElement, s: SectionElement) -> SectionElement:
    """Multiply a structure-sheaf section by a module section."""
    coords = section_mult_block(a.module, a.degree, a.coords, s)
    return SectionElement(s.module, a.degree + s.degree, coords)


def sections_induced_map(u: GradedModuleMap, s_src: SectionsModule,
                         s_tgt: SectionsModule) -> GradedModuleMap:
    """The map Gamma(W, ~u) induced degreewise by a module map u."""
    if s_src.base is not u.source or s_tgt.base is not u.target:
        raise ValueError("sections modules do not match the map's endpoints")
    if s_src.cover is not s_tgt.cover:
        raise ValueError("sections live on different covers")

    def matrix(d: int) -> Mat:
        rs = s_src._realize(d)
        blocks = []
        for i in range(s_src.cover.n):
            lp_s = s_src._loc(i, d, rs.cap)
            lp_t = s_tgt._loc(i, d, rs.cap)
            blocks.append(lp_t.proj @ u.matrix(lp_s.num_degree) @ lp_s.incl)
        mapped = _blockdiag(s_src.ring.field, blocks) @ rs.basis
        return s_tgt._express(d, mapped, rs.cap)

    return GradedModuleMap(s_src, s_tgt, matrix, name=f"Gamma({u.name})")
