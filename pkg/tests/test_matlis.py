"""Graded duality: the injective hull, dualized modules, and the bidual run.

Dual pieces are transposes of the original action matrices at negated
degrees, so every oracle here has a mirror-image statement about the
underlying module that can be checked by hand.
"""

import pytest

from qcverify import (
    DualizedModule,
    GradedInjectiveHull,
    GradedModuleMap,
    SheafMap,
    QcohSheafOnX,
    bidual_pipeline,
    exactness_tables,
    free_module,
    map_from_gen_images,
    matlis_dual,
    matlis_dual_map,
    plus_functor,
    plus_functor_map,
    verify_action_commutation,
    verify_naturality,
)
from qcverify.exact_linalg import rank
from qcverify.graded_modules import ALL_TORSION

WINDOW = (-4, 4)


def twist_sequence(ring, kx_fp, y):
    """R(-1) --y--> R --> R/(y), the standard length-one resolution."""
    src = free_module(ring, (1,), name="R(-1)")
    tgt = free_module(ring, (0,), name="R")
    img = tgt.module().poly_act(y, 0) @ tgt.gen_element(0)
    f = map_from_gen_images(src, tgt.module(), [img])
    g = map_from_gen_images(tgt, kx_fp.module(), [kx_fp.gen_element(0)])
    return src, tgt, f, g


# --- the injective hull ------------------------------------------------------


def test_hull_dimensions(ring):
    e = GradedInjectiveHull(ring).module()
    assert [e.piece(d).dim for d in range(-4, 2)] == [5, 4, 3, 2, 1, 0]


def test_hull_actions_are_surjections_below_zero(ring):
    e = GradedInjectiveHull(ring).module()
    for d in range(-4, 0):
        m = e.act(0, d)
        assert rank(m) == e.piece(d + 1).dim
    verify_action_commutation(e, -4, 0)


# --- dualized modules ---------------------------------------------------------


def test_dual_dimensions_mirror(kx_fp, sky_fp, ideal_fp):
    for fp in (kx_fp, sky_fp, ideal_fp):
        dual = matlis_dual(fp.module())
        for d in range(-4, 5):
            assert dual.piece(d).dim == fp.realize_piece(-d).dim


def test_dual_action_is_transposed(kx_fp):
    m = kx_fp.module()
    dual = matlis_dual(m)
    for d in range(-3, 3):
        for v in range(2):
            assert dual.act(v, d) == m.act(v, -d - 1).transpose()
    verify_action_commutation(dual, -3, 3)


def test_skyscraper_is_self_dual(sky_fp):
    m = sky_fp.module()
    dual = matlis_dual(m)
    for d in range(-2, 3):
        assert dual.piece(d).dim == m.piece(d).dim
        for v in range(2):
            assert dual.act(v, d) == m.act(v, d)


def test_dual_is_memoized(kx_fp):
    assert matlis_dual(kx_fp.module()) is matlis_dual(kx_fp.module())


def test_biduality(ring, kx_fp, sky_fp):
    shifted = free_module(ring, (-2,), name="R(2)")
    for fp in (kx_fp, sky_fp, shifted):
        m = fp.module()
        dd = matlis_dual(matlis_dual(m))
        for d in range(-4, 5):
            assert dd.piece(d).dim == m.piece(d).dim
        for d in range(-3, 3):
            for v in range(2):
                assert dd.act(v, d) == m.act(v, d)


def test_torsion_certificates(ring, kx_fp, x, y):
    dual = matlis_dual(kx_fp.module())
    # the dual of a bounded-below module is bounded above: positive-degree
    # multiplication is eventually zero on every element
    assert dual.torsion_bound(x) == ALL_TORSION
    from qcverify import HomogPoly

    assert dual.torsion_bound(HomogPoly.constant(ring, ring.field.one)) == 0
    bidual = matlis_dual(dual)
    assert bidual.torsion_bound(y) == kx_fp.module().torsion_bound(y) == 1


# --- dual maps ------------------------------------------------------------------


def test_dual_map_mirrors_ranks(ring, kx_fp, y):
    _, _, f, g = twist_sequence(ring, kx_fp, y)
    df = matlis_dual_map(f)
    for d in range(-4, 5):
        assert rank(df.matrix(d)) == rank(f.matrix(-d))
    verify_naturality(df, -3, 3)


def test_dual_map_contravariant(ring, kx_fp, y):
    _, _, f, g = twist_sequence(ring, kx_fp, y)
    gf = g.compose(f)
    dual_of_composite = matlis_dual_map(gf)
    composite_of_duals = matlis_dual_map(f, target=matlis_dual(f.source)).compose(
        matlis_dual_map(g, source=matlis_dual(g.target))
    )
    for d in range(-3, 4):
        assert dual_of_composite.matrix(d) == composite_of_duals.matrix(d)


def test_dual_map_endpoint_validation(ring, kx_fp, y):
    _, _, f, g = twist_sequence(ring, kx_fp, y)
    wrong = matlis_dual(kx_fp.module())
    with pytest.raises(ValueError):
        matlis_dual_map(f, source=wrong)


def test_dualizing_flips_exactness(ring, kx_fp, y):
    _, _, f, g = twist_sequence(ring, kx_fp, y)
    forward = exactness_tables(f, g, WINDOW)
    assert forward.verdict == "exact"
    dg = matlis_dual_map(g)
    df = matlis_dual_map(f, source=dg.target)
    backward = exactness_tables(dg, df, WINDOW)
    assert backward.verdict == "exact"


# --- the plus functor and the bidual run -----------------------------------------


def test_plus_of_structure_sheaf(scheme):
    o = scheme.structure_sheaf(window=WINDOW)
    plus = plus_functor(o, window=WINDOW)
    e = GradedInjectiveHull(scheme.ring).module()
    for d in range(-4, 5):
        assert plus.m_U.piece(d).dim == e.piece(d).dim
        assert plus.m_V.piece(d).dim == 0  # the hull is torsion: no W-sections
    plusplus = plus_functor(plus, window=WINDOW)
    for d in range(-4, 5):
        assert plusplus.m_U.piece(d).dim == scheme.structure_module().piece(d).dim
        assert plusplus.m_V.piece(d).dim == (d + 1 if d >= 0 else 0)


def test_plus_map_validation(scheme, kx_fp):
    o = scheme.structure_sheaf(window=WINDOW)
    k = QcohSheafOnX.glued(scheme, kx_fp.module(), window=WINDOW)
    g = SheafMap.glued(o, k, map_from_gen_images(
        o.m_U.fp_source, kx_fp.module(), [kx_fp.gen_element(0)]
    ))
    o_plus = plus_functor(o, window=WINDOW)
    with pytest.raises(ValueError):
        plus_functor_map(g, o_plus, o_plus)


def test_bidual_pipeline_detects_lost_exactness(scheme, kx_fp, y):
    src, tgt, f_mod, g_mod = twist_sequence(scheme.ring, kx_fp, y)
    a = QcohSheafOnX.glued(scheme, src.module(), window=WINDOW)
    b = QcohSheafOnX.glued(scheme, tgt.module(), window=WINDOW)
    c = QcohSheafOnX.glued(scheme, kx_fp.module(), window=WINDOW)
    f = SheafMap.glued(a, b, f_mod)
    g = SheafMap.glued(b, c, g_mod)

    report = bidual_pipeline(f, g, window=WINDOW)
    assert report.plus_over_U.verdict == "exact"
    assert report.verdict == "left-exact-only"
    v = report.bidual_over_V
    assert all(x == 0 for x in v.kernel.values())
    assert all(x == 0 for x in v.homology.values())
    assert v.cokernel == {d: (1 if d < 0 else 0) for d in range(-4, 5)}


def test_bidual_pipeline_requires_exact_input(scheme, kx_fp, y):
    # y^2 into R still composes to zero with the quotient, but the middle
    # homology is nonzero, so the pipeline must refuse to certify anything
    src = free_module(scheme.ring, (2,), name="R(-2)")
    tgt = free_module(scheme.ring, (0,), name="R")
    img = tgt.module().poly_act(y * y, 0) @ tgt.gen_element(0)
    f_mod = map_from_gen_images(src, tgt.module(), [img])
    g_mod = map_from_gen_images(tgt, kx_fp.module(), [kx_fp.gen_element(0)])
    a = QcohSheafOnX.glued(scheme, src.module(), window=WINDOW)
    b = QcohSheafOnX.glued(scheme, tgt.module(), window=WINDOW)
    c = QcohSheafOnX.glued(scheme, kx_fp.module(), window=WINDOW)
    f = SheafMap.glued(a, b, f_mod)
    g = SheafMap.glued(b, c, g_mod)
    with pytest.raises(ValueError):
        bidual_pipeline(f, g, window=WINDOW)
