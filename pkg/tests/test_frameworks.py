import numpy as np
import pytest

from gradcheck import assert_grad_close
from layoutgnn import corpus, featstore
from layoutgnn.errors import CoverageError, SpecError
from layoutgnn.frameworks import (
    FrameworkSpec,
    backward_page,
    forward_page,
    forward_page_cached,
    init_model,
    load_model,
    model_records,
    save_model,
)
from layoutgnn.graphbuild import PageGraph, build_k_closest
from layoutgnn.nncore import EVAL, TRAIN, weighted_ce_loss
from layoutgnn.trainer import page_labels


def synthetic_page(seed=0, n_objects=8, text_dim=6, vision_dim=5):
    docs = corpus.make_synthetic_corpus(seed, 1, 1, n_objects)
    page = docs[0].pages[0]
    t = featstore.synth_embeddings(docs, "text", text_dim, seed)
    v = featstore.synth_embeddings(docs, "vision", vision_dim, seed)
    graph = build_k_closest(page, 4)
    return page, graph, featstore.page_features(t, page), featstore.page_features(v, page)


def small_spec(kind, **kw):
    defaults = dict(hidden=6, head_hidden=5, depth=2, heads=2, hops=2)
    defaults.update(kw)
    if kind == "single":
        return FrameworkSpec(kind="single", backbone_text=kw.pop("backbone", "sage"),
                             modality=defaults.pop("modality", "text"), **{k: v for k, v in defaults.items() if k != "backbone"})
    if kind == "concat":
        return FrameworkSpec(kind="concat", backbone_text=defaults.pop("backbone", "sage"), **defaults)
    return FrameworkSpec(kind="dual", backbone_text=defaults.pop("backbone_text", "sage"),
                         backbone_vision=defaults.pop("backbone_vision", "sage"), **defaults)


class TestInit:
    def test_same_seed_bit_identical(self):
        spec = small_spec("dual")
        a = init_model(spec, text_dim=6, vision_dim=5, seed=3)
        b = init_model(spec, text_dim=6, vision_dim=5, seed=3)
        assert list(a.params) == list(b.params)
        for name in a.params:
            assert np.array_equal(a.params[name].value, b.params[name].value)

    def test_different_seed_differs(self):
        spec = small_spec("dual")
        a = init_model(spec, text_dim=6, vision_dim=5, seed=3)
        b = init_model(spec, text_dim=6, vision_dim=5, seed=4)
        assert any(
            not np.array_equal(a.params[n].value, b.params[n].value) for n in a.params
        )

    def test_dual_missing_vision_dim(self):
        with pytest.raises(SpecError):
            init_model(small_spec("dual"), text_dim=6, vision_dim=None, seed=0)

    def test_single_framework_needs_modality(self):
        with pytest.raises(SpecError):
            FrameworkSpec(kind="single", backbone_text="sage")

    @pytest.mark.parametrize("backbone", ["gcn", "gat", "sage", "tagcn"])
    @pytest.mark.parametrize("kind", ["single", "concat", "dual"])
    def test_forward_smoke_finite_logits(self, kind, backbone):
        page, graph, x_t, x_v = synthetic_page()
        if kind == "dual":
            spec = small_spec("dual", backbone_text=backbone, backbone_vision=backbone)
        elif kind == "concat":
            spec = small_spec("concat", backbone=backbone)
        else:
            spec = small_spec("single", backbone=backbone)
        state = init_model(spec, text_dim=6, vision_dim=5 if kind != "single" else None, seed=1)
        logits = forward_page(state, graph, x_t, x_v if kind != "single" else None, EVAL)
        assert logits.shape == (8, 4)
        assert np.all(np.isfinite(logits))


class TestForward:
    def test_single_node_page_eval(self):
        docs = corpus.make_synthetic_corpus(2, 1, 1, 1)
        page = docs[0].pages[0]
        t = featstore.synth_embeddings(docs, "text", 6, 2)
        graph = build_k_closest(page, 4)
        spec = small_spec("single")
        state = init_model(spec, text_dim=6, seed=0)
        logits = forward_page(state, graph, featstore.page_features(t, page), None, EVAL)
        assert logits.shape == (1, 4)

    def test_missing_features_raise_coverage(self):
        page, graph, x_t, x_v = synthetic_page()
        state = init_model(small_spec("dual"), text_dim=6, vision_dim=5, seed=0)
        with pytest.raises(CoverageError):
            forward_page(state, graph, x_t, None, EVAL)

    def test_wrong_node_count_raises_coverage(self):
        page, graph, x_t, x_v = synthetic_page()
        state = init_model(small_spec("dual"), text_dim=6, vision_dim=5, seed=0)
        with pytest.raises(CoverageError):
            forward_page(state, graph, x_t[:-1], x_v, EVAL)

    def test_concat_with_zero_vision_equals_single_text(self):
        # weight surgery: single-text weights transplanted into the text slice
        # of a concat model; vision features identically zero
        page, graph, x_t, x_v = synthetic_page()
        dt, dv = x_t.shape[1], x_v.shape[1]
        single = init_model(small_spec("single", backbone="sage"), text_dim=dt, seed=5)
        concat = init_model(small_spec("concat", backbone="sage"), text_dim=dt, vision_dim=dv, seed=6)
        for name, p in single.params.items():
            target = concat.params[name]
            if name in ("branch.b0.W_self", "branch.b0.W_neigh"):
                target.value[...] = 0.0
                target.value[:dt, :] = p.value
            else:
                target.value[...] = p.value
        got = forward_page(concat, graph, x_t, np.zeros_like(x_v), EVAL)
        want = forward_page(single, graph, x_t, None, EVAL)
        assert np.array_equal(got, want)

    def test_node_order_equivariance(self):
        rng = np.random.default_rng(20)
        page, graph, x_t, x_v = synthetic_page(n_objects=9)
        state = init_model(small_spec("dual"), text_dim=6, vision_dim=5, seed=2)
        logits = forward_page(state, graph, x_t, x_v, EVAL)
        perm = rng.permutation(graph.n)
        p = np.eye(graph.n)[np.argsort(perm)]
        edges = tuple(
            sorted(
                (min(int(perm[i]), int(perm[j])), max(int(perm[i]), int(perm[j])))
                for i, j in graph.edges
            )
        )
        pgraph = PageGraph(n=graph.n, edges=edges, kind=graph.kind, k=graph.k)
        plogits = forward_page(state, pgraph, p @ x_t, p @ x_v, EVAL)
        assert np.abs(plogits - p @ logits).max() < 1e-9

    def test_nontext_nodes_influence_predictions(self):
        # a title whose only neighbor is an image: changing the image features
        # must change the title's logits
        objs = (
            corpus.LayoutObject("t0", corpus.BBox(10, 10, 50, 20), corpus.Category.TITLE, text="t"),
            corpus.LayoutObject("i0", corpus.BBox(10, 30, 50, 40), corpus.Category.IMAGE),
        )
        page = corpus.Page(0, 100, 100, objs)
        graph = build_k_closest(page, 4)
        rng = np.random.default_rng(21)
        x_t = rng.standard_normal((2, 6))
        state = init_model(small_spec("single"), text_dim=6, seed=7)
        base = forward_page(state, graph, x_t, None, EVAL)
        x_t2 = x_t.copy()
        x_t2[1] += 1.0
        moved = forward_page(state, graph, x_t2, None, EVAL)
        assert not np.allclose(base[0], moved[0])

    def test_supervision_mask_zero_gradient_on_nontext_rows(self):
        page, graph, x_t, x_v = synthetic_page(n_objects=10)
        labels = page_labels(page)
        mask = labels >= 0
        assert (~mask).any(), "fixture must contain non-text nodes"
        state = init_model(small_spec("dual"), text_dim=6, vision_dim=5, seed=3)
        logits = forward_page(state, graph, x_t, x_v, EVAL)
        _, dlogits = weighted_ce_loss(logits, labels, np.ones(4), mask)
        assert np.all(dlogits[~mask] == 0.0)
        assert np.any(dlogits[mask] != 0.0)


class TestBackward:
    @pytest.mark.parametrize("kind", ["single", "concat", "dual"])
    def test_end_to_end_gradient_matches_fd(self, kind):
        page, graph, x_t, x_v = synthetic_page(seed=4, n_objects=12)
        labels = page_labels(page)
        mask = labels >= 0
        if kind == "dual":
            spec = small_spec("dual")
        elif kind == "concat":
            spec = small_spec("concat")
        else:
            spec = small_spec("single")
        state = init_model(spec, text_dim=6, vision_dim=5 if kind != "single" else None, seed=8)
        xs_v = x_v if kind != "single" else None
        weights = np.array([1.5, 1.0, 0.5, 2.0])

        def loss():
            logits = forward_page(state, graph, x_t, xs_v, TRAIN, None, 0.0)
            return weighted_ce_loss(logits, labels, weights, mask)[0]

        logits, cache = forward_page_cached(state, graph, x_t, xs_v, TRAIN, None, 0.0)
        _, dlogits = weighted_ce_loss(logits, labels, weights, mask)
        for p in state.parameters():
            p.zero_grad()
        backward_page(state, cache, dlogits)
        for name, p in state.params.items():
            assert_grad_close(p.grad, loss, p.value)


class TestCheckpoint:
    def test_save_load_roundtrip(self, tmp_path):
        spec = small_spec("dual")
        a = init_model(spec, text_dim=6, vision_dim=5, seed=1)
        for bn in a.bn.values():
            bn.running_mean[:] = np.random.default_rng(0).standard_normal(bn.dim)
        path = tmp_path / "m.ckpt"
        save_model(a, path)
        b = init_model(spec, text_dim=6, vision_dim=5, seed=99)
        load_model(b, path)
        for name in a.params:
            assert np.array_equal(a.params[name].value, b.params[name].value)
        for bname in a.bn:
            assert np.array_equal(a.bn[bname].running_mean, b.bn[bname].running_mean)

    def test_records_cover_params_and_running_stats(self):
        state = init_model(small_spec("single"), text_dim=6, seed=0)
        names = [n for n, _ in model_records(state)]
        assert set(state.params) <= set(names)
        assert any(n.endswith("running_mean") for n in names)
        assert len(names) == len(set(names))
