"""Multibox tests: anchors, IoU, encoding, matching, mining, loss."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsod import boxes as B
from dsod import tensor as T
from dsod.errors import ConfigError


def random_corner_boxes(rng, n):
    pts = rng.uniform(0, 1, (n, 2, 2))
    lo = pts.min(axis=1)
    hi = pts.max(axis=1) + 0.02
    return np.clip(np.concatenate([lo, hi], axis=1), 0, 1).astype(np.float32)


class TestDefaultBoxes:
    def test_count_and_bookkeeping(self):
        d = B.generate_default_boxes([16, 8, 4, 2], [4, 6, 4, 4])
        want = 16 * 16 * 4 + 8 * 8 * 6 + 4 * 4 * 4 + 2 * 2 * 4
        assert len(d) == want
        assert d.cxcywh.shape == (want, 4)
        # scale-major ordering: scale_index is sorted
        assert (np.diff(d.scale_index) >= 0).all()
        first_scale = d.scale_index == 0
        assert first_scale.sum() == 16 * 16 * 4
        assert (d.anchor_index[first_scale][:4] == [0, 1, 2, 3]).all()

    def test_unit_square_invariants(self):
        d = B.generate_default_boxes([38, 19, 10, 5, 3, 1], [4, 6, 6, 6, 4, 4])
        assert (d.cxcywh[:, 0] > 0).all() and (d.cxcywh[:, 0] < 1).all()
        assert (d.cxcywh[:, 2:] > 0).all() and (d.cxcywh[:, 2:] <= 1).all()
        assert (d.corners >= 0).all() and (d.corners <= 1).all()

    def test_scale_interpolation_and_extra_anchor(self):
        d = B.generate_default_boxes([4, 2, 1], [4, 4, 4], s_min=0.2, s_max=0.9)
        s = [0.2, 0.55, 0.9]
        for si in range(3):
            sel = d.scale_index == si
            unit = d.cxcywh[sel][d.anchor_index[sel] == 0]
            assert unit[0, 2] == pytest.approx(s[si], abs=1e-6)
        # last scale's extra anchor pairs with 1.0
        last_extra = d.cxcywh[d.scale_index == 2][d.anchor_index[d.scale_index == 2] == 1]
        assert last_extra[0, 2] == pytest.approx(np.sqrt(0.9), abs=1e-6)

    def test_grid_centers(self):
        d = B.generate_default_boxes([2], [1])
        np.testing.assert_allclose(d.cxcywh[:, :2],
                                   [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])

    def test_anchor_cap(self):
        with pytest.raises(ConfigError):
            B.generate_default_boxes([4], [7])


class TestIoU:
    def test_known_values(self):
        a = np.array([[0, 0, 2, 2]], np.float32)
        b = np.array([[1, 1, 3, 3], [0, 0, 2, 2], [5, 5, 6, 6]], np.float32)
        got = B.iou(a, b)[0]
        np.testing.assert_allclose(got, [1 / 7, 1.0, 0.0], rtol=1e-6)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_symmetry_and_range(self, seed):
        rng = np.random.default_rng(seed)
        a = random_corner_boxes(rng, 5)
        b = random_corner_boxes(rng, 7)
        m = B.iou(a, b)
        np.testing.assert_allclose(m, B.iou(b, a).T, rtol=1e-6)
        assert (m >= 0).all() and (m <= 1 + 1e-6).all()
        np.testing.assert_allclose(np.diag(B.iou(a, a)), 1.0, atol=1e-6)


class TestEncodeDecode:
    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        g = B.center_form(random_corner_boxes(rng, 12))
        d = B.center_form(random_corner_boxes(rng, 12))
        back = B.decode(B.encode(g, d), d)
        np.testing.assert_allclose(back, g, rtol=1e-4, atol=1e-5)

    def test_zero_offsets_for_identical_boxes(self):
        d = np.array([[0.5, 0.5, 0.2, 0.3]], np.float32)
        np.testing.assert_allclose(B.encode(d, d), 0, atol=1e-7)

    def test_corner_center_roundtrip(self):
        rng = np.random.default_rng(0)
        c = random_corner_boxes(rng, 20)
        np.testing.assert_allclose(B.corner_form(B.center_form(c)), c, atol=1e-6)


def oracle_assign(overlaps, thr):
    """Loop re-implementation of the two-pass assignment."""
    n, m = overlaps.shape
    gt_of = [-1] * n
    for gi in range(m):
        best, best_di = -1.0, -1
        for di in range(n):
            if gt_of[di] >= 0:
                continue
            if overlaps[di, gi] > best:
                best, best_di = overlaps[di, gi], di
        gt_of[best_di] = gi
    for di in range(n):
        if gt_of[di] >= 0:
            continue
        best, best_gi = -1.0, -1
        for gi in range(m):
            if overlaps[di, gi] > best:
                best, best_gi = overlaps[di, gi], gi
        if best >= thr:
            gt_of[di] = best_gi
    return np.asarray(gt_of)


class TestMatch:
    def _defaults(self):
        return B.generate_default_boxes([4, 2], [4, 4])

    def test_every_gt_claims_a_default(self):
        d = self._defaults()
        rng = np.random.default_rng(1)
        for _ in range(50):
            m = rng.integers(1, 5)
            gts = random_corner_boxes(rng, m)
            labels = rng.integers(1, 4, m)
            a = B.match(d, gts, labels)
            claimed = set(a.gt_index[a.gt_index >= 0].tolist())
            assert claimed == set(range(m))

    def test_matches_loop_oracle_and_idempotent(self):
        d = self._defaults()
        rng = np.random.default_rng(2)
        for _ in range(50):
            m = rng.integers(1, 5)
            gts = random_corner_boxes(rng, m)
            labels = rng.integers(1, 4, m)
            a1 = B.match(d, gts, labels)
            a2 = B.match(d, gts, labels)
            np.testing.assert_array_equal(a1.gt_index, a2.gt_index)
            np.testing.assert_array_equal(a1.labels, a2.labels)
            overlaps = B.iou(d.corners, gts)
            np.testing.assert_array_equal(a1.gt_index, oracle_assign(overlaps, 0.5))

    def test_labels_and_targets_consistent(self):
        d = self._defaults()
        gts = np.array([[0.1, 0.1, 0.6, 0.6]], np.float32)
        a = B.match(d, gts, np.array([2]))
        pos = a.gt_index >= 0
        assert (a.labels[pos] == 2).all()
        assert (a.labels[~pos] == 0).all()
        assert np.all(a.loc_targets[~pos] == 0)
        dec = B.decode(a.loc_targets[pos], d.cxcywh[pos])
        np.testing.assert_allclose(B.corner_form(dec), np.broadcast_to(gts[0], dec.shape), atol=1e-4)

    def test_no_gts_all_background(self):
        d = self._defaults()
        a = B.match(d, np.zeros((0, 4), np.float32), np.zeros(0, np.int64))
        assert (a.labels == 0).all() and (a.gt_index == -1).all()

    def test_background_label_rejected(self):
        d = self._defaults()
        with pytest.raises(ConfigError):
            B.match(d, np.array([[0.1, 0.1, 0.5, 0.5]], np.float32), np.array([0]))


class TestMultiboxLoss:
    def _toy(self, labels, rng, n=8, k=3):
        loc = T.Tensor(rng.standard_normal((1, n, 4)).astype(np.float32), requires_grad=True)
        conf = T.Tensor(rng.standard_normal((1, n, k)).astype(np.float32), requires_grad=True)
        a = B.MatchAssignment(
            labels=np.asarray(labels, np.int64),
            gt_index=np.where(np.asarray(labels) > 0, 0, -1).astype(np.int64),
            loc_targets=rng.standard_normal((n, 4)).astype(np.float32)
            * (np.asarray(labels)[:, None] > 0),
        )
        return loc, conf, a

    def test_hand_computed_value(self):
        rng = np.random.default_rng(3)
        labels = [1, 0, 0, 0, 0, 0, 0, 0]
        loc, conf, a = self._toy(labels, rng)
        out = B.multibox_loss(loc, conf, [a], neg_ratio=3)
        assert out.num_positives == 1
        ce = T.cross_entropy_rows(conf.data[0], a.labels)
        mined = np.sort(ce[1:])[::-1][:3].sum()  # hardest 3 of 7 negatives
        d = loc.data[0, 0] - a.loc_targets[0]
        sl1 = np.where(np.abs(d) < 1, 0.5 * d * d, np.abs(d) - 0.5).sum()
        assert out.total.item() == pytest.approx(ce[0] + mined + sl1, rel=1e-5)
        assert out.loc_value == pytest.approx(sl1, rel=1e-5)

    def test_unselected_rows_get_no_gradient(self):
        rng = np.random.default_rng(4)
        labels = [2, 0, 0, 0, 0, 0, 0, 0]
        loc, conf, a = self._toy(labels, rng)
        out = B.multibox_loss(loc, conf, [a], neg_ratio=1)
        out.total.backward()
        touched = np.abs(conf.grad[0]).sum(axis=1) > 0
        assert touched.sum() == 2  # the positive plus one mined negative
        assert touched[0]
        loc_touched = np.abs(loc.grad[0]).sum(axis=1) > 0
        assert loc_touched.tolist() == [True] + [False] * 7

    def test_zero_positives_zero_loss(self):
        rng = np.random.default_rng(5)
        loc, conf, a = self._toy([0] * 8, rng)
        out = B.multibox_loss(loc, conf, [a])
        assert out.total.item() == 0.0 and out.num_positives == 0

    def test_normalizer_splits_linearly(self):
        # two single-image calls with the joint normalizer sum to the joint loss
        rng = np.random.default_rng(6)
        loc1, conf1, a1 = self._toy([1, 0, 0, 0, 0, 0, 0, 0], rng, k=4)
        loc2, conf2, a2 = self._toy([2, 3, 0, 0, 0, 0, 0, 0], rng, k=4)
        joint_loc = T.Tensor(np.concatenate([loc1.data, loc2.data]))
        joint_conf = T.Tensor(np.concatenate([conf1.data, conf2.data]))
        joint = B.multibox_loss(joint_loc, joint_conf, [a1, a2])
        n = joint.num_positives
        part1 = B.multibox_loss(loc1, conf1, [a1], normalizer=n)
        part2 = B.multibox_loss(loc2, conf2, [a2], normalizer=n)
        assert part1.total.item() + part2.total.item() == pytest.approx(
            joint.total.item(), rel=1e-5
        )

    def test_mining_ratio_cap(self):
        rng = np.random.default_rng(7)
        labels = [1, 2, 0, 0, 0, 0, 0, 0]
        loc, conf, a = self._toy(labels, rng)
        out = B.multibox_loss(loc, conf, [a], neg_ratio=3)
        out.total.backward()
        touched = np.abs(conf.grad[0]).sum(axis=1) > 0
        assert touched.sum() == 2 + 6  # 2 positives, 3:1 capped at 6 negatives
