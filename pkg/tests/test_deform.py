"""Retargeting: grouped rescaling, its invariants, and the naive baseline."""

import numpy as np
import pytest

from skeleform import (
    DEFAULT_TOPOLOGY,
    JOINT_INDEX,
    NUM_JOINTS,
    ROOT,
    GroupFactors,
    InvalidFactors,
    KeypointSet,
    MissingJoint,
    PolarPose,
    deform,
    deform_naive,
    group_lengths,
    to_polar,
)
from skeleform.synth import synth_dataset, template_pose


def random_factors(rng) -> GroupFactors:
    return GroupFactors(tau=np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=6)))


class TestGroupFactors:
    @pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
    def test_rejects_non_positive(self, bad):
        tau = np.ones(6)
        tau[2] = bad
        with pytest.raises(InvalidFactors):
            GroupFactors(tau=tau)

    def test_rejects_wrong_arity(self):
        with pytest.raises(InvalidFactors):
            GroupFactors(tau=np.ones(5))


class TestGroupLengths:
    def test_unit_lengths_count_group_sizes(self):
        p = PolarPose(alpha=np.zeros(NUM_JOINTS), length=np.ones(NUM_JOINTS),
                      root_position=np.array([1.0, 0.0]))
        totals = group_lengths(p).totals
        np.testing.assert_allclose(totals, [5.0, 2.0, 4.0, 2.0, 2.0, 2.0])

    def test_root_segment_excluded(self):
        p = PolarPose(alpha=np.zeros(NUM_JOINTS), length=np.ones(NUM_JOINTS),
                      root_position=np.array([1.0, 0.0]))
        p.length[ROOT] = 100.0
        totals = group_lengths(p).totals
        assert totals.sum() == pytest.approx(17.0)


class TestDeform:
    def test_identity_when_factors_match(self):
        rng = np.random.default_rng(0)
        k = synth_dataset(1, seed=1)[0]
        t = random_factors(rng)
        out = deform(k, t, t)
        scale = np.abs(k.points).max()
        assert np.abs(out.points - k.points).max() <= 1e-9 * scale

    def test_lengths_scale_by_group_ratio(self):
        # Independent oracle: compare output polar lengths segmentwise
        # against the closed-form ratio.
        rng = np.random.default_rng(1)
        k = synth_dataset(1, seed=2)[0]
        tau_p, tau_a = random_factors(rng), random_factors(rng)
        out = deform(k, tau_p, tau_a)
        p_in, p_out = to_polar(k), to_polar(out)
        topo = DEFAULT_TOPOLOGY
        ratio = tau_a.tau / tau_p.tau
        for j in range(NUM_JOINTS):
            if j == ROOT:
                continue
            expected = p_in.length[j] * ratio[topo.group[j]]
            assert p_out.length[j] == pytest.approx(expected, rel=1e-9)

    def test_angles_and_anchor_preserved(self):
        rng = np.random.default_rng(2)
        k = synth_dataset(1, seed=3)[0]
        out = deform(k, random_factors(rng), random_factors(rng))
        p_in, p_out = to_polar(k), to_polar(out)
        np.testing.assert_allclose(p_out.alpha, p_in.alpha, atol=1e-9)
        np.testing.assert_allclose(out.points[ROOT], k.points[ROOT], atol=1e-12)

    def test_composition(self):
        rng = np.random.default_rng(3)
        k = synth_dataset(1, seed=4)[0]
        t, u, v = (random_factors(rng) for _ in range(3))
        two_step = deform(deform(k, t, u), u, v)
        one_step = deform(k, t, v)
        scale = np.abs(one_step.points).max()
        assert np.abs(two_step.points - one_step.points).max() <= 1e-8 * scale

    def test_left_right_ratio_preserved(self):
        rng = np.random.default_rng(4)
        k = synth_dataset(1, seed=5)[0]
        out = deform(k, random_factors(rng), random_factors(rng))
        p_in, p_out = to_polar(k), to_polar(out)
        for r, l in DEFAULT_TOPOLOGY.left_right_pairs:
            before = p_in.length[l] / p_in.length[r]
            after = p_out.length[l] / p_out.length[r]
            assert after == pytest.approx(before, rel=1e-9)

    def test_missing_joint_rejected(self):
        k = template_pose()
        k.visible[3] = False
        f = GroupFactors(tau=np.ones(6))
        with pytest.raises(MissingJoint):
            deform(k, f, f)


def foreshortened_art() -> KeypointSet:
    """Template with the left arm segments halved, as if turned away."""
    p = to_polar(template_pose())
    for name in ("l_elbow", "l_wrist"):
        p.length[JOINT_INDEX[name]] *= 0.5
    from skeleform import to_cartesian

    return to_cartesian(p)


class TestDeformNaive:
    def test_copies_art_lengths_onto_person_angles(self):
        person = synth_dataset(1, seed=6)[0]
        art = synth_dataset(1, seed=7)[0]
        out = deform_naive(person, art)
        pp, pa, po = to_polar(person), to_polar(art), to_polar(out)
        non_root = [j for j in range(NUM_JOINTS) if j != ROOT]
        np.testing.assert_allclose(po.length[non_root], pa.length[non_root], rtol=1e-9)
        np.testing.assert_allclose(po.alpha, pp.alpha, atol=1e-9)
        np.testing.assert_allclose(out.points[ROOT], person.points[ROOT], atol=1e-12)

    def test_foreshortening_distorts_side_ratio(self):
        person = template_pose()  # symmetric arms, ratio 1
        art = foreshortened_art()
        out = deform_naive(person, art)
        po = to_polar(out)
        li, ri = JOINT_INDEX["l_wrist"], JOINT_INDEX["r_wrist"]
        ratio = po.length[li] / po.length[ri]
        assert abs(ratio - 1.0) > 0.05  # the baseline breaks symmetry

    def test_learned_route_keeps_side_ratio_on_same_case(self):
        person = template_pose()
        rng = np.random.default_rng(8)
        out = deform(person, random_factors(rng), random_factors(rng))
        po = to_polar(out)
        li, ri = JOINT_INDEX["l_wrist"], JOINT_INDEX["r_wrist"]
        assert po.length[li] / po.length[ri] == pytest.approx(1.0, rel=1e-9)
