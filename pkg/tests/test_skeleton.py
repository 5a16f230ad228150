import json
import random

import pytest

from avatarsync.math3d import Quat, Transform, Vec3, compose
from avatarsync.skeleton import (CANONICAL_PARENT, Bone, CanonicalSlot, Skeleton, SkeletonError,
                                 canonical_skeleton, forward_kinematics, load_skeleton,
                                 skeleton_from_dict, skeleton_to_dict)

from conftest import random_quat


def test_identity_pose_gives_identity_world():
    s = canonical_skeleton()
    world = forward_kinematics(s, [Transform()] * len(s))
    assert all(w == Transform() for w in world)


def test_single_bone():
    s = Skeleton((Bone("root", None, Transform()),))
    t = Transform(Vec3(1, 2, 3), Quat.from_axis_angle(Vec3(0, 0, 1), 0.3))
    assert forward_kinematics(s, [t]) == [t]


def test_translation_chain():
    s = Skeleton((Bone("a", None, Transform()), Bone("b", 0, Transform())))
    world = forward_kinematics(s, [Transform.translate(0, 1, 0)] * 2)
    assert world[1].position == Vec3(0, 2, 0)


def test_length_mismatch():
    with pytest.raises(SkeletonError):
        forward_kinematics(canonical_skeleton(), [Transform()])


@pytest.mark.parametrize("bones, msg", [
    ((), "no bones"),
    ((Bone("a", None, Transform()), Bone("b", None, Transform())), "exactly one root"),
    ((Bone("a", None, Transform()), Bone("a", 0, Transform())), "duplicate"),
    ((Bone("a", None, Transform()), Bone("b", 1, Transform())), "parents must come first"),
])
def test_skeleton_invariants(bones, msg):
    with pytest.raises(SkeletonError, match=msg):
        Skeleton(bones)


def test_fk_split_consistency():
    rng = random.Random(3)
    s = canonical_skeleton()
    pose = [Transform(b.local.position, random_quat(rng)) for b in s.bones]
    world = forward_kinematics(s, pose)
    for split in range(len(s)):
        for i in range(len(s)):
            path = s.path(split, i)
            if path is None:
                continue
            # re-derive bone i from the split bone's world transform plus the lower half
            acc = world[split]
            for b in path[1:]:
                acc = compose(acc, pose[b])
            for a, b in zip(acc.position.as_list(), world[i].position.as_list()):
                assert a == pytest.approx(b, abs=1e-9)
            for a, b in zip(acc.rotation.as_list(), world[i].rotation.as_list()):
                assert a == pytest.approx(b, abs=1e-9)


def test_canonical_hierarchy():
    s = canonical_skeleton()
    assert len(s) == 17 == len(CanonicalSlot)
    for slot in CanonicalSlot:
        parent = CANONICAL_PARENT[slot]
        assert s.bones[slot].parent == (None if parent is None else int(parent))
    assert CanonicalSlot.Hips.parent is None
    assert CanonicalSlot.LeftUpperArm.parent is CanonicalSlot.Chest
    assert CanonicalSlot.RightUpperLeg.parent is CanonicalSlot.Hips


def test_json_roundtrip(tmp_path):
    s = canonical_skeleton()
    path = tmp_path / "rig.json"
    path.write_text(json.dumps(skeleton_to_dict(s)))
    assert load_skeleton(path) == s


@pytest.mark.parametrize("doc", [
    {},
    {"bones": [{"parent": None}]},
    {"bones": [{"name": "a", "parent": None, "position": [0, 0]}]},
    {"bones": [{"name": "a", "parent": None, "rotation": [2, 0, 0, 0]}]},
    {"bones": [{"name": "a", "parent": None, "scale": [1, -1, 1]}]},
])
def test_malformed_documents(doc):
    with pytest.raises(SkeletonError):
        skeleton_from_dict(doc)


def test_path_and_ancestry():
    s = canonical_skeleton()
    chest, hand = int(CanonicalSlot.Chest), int(CanonicalSlot.LeftHand)
    assert s.path(chest, hand) == [chest, 5, 6, hand]
    assert s.is_ancestor(chest, hand)
    assert not s.is_ancestor(hand, chest)
    assert s.path(int(CanonicalSlot.LeftFoot), hand) is None
