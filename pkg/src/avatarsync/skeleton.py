"""Skeleton model, canonical humanoid rig and forward kinematics."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .math3d import Quat, Transform, Vec3, compose


class CanonicalSlot(enum.IntEnum):
    """The 17 humanoid slots. The integer value is the slot index on the wire."""

    Hips = 0
    Spine = 1
    Chest = 2
    Neck = 3
    Head = 4
    LeftUpperArm = 5
    LeftLowerArm = 6
    LeftHand = 7
    RightUpperArm = 8
    RightLowerArm = 9
    RightHand = 10
    LeftUpperLeg = 11
    LeftLowerLeg = 12
    LeftFoot = 13
    RightUpperLeg = 14
    RightLowerLeg = 15
    RightFoot = 16

    @property
    def side(self) -> str:
        if self.name.startswith("Left"):
            return "Left"
        if self.name.startswith("Right"):
            return "Right"
        return "Center"

    @property
    def parent(self) -> CanonicalSlot | None:
        return CANONICAL_PARENT[self]


S = CanonicalSlot
CANONICAL_PARENT: dict[CanonicalSlot, CanonicalSlot | None] = {
    S.Hips: None,
    S.Spine: S.Hips,
    S.Chest: S.Spine,
    S.Neck: S.Chest,
    S.Head: S.Neck,
    S.LeftUpperArm: S.Chest,
    S.LeftLowerArm: S.LeftUpperArm,
    S.LeftHand: S.LeftLowerArm,
    S.RightUpperArm: S.Chest,
    S.RightLowerArm: S.RightUpperArm,
    S.RightHand: S.RightLowerArm,
    S.LeftUpperLeg: S.Hips,
    S.LeftLowerLeg: S.LeftUpperLeg,
    S.LeftFoot: S.LeftLowerLeg,
    S.RightUpperLeg: S.Hips,
    S.RightLowerLeg: S.RightUpperLeg,
    S.RightFoot: S.RightLowerLeg,
}
NUM_SLOTS = len(CanonicalSlot)


class SkeletonError(ValueError):
    pass


@dataclass(frozen=True)
class Bone:
    name: str
    parent: int | None
    local: Transform


@dataclass(frozen=True)
class Skeleton:
    bones: tuple[Bone, ...]

    def __post_init__(self):
        bones = tuple(self.bones)
        object.__setattr__(self, "bones", bones)
        if not bones:
            raise SkeletonError("skeleton has no bones")
        roots = [i for i, b in enumerate(bones) if b.parent is None]
        if len(roots) != 1:
            raise SkeletonError(f"expected exactly one root bone, found {len(roots)}")
        seen = set()
        for i, b in enumerate(bones):
            if b.name in seen:
                raise SkeletonError(f"duplicate bone name {b.name!r}")
            seen.add(b.name)
            if b.parent is not None and not (0 <= b.parent < i):
                raise SkeletonError(
                    f"bone {b.name!r} (index {i}) has parent {b.parent}; parents must come first"
                )

    def __len__(self) -> int:
        return len(self.bones)

    def index(self, name: str) -> int:
        for i, b in enumerate(self.bones):
            if b.name == name:
                return i
        raise KeyError(name)

    def parent(self, i: int) -> int | None:
        return self.bones[i].parent

    def is_ancestor(self, ancestor: int, bone: int) -> bool:
        """Strict ancestry: True when `ancestor` lies on the path from `bone` to the root."""
        p = self.bones[bone].parent
        while p is not None:
            if p == ancestor:
                return True
            p = self.bones[p].parent
        return False

    def path(self, ancestor: int, bone: int) -> list[int] | None:
        """Bone indices from `ancestor` down to `bone`, or None if not related."""
        out = [bone]
        p = bone
        while p != ancestor:
            p = self.bones[p].parent
            if p is None:
                return None
            out.append(p)
        out.reverse()
        return out

    def bind_pose(self) -> list[Transform]:
        return [b.local for b in self.bones]


def forward_kinematics(s: Skeleton, pose: Sequence[Transform]) -> list[Transform]:
    """World transforms for every bone given per-bone local transforms."""
    if len(pose) != len(s.bones):
        raise SkeletonError(f"pose has {len(pose)} transforms, skeleton has {len(s.bones)} bones")
    world: list[Transform] = []
    for b, local in zip(s.bones, pose):
        world.append(local if b.parent is None else compose(world[b.parent], local))
    return world


# --- JSON rig format ------------------------------------------------------

def skeleton_from_dict(doc: dict) -> Skeleton:
    try:
        raw = doc["bones"]
        bones = []
        for entry in raw:
            pos = entry.get("position", [0.0, 0.0, 0.0])
            rot = entry.get("rotation", [1.0, 0.0, 0.0, 0.0])
            scl = entry.get("scale", [1.0, 1.0, 1.0])
            if len(pos) != 3 or len(rot) != 4 or len(scl) != 3:
                raise SkeletonError(f"bad transform arity on bone {entry.get('name')!r}")
            q = Quat(*map(float, rot))
            if not q.is_unit(1e-3):
                raise SkeletonError(f"bone {entry['name']!r} rotation is not unit length")
            local = Transform(Vec3(*map(float, pos)), q.normalized(), Vec3(*map(float, scl)))
            if not local.position.is_finite():
                raise SkeletonError(f"bone {entry['name']!r} has a non-finite position")
            parent = entry.get("parent")
            bones.append(Bone(str(entry["name"]), None if parent is None else int(parent), local))
    except SkeletonError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SkeletonError(f"malformed skeleton document: {exc}") from exc
    return Skeleton(tuple(bones))


def skeleton_to_dict(s: Skeleton) -> dict:
    return {
        "bones": [
            {
                "name": b.name,
                "parent": b.parent,
                "position": b.local.position.as_list(),
                "rotation": b.local.rotation.as_list(),
                "scale": b.local.scale.as_list(),
            }
            for b in s.bones
        ]
    }


def load_skeleton(path: str | Path) -> Skeleton:
    with open(path) as fh:
        return skeleton_from_dict(json.load(fh))


def pose_to_dict(s: Skeleton, pose: Sequence[Transform]) -> dict:
    return {
        "bones": [
            {
                "name": b.name,
                "position": t.position.as_list(),
                "rotation": t.rotation.as_list(),
                "scale": t.scale.as_list(),
            }
            for b, t in zip(s.bones, pose)
        ]
    }


# --- reference avatar -----------------------------------------------------

# y up, avatar faces +z, avatar's left is +x. Arms are held forward with bent
# elbows so the experiment's hand circle is reachable from the bind pose.
_CANONICAL_LAYOUT: list[tuple[CanonicalSlot, tuple[float, float, float]]] = [
    (S.Hips, (0.0, 1.0, 0.0)),
    (S.Spine, (0.0, 0.1, 0.0)),
    (S.Chest, (0.0, 0.15, 0.0)),
    (S.Neck, (0.0, 0.2, 0.0)),
    (S.Head, (0.0, 0.12, 0.0)),
    (S.LeftUpperArm, (0.18, 0.15, 0.0)),
    (S.LeftLowerArm, (0.0, -0.2, 0.175)),
    (S.LeftHand, (0.0, 0.2, 0.175)),
    (S.RightUpperArm, (-0.18, 0.15, 0.0)),
    (S.RightLowerArm, (0.0, -0.2, 0.175)),
    (S.RightHand, (0.0, 0.2, 0.175)),
    (S.LeftUpperLeg, (0.1, -0.05, 0.0)),
    (S.LeftLowerLeg, (0.0, -0.45, 0.0)),
    (S.LeftFoot, (0.0, -0.45, 0.0)),
    (S.RightUpperLeg, (-0.1, -0.05, 0.0)),
    (S.RightLowerLeg, (0.0, -0.45, 0.0)),
    (S.RightFoot, (0.0, -0.45, 0.0)),
]


def canonical_skeleton(names: dict[CanonicalSlot, str] | None = None) -> Skeleton:
    """The reference 17-bone avatar. `names` renames slots (defaults to the slot names)."""
    bones = []
    for slot, pos in _CANONICAL_LAYOUT:
        parent = CANONICAL_PARENT[slot]
        name = names[slot] if names else slot.name
        bones.append(Bone(name, None if parent is None else int(parent), Transform(Vec3(*pos))))
    return Skeleton(tuple(bones))
