"""Cyclic Coordinate Descent inverse kinematics.

A pose is a list of local transforms, one per skeleton bone, mutated in
place by the solver. Only rotations are changed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .bone_map import BoneMapping
from .math3d import Quat, Transform, Vec3, compose, rotation_between
from .skeleton import CanonicalSlot, Skeleton, forward_kinematics

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 50
SPINE_LIMIT = math.radians(30.0)


class IKError(ValueError):
    pass


@dataclass(frozen=True)
class IKChain:
    """Contiguous bone chain, root first, end-effector last.

    `limits[k]` is the max angle (radians) joint k may deviate from its bind
    rotation, or None for a free joint. The effector's entry is unused by
    the position pass.
    """

    bones: tuple[int, ...]
    limits: tuple[float | None, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bones", tuple(self.bones))
        if not self.limits:
            object.__setattr__(self, "limits", (None,) * len(self.bones))
        else:
            object.__setattr__(self, "limits", tuple(self.limits))

    def validate(self, s: Skeleton) -> None:
        if len(self.bones) < 2:
            raise IKError("an IK chain needs at least two bones")
        if len(self.limits) != len(self.bones):
            raise IKError("one limit entry per chain bone is required")
        for b in self.bones:
            if not 0 <= b < len(s.bones):
                raise IKError(f"bone index {b} out of range")
        for a, b in zip(self.bones, self.bones[1:]):
            if s.bones[b].parent != a:
                raise IKError(f"bone {s.bones[a].name!r} is not the parent of {s.bones[b].name!r}")
        for lim in self.limits:
            if lim is not None and lim < 0:
                raise IKError("joint limits must be non-negative")


@dataclass(frozen=True)
class IKTarget:
    position: Vec3
    orientation: Quat | None = None
    weight: float = 1.0

    def __post_init__(self):
        if not self.position.is_finite():
            raise IKError("target position must be finite")
        if not 0.0 < self.weight <= 1.0:
            raise IKError("target weight must lie in (0, 1]")


@dataclass(frozen=True)
class IKSolveReport:
    iterations: int
    error: float
    converged: bool


def _world_of(s: Skeleton, pose: Sequence[Transform], chain_root: int) -> Transform:
    """World transform of the chain root's parent frame (identity for the skeleton root)."""
    p = s.bones[chain_root].parent
    if p is None:
        return Transform()
    # walk up once; chains are short compared to rigs, so avoid full FK
    stack = []
    while p is not None:
        stack.append(p)
        p = s.bones[p].parent
    w = pose[stack[-1]]
    for i in reversed(stack[:-1]):
        w = compose(w, pose[i])
    return w


def _chain_world(base: Transform, pose: Sequence[Transform], bones: Sequence[int]) -> list[Transform]:
    out = []
    w = base
    for b in bones:
        w = compose(w, pose[b])
        out.append(w)
    return out


def clamp_to_limit(q: Quat, bind: Quat, limit: float | None) -> Quat:
    if limit is None:
        return q
    rel = bind.conjugate() * q
    ang = rel.angle()
    if ang <= limit:
        return q
    if limit == 0.0:
        return bind
    return bind * Quat.identity().slerp(rel, limit / ang)


def ccd_pass(
    s: Skeleton,
    pose: list[Transform],
    chain: IKChain,
    target: IKTarget,
    on_step: Callable[[int, float, float], None] | None = None,
) -> float:
    """One CCD sweep from the effector's parent back to the chain root.

    Returns the end-effector's world distance to the target afterwards.
    `on_step(bone, before, after)` sees the distance around every joint update.
    """
    chain.validate(s)
    if len(pose) != len(s.bones):
        raise IKError("pose length does not match skeleton")
    bones = chain.bones
    base = _world_of(s, pose, bones[0])
    goal = target.position
    world = _chain_world(base, pose, bones)
    effector = world[-1].position

    for k in range(len(bones) - 2, -1, -1):
        b = bones[k]
        joint = world[k]
        to_eff = effector - joint.position
        to_goal = goal - joint.position
        before = effector.distance(goal)
        if to_eff.norm() < 1e-12 or to_goal.norm() < 1e-12:
            if on_step:
                on_step(b, before, before)
            continue
        parent_rot = world[k - 1].rotation if k > 0 else base.rotation
        inv = parent_rot.conjugate()
        delta = rotation_between(inv.rotate(to_eff), inv.rotate(to_goal))
        local = pose[b]
        new_rot = clamp_to_limit(delta * local.rotation, s.bones[b].local.rotation, chain.limits[k])
        pose[b] = local.with_rotation(new_rot)
        # only joints at and below k moved
        w = world[k - 1] if k > 0 else base
        for j in range(k, len(bones)):
            w = compose(w, pose[bones[j]])
            world[j] = w
        effector = world[-1].position
        if on_step:
            on_step(b, before, effector.distance(goal))

    return effector.distance(goal)


def effector_distance(s: Skeleton, pose: Sequence[Transform], chain: IKChain, target: IKTarget) -> float:
    base = _world_of(s, pose, chain.bones[0])
    return _chain_world(base, pose, chain.bones)[-1].position.distance(target.position)


def ccd_solve(
    s: Skeleton,
    pose: list[Transform],
    chain: IKChain,
    target: IKTarget,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    on_step: Callable[[int, float, float], None] | None = None,
) -> IKSolveReport:
    if tol <= 0:
        raise IKError("tolerance must be positive")
    if max_iter < 1:
        raise IKError("max_iter must be at least 1")
    chain.validate(s)
    err = effector_distance(s, pose, chain, target)
    it = 0
    while err > tol and it < max_iter:
        err = ccd_pass(s, pose, chain, target, on_step)
        it += 1
    if err > tol:
        log.debug("CCD stopped after %d passes with error %.6f m", it, err)
    if target.orientation is not None:
        _blend_orientation(s, pose, chain, target)
    return IKSolveReport(it, err, err <= tol)


def _blend_orientation(s: Skeleton, pose: list[Transform], chain: IKChain, target: IKTarget) -> None:
    eff = chain.bones[-1]
    base = _world_of(s, pose, chain.bones[0])
    parent_world = _chain_world(base, pose, chain.bones[:-1])[-1]
    desired_local = parent_world.rotation.conjugate() * target.orientation
    cur = pose[eff].rotation
    new = cur.slerp(desired_local, target.weight)
    pose[eff] = pose[eff].with_rotation(
        clamp_to_limit(new, s.bones[eff].local.rotation, chain.limits[-1])
    )


# --- full body ------------------------------------------------------------

@dataclass
class BodySolve:
    pose: list[Transform]
    reports: dict[str, IKSolveReport] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


_BODY_CHAINS = (
    ("head", CanonicalSlot.Head, None),
    ("left_hand", CanonicalSlot.LeftHand, CanonicalSlot.LeftUpperArm),
    ("right_hand", CanonicalSlot.RightHand, CanonicalSlot.RightUpperArm),
)


def body_chain(s: Skeleton, mapping: BoneMapping, effector: CanonicalSlot,
               free_from: CanonicalSlot | None) -> IKChain | None:
    """Chain from the mapped Chest bone to `effector`'s bone.

    Arm chains lock every joint above the upper arm so that solving one
    hand cannot drag the torso (and with it the head and the other arm).
    The head chain runs through the spine, limited to 30 degrees per joint.
    """
    chest = mapping.bone_for(CanonicalSlot.Chest)
    end = mapping.bone_for(effector)
    if chest is None or end is None:
        return None
    bones = s.path(chest, end)
    if bones is None or len(bones) < 2:
        return None
    if free_from is None:
        limits = [SPINE_LIMIT] * len(bones)
    else:
        start = mapping.bone_for(free_from)
        if start is None or start not in bones:
            return None
        cut = bones.index(start)
        limits = [0.0] * cut + [None] * (len(bones) - cut)
    return IKChain(tuple(bones), tuple(limits))


def solve_body_pose(
    s: Skeleton,
    mapping: BoneMapping,
    head: IKTarget,
    left_hand: IKTarget,
    right_hand: IKTarget,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BodySolve:
    """Drive head and both hands from three tracked targets, starting at bind pose."""
    out = BodySolve(pose=s.bind_pose())
    targets = {"head": head, "left_hand": left_hand, "right_hand": right_hand}
    for label, effector, free_from in _BODY_CHAINS:
        chain = body_chain(s, mapping, effector, free_from)
        if chain is None:
            out.warnings.append(f"chain {label} unavailable: missing or disconnected bones")
            continue
        rep = ccd_solve(s, out.pose, chain, targets[label], tol, max_iter)
        out.reports[label] = rep
        if not rep.converged:
            log.warning("chain %s did not converge (error %.4f m)", label, rep.error)
    return out


def bind_effector_positions(s: Skeleton, mapping: BoneMapping) -> dict[str, Vec3]:
    world = forward_kinematics(s, s.bind_pose())
    out = {}
    for label, slot, _ in _BODY_CHAINS:
        b = mapping.bone_for(slot)
        if b is not None:
            out[label] = world[b].position
    return out
