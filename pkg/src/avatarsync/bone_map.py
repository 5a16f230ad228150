"""Name-similarity mapping of arbitrary rigs onto the canonical humanoid slots.

Bone names are tokenized, side markers are pulled out, synonyms are folded
to a shared vocabulary and the resulting token set is compared (Jaccard)
against each slot's alias list. Assignment is greedy by descending score.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .skeleton import CanonicalSlot, Skeleton

THRESHOLD = 0.5

SIDE_TOKENS = {"l": "Left", "left": "Left", "r": "Right", "right": "Right"}

# Exporter/armature noise that carries no anatomical meaning.
NOISE_TOKENS = frozenset({"mixamorig", "j", "bip", "c", "def", "org", "mch", "jnt", "bn"})

# Token -> replacement tokens, applied after splitting.
SYNONYMS: dict[str, tuple[str, ...]] = {
    "fore": ("lower",),
    "forearm": ("lower", "arm"),
    "elbow": ("lower", "arm"),
    "upperarm": ("upper", "arm"),
    "lowerarm": ("lower", "arm"),
    "up": ("upper",),
    "upleg": ("upper", "leg"),
    "upperleg": ("upper", "leg"),
    "lowerleg": ("lower", "leg"),
    "thigh": ("upper", "leg"),
    "calf": ("lower", "leg"),
    "shin": ("lower", "leg"),
    "knee": ("lower", "leg"),
    "hip": ("hips",),
    "pelvis": ("hips",),
    "wrist": ("hand",),
    "ankle": ("foot",),
    "thorax": ("chest",),
}

# Per-slot aliases, as canonical token tuples. Sides are handled separately.
_LIMB_ALIASES = {
    "UpperArm": [("upper", "arm"), ("arm",)],
    "LowerArm": [("lower", "arm")],
    "Hand": [("hand",)],
    "UpperLeg": [("upper", "leg")],
    "LowerLeg": [("lower", "leg"), ("leg",)],
    "Foot": [("foot",)],
}
ALIASES: dict[CanonicalSlot, list[tuple[str, ...]]] = {
    CanonicalSlot.Hips: [("hips",)],
    CanonicalSlot.Spine: [("spine",)],
    CanonicalSlot.Chest: [("chest",), ("spine", "2")],
    CanonicalSlot.Neck: [("neck",)],
    CanonicalSlot.Head: [("head",)],
}
for _side in ("Left", "Right"):
    for _part, _aliases in _LIMB_ALIASES.items():
        ALIASES[CanonicalSlot[_side + _part]] = list(_aliases)

_SEPARATORS = re.compile(r"[_\-.:\s]+")
_WORDS = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


@dataclass(frozen=True)
class NormalizedName:
    side: str  # "Left", "Right" or "Center"
    tokens: tuple[str, ...]

    @property
    def mappable(self) -> bool:
        return bool(self.tokens)


def normalize_bone_name(raw: str) -> NormalizedName:
    """Split a raw bone name into (side, canonical tokens).

    >>> normalize_bone_name("mixamorig:RightForeArm")
    NormalizedName(side='Right', tokens=('fore', 'arm'))

    Tokens are left as written; synonym folding happens at scoring time.
    An empty token list marks the bone as unmappable.
    """
    if not raw:
        raise ValueError("bone name must be nonempty")
    name = raw.rsplit(":", 1)[-1]
    words: list[str] = []
    for chunk in _SEPARATORS.split(name):
        words.extend(w.lower() for w in _WORDS.findall(chunk))
    side = "Center"
    tokens = []
    for w in words:
        if w in SIDE_TOKENS:
            # first side marker wins; "L_hand_R" is nonsense anyway
            if side == "Center":
                side = SIDE_TOKENS[w]
            continue
        if w in NOISE_TOKENS:
            continue
        tokens.append(w)
    return NormalizedName(side, tuple(tokens))


def canonical_tokens(tokens: tuple[str, ...]) -> frozenset[str]:
    out: set[str] = set()
    for t in tokens:
        out.update(SYNONYMS.get(t, (t,)))
    return frozenset(out)


def score_similarity(name: NormalizedName, slot: CanonicalSlot) -> float:
    if name.side != slot.side or not name.tokens:
        return 0.0
    have = canonical_tokens(name.tokens)
    best = 0.0
    for alias in ALIASES[slot]:
        want = frozenset(alias)
        j = len(have & want) / len(have | want)
        best = max(best, j)
    return best


@dataclass
class MappingEntry:
    bone: int
    score: float


@dataclass
class BoneMapping:
    entries: dict[CanonicalSlot, MappingEntry] = field(default_factory=dict)
    unmapped: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def bone_for(self, slot: CanonicalSlot) -> int | None:
        e = self.entries.get(slot)
        return None if e is None else e.bone

    def to_report(self, s: Skeleton) -> dict:
        return {
            "mapped": {
                slot.name: {"bone": s.bones[e.bone].name, "score": e.score}
                for slot, e in sorted(self.entries.items())
            },
            "unmapped": [s.bones[i].name for i in self.unmapped],
            "warnings": list(self.warnings),
        }


def map_bones(s: Skeleton, threshold: float = THRESHOLD) -> BoneMapping:
    names = [normalize_bone_name(b.name) for b in s.bones]
    candidates = []
    for i, n in enumerate(names):
        if not n.mappable:
            continue
        for slot in CanonicalSlot:
            sc = score_similarity(n, slot)
            if sc >= threshold:
                candidates.append((-sc, len(s.bones[i].name), i, int(slot)))
    candidates.sort()

    mapping = BoneMapping()
    used: set[int] = set()
    for neg, _, i, slot_idx in candidates:
        slot = CanonicalSlot(slot_idx)
        if slot in mapping.entries or i in used:
            continue
        mapping.entries[slot] = MappingEntry(i, -neg)
        used.add(i)
    mapping.unmapped = [i for i in range(len(s.bones)) if i not in used]

    for i, n in enumerate(names):
        if not n.mappable:
            mapping.warnings.append(f"bone {s.bones[i].name!r} has no usable name tokens")
    for slot in CanonicalSlot:
        if slot not in mapping.entries:
            mapping.warnings.append(f"slot {slot.name} is unmapped")
    mapping.warnings.extend(hierarchy_warnings(s, mapping))
    return mapping


def hierarchy_warnings(s: Skeleton, mapping: BoneMapping) -> list[str]:
    out = []
    for slot, e in sorted(mapping.entries.items()):
        parent_slot = slot.parent
        if parent_slot is None or parent_slot not in mapping.entries:
            continue
        p = mapping.entries[parent_slot].bone
        if not s.is_ancestor(p, e.bone):
            out.append(
                f"hierarchy mismatch: {slot.name} -> {s.bones[e.bone].name!r} is not "
                f"below {parent_slot.name} -> {s.bones[p].name!r}"
            )
    return out
