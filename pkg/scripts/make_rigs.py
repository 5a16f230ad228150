"""Regenerate the bundled rig corpus in src/avatarsync/data/rigs/.

Each rig shares the reference avatar's proportions but follows a different
naming convention and carries the extra bones that convention usually has
(shoulders, extra spine segments, fingers, toes, end sites).
"""
import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "avatarsync" / "data" / "rigs"


def build(layout):
    names = [n for n, _, _ in layout]
    bones = []
    for name, parent, pos in layout:
        bones.append({
            "name": name,
            "parent": None if parent is None else names.index(parent),
            "position": list(pos),
            "rotation": [1.0, 0.0, 0.0, 0.0],
            "scale": [1.0, 1.0, 1.0],
        })
    return {"bones": bones}


def canonical():
    from avatarsync.skeleton import canonical_skeleton, skeleton_to_dict
    return skeleton_to_dict(canonical_skeleton())


def mixamo():
    p = "mixamorig:"
    layout = [
        (p + "Hips", None, (0, 1.0, 0)),
        (p + "Spine", p + "Hips", (0, 0.1, 0)),
        (p + "Spine1", p + "Spine", (0, 0.075, 0)),
        (p + "Spine2", p + "Spine1", (0, 0.075, 0)),
        (p + "Neck", p + "Spine2", (0, 0.2, 0)),
        (p + "Head", p + "Neck", (0, 0.12, 0)),
        (p + "HeadTop_End", p + "Head", (0, 0.2, 0)),
    ]
    for side, sx in (("Left", 1), ("Right", -1)):
        layout += [
            (p + side + "Shoulder", p + "Spine2", (sx * 0.06, 0.15, 0)),
            (p + side + "Arm", p + side + "Shoulder", (sx * 0.12, 0, 0)),
            (p + side + "ForeArm", p + side + "Arm", (0, -0.2, 0.175)),
            (p + side + "Hand", p + side + "ForeArm", (0, 0.2, 0.175)),
            (p + side + "HandIndex1", p + side + "Hand", (0, 0, 0.05)),
            (p + side + "HandIndex2", p + side + "HandIndex1", (0, 0, 0.03)),
            (p + side + "HandThumb1", p + side + "Hand", (sx * 0.02, 0, 0.02)),
        ]
    for side, sx in (("Left", 1), ("Right", -1)):
        layout += [
            (p + side + "UpLeg", p + "Hips", (sx * 0.1, -0.05, 0)),
            (p + side + "Leg", p + side + "UpLeg", (0, -0.45, 0)),
            (p + side + "Foot", p + side + "Leg", (0, -0.45, 0)),
            (p + side + "ToeBase", p + side + "Foot", (0, -0.05, 0.12)),
            (p + side + "Toe_End", p + side + "ToeBase", (0, 0, 0.06)),
        ]
    return build(layout)


def vrm():
    # VRoid-style J_Bip names
    layout = [
        ("J_Bip_C_Hips", None, (0, 1.0, 0)),
        ("J_Bip_C_Spine", "J_Bip_C_Hips", (0, 0.1, 0)),
        ("J_Bip_C_Chest", "J_Bip_C_Spine", (0, 0.1, 0)),
        ("J_Bip_C_UpperChest", "J_Bip_C_Chest", (0, 0.05, 0)),
        ("J_Bip_C_Neck", "J_Bip_C_UpperChest", (0, 0.2, 0)),
        ("J_Bip_C_Head", "J_Bip_C_Neck", (0, 0.12, 0)),
        ("J_Adj_L_FaceEye", "J_Bip_C_Head", (0.03, 0.06, 0.08)),
        ("J_Sec_Hair1_01", "J_Bip_C_Head", (0, 0.15, -0.05)),
    ]
    for s, sx in (("L", 1), ("R", -1)):
        layout += [
            (f"J_Bip_{s}_Shoulder", "J_Bip_C_UpperChest", (sx * 0.05, 0.1, 0)),
            (f"J_Bip_{s}_UpperArm", f"J_Bip_{s}_Shoulder", (sx * 0.13, 0, 0)),
            (f"J_Bip_{s}_LowerArm", f"J_Bip_{s}_UpperArm", (0, -0.2, 0.175)),
            (f"J_Bip_{s}_Hand", f"J_Bip_{s}_LowerArm", (0, 0.2, 0.175)),
            (f"J_Bip_{s}_Index1", f"J_Bip_{s}_Hand", (0, 0, 0.05)),
            (f"J_Bip_{s}_Thumb1", f"J_Bip_{s}_Hand", (sx * 0.02, 0, 0.02)),
        ]
    for s, sx in (("L", 1), ("R", -1)):
        layout += [
            (f"J_Bip_{s}_UpperLeg", "J_Bip_C_Hips", (sx * 0.1, -0.05, 0)),
            (f"J_Bip_{s}_LowerLeg", f"J_Bip_{s}_UpperLeg", (0, -0.45, 0)),
            (f"J_Bip_{s}_Foot", f"J_Bip_{s}_LowerLeg", (0, -0.45, 0)),
            (f"J_Bip_{s}_ToeBase", f"J_Bip_{s}_Foot", (0, -0.05, 0.12)),
        ]
    return build(layout)


def blender():
    # Blender/Rigify-style ".L"/".R" suffixes, e.g. "LowerArm.R"
    layout = [
        ("Hips", None, (0, 1.0, 0)),
        ("Spine", "Hips", (0, 0.1, 0)),
        ("Chest", "Spine", (0, 0.15, 0)),
        ("Neck", "Chest", (0, 0.2, 0)),
        ("Head", "Neck", (0, 0.12, 0)),
    ]
    for s, sx in (("L", 1), ("R", -1)):
        layout += [
            (f"Shoulder.{s}", "Chest", (sx * 0.06, 0.15, 0)),
            (f"UpperArm.{s}", f"Shoulder.{s}", (sx * 0.12, 0, 0)),
            (f"LowerArm.{s}", f"UpperArm.{s}", (0, -0.2, 0.175)),
            (f"Hand.{s}", f"LowerArm.{s}", (0, 0.2, 0.175)),
            (f"UpperLeg.{s}", "Hips", (sx * 0.1, -0.05, 0)),
            (f"LowerLeg.{s}", f"UpperLeg.{s}", (0, -0.45, 0)),
            (f"Foot.{s}", f"LowerLeg.{s}", (0, -0.45, 0)),
            (f"Toes.{s}", f"Foot.{s}", (0, -0.05, 0.12)),
        ]
    return build(layout)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, fn in (("canonical", canonical), ("mixamo", mixamo), ("vrm", vrm), ("blender", blender)):
        doc = fn()
        for b in doc["bones"]:
            b["position"] = [float(v) for v in b["position"]]
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {name}.json ({len(doc['bones'])} bones)")


if __name__ == "__main__":
    main()
