import math
import random

import pytest

from avatarsync.math3d import Quat, Transform
from avatarsync.skeleton import Bone, Skeleton

ACCEPTANCE_LINES: list[str] = []


def random_quat(rng: random.Random) -> Quat:
    # Shoemake's uniform sampling on SO(3)
    u1, u2, u3 = rng.random(), rng.random(), rng.random()
    a, b = math.sqrt(1 - u1), math.sqrt(u1)
    return Quat(b * math.cos(2 * math.pi * u3), a * math.sin(2 * math.pi * u2),
                a * math.cos(2 * math.pi * u2), b * math.sin(2 * math.pi * u3)).normalized()


def unit_chain(n_links: int) -> Skeleton:
    """Straight chain of `n_links` 1 m links along +x (n_links + 1 bones)."""
    bones = [Bone("b0", None, Transform())]
    bones += [Bone(f"b{i}", i - 1, Transform.translate(1.0, 0.0, 0.0)) for i in range(1, n_links + 1)]
    return Skeleton(tuple(bones))


@pytest.fixture
def acceptance():
    def record(name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
