"""Full-body avatar synchronization: rig mapping, CCD IK, wire codec and a
network simulator for audio-vs-gesture consistency experiments."""

__version__ = "0.1.0"
