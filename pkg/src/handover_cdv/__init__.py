"""Coverage-driven verification testbench for a robot-to-human handover controller."""

__version__ = "0.1.0"
