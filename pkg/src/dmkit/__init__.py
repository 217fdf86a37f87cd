"""Direct measurement of quantum states, measurements and processes with
generalized Hadamard tests, plus an emulation of a time-bin pulse-train
experiment (modulator, interferometer, detector, peak fitting)."""

__version__ = "0.1.0"
