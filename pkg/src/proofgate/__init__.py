"""Independent checking of refutation proofs from saturation provers."""

__version__ = "0.1.0"
