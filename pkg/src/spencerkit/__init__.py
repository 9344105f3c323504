"""spencerkit: exact-arithmetic engine for extended flat model superalgebras,
their degree-2 Spencer cohomology, filtered deformations and algebraic
homogeneous-space certificates."""

__version__ = "0.1.0"

# Frozen ordering version for cochain bases; part of every cache key.
BASIS_VERSION = "1"
