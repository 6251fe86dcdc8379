"""Total variation denoising with staircase, semigroup and jump-set diagnostics."""

__version__ = "0.1.0"
