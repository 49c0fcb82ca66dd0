"""Fair classification with semi-private sensitive attributes."""

try:
    from ._fairsp import (
        Dataset,
        Model,
        evaluate,
        flip_prob,
        partition,
        randomize,
        run_correction,
        run_single,
        synthesize_biased,
        train,
        verify_ldp_ratio,
    )
except ImportError:  # in-tree builds put the module next to the package
    from _fairsp import (
        Dataset,
        Model,
        evaluate,
        flip_prob,
        partition,
        randomize,
        run_correction,
        run_single,
        synthesize_biased,
        train,
        verify_ldp_ratio,
    )

__all__ = [
    "Dataset",
    "Model",
    "evaluate",
    "flip_prob",
    "partition",
    "randomize",
    "run_correction",
    "run_single",
    "synthesize_biased",
    "train",
    "verify_ldp_ratio",
]
