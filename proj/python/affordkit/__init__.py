"""Affordance grounding toolkit: python bindings over the C++ core."""

from ._core import (  # noqa: F401
    EmbeddingTable,
    LossWeights,
    Model,
    SplitSpec,
    build_prompt,
    build_random_split,
    class_similarity,
    evaluate_batch,
    focal_affordance_loss,
    generate_synthetic,
    kld,
    load_canonical_splits,
    load_embedding_table,
    load_map_png,
    load_map_sidecar,
    load_split_file,
    minmax_normalize,
    normalize_to_distribution,
    nss,
    resize_bilinear,
    save_map_png,
    save_map_sidecar,
    save_split_file,
    sim,
    split_difficulty,
    synthetic_archetype_catalog,
    target_answer_template,
    text_loss,
    total_loss,
    train_run,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
