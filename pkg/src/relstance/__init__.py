"""Social-relation-aware (dis)agreement classification.

Builds an inductive typed relation graph from temporally ordered
comment-reply interactions, pretrains a relational graph autoencoder over
it, and fuses the resulting relation features with text features to classify
agree / disagree / neutral.
"""

from .classifier import (
    ClassifierConfig,
    ClassifierParams,
    predict,
    predict_records,
    relation_feature,
    train_classifier,
    training_loss,
)
from .config import RunConfig, build_config
from .gae import (
    GaeConfig,
    GaeParams,
    Triplet,
    build_training_triplets,
    encode_nodes,
    finite_diff_check,
    gae_loss,
    heldout_link_accuracy,
    score_triplet,
    train_gae,
)
from .graph import (
    PER_EDGE,
    RelationGraph,
    RelationType,
    Snapshot,
    aggregate_relations,
    build_graph,
    build_snapshots,
    extract_subgraph,
    inject_interaction_edges,
)
from .ingest import (
    LABELS,
    DatasetSplit,
    InteractionRecord,
    parse_dataset,
    temporal_split,
    write_dataset,
)
from .metrics import MetricsReport, bucket_by_length, compute_metrics
from .evaluation import run_pipeline, run_protocol
from .textfeat import (
    EmbeddingTable,
    hash_featurize,
    load_embedding_table,
    save_embedding_table,
    token_length,
)

__version__ = "0.1.0"
