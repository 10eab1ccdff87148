"""Knowledge-graph link prediction with type-constrained and LCWA training.

Three latent-variable models (bilinear tensor factorization, translational
embeddings, and a multiway neural network) trained and evaluated under three
relation-semantics regimes: unconstrained, schema type-constraints, and the
local closed-world assumption.
"""

from .graph import Triple, TripleStore, TypeAssignment, Vocabulary, load_graph
from .models import (
    Hyperparams,
    MwnnParams,
    RescalParams,
    TransEParams,
    init_params,
    load_checkpoint,
    mwnn_score,
    rescal_score,
    save_checkpoint,
    transe_score,
)
from .sampling import corrupt_for_training, sample_negatives
from .semantics import (
    RelationSemantics,
    derive_lcwa,
    lcwa_semantics,
    resolve_schema_constraints,
)
from .splits import SplitBundle, split_dataset
from .evaluation import EvalReport, auprc, auroc, evaluate, score_all
from .train_als import AlsState, als_sweep, fit_rescal, rescal_loss
from .train_sgd import SgdConfig, fit_sgd, mwnn_batch_step, transe_batch_step

__version__ = "0.1.0"
