"""Exact structure, flattening and pruning of small ReLU binary classifiers."""
from .errors import (DataError, NumericError, PLNNError, ShapeError, TrainingDataError,
                     UndefinedSimilarityError, ZeroVarianceError)
from .model import (PLNN, Inequality, LinearEquation, Region, configuration_of, configurations,
                    decision_boundary, forward, is_trivial, linear_equation, load_model,
                    masked_weights, predict_proba, region_inequalities, save_model, toy_network,
                    zero_activation_hyperplane)
from .optimize import LogisticFit, TrainConfig, adam_update, logistic_fit, train_plnn
from .flatten import FlatNetwork, active_configurations, flatten, load_flat
from .prune import boundary_cosine, neuron_criterion, prune_flat, prune_sweep, verify_theorem2
from .analysis import accuracy, auc, paired_t, region_census
from .data import Dataset, balance_classes, gen_synthetic, load_csv, normalizer_fit, save_csv, split

__version__ = "0.1.0"
