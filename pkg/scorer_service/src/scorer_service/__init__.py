"""Remote scorer service: trainable goal-step inference and step-ordering
classifiers behind the shared wire protocol."""

from .model import PairClassifier, ServiceConfig, load_model, save_model
from .server import ScorerServer, answer_batch, answer_payload, serve_stdio
from .train import pair_accuracy, train

__version__ = "0.1.0"
