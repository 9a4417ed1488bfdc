"""Actor-critic search over the hidden-layer count of a ReLU regressor."""

from .config import ExperimentConfig, dump_config, load_config
from .data import SupervisedDataset, load_boston, load_csv, load_iris, normalize, split
from .env import EnvConfig, Evaluation, TargetEnv, evaluate
from .estimators import DatasetEncoder, DepthSearchRegressor, FModelRegressor, ZScoreScaler
from .fmodel import FModel, encode_dataset, pretrain_experiment
from .nn import Adam, Conv2D, Dense, MaxPool2D, Network, init_network, load_network, save_network
from .rl import ActorCritic, RLConfig, ReplayBuffer, run_episode
from .surrogate import SurrogateEnv

__all__ = [
    "ActorCritic", "Adam", "Conv2D", "DatasetEncoder", "Dense", "DepthSearchRegressor",
    "EnvConfig", "Evaluation", "ExperimentConfig", "FModel", "FModelRegressor", "MaxPool2D",
    "Network", "RLConfig", "ReplayBuffer", "SupervisedDataset", "SurrogateEnv", "TargetEnv",
    "ZScoreScaler", "dump_config", "encode_dataset", "evaluate", "init_network", "load_boston",
    "load_config", "load_csv", "load_iris", "load_network", "normalize", "pretrain_experiment",
    "run_episode", "save_network", "split",
]
__version__ = "0.1.0"
