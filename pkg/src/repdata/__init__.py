"""Representative datasets: dominating-set reduction of labeled point clouds,
persistence-based quality measures and perceptron error certificates."""
from .dataset import (
    LabeledDataset,
    SamplerConfig,
    load_csv,
    load_iris_binary,
    sample_interlaced_torus,
    sample_labeled_circle,
    save_csv,
    validate_dataset,
)
from .errors import ContractError, DataError, MissingClassError, NotASubsetError
from .metric import directed_hausdorff, dual_norm, hausdorff, optimal_epsilon_subset, pairwise_distances
from .reduce import (
    ProximityGraph,
    ReductionReport,
    build_proximity_graph,
    greedy_dominating_set,
    lambda_balance_audit,
    reduce_dataset,
)
from .persistence import (
    EpsilonInterval,
    PersistenceDiagram,
    bottleneck_distance,
    epsilon_interval,
    persistence_diagram,
    persistence_diagrams,
    vietoris_rips,
)
from .perceptron import TrainConfig, TrainTrace, accuracy, classify, init_weights, mse_loss, train
from .bounds import bound_report, epsilon_for_delta, loss_gap_bound, margin, rho

__version__ = "0.1.0"
