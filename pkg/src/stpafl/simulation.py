"""Round-by-round federated learning orchestration.

Clients [0, n_malicious) are malicious. Data-level attacks corrupt those
clients' datasets once at setup; model-level attacks fire every round.
Updates are always processed in ascending client-id order so that parallel
local training cannot change the aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import attacks, data, models
from .aggregation import AggregationRule, apply_rule
from .attacks import AttackSpec
from .models import TrainConfig
from .stpa import MomentumState, StpaConfig, stpa_round
from .vectors import ClientUpdate


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass(frozen=True)
class BlobsDataConfig:
    kind: str = "blobs"
    n_classes: int = 10
    dim: int = 20
    samples_per_class: int = 200
    test_samples_per_class: int = 50
    spread: float = 0.5


@dataclass(frozen=True)
class IdxDataConfig:
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str
    kind: str = "idx"


@dataclass(frozen=True)
class CsvDataConfig:
    train_path: str
    test_path: str
    kind: str = "csv"


@dataclass(frozen=True)
class PartitionConfig:
    scheme: str = "iid"  # iid | noniid_shards
    shards_per_client: int = 2
    shard_size: int = 300

    def __post_init__(self):
        if self.scheme not in ("iid", "noniid_shards"):
            raise ValueError(f"unknown partition scheme: {self.scheme}")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "linear"  # linear | mlp
    hidden: int = 200

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ValueError(f"unknown model kind: {self.kind}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str  # cross_silo | cross_device
    n_clients: int
    n_malicious: int
    clients_per_round: int
    rounds: int
    seed: int
    attack: AttackSpec = AttackSpec()
    rule: AggregationRule = AggregationRule("fed_avg")
    train: TrainConfig = TrainConfig()
    stpa: StpaConfig = StpaConfig()
    model: ModelConfig = ModelConfig()
    data: BlobsDataConfig | IdxDataConfig | CsvDataConfig = BlobsDataConfig()
    partition: PartitionConfig = PartitionConfig()

    def __post_init__(self):
        if self.scenario not in ("cross_silo", "cross_device"):
            raise ValueError(f"unknown scenario: {self.scenario}")
        if self.n_clients < 1:
            raise ValueError("n_clients must be >= 1")
        if not 0 <= self.n_malicious < self.n_clients:
            raise ValueError("n_malicious must be in [0, n_clients)")
        if not 1 <= self.clients_per_round <= self.n_clients:
            raise ValueError("clients_per_round must be in [1, n_clients]")
        if self.scenario == "cross_silo" and self.clients_per_round != self.n_clients:
            raise ValueError("cross_silo requires clients_per_round == n_clients")
        if self.rounds < 0:
            raise ValueError("rounds must be nonnegative")


@dataclass
class RoundLog:
    round: int
    selected: list[int]
    malicious_selected: int
    benign_kept: int
    alpha: float | None
    eta: float | None
    discarded: bool
    test_error_pct: float

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "selected": self.selected,
            "malicious_selected": self.malicious_selected,
            "benign_kept": self.benign_kept,
            "alpha": self.alpha,
            "eta": self.eta,
            "discarded": self.discarded,
            "test_error_pct": self.test_error_pct,
        }


@dataclass
class ExperimentState:
    global_model: np.ndarray
    momentum: MomentumState
    round_index: int
    select_rng: np.random.Generator = field(repr=False, default=None)


def select_clients(round_index: int, cfg: ScenarioConfig, rng: np.random.Generator) -> list[int]:
    """Full roster in cross-silo; sorted uniform sample in cross-device."""
    if cfg.scenario == "cross_silo":
        return list(range(cfg.n_clients))
    chosen = rng.choice(cfg.n_clients, size=cfg.clients_per_round, replace=False)
    return sorted(int(c) for c in chosen)


def build_data(cfg: ScenarioConfig) -> tuple[data.LabeledDataset, data.LabeledDataset]:
    """Train/test datasets. Blobs share centroids by splitting one generation."""
    dc = cfg.data
    if dc.kind == "blobs":
        per_class = dc.samples_per_class + dc.test_samples_per_class
        full = data.generate_blobs(dc.n_classes, dc.dim, per_class, dc.spread, cfg.seed)
        train_idx = []
        test_idx = []
        for c in range(dc.n_classes):
            lo = c * per_class
            train_idx.extend(range(lo, lo + dc.samples_per_class))
            test_idx.extend(range(lo + dc.samples_per_class, lo + per_class))
        return full.subset(train_idx), full.subset(test_idx)
    if dc.kind == "idx":
        return (
            data.load_idx(dc.train_images, dc.train_labels),
            data.load_idx(dc.test_images, dc.test_labels),
        )
    if dc.kind == "csv":
        return data.load_csv(dc.train_path), data.load_csv(dc.test_path)
    raise ValueError(f"unknown data kind: {dc.kind}")


def setup_client_datasets(cfg: ScenarioConfig, train: data.LabeledDataset) -> list:
    """Partition the training data and corrupt the malicious clients' shares."""
    if cfg.partition.scheme == "iid":
        plan = data.partition_iid(train, cfg.n_clients, derive_seed(cfg.seed, 2))
    else:
        plan = data.partition_noniid_shards(
            train,
            cfg.n_clients,
            cfg.partition.shards_per_client,
            cfg.partition.shard_size,
            derive_seed(cfg.seed, 2),
        )
    datasets = [train.subset(idx) for idx in plan.assignments]
    if cfg.attack.kind in attacks.DATA_ATTACKS:
        for cid in range(cfg.n_malicious):
            datasets[cid] = attacks.apply_data_attack(
                cfg.attack, datasets[cid], derive_seed(cfg.seed, 3, cid)
            )
    return datasets


def run_round(
    state: ExperimentState,
    cfg: ScenarioConfig,
    model,
    datasets: list,
    test_set: data.LabeledDataset,
) -> tuple[ExperimentState, RoundLog]:
    w_t = state.global_model
    r = state.round_index
    selected = select_clients(r, cfg, state.select_rng)
    malicious = {cid for cid in selected if cid < cfg.n_malicious}
    model_level = cfg.attack.kind in ("byzantine_gaussian",) + attacks.OMNISCIENT_ATTACKS
    trainers = [cid for cid in selected if not (model_level and cid in malicious)]

    local = {}
    for cid in trainers:
        local[cid] = models.local_train(
            model, w_t, datasets[cid], cfg.train, seed=derive_seed(cfg.seed, 4, r, cid)
        )

    submissions = dict(local)
    if cfg.attack.kind == "byzantine_gaussian":
        for cid in sorted(malicious):
            submissions[cid] = attacks.gaussian_byzantine_update(
                w_t, cfg.attack.sigma, derive_seed(cfg.seed, 5, r, cid)
            )
    elif cfg.attack.kind in attacks.OMNISCIENT_ATTACKS:
        benign_grads = [w_t - local[cid] for cid in trainers]
        if not benign_grads:
            raise RuntimeError(f"round {r}: no honest client selected under {cfg.attack.kind}")
        mal_ids = sorted(malicious)
        if mal_ids:
            if cfg.attack.kind == "ipm":
                grads = attacks.ipm_updates(benign_grads, cfg.attack.epsilon, len(mal_ids))
            else:
                grads = attacks.alie_updates(benign_grads, cfg.attack.epsilon, len(mal_ids))
            for cid, g in zip(mal_ids, grads):
                submissions[cid] = w_t - g

    updates = [
        ClientUpdate(r, slot, submissions[cid], len(datasets[cid]))
        for slot, cid in enumerate(selected)
    ]

    alpha = None
    eta = None
    discarded = False
    if cfg.rule.kind == "stpa":
        outcome, state.momentum = stpa_round(w_t, updates, state.momentum, cfg.stpa)
        new_model = outcome.new_model
        benign_kept = outcome.benign_count
        alpha = outcome.alpha
        eta = outcome.eta
        discarded = outcome.discarded
    else:
        new_model = apply_rule(cfg.rule, updates)
        benign_kept = len(updates)

    log = RoundLog(
        round=r,
        selected=selected,
        malicious_selected=len(malicious),
        benign_kept=benign_kept,
        alpha=alpha,
        eta=eta,
        discarded=discarded,
        test_error_pct=models.evaluate_error(model, new_model, test_set),
    )
    state.global_model = new_model
    state.round_index = r + 1
    return state, log


def iter_experiment(cfg: ScenarioConfig):
    """Yield one RoundLog per round; see run_experiment for the list form."""
    train, test = build_data(cfg)
    datasets = setup_client_datasets(cfg, train)
    model = models.make_model(
        cfg.model.kind, train.n_features, train.n_classes, cfg.model.hidden
    )
    init_rng = np.random.default_rng(derive_seed(cfg.seed, 0))
    state = ExperimentState(
        global_model=model.init_params(init_rng),
        momentum=MomentumState.zeros(model.dim),
        round_index=0,
        select_rng=np.random.default_rng(derive_seed(cfg.seed, 1)),
    )
    for _ in range(cfg.rounds):
        state, log = run_round(state, cfg, model, datasets, test)
        yield log


def run_experiment(cfg: ScenarioConfig) -> list[RoundLog]:
    return list(iter_experiment(cfg))
