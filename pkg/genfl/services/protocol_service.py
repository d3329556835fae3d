"""
GenFL round state machine.

One round: sample clients, grow the generated pool, broadcast the global
model, train locally on the sampled clients, train the augmented model on
the pool, combine them with the weighted policy and evaluate on the
server's held-out test set. FL-only and AIGC-only are the same machine
with one of the two weights at zero.
"""
import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from genfl.errors import EmptyDatasetError, RoundError, ShapeMismatchError
from genfl.schemas.dataset import LabelHistogram
from genfl.schemas.experiment import ExperimentConfig
from genfl.schemas.generator import GenPool
from genfl.schemas.metrics import RoundMetrics
from genfl.schemas.model import ModelParams, TrainSpec
from genfl.schemas.protocol import AggregationPolicy, ClientState, ServerState
from genfl.services.cost_service import cost_service
from genfl.services.data_service import data_service
from genfl.services.generator_service import generator_service
from genfl.services.nn_service import nn_service
from genfl.utils.rng import derive_seed, make_stream

logger = logging.getLogger(__name__)


class ProtocolService:
    def share_labels(self, clients: Sequence[ClientState]) -> List[LabelHistogram]:
        """Each client's shared histogram, indexed by client id"""
        ordered = sorted(clients, key=lambda c: c.id)
        return [client.shared_histogram for client in ordered]

    def sample_clients(self, num_clients: int, clients_per_round: int, round_index: int, seed: int) -> List[int]:
        """
        Uniform sample without replacement, drawn from a stream keyed on
        (seed, round_index) so rounds are independent of each other.

        Returns:
            Sorted client ids
        """
        if clients_per_round > num_clients:
            raise ValueError(f"clients_per_round ({clients_per_round}) exceeds num_clients ({num_clients})")
        if clients_per_round < 0:
            raise ValueError("clients_per_round must be non-negative")
        rng = make_stream(seed, "sample", round_index)
        chosen = rng.choice(num_clients, size=clients_per_round, replace=False)
        return sorted(int(c) for c in chosen)

    def compute_rho(self, selected: Sequence[ClientState]) -> np.ndarray:
        """rho_n = |D_n| / sum |D_m| over the sampled cohort"""
        if not selected:
            raise EmptyDatasetError("cannot weight an empty cohort")
        sizes = np.asarray([client.num_samples for client in selected], dtype=np.float64)
        if np.any(sizes <= 0):
            raise EmptyDatasetError("every selected client needs local data")
        return sizes / sizes.sum()

    def train_augmented(self, global_model: ModelParams, gen_pool: GenPool, spec: TrainSpec,
                        rng_stream: np.random.Generator) -> Optional[ModelParams]:
        """
        Train the augmented model on the generated pool, starting from the
        current global model.

        Returns:
            The augmented model, or None when the pool is empty
        """
        if len(gen_pool) == 0:
            return None
        return nn_service.train(global_model, gen_pool.dataset, spec, rng_stream)

    def aggregate(self, locals_: Sequence[ModelParams], rho: Sequence[float], omega_a: Optional[ModelParams],
                  policy: AggregationPolicy) -> ModelParams:
        """
        new = kappa1 * sum(rho_n * local_n) + kappa2 * omega_a

        Terms are accumulated in the order given. kappa2 = 0 is plain FedAvg and
        kappa1 = 0 returns omega_a.

        Raises:
            ShapeMismatchError: parameter shapes or weight count differ
            ValueError: kappa2 > 0 without an augmented model, or rho not summing to 1
        """
        if policy.kappa2 > 0 and omega_a is None:
            raise ValueError("kappa2 > 0 needs an augmented model; fall back to FedAvg first")
        if policy.kappa1 == 0:
            return omega_a.copy()

        if not locals_:
            raise EmptyDatasetError("aggregation needs at least one local model")
        weights = np.asarray(rho, dtype=np.float64)
        if weights.size != len(locals_):
            raise ShapeMismatchError(f"{len(locals_)} local models but {weights.size} weights")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"rho must sum to 1 (got {weights.sum()!r})")

        if omega_a is not None:
            locals_[0].check_compatible(omega_a)

        average = locals_[0].scale(weights[0])
        for weight, model in zip(weights[1:], locals_[1:]):
            average = average + model.scale(weight)

        if policy.kappa2 == 0:
            return average.scale(policy.kappa1)
        return average.scale(policy.kappa1) + omega_a.scale(policy.kappa2)

    def _train_cohort(self, selected: Sequence[ClientState], global_model: ModelParams, spec: TrainSpec,
                      round_index: int, executor: Optional[Executor]) -> List[ModelParams]:
        """Local training of the cohort; results come back in client-id order"""
        def task(client: ClientState) -> ModelParams:
            logger.debug(f"Round {round_index}: client {client.id} training on {client.num_samples} samples")
            return client.local_update(global_model, spec, round_index)

        if executor is None:
            return [task(client) for client in selected]
        return list(executor.map(task, selected))

    def run_round(self, server: ServerState, clients: Sequence[ClientState], config: ExperimentConfig,
                  executor: Optional[Executor] = None) -> Tuple[ServerState, RoundMetrics]:
        """
        Advance the server by one round.

        Raises:
            RoundError: anything failed; the error carries the unchanged prior state
        """
        round_no = server.round_index + 1
        try:
            return self._run_round(server, clients, config, executor, round_no)
        except RoundError:
            raise
        except Exception as exc:
            logger.error(f"Round {round_no} failed: {exc}")
            raise RoundError(round_no, server, exc) from exc

    def _run_round(self, server: ServerState, clients: Sequence[ClientState], config: ExperimentConfig,
                   executor: Optional[Executor], round_no: int) -> Tuple[ServerState, RoundMetrics]:
        policy = config.policy()
        mode = policy.effective_mode
        spec = config.train_spec()
        by_id = {client.id: client for client in clients}

        # 1. client sampling
        selected_ids = self.sample_clients(len(clients), config.clients_per_round, round_no, config.seed)
        selected = [by_id[i] for i in selected_ids]

        # 2. label selection, generation, accrual
        pool = server.gen_pool
        generated = 0
        if policy.uses_generator:
            labels = generator_service.select_labels(server.client_histograms, pool, config.rate_per_round)
            if labels:
                fresh = generator_service.generate(
                    labels, config.generator_config(), server.geometry, make_stream(config.seed, "generate", round_no)
                )
                generated = len(fresh)
                pool = generator_service.accrue(pool, fresh, config.cap_per_class)
                logger.debug(f"Round {round_no}: generated {generated}, pool size {len(pool)}")

        # 3-4. broadcast + local training
        locals_: List[ModelParams] = []
        if policy.uses_clients:
            locals_ = self._train_cohort(selected, server.global_model, spec, round_no, executor)

        # 5. augmented model
        omega_a = None
        if policy.uses_generator:
            omega_a = self.train_augmented(server.global_model, pool, spec, make_stream(config.seed, "augment", round_no))

        # 6. aggregation (with the empty-pool fallbacks)
        if omega_a is None and policy.uses_generator:
            logger.info(f"Round {round_no}: generated pool is empty, no augmented model this round")
        if not policy.uses_clients:
            new_model = omega_a.copy() if omega_a is not None else server.global_model
        else:
            round_policy = policy if omega_a is not None else policy.fedavg_fallback()
            new_model = self.aggregate(locals_, self.compute_rho(selected), omega_a, round_policy)
        if not new_model.is_finite():
            raise ArithmeticError("aggregated model has non-finite parameters")

        # 7. evaluation + metrics
        accuracy, loss = nn_service.evaluate(new_model, server.test_set)
        time_sec, energy = cost_service.round_cost(
            selected_sizes=[c.num_samples for c in selected] if policy.uses_clients else [],
            model_param_count=new_model.num_params,
            gen_samples_this_round=generated,
            spec=spec,
            cost=config.cost_config(),
            augmented_samples=len(pool) if omega_a is not None else 0,
        )
        emd = data_service.mean_emd([c.shared_histogram for c in selected], server.population_histogram)

        metrics = RoundMetrics(
            round=round_no,
            test_accuracy=accuracy,
            test_loss=loss,
            mean_client_emd=emd,
            round_time_sec=time_sec,
            round_energy_joules=energy,
            pool_size=len(pool),
            mode=mode.value,
        )
        new_server = replace(server, global_model=new_model, gen_pool=pool, round_index=round_no)
        return new_server, metrics

    def build_simulation(self, config: ExperimentConfig) -> Tuple[ServerState, List[ClientState]]:
        """Dataset, hold-out split, Dirichlet partition, clients and initial server"""
        dataset = data_service.make_synthetic_dataset(
            config.num_classes, config.feature_dim, config.samples_per_class,
            config.cluster_spread, config.seed, config.center_separation,
        )
        geometry = data_service.class_geometry(
            config.num_classes, config.feature_dim, config.cluster_spread, config.center_separation, config.seed
        )
        train_set, test_set = data_service.split_holdout(dataset, config.test_fraction, config.seed)
        plan = data_service.dirichlet_partition(train_set, config.num_clients, config.alpha, config.seed)

        clients = []
        for client_id, indices in enumerate(plan.assignments):
            local = train_set.subset(indices)
            clients.append(ClientState(
                id=client_id,
                local_data=local,
                shared_histogram=data_service.label_histogram(local),
                rng_seed_base=config.seed,
            ))

        model = nn_service.init_model(config.layer_shapes(), derive_seed(config.seed, "init"))
        server = ServerState(
            global_model=model,
            gen_pool=GenPool.empty(config.num_classes, config.feature_dim, config.cap_per_class),
            round_index=0,
            client_histograms=tuple(self.share_labels(clients)),
            test_set=test_set,
            geometry=geometry,
        )
        logger.info(
            f"Simulation ready: {len(clients)} clients, {len(train_set)} train / {len(test_set)} test samples, "
            f"alpha={config.alpha}, partition draws={plan.attempts}"
        )
        return server, clients

    def initial_metrics(self, server: ServerState, clients: Sequence[ClientState], config: ExperimentConfig) -> RoundMetrics:
        """Round-0 record: the untrained model, no cost, mean EMD over all clients"""
        accuracy, loss = nn_service.evaluate(server.global_model, server.test_set)
        return RoundMetrics(
            round=0,
            test_accuracy=accuracy,
            test_loss=loss,
            mean_client_emd=data_service.mean_emd([c.shared_histogram for c in clients], server.population_histogram),
            round_time_sec=0.0,
            round_energy_joules=0.0,
            pool_size=0,
            mode=config.policy().effective_mode.value,
        )

    def run_experiment(self, config: ExperimentConfig,
                       on_round: Optional[Callable[[RoundMetrics], None]] = None) -> List[RoundMetrics]:
        """
        Build everything from config and run config.rounds rounds.

        Returns:
            Round-0 record followed by one record per round
        """
        server, clients = self.build_simulation(config)
        trace = [self.initial_metrics(server, clients, config)]
        if on_round:
            on_round(trace[0])

        executor = ThreadPoolExecutor(max_workers=config.client_workers) if config.client_workers > 1 else None
        try:
            for _ in range(config.rounds):
                server, metrics = self.run_round(server, clients, config, executor)
                trace.append(metrics)
                logger.info(
                    f"Round {metrics.round}/{config.rounds} [{metrics.mode}] "
                    f"acc={metrics.test_accuracy:.4f} loss={metrics.test_loss:.4f} pool={metrics.pool_size}"
                )
                if on_round:
                    on_round(metrics)
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return trace


protocol_service = ProtocolService()
