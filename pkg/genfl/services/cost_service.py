"""
Simulated wall-clock time and energy of one round.

Clients work in parallel (round time is the slowest client). The server's
generation and augmented training overlap client training, so the two
paths combine with max. Aggregation is free.
"""
import logging
from typing import Sequence, Tuple

from genfl.schemas.experiment import CostConfig
from genfl.schemas.model import TrainSpec

logger = logging.getLogger(__name__)

# forward + backward FLOPs per trained sample, per parameter
FLOPS_PER_PARAM_PER_SAMPLE = 2


class CostService:
    def training_flops(self, param_count: int, samples: int, epochs: int) -> float:
        return float(FLOPS_PER_PARAM_PER_SAMPLE * param_count * samples * epochs)

    def transfer_seconds(self, param_count: int, bytes_per_param: int, bits_per_sec: float) -> float:
        return param_count * bytes_per_param * 8 / bits_per_sec

    def round_cost(self, selected_sizes: Sequence[int], model_param_count: int, gen_samples_this_round: int,
                   spec: TrainSpec, cost: CostConfig, augmented_samples: int = 0) -> Tuple[float, float]:
        """
        Time and energy of one round.

        Args:
            selected_sizes: Local dataset size of every client that trains this round
            model_param_count: Number of model parameters
            gen_samples_this_round: Samples the server generates this round
            spec: Training spec (epochs)
            cost: Rates and power draws
            augmented_samples: Pool size the server trains its augmented model on

        Returns:
            (time_sec, energy_joules)
        """
        if min(list(selected_sizes) + [model_param_count, gen_samples_this_round, augmented_samples], default=0) < 0:
            raise ValueError("round_cost inputs must be non-negative")

        download = self.transfer_seconds(model_param_count, cost.bytes_per_param, cost.downlink_bps)
        upload = self.transfer_seconds(model_param_count, cost.bytes_per_param, cost.uplink_bps)

        client_times = []
        for samples in selected_sizes:
            compute = self.training_flops(model_param_count, samples, spec.epochs) / cost.client_flops_per_sec
            client_times.append(download + compute + upload)
        client_path = max(client_times, default=0.0)

        generation = gen_samples_this_round * cost.gen_cost_per_sample / cost.server_flops_per_sec
        augmented = self.training_flops(model_param_count, augmented_samples, spec.epochs) / cost.server_flops_per_sec
        server_path = generation + augmented

        time_sec = max(client_path, server_path)
        energy = cost.client_power_watts * sum(client_times) + cost.server_power_watts * server_path
        return time_sec, energy


cost_service = CostService()
