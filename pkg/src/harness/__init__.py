"""Meta-training, meta-evaluation, sweeps and reference baselines"""

from .workers import NUM_THREADS_ENV, worker_count, map_ordered
from .trainer import MetaTrainer, TrainerState, meta_train
from .evaluator import meta_eval, sweep_generalization, episode_scores, summarize
from .baselines import baseline_online, baseline_offline, trunk_model
from .reporting import (
    LOSS_CURVE_COLUMNS,
    metrics_csv,
    read_metrics_csv,
    write_metrics_csv,
    write_metrics_json,
    write_loss_curve_csv,
)
