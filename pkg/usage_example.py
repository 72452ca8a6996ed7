"""
SB-MCL Usage Example

Walks through the library on a small sine problem: generating an episode,
learning a stream with the sequential Bayesian update, meta-training an
ALPaCA head, meta-testing it against the online baseline and saving the
checkpoint. The run is sized to finish in about a minute on one core.

    PYTHONPATH=src python usage_example.py
"""
import os
import sys
import tempfile

import numpy as np

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from cli import load_checkpoint, save_checkpoint
from episodes import dump_episode, gen_sine_episode
from exceptions.sbmcl_exceptions import (
    ConfigException,
    HeadMismatchException,
    InvalidPosteriorException,
    SBMCLException,
)
from harness import MetaTrainer, baseline_online, meta_eval, sweep_generalization
from models import Domain, HeadKind, MetaConfig, StreamSpec
from posteriors import FactorizedGaussian, NoisyObservation, batch_update, seq_update


def print_separator(title=""):
    """Print a visual separator."""
    print("\n" + "=" * 60)
    if title:
        print(f" {title} ")
        print("=" * 60)


def demonstrate_posterior_updates():
    """Sequential and batch updates land on the same posterior."""
    print_separator("Sequential Bayesian Update")
    rng = np.random.default_rng(0)
    prior = FactorizedGaussian.unit(3)
    stream = [NoisyObservation(rng.normal(size=3), rng.uniform(0.5, 2.0, size=3))
              for _ in range(5)]

    state = prior
    for t, obs in enumerate(stream):
        state = seq_update(state, obs)
        mu, lam = state.numpy()
        print(f" t={t}: mu={np.round(mu, 3)} lam={np.round(lam, 3)}")

    mu_b, lam_b = batch_update(prior, stream).numpy()
    print(f" batch: mu={np.round(mu_b, 3)} lam={np.round(lam_b, 3)}")
    print(f" max difference: {np.max(np.abs(mu_b - state.numpy()[0])):.2e}")


def demonstrate_meta_learning():
    """Meta-train, meta-test and store a small ALPaCA head."""
    spec = StreamSpec(domain=Domain.SINE, num_tasks=3, shots=10, test_per_task=5, seed=1,
                      task_slots=8)
    config = MetaConfig(head=HeadKind.ALPACA, stream=spec, hidden_sizes=(32, 32), feature_dim=16,
                        steps=300, meta_batch=4, lr=3e-3, eval_episodes=32, log_every=50)

    print_separator("Episode")
    episode = gen_sine_episode(spec, 0)
    print(f" {spec.num_tasks} tasks x {spec.shots} shots -> stream of {episode.stream_length} rows")
    print(" first rows of the text dump:")
    for line in dump_episode(episode).splitlines()[:3]:
        print(f"   {line[:72]}")

    print_separator("Meta-Training")
    trainer = MetaTrainer(config)
    print(f" Trainer state: {trainer.get_state().value}")
    checkpoint = trainer.train()
    print(f" Trainer state: {trainer.get_state().value}")
    first, last = checkpoint.loss_curve[0][1], checkpoint.loss_curve[-1][1]
    print(f" Meta-loss: {first:.3f} -> {last:.3f} over {config.steps} steps")

    print_separator("Meta-Testing")
    row = meta_eval(checkpoint)
    online = baseline_online(config)
    print(f" ALPaCA  {row.metric}: {row.mean:.4f} +- {row.std:.4f}")
    print(f" online  {online.metric}: {online.mean:.4f} +- {online.std:.4f}")
    for cell in sweep_generalization(checkpoint, task_grid=[3, 6], shot_grid=[10, 20],
                                     n_episodes=16):
        print(f" K={cell.num_tasks:<2} shots={cell.shots:<2} {cell.metric}={cell.mean:.4f}")

    print_separator("Checkpoint")
    path = os.path.join(tempfile.mkdtemp(), "alpaca.ckpt")
    digest = save_checkpoint(checkpoint, path)
    restored = load_checkpoint(path)
    print(f" Saved {len(checkpoint.params)} tensors to {path} (blake2b {digest})")
    print(f" Restored bit-exact: {restored.same_params(checkpoint)}")
    return checkpoint


def demonstrate_error_scenarios(checkpoint):
    """Common misuse and the exceptions it raises."""
    print_separator("Error Handling Demonstration")

    scenarios = [
        ("Unknown config key", lambda: MetaConfig.from_dict({"stepz": 10})),
        ("Negative precision", lambda: NoisyObservation(np.zeros(1), -np.ones(1))),
        ("Checkpoint on another domain",
         lambda: meta_eval(checkpoint, StreamSpec(domain=Domain.CLASSIFY), 1)),
    ]

    for scenario_name, scenario_func in scenarios:
        try:
            print(f"\n Testing: {scenario_name}")
            scenario_func()
            print(" Expected error but none occurred")
        except (ConfigException, InvalidPosteriorException, HeadMismatchException) as e:
            print(f" Caught expected error: {type(e).__name__}: {e}")
        except SBMCLException as e:
            print(f" Unexpected error: {type(e).__name__}: {e}")


if __name__ == "__main__":
    print("Starting SB-MCL Demonstration")
    print("=" * 60)

    demonstrate_posterior_updates()
    checkpoint = demonstrate_meta_learning()
    demonstrate_error_scenarios(checkpoint)

    print_separator("Demonstration Complete")
