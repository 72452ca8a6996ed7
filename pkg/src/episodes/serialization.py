"""
Episode text format for debugging.

    # sbmcl-episode domain=sine tasks=2 shots=3 test_per_task=1 seed=0 index=0 ...
    <task_id> train <x_1> ... <x_d> | <y_1> ... <y_m>
    <task_id> test  <x_1> ... <x_d> | <y_1> ... <y_m>

Density episodes omit the "| y" part. Floats are written with repr, so a dump
loads back to identical arrays.
"""
from typing import List

import numpy as np

from models.episode import Episode
from models.stream import Domain, StreamSpec

HEADER = "# sbmcl-episode"


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def dump_episode(episode: Episode) -> str:
    spec = episode.spec
    header = (f"{HEADER} domain={spec.domain.value} tasks={spec.num_tasks} shots={spec.shots} "
              f"test_per_task={spec.test_per_task} seed={spec.seed} index={episode.index} "
              f"input_dim={spec.input_dim} noise_scale={spec.noise_scale} "
              f"task_slots={spec.task_slots}")
    lines = [header]
    for split, xs, ys, ids in (("train", episode.train_x, episode.train_y, episode.train_task_ids),
                               ("test", episode.test_x, episode.test_y, episode.test_task_ids)):
        for i in range(len(xs)):
            row = f"{int(ids[i])} {split} {_fmt(xs[i])}"
            if ys is not None:
                row += f" | {_fmt(ys[i])}"
            lines.append(row)
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict:
    if not line.startswith(HEADER):
        raise ValueError("missing episode header")
    fields = dict(item.split("=", 1) for item in line[len(HEADER):].split())
    return fields


def load_episode(text: str) -> Episode:
    """
    Parse a dump produced by `dump_episode`.

    Raises:
        ValueError: If the text is not a valid episode dump
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty episode text")
    fields = _parse_header(lines[0])
    none_or = lambda v, cast: None if v == "None" else cast(v)  # noqa: E731
    spec = StreamSpec(
        domain=Domain(fields["domain"]),
        num_tasks=int(fields["tasks"]),
        shots=int(fields["shots"]),
        test_per_task=int(fields["test_per_task"]),
        seed=int(fields["seed"]),
        input_dim=none_or(fields.get("input_dim", "None"), int),
        noise_scale=none_or(fields.get("noise_scale", "None"), float),
        task_slots=int(fields.get("task_slots", 64)),
    )

    rows = {"train": ([], [], []), "test": ([], [], [])}
    for line in lines[1:]:
        head, _, tail = line.partition("|")
        parts = head.split()
        task_id, split = int(parts[0]), parts[1]
        if split not in rows:
            raise ValueError(f"unknown split {split!r}")
        xs, ys, ids = rows[split]
        ids.append(task_id)
        xs.append([float(v) for v in parts[2:]])
        if tail.strip():
            ys.append([float(v) for v in tail.split()])

    def targets(ys: List[list]):
        if spec.domain is Domain.DENSITY:
            return None
        arr = np.array(ys, dtype=np.float64)
        if spec.domain is Domain.CLASSIFY:
            return arr[:, 0].astype(np.int64)
        return arr

    train_x, train_y, train_ids = rows["train"]
    test_x, test_y, test_ids = rows["test"]
    return Episode(
        spec=spec,
        train_x=np.array(train_x, dtype=np.float64),
        train_y=targets(train_y),
        train_task_ids=np.array(train_ids, dtype=np.int64),
        test_x=np.array(test_x, dtype=np.float64),
        test_y=targets(test_y),
        test_task_ids=np.array(test_ids, dtype=np.int64),
        index=int(fields.get("index", 0)),
    )
