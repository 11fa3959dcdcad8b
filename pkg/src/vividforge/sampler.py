"""Deterministic batch planning for mixed image/video training.

Batches are homogeneous in modality. By default the modality is drawn per
batch at the 10:1 image:video ratio, tasks are drawn per sample at 3:1
addition&modification:deletion, and video batches flip a fair coin for the
keyframe-conditional flag. A strict cycle mode replaces the stochastic
modality draw with the literal 10-then-1 repetition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from vividforge.core import Task
from vividforge.errors import EmptyPoolError
from vividforge.store import Manifest

PLAN_SCHEMA = "vivid-forge/1"


@dataclass(frozen=True)
class Batch:
    modality: str  # "image" | "video"
    sample_ids: tuple[str, ...]
    tasks: tuple[str, ...]
    kive_flag: bool  # always False for image batches

    def __post_init__(self):
        if self.modality == "image" and self.kive_flag:
            raise ValueError("image batches never carry the kive flag")


@dataclass(frozen=True)
class BatchPlan:
    batches: tuple[Batch, ...]
    seed: int
    ratios: dict = field(default_factory=dict)


class _Pool:
    """Shuffled queue over one (modality, task) record-id pool.

    Draws without replacement until exhausted, then reshuffles, so small pools
    repeat across epochs rather than starving.
    """

    def __init__(self, ids: list[str], modality: str, task: str, rng: np.random.Generator):
        self.ids = list(ids)
        self.modality = modality
        self.task = task
        self._rng = rng
        self._queue: list[str] = []

    def draw(self) -> str:
        if not self.ids:
            raise EmptyPoolError(self.modality, self.task)
        if not self._queue:
            order = self._rng.permutation(len(self.ids))
            self._queue = [self.ids[i] for i in order][::-1]
        return self._queue.pop()


def plan_batches(
    image_manifest: Manifest,
    video_manifest: Manifest,
    n_batches: int,
    batch_size: int,
    seed: int,
    image_ratio: int = 10,
    video_ratio: int = 1,
    addmod_weight: int = 3,
    del_weight: int = 1,
    kive_prob: float = 0.5,
    strict_cycle: bool = False,
) -> BatchPlan:
    """Produce a fully reproducible schedule of homogeneous batches."""
    if n_batches < 1 or batch_size < 1:
        raise ValueError("n_batches and batch_size must be >= 1")
    if image_ratio < 0 or video_ratio < 0 or image_ratio + video_ratio == 0:
        raise ValueError("ratios must be non-negative and not both zero")
    if addmod_weight < 0 or del_weight < 0 or addmod_weight + del_weight == 0:
        raise ValueError("task weights must be non-negative and not both zero")

    rng = np.random.default_rng(seed)
    pools = {}
    for modality, manifest in (("image", image_manifest), ("video", video_manifest)):
        for task in Task:
            ids = [r.id for r in manifest.records if r.task == task]
            pools[(modality, task.value)] = _Pool(ids, modality, task.value, rng)

    p_image = image_ratio / (image_ratio + video_ratio)
    p_addmod = addmod_weight / (addmod_weight + del_weight)
    cycle = ["image"] * image_ratio + ["video"] * video_ratio

    batches = []
    for index in range(n_batches):
        if strict_cycle:
            modality = cycle[index % len(cycle)]
        else:
            modality = "image" if rng.random() < p_image else "video"
        kive = bool(modality == "video" and rng.random() < kive_prob)
        ids, tasks = [], []
        for _ in range(batch_size):
            task = (
                Task.ADDITION_MODIFICATION.value
                if rng.random() < p_addmod
                else Task.DELETION.value
            )
            ids.append(pools[(modality, task)].draw())
            tasks.append(task)
        batches.append(
            Batch(modality=modality, sample_ids=tuple(ids), tasks=tuple(tasks), kive_flag=kive)
        )
    ratios = {
        "image_ratio": image_ratio,
        "video_ratio": video_ratio,
        "addmod_weight": addmod_weight,
        "del_weight": del_weight,
        "kive_prob": kive_prob,
        "strict_cycle": strict_cycle,
        "batch_size": batch_size,
    }
    return BatchPlan(batches=tuple(batches), seed=seed, ratios=ratios)


def write_plan(plan: BatchPlan, path: Union[str, Path]) -> Path:
    """Newline-delimited plan: header line, then one batch per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        header = {"schema_version": PLAN_SCHEMA, "kind": "batch_plan",
                  "seed": plan.seed, "ratios": plan.ratios}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for batch in plan.batches:
            fh.write(
                json.dumps(
                    {
                        "modality": batch.modality,
                        "kive": batch.kive_flag,
                        "sample_ids": list(batch.sample_ids),
                        "tasks": list(batch.tasks),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    return path


def read_plan(path: Union[str, Path]) -> BatchPlan:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        batches = []
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            batches.append(
                Batch(
                    modality=d["modality"],
                    sample_ids=tuple(d["sample_ids"]),
                    tasks=tuple(d["tasks"]),
                    kive_flag=d["kive"],
                )
            )
    return BatchPlan(batches=tuple(batches), seed=header["seed"], ratios=header["ratios"])
