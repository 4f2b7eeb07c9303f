"""The training loop.

"""

from __future__ import annotations

import logging
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from ..appearance import Aabb
from ..core.counters import CounterCollection
from ..core.errors import DatasetError, NumericFault
from ..datasets import DatasetManifest, ViewRecord, save_checkpoint, write_mask
from ..diffcore import Tape, no_grad
from ..gaussians import DensifyStats, GaussianCloud, densify_and_prune
from ..metrics import PSNR_CAP, psnr
from ..transient import predict_mask
from .losses import total_loss
from .model import WildGaussianModel
from .optim import Adam
from .spec import TrainConfig


__all__ = [
    "HistoryRow",
    "Trainer",
    "train",
    "CLOUD_GROUPS",
]


CLOUD_GROUPS = {
    "means": "lr_means",
    "log_scales": "lr_scales",
    "rotations": "lr_rotations",
    "opacity_logits": "lr_opacity",
    "features": "lr_features",
}

_LOSS_COUNTERS = ("loss_image", "loss_mask", "loss_depth", "lambda_mask", "psnr")


@dataclass(slots=True)
class HistoryRow:
    """Interval means of one metrics-log line."""
    iteration: int
    loss_image: float
    loss_mask: float
    loss_depth: float
    lambda_mask: float
    psnr: float

    @staticmethod
    def header() -> str:
        return "\t".join(item.name for item in fields(HistoryRow))

    def to_tsv(self) -> str:
        return "\t".join(
            str(value) if isinstance(value, int) else f"{value:.6f}"
            for value in astuple(self)
        )


class Trainer:
    """Optimizes a `WildGaussianModel` on the training views of a dataset.

    Parameters
    ----------
    dataset : DatasetManifest
    config : TrainConfig
    name : str, optional
        Suffix of the trainer's logger, ``splatlab.training.<name>``.

    Attributes
    ----------
    model : WildGaussianModel
    optimizer : Adam
    extent : float
        Camera extent of the training views; scales the learning rate of
        the means and the clone/split size threshold.
    history : list of HistoryRow
    counters : CounterCollection
        Transient sums of the loss components over the current logging
        interval, and persistent tallies of rolled-back steps and
        densification changes.
    """

    def __init__(self, dataset: DatasetManifest, config: TrainConfig, *, name: str = "trainer") -> None:
        if not dataset.train:
            raise DatasetError(dataset.root, "no training views")
        self.dataset = dataset
        self.config = config
        self.logger = logging.getLogger(f"{__package__}.{name}")
        self.rng = np.random.default_rng(config.seed)

        cloud = GaussianCloud.from_points(dataset.points, self.rng)
        aabb = Aabb.from_points(dataset.points, crop_ratio=config.crop_ratio)
        self.model = WildGaussianModel(cloud, config, aabb, self.rng)
        self.extent = dataset.camera_extent()
        self.optimizer = Adam(self._groups())
        self.stats = DensifyStats(len(cloud))
        self.history: list[HistoryRow] = []
        self.iteration = 0
        self._order: Iterator[int] = iter(())

        self.counters = CounterCollection(self)
        self.counters.add_counters(*_LOSS_COUNTERS)
        self.counters.add_counters("steps", type_=int)
        self.counters.add_counters("rolled_back", "cloned", "split", "pruned", type_=int, persistent=True)

        self.logger.info(
            "initialized %d Gaussians; extent %.3f; box %s",
            len(cloud), self.extent, aabb,
        )

    def __repr__(self) -> str:
        return f"Trainer(iteration={self.iteration}, model={self.model!r})"


    ##################
    # Helper Methods #
    ##################

    def _groups(self) -> dict:
        cloud = self.model.cloud.parameters()
        groups = {
            name: ({name: cloud[name]}, getattr(self.config, lr))
            for name, lr in CLOUD_GROUPS.items()
        }
        groups["means"] = (groups["means"][0], self.config.lr_means * self.extent)
        networks = {
            name: tensor for name, tensor in self.model.parameters().items()
            if name != "fallback"
        }
        groups["networks"] = (networks, self.config.lr_networks)
        groups["fallback"] = ({"fallback": self.model.fallback}, self.config.lr_fallback)
        return groups

    def _next_view(self) -> ViewRecord:
        """Training views in seeded random epochs without replacement."""
        index = next(self._order, None)
        if index is None:
            self._order = iter(self.rng.permutation(self.dataset.train).tolist())
            index = next(self._order)
        return self.dataset.views[index]

    def _densify_now(self, iteration: int) -> bool:
        spec = self.config.densify_spec()
        return (
            (iteration + 1) % spec.interval == 0
            and iteration < spec.until_fraction * self.config.iterations
        )

    def _densify(self) -> None:
        result = densify_and_prune(
            self.model.cloud, self.stats, self.config.densify_spec(), self.extent, self.rng
        )
        if result.changed:
            for group in CLOUD_GROUPS:
                self.optimizer.remap(group, result.source, result.fresh)
            self.counters.increment("cloned", result.cloned)
            self.counters.increment("split", result.split)
            self.counters.increment("pruned", result.pruned)
        self.stats = DensifyStats(len(self.model.cloud))

    def _log_row(self, iteration: int, sink: IO[str] | None) -> None:
        if self.counters["steps"]:
            row = HistoryRow(iteration=iteration, **self.counters.means(*_LOSS_COUNTERS))
            self.history.append(row)
            self.logger.info("%s", row.to_tsv())
            if sink is not None:
                sink.write(row.to_tsv() + "\n")
                sink.flush()
        self.counters.reset_transient()


    ###########
    # Methods #
    ###########

    def step(self, iteration: int) -> bool:
        """One optimization step; False if it was rolled back."""
        config = self.config
        view = self._next_view()
        if iteration == config.warmup_iters and config.warmup_iters > 0:
            self.logger.info("warm-up finished at iteration %d", iteration)

        self.optimizer.zero_grad()
        try:
            with Tape() as tape:
                parsed = self.model.build_context(
                    view.image, view.camera, local=not config.in_warmup(iteration)
                )
                render = self.model.render(view.camera, parsed.context, track_means2d=True)
                loss, parts = total_loss(
                    render, view.image, parsed.mask, view.depth, config, iteration
                )
            tape.backward(loss)
        except NumericFault as e:
            self.optimizer.zero_grad()
            self.counters.increment("rolled_back")
            self.logger.warning("iteration %d rolled back: %s", iteration, e)
            return False

        if iteration < config.densify_until * config.iterations:
            self.stats.accumulate(
                render.visible, render.means2d.grad, view.camera.width, view.camera.height
            )
        self.optimizer.step()

        self.counters.update(
            loss_image=parts.image,
            loss_mask=parts.mask,
            loss_depth=parts.depth,
            lambda_mask=parts.lambda_mask,
            psnr=psnr(render.color.values, view.image, cap=PSNR_CAP),
            steps=1,
        )
        self.logger.debug(
            "iteration %d view %s: total %.6f", iteration, view.name, parts.total
        )
        return True

    def run(self, out_dir: str | Path | None = None) -> list[HistoryRow]:
        """Trains for the configured iterations.

        With `out_dir`, the metrics log is written to ``metrics.tsv`` and
        periodic checkpoints to ``checkpoint_NNNNNN.wgs``.
        """
        config = self.config
        sink = None
        if out_dir is not None:
            out_dir = Path(out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            sink = (out_dir / "metrics.tsv").open("w", encoding="utf-8")
            sink.write(HistoryRow.header() + "\n")
        try:
            for iteration in range(config.iterations):
                self.iteration = iteration
                self.step(iteration)
                if self._densify_now(iteration):
                    self._densify()
                last = iteration == config.iterations - 1
                if (iteration + 1) % config.log_interval == 0 or last:
                    self._log_row(iteration, sink)
                if out_dir is not None and config.checkpoint_interval and (
                    (iteration + 1) % config.checkpoint_interval == 0
                ):
                    save_checkpoint(out_dir / f"checkpoint_{iteration + 1:06d}.wgs", self.model.state())
        finally:
            if sink is not None:
                sink.close()
        if self.counters["rolled_back"]:
            self.logger.warning("%d iterations were rolled back", self.counters["rolled_back"])
        return self.history

    def dump_masks(self, out_dir: str | Path) -> None:
        """Writes every training view's predicted mask to ``<out_dir>/masks``."""
        masks = Path(out_dir) / "masks"
        masks.mkdir(parents=True, exist_ok=True)
        with no_grad():
            for view in self.dataset.train_views:
                write_mask(masks / f"{view.name}.png", predict_mask(view.image, self.model.parser).values)


def train(
    dataset: DatasetManifest,
    config: TrainConfig,
    out_dir: str | Path | None = None,
    *,
    dump_masks: bool = False,
    name: str = "trainer",
) -> tuple[WildGaussianModel, list[HistoryRow]]:
    """Trains a model and, with `out_dir`, writes its artifacts.

    Besides the files written by `Trainer.run`, the output directory
    receives ``config.txt``, the final ``model.wgs`` and optionally the
    predicted masks.
    """
    trainer = Trainer(dataset, config, name=name)
    history = trainer.run(out_dir)
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "config.txt").write_text(config.to_text(), encoding="utf-8")
        save_checkpoint(out_dir / "model.wgs", trainer.model.state())
        if dump_masks:
            trainer.dump_masks(out_dir)
    return trainer.model, history
