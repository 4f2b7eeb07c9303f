"""Implementations of the ``splatlab`` subcommands.

Each command takes the parsed arguments and returns an exit status.

"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np

from .appearance import blend_appearance
from .datasets import (
    DatasetManifest,
    SplitSpecification,
    load_checkpoint,
    load_dataset,
    read_image,
    write_image,
)
from .diffcore import no_grad
from .metrics import mask_recall, psnr, ssim
from .plotting import mask_histogram, training_curves
from .scenegen import SceneSpecification, generate
from .training import TrainConfig, VARIANTS, WildGaussianModel, train
from .core.errors import ContractViolation


__all__ = [
    "COMMANDS",
    "run_gen",
    "run_train",
    "run_render",
    "run_transfer",
    "run_eval",
]

logger = logging.getLogger(__name__)


def _split(args: argparse.Namespace) -> SplitSpecification:
    return SplitSpecification(
        test_fraction=args.test_fraction,
        seed=args.split_seed,
        test_indices=args.test_views,
    )


def _view(dataset: DatasetManifest, index: int, flag: str):
    if index >= len(dataset):
        raise ContractViolation(f"'{flag}' must be below the view count {len(dataset)}; got {index}")
    return dataset.views[index]


def _load_model(path: Path) -> WildGaussianModel:
    model = WildGaussianModel.from_state(load_checkpoint(path))
    logger.info("loaded %r from %s", model, path)
    return model


def run_gen(args: argparse.Namespace) -> int:
    spec = SceneSpecification.from_json(args.spec) if args.spec else SceneSpecification()
    generate(spec, args.out)
    return 0


def run_train(args: argparse.Namespace) -> int:
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    if args.variant is not None:
        if args.variant not in VARIANTS:
            raise ContractViolation(f"'variant' must be one of {sorted(VARIANTS)}; got {args.variant!r}")
        config = config.with_updates(**VARIANTS[args.variant])
    if args.seed is not None:
        config = config.with_updates(seed=args.seed)

    dataset = load_dataset(args.data, _split(args))
    _, history = train(dataset, config, args.out, dump_masks=args.dump_masks)
    if args.plot:
        training_curves(history, args.out / "curves.png")
    return 0


def run_render(args: argparse.Namespace) -> int:
    model = _load_model(args.ckpt)
    dataset = load_dataset(args.data, SplitSpecification(test_fraction=0.0))
    target = _view(dataset, args.view, "view")
    with no_grad():
        if args.ref_image is not None:
            reference = read_image(args.ref_image)
            if reference.shape[:2] != target.camera.shape:
                raise ContractViolation(
                    f"'ref-image' must be {target.camera.shape}; got {reference.shape[:2]}"
                )
            parsed = model.build_context(reference, target.camera)
        else:
            source = _view(dataset, args.ref, "ref")
            parsed = model.build_context(source.image, source.camera)
        render = model.render(target.camera, parsed.context)
    write_image(args.out, render.color.values)
    logger.info("wrote %s", args.out)
    return 0


def _sweep_path(out: Path, alpha: float, count: int) -> Path:
    if count == 1:
        return out
    return out.with_name(f"{out.stem}_a{alpha:.3f}{out.suffix}")


def run_transfer(args: argparse.Namespace) -> int:
    model = _load_model(args.ckpt)
    dataset = load_dataset(args.data, SplitSpecification(test_fraction=0.0))
    target = _view(dataset, args.view, "view")
    first, second = _view(dataset, args.ref_a, "ref-a"), _view(dataset, args.ref_b, "ref-b")
    with no_grad():
        context_a = model.build_context(first.image, first.camera).context
        context_b = model.build_context(second.image, second.camera).context
        for alpha in args.alpha:
            render = model.render(target.camera, blend_appearance(context_a, context_b, alpha))
            path = _sweep_path(args.out, alpha, len(args.alpha))
            write_image(path, render.color.values)
            logger.info("wrote %s (alpha %.3f)", path, alpha)
    return 0


def run_eval(args: argparse.Namespace) -> int:
    model = _load_model(args.ckpt)
    dataset = load_dataset(args.data, _split(args))
    views = dataset.split_views(args.split)

    lines = ["view\tpsnr\tssim"]
    scores, masks, recalls = [], [], []
    with no_grad():
        for view in views:
            parsed = model.build_context(view.image, view.camera)
            render = model.render(view.camera, parsed.context, exact=True)
            row = (psnr(render.color.values, view.image), ssim(render.color.values, view.image))
            scores.append(row)
            lines.append(f"{view.name}\t{row[0]:.6f}\t{row[1]:.6f}")
            masks.append(parsed.mask.values)
            if view.gt_mask is not None:
                recalls.append(mask_recall(parsed.mask.values, view.gt_mask, model.config.mask_threshold))

    if scores:
        means = np.mean(np.array(scores), axis=0)
        lines.append(f"mean\t{means[0]:.6f}\t{means[1]:.6f}")
        logger.info("%s split: PSNR %.3f dB, SSIM %.4f over %d views", args.split, means[0], means[1], len(scores))
    else:
        logger.warning("the %s split has no views; writing an empty report", args.split)
    if recalls:
        recalls = np.array(recalls)
        occluder, static = (
            float(np.mean(column[~np.isnan(column)])) if (~np.isnan(column)).any() else float("nan")
            for column in recalls.T
        )
        logger.info("mask recall: occluders %.3f, static %.3f", occluder, static)

    args.report.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.plot is not None:
        mask_histogram(masks, args.plot, model.config.mask_threshold)
    return 0


COMMANDS = {
    "gen": run_gen,
    "train": run_train,
    "render": run_render,
    "transfer": run_transfer,
    "eval": run_eval,
}
