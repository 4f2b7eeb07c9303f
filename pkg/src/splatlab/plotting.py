"""A collection of visualization functions.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import matplotlib.pyplot as plt
import seaborn as sns

from .training.trainer import HistoryRow


def training_curves(history: Sequence[HistoryRow], path: str | Path) -> Path:
    """Plot the loss components, the mask weight and the training PSNR over iterations.

    Parameters:
    -----------
    history : sequence of HistoryRow
        The rows of a training metrics log.
    path : str or Path
        Where the figure is saved.

    """
    iterations = [row.iteration for row in history]

    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)

    ## **Loss components**
    axes[0].plot(iterations, [row.loss_image for row in history], label="Image", color="blue")
    axes[0].plot(iterations, [row.loss_mask for row in history], label="Mask", color="black")
    axes[0].plot(iterations, [row.loss_depth for row in history], label="Depth", color="green")
    axes[0].set_ylabel("Loss")
    axes[0].set_title("Loss Components Over Training")
    axes[0].legend()
    axes[0].grid(True)

    ## **Mask weight schedule**
    axes[1].plot(iterations, [row.lambda_mask for row in history], color="black", linestyle="dashed")
    axes[1].set_ylabel("Mask Weight")
    axes[1].grid(True)

    ## **Training PSNR**
    axes[2].plot(iterations, [row.psnr for row in history], color="red")
    axes[2].set_ylabel("PSNR (dB)")
    axes[2].set_xlabel("Iteration")
    axes[2].grid(True)

    plt.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def mask_histogram(scores: Sequence[np.ndarray], path: str | Path, threshold: float = 0.5) -> Path:
    """Plot the distribution of predicted visibility scores over a set of views.
    """
    values = np.concatenate([np.ravel(s) for s in scores]) if len(scores) else np.zeros(0)

    fig, ax = plt.subplots(1, 1, figsize=(8, 3))

    sns.histplot(values, bins=50, binrange=(0.0, 1.0), ax=ax, color="blue")
    ax.axvline(threshold, linestyle="--", color="black", label="Threshold")
    ax.set_xlabel("Predicted Visibility")
    ax.set_ylabel("Number of Pixels")
    ax.set_title(f"Mask Scores ({len(scores)} Views)")
    ax.legend()

    plt.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)
