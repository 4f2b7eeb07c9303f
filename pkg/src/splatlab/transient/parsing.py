"""The parsing network: visibility masks and global appearance codes.

"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import MLP, Module, Tensor, UNet
from ..diffcore import functional as F


__all__ = [
    "ParsingNet",
    "ParsingOutput",
    "predict_mask",
]


@dataclass(slots=True)
class ParsingOutput:
    mask: Tensor
    global_embedding: Tensor


class ParsingNet(Module):
    """A three-stage UNet with a sigmoid mask head.

    The global average of the bottleneck feeds a small MLP that produces
    the global appearance embedding. Images whose sides are not
    multiples of 8 are edge-padded before the encoder and the mask is
    cropped back to the input size.

    Parameters
    ----------
    rng : numpy.random.Generator
    widths : tuple of int, optional
        Stem width followed by the width of each downsampling stage.
    embed_dim : int, optional
    """

    def __init__(
        self,
        rng: np.random.Generator,
        widths: tuple[int, ...] = (8, 16, 32, 32),
        embed_dim: int = 16,
    ) -> None:
        if len(widths) != 4:
            raise ContractViolation(f"'widths' must hold 4 entries; got {widths!r}")
        self.unet = UNet(3, 1, widths, rng, head_scale=0.01)
        self.global_mlp = MLP((widths[-1], 2 * embed_dim, embed_dim), rng)
        self.embed_dim = embed_dim

    def _prepare(self, image: np.ndarray) -> Tensor:
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3 or image.shape[2] != 3:
            raise ContractViolation(f"'image' must be (H, W, 3); got {image.shape}")
        factor = self.unet.factor
        h, w = image.shape[:2]
        pad_h, pad_w = -h % factor, -w % factor
        # edge padding only extends the border; the crop in `parse` returns a mask
        # of the input size, so the losses never see padded pixels
        if pad_h or pad_w:
            image = np.pad(image, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
        return Tensor(image.transpose(2, 0, 1)[None])

    def parse(self, image: np.ndarray) -> ParsingOutput:
        h, w = np.shape(image)[:2]
        logits, bottleneck = self.unet(self._prepare(image))
        mask = F.sigmoid(logits[0, 0, :h, :w])
        pooled = F.global_avg_pool(bottleneck)
        embedding = F.reshape(self.global_mlp(pooled), (self.embed_dim,))
        return ParsingOutput(mask=mask, global_embedding=embedding)

    def forward(self, image: np.ndarray) -> ParsingOutput:
        return self.parse(image)


def predict_mask(image: np.ndarray, net: ParsingNet) -> Tensor:
    """(H, W) visibility scores in (0, 1); high for static content."""
    return net.parse(image).mask
