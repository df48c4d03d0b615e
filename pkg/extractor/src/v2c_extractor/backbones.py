"""Pretrained CNN backbones and the per-frame feature extraction points.

Supported backbones and extraction layers (torchvision builds):

    vgg16         second 4096-unit fully connected layer (post-ReLU), 4096-d
    inception_v3  global average pool before the classifier head, 2048-d
    resnet50      global average pool before the classifier head, 2048-d

Each backbone uses its published inference preprocessing: shorter-side
resize, center crop, [0,1] scaling, ImageNet mean/std normalization.
Frames run through the network one at a time so results are independent of
batch composition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torchvision import models
from torchvision.transforms import functional as TF

from .errors import DataError, UsageError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    layer: str
    feature_dim: int
    resize: int
    crop: int


BACKBONES = {
    "vgg16": BackboneSpec("vgg16", "classifier fc2 (post-relu)", 4096, 256, 224),
    "inception_v3": BackboneSpec("inception_v3", "global average pool", 2048, 342, 299),
    "resnet50": BackboneSpec("resnet50", "global average pool", 2048, 256, 224),
}


def _build_model(name: str):
    if name == "vgg16":
        return models.vgg16(weights=None)
    if name == "inception_v3":
        return models.inception_v3(weights=None, aux_logits=True, init_weights=True)
    if name == "resnet50":
        return models.resnet50(weights=None)
    raise UsageError(f"unknown backbone {name!r}; expected one of {sorted(BACKBONES)}")


def _load_pretrained(name: str):
    weights = {"vgg16": models.VGG16_Weights.IMAGENET1K_V1,
               "inception_v3": models.Inception_V3_Weights.IMAGENET1K_V1,
               "resnet50": models.ResNet50_Weights.IMAGENET1K_V1}[name]
    builder = {"vgg16": models.vgg16, "inception_v3": models.inception_v3,
               "resnet50": models.resnet50}[name]
    try:
        return builder(weights=weights)
    except Exception as exc:
        raise DataError(
            f"pretrained {name} weights are not available locally and could not "
            f"be fetched ({exc}); pass --weights PATH or --random-weights SEED"
        ) from exc


class FeatureBackbone:
    """A frozen backbone with a forward hook on its extraction layer."""

    def __init__(self, spec: BackboneSpec, model, weights_label: str):
        self.spec = spec
        self.weights_label = weights_label
        self._model = model.eval()
        self._captured = {}
        layer = {"vgg16": lambda m: m.classifier[4],
                 "inception_v3": lambda m: m.avgpool,
                 "resnet50": lambda m: m.avgpool}[spec.name](model)
        layer.register_forward_hook(
            lambda module, inputs, output: self._captured.__setitem__("out", output))

    @classmethod
    def build(cls, name: str, weights_path=None, random_seed=None) -> "FeatureBackbone":
        if name not in BACKBONES:
            raise UsageError(f"unknown backbone {name!r}; expected one of {sorted(BACKBONES)}")
        if weights_path is not None and random_seed is not None:
            raise UsageError("--weights and --random-weights are mutually exclusive")
        spec = BACKBONES[name]
        if random_seed is not None:
            torch.manual_seed(random_seed)
            model = _build_model(name)
            label = f"random:{random_seed}"
        elif weights_path is not None:
            model = _build_model(name)
            try:
                state = torch.load(weights_path, map_location="cpu")
            except Exception as exc:
                raise DataError(f"cannot read weights {weights_path}: {exc}") from exc
            model.load_state_dict(state)
            label = f"file:{weights_path}"
        else:
            model = _load_pretrained(name)
            label = "torchvision:IMAGENET1K_V1"
        return cls(spec, model, label)

    def _preprocess(self, image) -> torch.Tensor:
        tensor = TF.to_tensor(image.convert("RGB"))
        tensor = TF.resize(tensor, self.spec.resize, antialias=True)
        tensor = TF.center_crop(tensor, self.spec.crop)
        return TF.normalize(tensor, IMAGENET_MEAN, IMAGENET_STD)

    def _forward(self, tensor: torch.Tensor) -> np.ndarray:
        with torch.no_grad():
            self._model(tensor.unsqueeze(0))
        out = self._captured["out"].reshape(-1)
        if out.numel() != self.spec.feature_dim:
            raise DataError(
                f"{self.spec.name}: captured {out.numel()} values, "
                f"expected {self.spec.feature_dim}"
            )
        return out.numpy().astype(np.float32)

    def features(self, image) -> np.ndarray:
        """Feature vector of one frame (a PIL image)."""
        return self._forward(self._preprocess(image))

    def pad_feature(self) -> np.ndarray:
        """Feature of the artificial mean-pixel frame.

        The frame every pixel of which equals the dataset mean color is,
        after normalization, the all-zero input tensor.
        """
        mean_image = torch.empty(3, self.spec.crop, self.spec.crop)
        for c, value in enumerate(IMAGENET_MEAN):
            mean_image[c] = value
        return self._forward(TF.normalize(mean_image, IMAGENET_MEAN, IMAGENET_STD))
