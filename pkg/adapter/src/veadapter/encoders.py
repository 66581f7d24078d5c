"""Feature encoders.

Two families, selected by an identifier string:

``hash:<dim>``
    Deterministic offline encoder for tests, dry runs, and air-gapped
    pipelines.  A vector is derived from a SHA-256 digest of the input
    content (decoded pixels for images, UTF-8 bytes for text), so identical
    content always maps to identical bytes, independent of file names or
    compression.

``clip:<model>``
    Real CLIP features via ``transformers`` (install the ``clip`` extra).
    The model identifier is recorded in the provenance sidecar.
"""

from __future__ import annotations

import hashlib

import numpy as np


class EncoderError(RuntimeError):
    pass


class HashEncoder:
    """Seeded-RNG pseudo-features keyed by a content digest."""

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderError("hash encoder dimension must be positive")
        self.dim = dim
        self.name = f"hash:{dim}"

    def _vector(self, payload: bytes) -> np.ndarray:
        digest = hashlib.sha256(payload).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim).astype(np.float32)

    def embed_texts(self, texts) -> np.ndarray:
        return np.stack([self._vector(b"text\x00" + t.encode("utf-8")) for t in texts])

    def embed_images(self, images) -> np.ndarray:
        rows = []
        for image in images:
            rgb = image.convert("RGB")
            header = f"image\x00{rgb.width}x{rgb.height}\x00".encode("ascii")
            rows.append(self._vector(header + rgb.tobytes()))
        return np.stack(rows)


class ClipEncoder:
    """CLIP image/text features through the transformers checkpoint."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderError(
                "clip encoders need the optional dependencies: "
                "pip install 'veadapter[clip]'"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id).to(device).eval()
            self._processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderError(f"cannot load CLIP checkpoint {model_id!r}: {exc}") from exc
        self._torch = torch
        self._device = device
        self.name = f"clip:{model_id}"
        self.dim = int(self._model.config.projection_dim)

    def embed_texts(self, texts) -> np.ndarray:
        inputs = self._processor(
            text=list(texts), return_tensors="pt", padding=True, truncation=True
        ).to(self._device)
        with self._torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return features.cpu().numpy().astype(np.float32)

    def embed_images(self, images) -> np.ndarray:
        inputs = self._processor(images=list(images), return_tensors="pt").to(self._device)
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features.cpu().numpy().astype(np.float32)


def make_encoder(identifier: str):
    """Build an encoder from an identifier like ``hash:64`` or ``clip:<model>``."""
    kind, _, arg = identifier.partition(":")
    if kind == "hash":
        try:
            return HashEncoder(int(arg))
        except ValueError:
            raise EncoderError(f"bad hash encoder dimension {arg!r}") from None
    if kind == "clip":
        if not arg:
            raise EncoderError("clip encoder needs a model id, e.g. clip:openai/clip-vit-base-patch32")
        return ClipEncoder(arg)
    raise EncoderError(f"unknown encoder {identifier!r} (expected hash:<dim> or clip:<model>)")
