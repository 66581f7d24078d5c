"""Adapter producing veval-compatible inputs: embedding stores, manifests,
and generated images.  Analysis stays in veval; this package only extracts
features and writes files."""

from .encoders import ClipEncoder, EncoderError, HashEncoder, make_encoder
from .generate import GenResult, generate_images, procedural_image
from .jobs import JobError, JobResult, embed_images, embed_texts, read_spec
from .writer import store_bytes, write_jsonl, write_provenance, write_store

__version__ = "0.1.0"

__all__ = [
    "ClipEncoder",
    "EncoderError",
    "HashEncoder",
    "make_encoder",
    "GenResult",
    "generate_images",
    "procedural_image",
    "JobError",
    "JobResult",
    "embed_images",
    "embed_texts",
    "read_spec",
    "store_bytes",
    "write_jsonl",
    "write_provenance",
    "write_store",
]
