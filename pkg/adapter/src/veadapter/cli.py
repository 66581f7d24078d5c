"""veadapter command line: embed-images, embed-texts, generate-images."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderError, make_encoder
from .generate import generate_images
from .jobs import JobError, embed_images, embed_texts


def cmd_embed_images(args) -> int:
    encoder = make_encoder(args.encoder)
    result = embed_images(
        args.spec,
        encoder,
        args.out_store,
        args.out_manifest,
        images_root=args.images_root,
        batch_size=args.batch_size,
        on_error=args.on_error,
        provenance_path=args.provenance,
    )
    print(f"embedded {result.count} images (dim {result.dim}), "
          f"skipped {len(result.skipped)}")
    for sid, reason in result.skipped:
        print(f"  skipped {sid}: {reason}", file=sys.stderr)
    return 0


def cmd_embed_texts(args) -> int:
    encoder = make_encoder(args.encoder)
    result = embed_texts(
        args.spec,
        encoder,
        args.out_store,
        args.out_manifest,
        batch_size=args.batch_size,
        empty_text=args.empty_text,
        provenance_path=args.provenance,
    )
    print(f"embedded {result.count} texts (dim {result.dim})")
    return 0


def cmd_generate_images(args) -> int:
    result = generate_images(
        args.prompts,
        args.out_dir,
        size=args.size,
        command_template=args.command,
        checkpoint_id=args.checkpoint_id,
        manifest_out=args.manifest_out,
        spec_out=args.spec_out,
        failures_out=args.failures_out,
    )
    print(f"generated {result.generated}, already present {result.skipped_existing}, "
          f"failed {len(result.failures)}")
    for sid, reason in result.failures:
        print(f"  failed {sid}: {reason}", file=sys.stderr)
    return 0 if not result.failures else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veadapter",
        description="Extract embeddings and generate images for veval corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed-images", help="embed image files into a store")
    p.add_argument("--spec", required=True, help="JSONL with id/path/split records")
    p.add_argument("--images-root", help="base directory for relative image paths")
    p.add_argument("--encoder", default="hash:512", help="hash:<dim> or clip:<model>")
    p.add_argument("--out-store", required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--on-error", choices=["abort", "skip"], default="abort")
    p.add_argument("--provenance", help="sidecar JSON path")
    p.set_defaults(func=cmd_embed_images)

    p = sub.add_parser("embed-texts", help="embed hypothesis texts into a store")
    p.add_argument("--spec", required=True, help="JSONL with id/text/split records")
    p.add_argument("--encoder", default="hash:512")
    p.add_argument("--out-store", required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--empty-text", choices=["error", "encode"], default="error")
    p.add_argument("--provenance", help="sidecar JSON path")
    p.set_defaults(func=cmd_embed_texts)

    p = sub.add_parser("generate-images", help="render one image per prompt")
    p.add_argument("--prompts", required=True, help="JSONL with id/prompt/parent_id")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--command", help="external generator template with "
                   "{prompt} {out} {width} {height} placeholders")
    p.add_argument("--checkpoint-id", help="recorded in the provenance sidecar")
    p.add_argument("--manifest-out", help="child-image manifest JSONL")
    p.add_argument("--spec-out", help="embed-images spec JSONL for the outputs")
    p.add_argument("--failures-out", help="JSONL of failed prompts")
    p.set_defaults(func=cmd_generate_images)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (JobError, EncoderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
