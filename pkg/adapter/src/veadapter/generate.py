"""Image generation from premise prompts.

One square image per prompt.  Generation is wrapped behind a single
interface: either an external command template (a local diffusion tool)
renders each prompt, or the built-in procedural renderer produces a
deterministic placeholder so pipelines can be rehearsed offline.  Jobs are
resumable: prompts whose output file already exists are skipped, and
per-prompt failures are recorded without stopping the job.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from PIL import Image, ImageDraw

from .jobs import JobError, read_spec
from .writer import write_jsonl


@dataclass
class GenResult:
    generated: int
    skipped_existing: int
    failures: list = field(default_factory=list)  # (id, reason)


def procedural_image(prompt: str, size: int) -> Image.Image:
    """Deterministic placeholder: shapes and colors keyed to the prompt."""
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    image = Image.new("RGB", (size, size), tuple(digest[:3]))
    draw = ImageDraw.Draw(image)
    for i in range(6):
        chunk = digest[3 + i * 4 : 3 + i * 4 + 4]
        x = chunk[0] * size // 256
        y = chunk[1] * size // 256
        r = 8 + chunk[2] * size // 512
        color = (chunk[3], chunk[0] ^ 255, chunk[1])
        draw.ellipse([x - r, y - r, x + r, y + r], fill=color)
    return image


def _render_external(command_template: str, prompt: str, out_path: Path, size: int):
    command = [
        part.format(prompt=prompt, out=str(out_path), width=size, height=size)
        for part in shlex.split(command_template)
    ]
    proc = subprocess.run(command, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"generator exited {proc.returncode}: {proc.stderr.strip()[:200]}"
        )
    if not out_path.exists():
        raise RuntimeError("generator produced no output file")


def generate_images(
    prompts_path,
    out_dir,
    size: int = 512,
    command_template: Optional[str] = None,
    checkpoint_id: Optional[str] = None,
    manifest_out=None,
    spec_out=None,
    failures_out=None,
) -> GenResult:
    """Render one image per prompt record (id, prompt, split, parent_id).

    Writes a child-image manifest (role generated_image with parent links)
    and an embedding spec pointing at the rendered files, both covering only
    the prompts that have an output image after the run.
    """
    if size < 1:
        raise JobError("image size must be positive")
    records = read_spec(prompts_path)
    for record in records:
        if "prompt" not in record:
            raise JobError(f"id {record['id']!r}: missing prompt")
        if "parent_id" not in record:
            raise JobError(f"id {record['id']!r}: missing parent_id")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    generated = skipped = 0
    failures = []
    ok_records = []
    for record in records:
        out_path = out_dir / f"{record['id']}.png"
        if out_path.exists():
            skipped += 1
            ok_records.append(record)
            continue
        try:
            if command_template:
                _render_external(command_template, record["prompt"], out_path, size)
            else:
                procedural_image(record["prompt"], size).save(out_path, format="PNG")
            generated += 1
            ok_records.append(record)
        except Exception as exc:
            failures.append((record["id"], str(exc)))

    if manifest_out:
        write_jsonl(
            manifest_out,
            [
                {
                    "id": r["id"],
                    "role": "generated_image",
                    "split": r.get("split", "train"),
                    "parent_id": r["parent_id"],
                    "caption": r["prompt"],
                }
                for r in ok_records
            ],
        )
    if spec_out:
        write_jsonl(
            spec_out,
            [
                {
                    "id": r["id"],
                    "path": f"{r['id']}.png",
                    "role": "generated_image",
                    "split": r.get("split", "train"),
                    "parent_id": r["parent_id"],
                    "caption": r["prompt"],
                }
                for r in ok_records
            ],
        )
    if failures_out:
        write_jsonl(
            failures_out, [{"id": i, "reason": reason} for i, reason in failures]
        )
    if checkpoint_id or command_template:
        sidecar = out_dir / "generation_provenance.json"
        sidecar.write_text(
            json.dumps(
                {
                    "checkpoint": checkpoint_id,
                    "command_template": command_template,
                    "size": size,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    return GenResult(generated=generated, skipped_existing=skipped, failures=failures)
