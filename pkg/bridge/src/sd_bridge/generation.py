"""Image synthesis: feed projected embeddings straight into the diffusion
pipeline's conditioning, bypassing the tokenizer.

One image per embedding row; row i renders with seed ``job.seed + i`` and
every setting is recorded in the index JSON so runs are auditable and
repeatable. Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import BridgeError, MissingDependencyError
from .jobs import GenerateJob

_PIPELINES: dict[str, object] = {}


def _load_pipeline(model_id: str):
    if model_id in _PIPELINES:
        return _PIPELINES[model_id]
    try:
        import torch
        from diffusers import StableDiffusionPipeline
    except ImportError as exc:
        raise MissingDependencyError(
            "image generation needs torch and diffusers"
        ) from exc
    device = "cuda" if torch.cuda.is_available() else "cpu"
    pipe = StableDiffusionPipeline.from_pretrained(model_id)
    pipe = pipe.to(device)
    _PIPELINES[model_id] = pipe
    return pipe


def _read_lines(path: str | None) -> list[str] | None:
    if path is None:
        return None
    return Path(path).read_text(encoding="utf-8").splitlines()


def generate(job: GenerateJob) -> Path:
    """Run a generate job; returns the index JSON path.

    An empty embeddings matrix yields an empty directory with a valid
    index and never touches the model stack.
    """
    embeddings = np.load(job.embeddings)
    if embeddings.ndim != 2:
        raise BridgeError(f"{job.embeddings}: expected a 2-D embedding matrix")
    rows, dim = embeddings.shape
    expected = job.token_count * job.hidden_size
    if rows > 0 and dim != expected:
        raise BridgeError(
            f"{job.embeddings}: dim {dim} != token_count*hidden_size {expected}"
        )
    source = _read_lines(job.source_prompts)
    replaced = _read_lines(job.replaced_prompts)
    for name, lines in (("source_prompts", source), ("replaced_prompts", replaced)):
        if lines is not None and len(lines) != rows:
            raise BridgeError(f"{name} has {len(lines)} lines for {rows} rows")
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    if rows > 0:
        pipe = _load_pipeline(job.model)
        import torch

        for i in range(rows):
            seed = job.seed + i
            conditioning = torch.from_numpy(
                embeddings[i].reshape(1, job.token_count, job.hidden_size).astype(np.float32)
            ).to(pipe.device)
            generator = torch.Generator(device=pipe.device).manual_seed(seed)
            try:
                image = pipe(
                    prompt_embeds=conditioning,
                    num_inference_steps=job.steps,
                    guidance_scale=job.guidance_scale,
                    height=job.height,
                    width=job.width,
                    generator=generator,
                ).images[0]
            except Exception as exc:
                raise BridgeError(f"generation failed at row {i}: {exc}") from exc
            name = f"{i:06d}.png"
            tmp = out_dir / (name + ".tmp")
            image.save(tmp, format="PNG")
            os.replace(tmp, out_dir / name)
            records.append(_record(i, seed, name, source, replaced))
    else:
        records = []
    index = {
        "model": job.model,
        "settings": {
            "steps": job.steps,
            "guidance_scale": job.guidance_scale,
            "height": job.height,
            "width": job.width,
            "token_count": job.token_count,
            "hidden_size": job.hidden_size,
            "base_seed": job.seed,
        },
        "embeddings": str(job.embeddings),
        "count": rows,
        "images": records,
    }
    index_path = out_dir / "index.json"
    tmp = out_dir / "index.json.tmp"
    tmp.write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, index_path)
    return index_path


def _record(row, seed, name, source, replaced):
    record = {"row": row, "seed": seed, "file": name}
    if source is not None:
        record["source_prompt"] = source[row]
    if replaced is not None:
        record["replaced_prompt"] = replaced[row]
    return record
