"""Operator-facing command line for minting and applying editions.

Subcommands: gen-prompts, build-reducer, build-subspace, project, diagnose
(shell|similarity|evr), interpolate, traverse. Long-form flags only; a JSON
--config file can supply any of them, with explicit flags winning. Exit
codes are stable for scripting: 0 success, 2 configuration error, 3 data
error, 4 I/O error. All sampling randomness flows from an explicit --seed;
outputs are byte-identical across reruns with identical inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, prompt_forge, spectral, subspace as subspace_mod, tensor_store
from .errors import ConfigError, DataError, EditionerError, FormatError, IntegrityError, IoError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4


def _sidecar(path: str | Path, suffix: str) -> Path:
    p = Path(path)
    stem = p.name[: -len(p.suffix)] if p.suffix else p.name
    return p.with_name(stem + suffix)


def _load_wordlist(path: str | None) -> prompt_forge.WordList:
    if path is None:
        return prompt_forge.WordList.default()
    return prompt_forge.WordList.from_file(path)


def _require(args, names: list[str]) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) is None]
    if missing:
        raise ConfigError(f"missing required flag(s): {', '.join('--' + n for n in missing)}")


# ---------------------------------------------------------------------------
# commands


def cmd_gen_prompts(args) -> int:
    words = _load_wordlist(args.wordlist)
    corpus = prompt_forge.generate_all(words)
    concept = None
    if args.concept is not None:
        concept = prompt_forge.parse_concept(args.concept, words)
    if args.eval:
        if concept is None:
            raise ConfigError("--eval requires --concept")
        if args.seed is None:
            raise ConfigError("--eval samples randomly and requires --seed")
        per_category = args.per_category if args.per_category is not None else 1000
        corpus = prompt_forge.evaluation_set(corpus, concept, per_category, args.seed)
    elif concept is not None:
        corpus = prompt_forge.filter_concept(corpus, concept)
    _require(args, ["out"])
    corpus.write_text(args.out)
    manifest = {
        "kind": "corpus",
        "count": len(corpus),
        "slot_sizes": {s.value: words.size(s) for s in prompt_forge.SLOT_ORDER},
        "concept": (
            {"slot": concept.slot.value, "word": concept.word} if concept else None
        ),
        "eval": bool(args.eval),
        "per_category": args.per_category if args.eval else None,
        "seed": args.seed,
        "sha256": corpus.content_hash(),
        "format_version": 1,
    }
    _sidecar(args.out, ".manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(corpus)} prompts to {args.out}")
    return EXIT_OK


def cmd_build_reducer(args) -> int:
    _require(args, ["embeddings", "target-dim", "out"])
    m, d = tensor_store.matrix_info(args.embeddings)
    if not 1 <= args.target_dim < min(m, d):
        raise ConfigError(
            f"--target-dim must satisfy 1 <= target_dim < min(m, d) = {min(m, d)}, "
            f"got {args.target_dim}"
        )
    spectrum = spectral.spectrum_from_file(
        args.embeddings, center=False, chunk_rows=args.chunk_rows
    )
    if spectrum.total_variance <= 0:
        raise DataError("embeddings have zero total variance")
    ratio = float(spectrum.values[: args.target_dim].sum() / spectrum.total_variance)
    space = spectral.ReducedSpace(
        spectrum.axes[: args.target_dim],
        captured_variance_ratio=ratio,
        created_from=tuple(tensor_store.provenance(args.embeddings)),
    )
    tensor_store.write_reducer(space, args.out)
    print(f"reduced_dim {space.reduced_dim} captured_variance_ratio {ratio:.6f}")
    return EXIT_OK


def cmd_build_subspace(args) -> int:
    _require(args, ["embeddings", "concept", "out"])
    concept = prompt_forge.parse_concept(args.concept)
    sources = [args.embeddings]
    if args.reducer is not None:
        reducer = tensor_store.read_reducer(args.reducer)
        sources.append(args.reducer)
        blocks = [
            block.astype(np.float64) @ reducer.basis.T
            for block in tensor_store.iter_matrix_chunks(args.embeddings, args.chunk_rows)
        ]
        data = np.vstack(blocks)
    else:
        data = tensor_store.read_matrix(args.embeddings, chunk_rows=args.chunk_rows)
    sub = subspace_mod.build_subspace(
        data,
        concept,
        threshold=args.threshold,
        created_from=tensor_store.provenance(*sources),
    )
    tensor_store.write_subspace(sub, args.out)
    print(f"k {sub.k} cumulative_ratio {sub.cumulative_ratio():.6f}")
    return EXIT_OK


def cmd_project(args) -> int:
    _require(args, ["embeddings", "subspace", "out"])
    sub = tensor_store.read_subspace(args.subspace)
    reducer = None
    if args.reducer is not None:
        reducer = tensor_store.read_reducer(args.reducer)
        if reducer.reduced_dim != sub.working_dim:
            raise ConfigError(
                f"reducer reduced_dim {reducer.reduced_dim} != subspace working dim "
                f"{sub.working_dim}"
            )
    m, d = tensor_store.matrix_info(args.embeddings)
    expect_in = reducer.ambient_dim if reducer is not None else sub.working_dim
    if d != expect_in:
        raise ConfigError(f"embeddings dim {d} != expected input dim {expect_in}")
    out_dim = reducer.ambient_dim if reducer is not None else sub.working_dim
    mode = args.mode if args.mode is not None else "compensated"
    on_orthogonal = args.on_orthogonal if args.on_orthogonal is not None else "zero"
    etas = np.full(m, np.nan)
    orthogonal: list[int] = []
    count = m if on_orthogonal == "zero" else None
    written = 0
    with tensor_store.MatrixWriter(args.out, dim=out_dim, count=count) as writer:
        offset = 0
        for block in tensor_store.iter_matrix_chunks(args.embeddings, args.chunk_rows):
            work = block.astype(np.float64)
            if reducer is not None:
                work = work @ reducer.basis.T
            projected, report = subspace_mod.project_batch(
                work, sub, mode=mode, on_orthogonal=on_orthogonal
            )
            etas[offset : offset + block.shape[0]] = report.etas
            orthogonal.extend(offset + i for i in report.orthogonal_rows)
            if reducer is not None:
                projected = projected @ reducer.basis
            writer.append(projected.astype(np.float32))
            written += projected.shape[0]
            offset += block.shape[0]
    valid = etas[np.isfinite(etas)]
    eta_report = {
        "kind": "eta_report",
        "params": {"mode": mode, "on_orthogonal": on_orthogonal},
        "summary": {
            "rows_in": int(m),
            "rows_out": int(written),
            "orthogonal_rows": orthogonal,
            "eta_mean": float(valid.mean()) if valid.size else None,
            "eta_std": float(valid.std()) if valid.size else None,
            "eta_min": float(valid.min()) if valid.size else None,
            "eta_max": float(valid.max()) if valid.size else None,
        },
    }
    _sidecar(args.out, ".eta.json").write_text(
        json.dumps(eta_report, indent=2) + "\n", encoding="utf-8"
    )
    created = [args.embeddings, args.subspace]
    if args.reducer is not None:
        created.append(args.reducer)
    manifest = tensor_store.ArtifactManifest(
        kind="embeddings",
        dim=out_dim,
        created_from=tensor_store.provenance(*created),
    )
    tensor_store.write_manifest(manifest, args.out)
    for row in orthogonal:
        print(f"warning: row {row} is orthogonal to the subspace", file=sys.stderr)
    if orthogonal and args.strict:
        raise DataError(f"{len(orthogonal)} rows orthogonal to the subspace (--strict)")
    print(f"projected {written} rows to {args.out} (mode {mode})")
    return EXIT_OK


def _diag_shell(args) -> int:
    _require(args, ["embeddings", "out"])
    matrix = tensor_store.read_matrix(args.embeddings)
    report = diagnostics.shell_report(matrix)
    diagnostics.write_report(
        args.out,
        kind="shell",
        params={"embeddings": str(args.embeddings), "note": diagnostics.COSINE_NOTE},
        summary=report.to_dict(),
    )
    if args.histogram is not None:
        bins = args.bins if args.bins is not None else 50
        diagnostics.write_histogram_csv(args.histogram, diagnostics.row_norms(matrix), bins)
    print(
        f"norms: mean {report.mean_norm:.6f} std {report.std_norm:.6f} "
        f"spread {report.relative_spread:.6f}"
    )
    print(f"report {args.out}")
    return EXIT_OK


def _diag_similarity(args) -> int:
    _require(args, ["inputs", "projected", "replaced", "out"])
    triples, summary = diagnostics.similarity_table(
        tensor_store.read_matrix(args.inputs),
        tensor_store.read_matrix(args.projected),
        tensor_store.read_matrix(args.replaced),
    )
    rows = None
    if args.rows:
        rows = [
            {
                "index": t.index,
                "d_input_replace": t.d_input_replace,
                "d_project_replace": t.d_project_replace,
            }
            for t in triples
        ]
    diagnostics.write_report(
        args.out,
        kind="similarity",
        params={
            "inputs": str(args.inputs),
            "projected": str(args.projected),
            "replaced": str(args.replaced),
            "note": diagnostics.COSINE_NOTE,
        },
        summary=summary,
        rows=rows,
    )
    print(
        "d(input, replace) %.6f +/- %.6f ; d(project, replace) %.6f +/- %.6f"
        % (
            summary["d_input_replace_mean"],
            summary["d_input_replace_std"],
            summary["d_project_replace_mean"],
            summary["d_project_replace_std"],
        )
    )
    print(f"report {args.out}")
    return EXIT_OK


def _diag_evr(args) -> int:
    _require(args, ["out"])
    if (args.embeddings is None) == (args.values is None):
        raise ConfigError("provide exactly one of --embeddings or --values")
    if args.values is not None:
        try:
            values = json.loads(Path(args.values).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load --values {args.values}: {exc}") from exc
        source = str(args.values)
    else:
        spectrum = spectral.spectrum_from_file(
            args.embeddings, center=bool(args.center), chunk_rows=args.chunk_rows
        )
        values = spectrum.values
        source = str(args.embeddings)
    curve = diagnostics.evr_curve(values)
    diagnostics.write_report(
        args.out,
        kind="evr",
        params={"source": source, "centered": bool(args.center)},
        summary={"rank": len(curve), "final_ratio": curve[-1][1]},
        rows=[{"k": k, "cumulative_ratio": r} for k, r in curve],
    )
    head = ", ".join(f"k={k}: {r:.6f}" for k, r in curve[:5])
    print(f"evr curve ({len(curve)} ranks): {head}{' ...' if len(curve) > 5 else ''}")
    print(f"report {args.out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    return {"shell": _diag_shell, "similarity": _diag_similarity, "evr": _diag_evr}[
        args.diagnose_cmd
    ](args)


def _load_working_rows(args, sub, rows: list[int]):
    """Fetch selected embedding rows, reduced into the subspace's working space."""
    reducer = None
    if args.reducer is not None:
        reducer = tensor_store.read_reducer(args.reducer)
        if reducer.reduced_dim != sub.working_dim:
            raise ConfigError(
                f"reducer reduced_dim {reducer.reduced_dim} != subspace working dim "
                f"{sub.working_dim}"
            )
    matrix = tensor_store.read_matrix(args.embeddings)
    expect = reducer.ambient_dim if reducer is not None else sub.working_dim
    if matrix.dim != expect:
        raise ConfigError(f"embeddings dim {matrix.dim} != expected input dim {expect}")
    for row in rows:
        if not 0 <= row < matrix.count:
            raise ConfigError(f"row {row} out of range [0, {matrix.count})")
    picked = [matrix.data[row].astype(np.float64) for row in rows]
    if reducer is not None:
        picked = [reducer.basis @ v for v in picked]
    return picked, reducer


def cmd_interpolate(args) -> int:
    _require(args, ["embeddings", "subspace", "row-a", "row-b", "out"])
    sub = tensor_store.read_subspace(args.subspace)
    steps = args.steps if args.steps is not None else 8
    (va, vb), reducer = _load_working_rows(args, sub, [args.row_a, args.row_b])
    path_vectors = subspace_mod.interpolate(va, vb, sub, steps)
    stacked = np.vstack(path_vectors)
    if reducer is not None:
        stacked = stacked @ reducer.basis
    tensor_store.write_matrix(
        tensor_store.EmbeddingMatrix(stacked.astype(np.float32)), args.out
    )
    print(f"wrote {steps} interpolants to {args.out}")
    return EXIT_OK


def cmd_traverse(args) -> int:
    _require(args, ["embeddings", "subspace", "row", "component", "offsets", "out"])
    sub = tensor_store.read_subspace(args.subspace)
    try:
        offsets = [float(tok) for tok in str(args.offsets).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--offsets must be comma-separated numbers: {args.offsets!r}") from exc
    if not offsets:
        raise ConfigError("--offsets is empty")
    (vec,), reducer = _load_working_rows(args, sub, [args.row])
    moved = subspace_mod.traverse(
        vec, sub, args.component, offsets, sigma_units=bool(args.sigma_units)
    )
    stacked = np.vstack(moved)
    if reducer is not None:
        stacked = stacked @ reducer.basis
    tensor_store.write_matrix(
        tensor_store.EmbeddingMatrix(stacked.astype(np.float32)), args.out
    )
    print(f"wrote {len(offsets)} traversal steps to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and config plumbing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="editioner",
        description="Mint and apply concept-subspace editions of a text-to-image model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", default=None, help="JSON file of flag defaults")
        p.add_argument("--chunk-rows", type=int, default=None, help="streaming row chunk size")
        return p

    p = add("gen-prompts", cmd_gen_prompts, "generate a template prompt corpus")
    p.add_argument("--wordlist", default=None, help="JSON word-list file (default: built-in)")
    p.add_argument("--concept", default=None, help="slot=word filter, e.g. subject=cat")
    p.add_argument("--eval", action=argparse.BooleanOptionalAction, default=None,
                   help="sample the evaluation set of the concept's complement")
    p.add_argument("--per-category", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = add("build-reducer", cmd_build_reducer, "build the global dimensionality reducer")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--target-dim", type=int, default=None)
    p.add_argument("--out", default=None)

    p = add("build-subspace", cmd_build_subspace, "build a concept subspace")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--reducer", default=None)
    p.add_argument("--concept", default=None, help="slot=word, e.g. subject=cat")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--out", default=None)

    p = add("project", cmd_project, "project embeddings into a subspace")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--subspace", default=None)
    p.add_argument("--reducer", default=None)
    p.add_argument("--mode", choices=subspace_mod.PROJECTION_MODES, default=None)
    p.add_argument("--on-orthogonal", choices=("zero", "drop"), default=None)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--out", default=None)

    p = add("diagnose", cmd_diagnose, "embedding-level measurements")
    diag = p.add_subparsers(dest="diagnose_cmd", required=True)
    ps = diag.add_parser("shell", help="distance-to-origin statistics")
    ps.add_argument("--embeddings", default=None)
    ps.add_argument("--out", default=None)
    ps.add_argument("--histogram", default=None, help="also write a CSV histogram here")
    ps.add_argument("--bins", type=int, default=None)
    ps.set_defaults(func=cmd_diagnose)
    pm = diag.add_parser("similarity", help="cosine-distance triples")
    pm.add_argument("--inputs", default=None)
    pm.add_argument("--projected", default=None)
    pm.add_argument("--replaced", default=None)
    pm.add_argument("--rows", action=argparse.BooleanOptionalAction, default=None,
                    help="include per-row triples in the JSON report")
    pm.add_argument("--out", default=None)
    pm.set_defaults(func=cmd_diagnose)
    pe = diag.add_parser("evr", help="explained-variance curve")
    pe.add_argument("--embeddings", default=None)
    pe.add_argument("--values", default=None, help="JSON array of principal values")
    pe.add_argument("--center", action=argparse.BooleanOptionalAction, default=None)
    pe.add_argument("--out", default=None)
    pe.set_defaults(func=cmd_diagnose)
    for dp in (ps, pm, pe):
        dp.add_argument("--config", default=None, help="JSON file of flag defaults")
        dp.add_argument("--chunk-rows", type=int, default=None)

    p = add("interpolate", cmd_interpolate, "interpolate between two projected embeddings")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--subspace", default=None)
    p.add_argument("--reducer", default=None)
    p.add_argument("--row-a", type=int, default=None)
    p.add_argument("--row-b", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", default=None)

    p = add("traverse", cmd_traverse, "move a projected embedding along a principal axis")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--subspace", default=None)
    p.add_argument("--reducer", default=None)
    p.add_argument("--row", type=int, default=None)
    p.add_argument("--component", type=int, default=None)
    p.add_argument("--offsets", default=None,
                   help="comma-separated offsets; use --offsets=-1,0,1 for negatives")
    p.add_argument("--sigma-units", action=argparse.BooleanOptionalAction, default=None)

    p.add_argument("--out", default=None)
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset flags from the --config JSON; explicit flags win; unknown keys rejected."""
    if getattr(args, "config", None) is None:
        return
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load --config {args.config}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("--config must hold a JSON object")
    known = {k for k in vars(args) if k not in ("func", "command", "diagnose_cmd", "config")}
    for raw_key, value in doc.items():
        key = raw_key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown config key {raw_key!r}")
        if getattr(args, key) is None:
            setattr(args, key, value)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except (ConfigError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, IntegrityError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EditionerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
