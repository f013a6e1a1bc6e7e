"""Batch command-line surface: tasks, generate, edit, eval, train-toy.

Exit codes: 0 success, 1 runtime failure, 2 usage or prompt-parse error.
Every subcommand takes --seed and is byte-deterministic for a fixed seed;
--json switches the human-readable output to machine-readable JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from .core import parse_action_vector, validate_instruction
from .dsp import Clip
from .editor import (
    FilmMaskNet,
    MaskKind,
    MaskNetConfig,
    TrainExample,
    embed_instruction,
    export_mask_csv,
    export_mask_pgm,
    ideal_mask,
    load_net,
    mask_edit,
    oracle_edit,
    save_net,
    train_toy,
)
from .errors import MixeditError
from .metrics import snr, snri
from .mixer import mix, target_mixture
from .prompt import ParseError, Prompt, Provenance, expand, parse, simplify
from .seeding import derive_seed
from .taskspace import Composition, Task, count_table, defined_tasks, enumerate_edits


def _parse_composition(text: str) -> Composition:
    try:
        n_speech, n_audio = (int(p) for p in text.split(","))
        return Composition(n_speech, n_audio)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(
            f"composition must look like '2,2', got {text!r}"
        )


def _echo_config(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


# ---------------- tasks ----------------

def cmd_tasks(args) -> int:
    comp = args.composition
    table = count_table(comp)
    total = sum(table.values())
    config = {"composition": f"{comp.n_speech},{comp.n_audio}"}
    if args.json:
        doc = {
            "config": config,
            "counts": {t.value: n for t, n in table.items()},
            "total": total,
        }
        if args.enumerate:
            doc["edits"] = {
                t.value: ["".join(a.symbol for a in v)
                          for v in enumerate_edits(t, comp)]
                for t in defined_tasks(comp)
            }
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    print(f"# composition: {comp.n_speech} speech + {comp.n_audio} audio")
    print(f"{'task':8s} {'count':>6s}")
    for task in Task:
        count = table[task]
        shown = str(count) if count else "n/a"
        print(f"{task.symbol:8s} {shown:>6s}")
    print(f"{'total':8s} {total:>6d}")
    if args.enumerate:
        for task in defined_tasks(comp):
            vecs = ["".join(a.symbol for a in v)
                    for v in enumerate_edits(task, comp)]
            print(f"{task.symbol}: {' '.join(vecs)}")
    return 0


# ---------------- demo catalog ----------------

def cmd_demo_catalog(args) -> int:
    meta = ds.build_demo_catalog(args.out, seed=args.seed)
    print(f"demo catalog written: {meta}")
    return 0


# ---------------- generate ----------------

def cmd_generate(args) -> int:
    catalog = ds.ingest(args.catalog, metadata=args.metadata)
    splits = ds.partition(catalog, seed=args.seed)
    records = ds.generate_manifest(
        catalog, splits, count=args.count, comp=args.composition,
        seed=args.seed, split=args.split,
    )
    if args.rephrase:
        config = ds.RephraseConfig.from_file(args.rephrase)
        fallbacks = _rephrase_records(records, config)
        if fallbacks:
            print(f"rephrase unavailable for {fallbacks} records; "
                  "template prompts kept", file=sys.stderr)
    summary = ds.synthesize(records, args.out, workers=args.workers,
                            pcm16=args.pcm16)
    doc = summary.to_json()
    doc["config"] = _echo_config(
        args, ["catalog", "out", "count", "seed", "workers", "split"])
    doc["config"]["composition"] = (
        f"{args.composition.n_speech},{args.composition.n_audio}")
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0 if summary.ok else 1


def _rephrase_records(records, config) -> int:
    """Swap template prompts for service rephrasings, bounded concurrency.

    Returns the number of records that fell back to their template prompt.
    """
    from concurrent.futures import ThreadPoolExecutor

    eligible = [r for r in records if r.prompt_provenance == "template"]

    def one(record):
        try:
            variants = ds.rephrase(
                Prompt(record.prompt, Provenance.TEMPLATE), config)
            return record, variants[0].text
        except (ds.Disabled, ds.NetworkError):
            return record, None

    workers = max(1, config.max_concurrency)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, eligible))
    fallbacks = 0
    for record, text in results:
        if text is None:
            fallbacks += 1
        else:
            record.prompt = text
            record.prompt_provenance = "external_rephrase"
    return fallbacks


# ---------------- edit ----------------

def _load_sources(paths):
    return [ds.read_wav(p) for p in paths]


def _signatures_from_catalog(paths, catalog):
    sigs = []
    by_path = {str(e.path): e for e in catalog.entries}
    for p in paths:
        resolved = str(Path(p).resolve())
        entry = by_path.get(resolved)
        if entry is None:
            raise MixeditError(
                f"source {p} not found in the catalog; signatures unknown"
            )
        sigs.append(entry.signature)
    return sigs


def cmd_edit(args) -> int:
    mixture = ds.read_wav(args.mixture)
    sources = _load_sources(args.sources) if args.sources else []
    catalog = ds.ingest(args.catalog) if args.catalog else None

    if args.actions:
        actions = parse_action_vector(args.actions)
        if sources and len(actions) != len(sources):
            print("error: one action per source required", file=sys.stderr)
            return 2
        simplified = None
        if catalog and sources:
            sigs = _signatures_from_catalog(args.sources, catalog)
            instruction = validate_instruction(list(zip(actions, sigs)))
            simplified = simplify(instruction, seed=args.seed)
    else:
        if catalog is None:
            print("error: --prompt needs --catalog for the label set",
                  file=sys.stderr)
            return 2
        simplified = parse(args.prompt, catalog.labels)
        if not sources:
            print("error: --prompt editing needs --sources to resolve "
                  "targets", file=sys.stderr)
            return 2
        sigs = _signatures_from_catalog(args.sources, catalog)
        actions = expand(simplified, sigs)

    if sources:
        total = mix(sources)
        if len(total) != len(mixture) or not np.allclose(
                total.samples, mixture.samples, atol=1e-6):
            print("error: sources do not sum to the mixture", file=sys.stderr)
            return 2

    target = target_mixture(sources, actions) if sources else None
    mask = None
    if args.editor == "oracle":
        if not sources:
            print("error: the oracle editor needs --sources", file=sys.stderr)
            return 2
        edited = oracle_edit(sources, actions)
    elif args.editor in ("psm", "irm"):
        if target is None:
            print("error: mask editors need --sources", file=sys.stderr)
            return 2
        kind = MaskKind.PSM if args.editor == "psm" else MaskKind.IRM
        mask = ideal_mask(mixture, target, kind)
        edited = mask_edit(mixture, mask)
    else:  # film
        if not args.model:
            print("error: --editor film needs --model", file=sys.stderr)
            return 2
        if simplified is None:
            print("error: --editor film needs --prompt, or --actions with "
                  "--catalog", file=sys.stderr)
            return 2
        net = load_net(args.model)
        z = embed_instruction(simplified, dim=net.config.embed_dim)
        edited, mask = net.edit(mixture, z)

    ds.write_wav(args.out, edited, pcm16=args.pcm16)
    metrics = {"editor": args.editor, "output": str(args.out),
               "seed": args.seed}
    if target is not None:
        quality = snr(edited, target)
        improvement = snri(mixture, edited, target)
        metrics.update({
            "snr_db": quality.value,
            "snr_clamped": not quality.finite,
            "snri_db": improvement.value,
            "snri_clamped": not improvement.finite,
        })
    if args.dump_mask:
        if mask is None:
            print("note: the oracle editor has no mask to dump",
                  file=sys.stderr)
        else:
            mel = 80 if args.editor in ("psm", "irm") else None
            export_mask_csv(mask, f"{args.dump_mask}.csv",
                            rate=mixture.rate, n_mels=mel)
            export_mask_pgm(mask, f"{args.dump_mask}.pgm",
                            rate=mixture.rate, n_mels=mel)
            metrics["mask"] = {"csv": f"{args.dump_mask}.csv",
                               "pgm": f"{args.dump_mask}.pgm"}
    if args.metrics_out:
        Path(args.metrics_out).write_text(
            json.dumps(metrics, indent=2, sort_keys=True) + "\n", "utf-8")
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


# ---------------- eval ----------------

def _quartiles(values):
    """Linear-interpolation quartiles of a sequence (25th, 50th, 75th)."""
    ordered = sorted(values)
    n = len(ordered)
    out = []
    for q in (0.25, 0.5, 0.75):
        pos = q * (n - 1)
        lo = int(pos)
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        out.append(ordered[lo] * (1 - frac) + ordered[hi] * frac)
    return out


def _aggregate(entries):
    values = [e["snri_db"] for e in entries]
    q25, q50, q75 = _quartiles(values)
    return {
        "count": len(values),
        "mean_snri_db": sum(values) / len(values),
        "quartiles_db": {"q25": q25, "q50": q50, "q75": q75},
        "improved_fraction": sum(v > 0 for v in values) / len(values),
        "clamped_count": sum(e["clamped"] for e in entries),
    }


def cmd_eval(args) -> int:
    est_dir, ref_dir, input_dir = (Path(args.est), Path(args.ref),
                                   Path(args.input))
    names = sorted(p.name for p in est_dir.glob("*.wav"))
    if not names:
        print(f"error: no WAV files in {est_dir}", file=sys.stderr)
        return 2
    task_of = {}
    if args.per_task:
        for record in ds.load_manifest(args.per_task):
            task_of[f"{record.record_id:06d}.wav"] = record.task
    entries = []
    for name in names:
        ref_path = ref_dir / name
        input_path = input_dir / name
        if not ref_path.exists() or not input_path.exists():
            print(f"error: missing pair for {name}", file=sys.stderr)
            return 1
        est = ds.read_wav(est_dir / name)
        ref = ds.read_wav(ref_path)
        unprocessed = ds.read_wav(input_path)
        value = snri(unprocessed, est, ref)
        entries.append({
            "name": name,
            "snri_db": value.value,
            "clamped": not value.finite,
            "task": task_of.get(name),
        })
    report = {"overall": _aggregate(entries)}
    if task_of:
        by_task = {}
        for e in entries:
            if e["task"]:
                by_task.setdefault(e["task"], []).append(e)
        report["per_task"] = {
            task: _aggregate(group) for task, group in sorted(by_task.items())
        }
    report["config"] = _echo_config(args, ["est", "ref", "input", "per_task"])
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    def line(tag, agg):
        q = agg["quartiles_db"]
        print(f"{tag:8s} n={agg['count']:<5d} mean SNRi "
              f"{agg['mean_snri_db']:8.2f} dB  q25/50/75 "
              f"{q['q25']:7.2f}/{q['q50']:7.2f}/{q['q75']:7.2f}  "
              f"improved {agg['improved_fraction']:6.1%}")
    line("overall", report["overall"])
    for task, agg in report.get("per_task", {}).items():
        line(task, agg)
    print(json.dumps(report["overall"], sort_keys=True), file=sys.stderr)
    return 0


# ---------------- train-toy ----------------

def _toy_examples(n_examples, embed_dim, seed, t=4000, rate=16000):
    """Synthetic tonal editing set: disjoint tone pairs, random edits."""
    rng = np.random.default_rng(derive_seed(seed, "toy-data"))
    examples = []
    t_axis = np.arange(t) / rate
    for _ in range(n_examples):
        f1 = rng.choice([330.0, 440.0, 550.0, 660.0])
        f2 = rng.choice([1100.0, 1320.0, 1540.0])
        s1 = 0.4 * np.sin(2 * np.pi * f1 * t_axis + rng.uniform(0, 2 * np.pi))
        s2 = 0.3 * np.sin(2 * np.pi * f2 * t_axis + rng.uniform(0, 2 * np.pi))
        alphas = rng.choice([0.0, 0.5, 1.0, 2.0], size=2)
        while alphas[0] == alphas[1] == 1.0 or alphas[0] == alphas[1] == 0.0:
            alphas = rng.choice([0.0, 0.5, 1.0, 2.0], size=2)
        z = rng.standard_normal(embed_dim)
        z /= np.linalg.norm(z)
        examples.append(TrainExample(
            s1 + s2, z, alphas[0] * s1 + alphas[1] * s2,
            refs=(alphas[0] * s1, alphas[1] * s2),
        ))
    return examples


def cmd_train_toy(args) -> int:
    config = json.loads(Path(args.config).read_text("utf-8"))
    net_config = MaskNetConfig(
        channels=config.get("channels", 16),
        kernel=config.get("kernel", 16),
        blocks=config.get("blocks", 2),
        embed_dim=config.get("embed_dim", 16),
        mask_max=config.get("mask_max", 4.0),
        n_masks=config.get("n_masks", 1),
    )
    seed = config.get("seed", args.seed)
    net = FilmMaskNet.init(net_config, seed=seed)
    examples = _toy_examples(config.get("examples", 4), net_config.embed_dim,
                             seed, t=config.get("samples", 4000))
    if net_config.n_masks == 1:
        examples = [TrainExample(e.x, e.z, e.y) for e in examples]
    result = train_toy(
        net, examples,
        steps=config.get("steps", 200),
        lr=config.get("lr", 1e-3),
        lr_decay=config.get("lr_decay", 1.0),
        use_pit=config.get("pit", False),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_net(out_dir / "net.mxn", result.net)
    curve = out_dir / "loss_curve.csv"
    with open(curve, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for i, loss in enumerate(result.losses):
            fh.write(f"{i},{loss:.6f}\n")
    (out_dir / "config.json").write_text(
        json.dumps({**config, "seed": seed}, indent=2, sort_keys=True) + "\n")
    print(json.dumps({
        "checkpoint": str(out_dir / "net.mxn"),
        "loss_curve": str(curve),
        "initial_loss": result.losses[0],
        "final_loss": result.losses[-1],
        "config": {**config, "seed": seed},
    }, indent=2, sort_keys=True))
    return 0


# ---------------- wiring ----------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixedit",
        description="Sound mixture-to-mixture editing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tasks", help="show the editing-task table")
    p.add_argument("--composition", type=_parse_composition, default="2,2",
                   help="speech,audio source counts (default 2,2)")
    p.add_argument("--table", action="store_true", dest="table",
                   help="print the per-task count table (default)")
    p.add_argument("--enumerate", action="store_true",
                   help="also list every edit vector per task")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_tasks)

    p = sub.add_parser("demo-catalog", help="write the synthetic demo catalog")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_catalog)

    p = sub.add_parser("generate", help="synthesize a prompted mixture dataset")
    p.add_argument("--catalog", required=True)
    p.add_argument("--metadata", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--composition", type=_parse_composition, default="2,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--split", default="train",
                   choices=("train", "valid", "test"))
    p.add_argument("--pcm16", action="store_true")
    p.add_argument("--rephrase", default=None,
                   help="rephrase-service config JSON")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("edit", help="edit one mixture")
    p.add_argument("--mixture", required=True)
    p.add_argument("--sources", nargs="+", default=None)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--actions", help="action vector like '1,0,u,d'")
    group.add_argument("--prompt", help="natural-language instruction")
    p.add_argument("--catalog", default=None)
    p.add_argument("--editor", default="oracle",
                   choices=("oracle", "psm", "irm", "film"))
    p.add_argument("--model", default=None, help="mask-network checkpoint")
    p.add_argument("--out", default="edited.wav")
    p.add_argument("--metrics-out", default=None)
    p.add_argument("--dump-mask", default=None,
                   help="path prefix for mask CSV/PGM export")
    p.add_argument("--pcm16", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("eval", help="aggregate SNRi over an output tree")
    p.add_argument("--est", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--per-task", dest="per_task", default=None,
                   help="manifest for per-task grouping")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-toy", help="train the toy mask network")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as err:
        span = f" at {err.span}" if err.span else ""
        print(f"prompt error: {err}{span}", file=sys.stderr)
        return 2
    except MixeditError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
