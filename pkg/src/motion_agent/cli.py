"""Command-line shell: corpus synthesis, training, evaluation, chat, serving.

Every subcommand accepts --seed and --config (a JSON file with per-stage
sections; flags override). Artifacts live in a workspace directory so the
stages compose into one offline pipeline:

    motion-agent synth       --workdir ws
    motion-agent train-codec --workdir ws
    motion-agent train-base  --workdir ws
    motion-agent finetune    --workdir ws --task generate
    motion-agent finetune    --workdir ws --task caption
    motion-agent eval        --workdir ws
    motion-agent chat        --workdir ws --script turns.txt
    motion-agent serve       --workdir ws
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from .agent.orchestrator import Orchestrator
from .agent.planner import RemotePlanner, RemotePlannerConfig, RuleBasedPlanner
from .agent.session import SessionStore
from .codec.tokenizer import MotionCodec
from .codec.train import CodecTrainConfig, pipeline_profile, train_vq
from .data.motafile import read_motion
from .data.synth import CorpusConfig, load_corpus, save_corpus, synth_corpus
from .errors import ConfigError, MotionAgentError
from .lm.decode import GenerationConfig
from .lm.model import AdapterSet, BaseLM, MotionLM, extend_vocabulary
from .lm.prompts import CAPTIONING_PROMPT, GENERATION_PROMPT
from .lm.train import (
    GENERIC_TEXT,
    FinetuneConfig,
    PretrainConfig,
    build_examples,
    finetune_adapters,
    pretrain_base,
)
from .metrics.report import evaluate_captioning, evaluate_generation
from .service.config import PlannerSettings, ServiceConfig


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _section(cfg: dict, name: str, cls, **overrides):
    fields = {f.name for f in dataclasses.fields(cls)}
    values = dict(cfg.get(name, {}))
    unknown = set(values) - fields
    if unknown:
        raise ConfigError(f"config section {name!r} has unknown keys {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**values)


def _ws(args) -> Path:
    ws = Path(args.workdir)
    ws.mkdir(parents=True, exist_ok=True)
    return ws


def cmd_synth(args) -> int:
    cfg = _section(_load_config(args.config), "corpus", CorpusConfig)
    corpus = synth_corpus(cfg, args.seed)
    out = _ws(args) / "corpus"
    save_corpus(corpus, out)
    print(f"synthesized {len(corpus.items)} items -> {out}")
    return 0


def cmd_train_codec(args) -> int:
    ws = _ws(args)
    corpus = load_corpus(ws / "corpus")
    base = pipeline_profile()
    overrides = {"seed": args.seed} if args.seed is not None else {}
    cfg_doc = _load_config(args.config).get("codec", {})
    cfg = dataclasses.replace(base, **cfg_doc, **overrides)
    codec, log = train_vq(corpus, cfg)
    digest = codec.save(ws / "codec.bin", training_config=log["config"])
    (ws / "codec-log.json").write_text(json.dumps(log, indent=2))
    print(
        f"codec trained: val_recon {log['final_val_recon']:.4f} "
        f"(untrained {log['untrained_val_recon']:.4f}), live {log['live_fraction']:.2f}, sha256 {digest[:12]}"
    )
    return 0


def _pretrain_texts(corpus) -> list[str]:
    texts = [a.text for it in corpus.subset("train") for a in it.annotations]
    texts += [GENERATION_PROMPT, CAPTIONING_PROMPT]
    texts += GENERIC_TEXT
    return texts


def cmd_train_base(args) -> int:
    ws = _ws(args)
    corpus = load_corpus(ws / "corpus")
    cfg = _section(_load_config(args.config), "pretrain", PretrainConfig, seed=args.seed)
    base, log = pretrain_base(_pretrain_texts(corpus), cfg)
    digest = base.save(ws / "base.bin")
    codec = MotionCodec.load(ws / "codec.bin")
    model = extend_vocabulary(base, codec.codebook_size, seed=cfg.seed)
    model_digest = model.save(ws / "model.bin")
    (ws / "base-log.json").write_text(json.dumps(log, indent=2))
    print(
        f"base trained: B={base.vocab.base_size} val_ppl={log['val_perplexity']:.2f} sha256 {digest[:12]}; "
        f"extended model (+{codec.codebook_size}+2 rows) sha256 {model_digest[:12]}"
    )
    return 0


def cmd_finetune(args) -> int:
    ws = _ws(args)
    corpus = load_corpus(ws / "corpus")
    codec = MotionCodec.load(ws / "codec.bin")
    model = MotionLM.load(ws / "model.bin")
    task = {"generate": "generation", "caption": "captioning"}[args.task]
    cfg = _section(_load_config(args.config), f"finetune_{args.task}", FinetuneConfig, seed=args.seed)
    if args.task == "caption" and f"finetune_{args.task}" not in _load_config(args.config):
        cfg = dataclasses.replace(cfg, epochs=90)
    concat_pairs = 150 if task == "captioning" else 0
    examples = build_examples(corpus, codec, model.vocab, task, "train", concat_pairs=concat_pairs, seed=cfg.seed)
    adapters, log = finetune_adapters(model, examples, task, cfg)
    out = ws / f"adapters-{task}.bin"
    digest = adapters.save(out, base_hash=model.base_hash())
    (ws / f"finetune-{task}-log.json").write_text(json.dumps(log, indent=2))
    print(f"{task} adapters trained: nll {log['init_nll']:.3f} -> {log['final_nll']:.3f}, sha256 {digest[:12]}")
    return 0


def cmd_eval(args) -> int:
    ws = _ws(args)
    corpus = load_corpus(ws / "corpus")
    if args.self_test:
        return _eval_self_test(corpus)
    codec = MotionCodec.load(ws / "codec.bin")
    model = MotionLM.load(ws / "model.bin")
    gen_adapters = AdapterSet.load(ws / "adapters-generation.bin", expect_base_hash=model.base_hash())
    cap_adapters = AdapterSet.load(ws / "adapters-captioning.bin", expect_base_hash=model.base_hash())
    seed = args.seed if args.seed is not None else 0
    gen_report = evaluate_generation(model, gen_adapters, codec, corpus, repeats=args.repeats, seed=seed)
    cap_report = evaluate_captioning(model, cap_adapters, codec, corpus, seed=seed)
    report = {"generation": gen_report, "captioning": cap_report}
    out = ws / "eval-report.json"
    out.write_text(json.dumps(report, indent=2))
    print(gen_report["note"])
    for name, m in gen_report["metrics"].items():
        print(f"  {name}: {m['mean']:.4f} +/- {m['ci95']:.4f}")
    print(f"  captioning: " + ", ".join(f"{k}={v:.2f}" for k, v in cap_report["scores"].items()))
    print(f"report -> {out}")
    return 0


def _eval_self_test(corpus) -> int:
    """Score ground-truth test motions as if generated: the self-evaluation bound."""
    from .metrics import FeatureExtractor, GaussianStats, fid, mm_dist, r_precision

    items = corpus.subset("test")
    extractor = FeatureExtractor(corpus.skeleton.feature_dim, out_dim=16, seed=0)
    feats = extractor.motion_features([it.seq for it in items])
    stats = GaussianStats.from_features(feats)
    self_fid = fid(stats, stats)
    print(f"self-test FID = {self_fid:.2e} (<= 1e-6: {'ok' if self_fid <= 1e-6 else 'FAIL'})")
    print(f"self-test MM-Dist(motion, motion) = {mm_dist(feats, feats):.2e}")
    if len(items) >= 32:
        tops = r_precision(feats, feats, pool=32, seed=0)
        print(f"self-test Top-1 with identical features = {tops[1]:.3f}")
    return 0 if self_fid <= 1e-6 else 1


def _build_orchestrator(ws: Path, planner_kind: str, store_path: Path, remote_endpoint: str | None = None):
    codec = MotionCodec.load(ws / "codec.bin")
    model = MotionLM.load(ws / "model.bin")
    gen_adapters = AdapterSet.load(ws / "adapters-generation.bin", expect_base_hash=model.base_hash())
    cap_adapters = AdapterSet.load(ws / "adapters-captioning.bin", expect_base_hash=model.base_hash())
    if planner_kind == "remote":
        planner = RemotePlanner(RemotePlannerConfig(endpoint=remote_endpoint or ""))
    else:
        planner = RuleBasedPlanner()
    store = SessionStore(store_path, skeleton=codec.skeleton)
    return Orchestrator(
        codec=codec,
        model=model,
        generation_adapters=gen_adapters,
        captioning_adapters=cap_adapters,
        planner=planner,
        store=store,
    )


def cmd_chat(args) -> int:
    ws = _ws(args)
    store_path = Path(args.store) if args.store else ws / "store"
    orch = _build_orchestrator(ws, args.planner, store_path, args.endpoint)
    session = orch.store.create_session(args.session_id)
    transcript = {"session_id": session.session_id, "turns": []}
    if args.script:
        lines = [ln.strip() for ln in Path(args.script).read_text().splitlines() if ln.strip()]
    else:
        print("interactive chat; empty line to quit")
        lines = None

    def handle(text: str):
        result = orch.run_turn(session.session_id, text)
        entry = {
            "user": text,
            "plan": result.plan.to_dict(),
            "response": result.response_text,
            "captions": list(result.captions),
            "motions": [],
        }
        for mid in result.motion_ids:
            seq, record = orch.store.get_motion(mid)
            entry["motions"].append(
                {
                    "id": mid,
                    "frames": seq.num_frames,
                    "tokens": len(record.tokens),
                    "sha256": hashlib.sha256(seq.frames.tobytes()).hexdigest(),
                }
            )
        transcript["turns"].append(entry)
        if result.response_text:
            print(f"agent: {result.response_text}")
        for caption in result.captions:
            print(f"caption: {caption}")
        for m in entry["motions"]:
            print(f"motion {m['id']}: {m['frames']} frames from {m['tokens']} tokens")

    if lines is not None:
        for text in lines:
            print(f"user: {text}")
            handle(text)
    else:
        while True:
            try:
                text = input("user> ").strip()
            except EOFError:
                break
            if not text:
                break
            handle(text)
    out = Path(args.transcript) if args.transcript else ws / "transcript.json"
    out.write_text(json.dumps(transcript, indent=2, sort_keys=True))
    print(f"transcript -> {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import build_app

    ws = _ws(args)
    doc = _load_config(args.config).get("service", {})
    planner = PlannerSettings(**doc.pop("planner", {}))
    config = ServiceConfig(
        codec_path=str(ws / "codec.bin"),
        model_path=str(ws / "model.bin"),
        generation_adapters_path=str(ws / "adapters-generation.bin"),
        captioning_adapters_path=str(ws / "adapters-captioning.bin"),
        store_path=str(ws / "store"),
        planner=planner,
        **doc,
    )
    host, _, port = config.listen.partition(":")
    app = build_app(config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))
    return 0


def cmd_export_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .data.motion import forward_kinematics

    seq = read_motion(args.motion)
    joints = forward_kinematics(seq).positions
    fig, axes = plt.subplots(1, 3, figsize=(14, 4))
    labels = ("x", "y", "z")
    t = [i / seq.fps for i in range(joints.shape[0])]
    for axis, ax in enumerate(axes):
        for j in range(joints.shape[1]):
            ax.plot(t, joints[:, j, axis], label=seq.skeleton.joint_names[j], linewidth=0.9)
        ax.set_xlabel("time (s)")
        ax.set_ylabel(f"{labels[axis]} (m)")
    axes[0].legend(fontsize=7)
    out = Path(args.out) if args.out else Path(args.motion).with_suffix(".svg")
    fig.tight_layout()
    fig.savefig(out, format="svg")
    print(f"plot -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motion-agent", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--workdir", default="workspace", help="pipeline workspace directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON config with per-stage sections")

    p = sub.add_parser("synth", help="generate the procedural paired corpus")
    common(p)
    p.set_defaults(fn=cmd_synth, seed=0)

    p = sub.add_parser("train-codec", help="train the motion tokenizer/detokenizer")
    common(p)
    p.set_defaults(fn=cmd_train_codec)

    p = sub.add_parser("train-base", help="pre-train and freeze the base language model")
    common(p)
    p.set_defaults(fn=cmd_train_base)

    p = sub.add_parser("finetune", help="train task adapters on the frozen base")
    common(p)
    p.add_argument("--task", choices=("generate", "caption"), required=True)
    p.set_defaults(fn=cmd_finetune)

    p = sub.add_parser("eval", help="run the metric suite over the test split")
    common(p)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--self-test", action="store_true", help="score ground truth as generated (FID ~ 0 bound)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("chat", help="scripted or interactive conversation")
    common(p)
    p.add_argument("--script", default=None, help="file with one user turn per line")
    p.add_argument("--planner", choices=("rule-based", "remote"), default="rule-based")
    p.add_argument("--endpoint", default=None, help="remote planner chat endpoint")
    p.add_argument("--session-id", default="chat")
    p.add_argument("--store", default=None)
    p.add_argument("--transcript", default=None)
    p.set_defaults(fn=cmd_chat)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("export-plot", help="emit per-joint trajectory SVG for a motion file")
    common(p)
    p.add_argument("--motion", required=True, help="path to a .mota file")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MotionAgentError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
