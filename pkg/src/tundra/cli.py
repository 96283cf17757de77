"""Command-line surface.

Exit codes: 0 success, 2 usage/validation error, 3 execution (job) error.
``TUNDRA_WORKERS`` overrides the default worker count; ``TUNDRA_CACHE``
overrides the model cache directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from .engine import Engine, EngineConfig, benchmark_scaling, write_benchmark_csv
from .errors import JobError, TundraError


def _engine_for(workers: int | None) -> Engine:
    cfg = EngineConfig(workers=workers or 0, max_workers=max(64, workers or 1))
    return Engine(cfg)


def cmd_run(args) -> int:
    from .dataframe import Dataset
    from .interchange import export_rows, import_dataset
    from .images import dataset_from_dir
    from .pipeline import Pipeline, save_pipeline, stage_class

    with open(args.pipeline) as f:
        spec = json.load(f)
    if not isinstance(spec, list) or not spec:
        raise TundraError("pipeline spec must be a nonempty list of {stageName, params}")
    stages = []
    for entry in spec:
        cls = stage_class(entry["stageName"])
        stages.append(cls(**entry.get("params", {})))
    with _engine_for(args.workers) as engine:
        if os.path.isdir(args.input):
            ds = dataset_from_dir(args.input, args.partitions or 2 * engine.worker_count)
        else:
            ds = import_dataset(args.input, args.partitions or 2 * engine.worker_count)
        model = Pipeline(stages).fit(ds, engine=engine)
        out = model.transform(ds)
        os.makedirs(args.output, exist_ok=True)
        rows = out.collect(engine)
        export_rows(rows, out.schema, os.path.join(args.output, "dataset.txt"))
        save_pipeline(model, os.path.join(args.output, "model"))
        print(f"wrote {len(rows)} rows and {len(stages)} fitted stages to {args.output}")
    return 0


def cmd_experiment(args) -> int:
    from .experiment import VARIANTS, run_experiment

    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    for v in variants:
        if v not in VARIANTS:
            raise TundraError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
    with _engine_for(args.workers) as engine:
        results = run_experiment(args.data, args.out, args.seed, variants, engine)
    print(f"{'variant':<10} auc")
    for v in variants:
        print(f"{v:<10} {results[v].auc:.4f}")
    return 0


def cmd_gen_corpus(args) -> int:
    from .images import generate_corpus

    stats = generate_corpus(args.out, cameras=args.cameras,
                            bursts_per_camera=args.bursts_per_camera,
                            burst_len=args.burst_len,
                            leopard_frac=args.leopard_frac, seed=args.seed)
    print(f"wrote {stats['images']} images ({stats['positives']} positives) to {args.out}")
    return 0


def cmd_gen_model(args) -> int:
    from .graph import REFERENCE_SEED, build_reference_cnn, save_graph

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "refcnn.tgraph")
    seed = args.seed if args.seed is not None else REFERENCE_SEED
    save_graph(build_reference_cnn(seed), path)
    print(f"wrote {path}")
    return 0


def cmd_bench(args) -> int:
    from .dataframe import Dataset
    from .graph import build_reference_cnn, save_graph
    from .images import CORPUS_SCHEMA, ImageFeaturizer, generate_corpus, read_image_dir

    worker_counts = [int(w) for w in args.workers.split(",") if w]
    with tempfile.TemporaryDirectory(prefix="tundra-bench-") as tmp:
        corpus = os.path.join(tmp, "corpus")
        per_burst = 4
        cameras = -(-args.images // per_burst)
        generate_corpus(corpus, cameras=cameras, bursts_per_camera=1,
                        burst_len=per_burst, leopard_frac=0.1, seed=args.seed)
        model_path = os.path.join(tmp, "refcnn.tgraph")
        save_graph(build_reference_cnn(), model_path)
        rows = read_image_dir(corpus)[:args.images]
        ds = Dataset.from_rows(rows, CORPUS_SCHEMA, num_partitions=16)

        def task(engine):
            featurizer = ImageFeaturizer(
                inputCol="image", outputCol="features", modelPath=model_path,
                outputNode="feat64", resizeW=64, resizeH=64)
            featurizer.transform(ds).count(engine)

        table = benchmark_scaling(task, worker_counts, repetitions=args.repetitions)
    write_benchmark_csv(table, args.out)
    for row in table:
        print(f"workers={row['workers']:<3} median_ms={row['median_ms']:.1f} "
              f"runs={row['runs']}")
    print(f"wrote {args.out}")
    return 0


def cmd_split_cameras(args) -> int:
    from .dataframe import Dataset
    from .images import dataset_from_dir
    from .interchange import export_rows, import_dataset
    from .learners import split_by_camera

    with _engine_for(args.workers) as engine:
        parts = args.partitions or 2 * engine.worker_count
        if os.path.isdir(args.input):
            ds = dataset_from_dir(args.input, parts)
        else:
            ds = import_dataset(args.input, parts)
        train, test = split_by_camera(ds, args.camera_col, args.test_fraction,
                                      args.seed)
        train_rows = train.collect(engine)
        test_rows = test.collect(engine)
        export_rows(train_rows, ds.schema, args.out_train)
        export_rows(test_rows, ds.schema, args.out_test)
        print(f"train: {len(train_rows)} rows -> {args.out_train}")
        print(f"test:  {len(test_rows)} rows -> {args.out_test}")
    return 0


def cmd_repo(args) -> int:
    from .model_repo import ModelRepository, verify

    if args.repo_cmd == "fetch":
        repo = ModelRepository(args.manifest, args.cache)
        path = repo.fetch(args.name)
        print(path)
    elif args.repo_cmd == "list":
        repo = ModelRepository(args.manifest, args.cache)
        for e in repo.list():
            print(f"{e.name}\t{e.uri}\t{e.sha256}\t{e.size_bytes}")
    elif args.repo_cmd == "verify":
        ok = verify(args.path, args.sha256)
        print("ok" if ok else "mismatch")
        return 0 if ok else 3
    return 0


def cmd_gen_bindings(args) -> int:
    from .pipeline import registry_document_json

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "registry.json")
    with open(path, "w") as f:
        f.write(registry_document_json())
    print(f"wrote {path}; feed it to the bindings generator")
    return 0


def cmd_serve_rpc(args) -> int:
    from .rpc_server import RpcServer

    with _engine_for(args.workers) as engine:
        RpcServer(engine).serve()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tundra",
                                description="Desk-scale data-parallel ML pipeline engine")
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="fit and apply a pipeline spec")
    run.add_argument("--pipeline", required=True, help="JSON list of {stageName, params}")
    run.add_argument("--input", required=True, help="corpus directory or dataset text file")
    run.add_argument("--output", required=True)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--partitions", type=int, default=None)
    run.set_defaults(fn=cmd_run)

    exp = sub.add_parser("experiment", help="run the transfer-learning ladder")
    exp.add_argument("--data", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--variants", default="LR120,RN1,RN2,RN2+A,RN2+A+E")
    exp.add_argument("--workers", type=int, default=None)
    exp.set_defaults(fn=cmd_experiment)

    gen = sub.add_parser("gen-corpus", help="write a synthetic camera-trap corpus")
    gen.add_argument("--out", required=True)
    gen.add_argument("--cameras", type=int, default=200)
    gen.add_argument("--bursts-per-camera", type=int, default=3)
    gen.add_argument("--burst-len", type=int, default=4)
    gen.add_argument("--leopard-frac", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(fn=cmd_gen_corpus)

    gm = sub.add_parser("gen-model", help="write the reference CNN model file pair")
    gm.add_argument("--out", required=True)
    gm.add_argument("--seed", type=int, default=None)
    gm.set_defaults(fn=cmd_gen_model)

    bench = sub.add_parser("bench", help="scaling benchmark over the featurizer")
    bench.add_argument("--images", type=int, default=2000)
    bench.add_argument("--workers", default="1,2,4")
    bench.add_argument("--out", default="bench.csv")
    bench.add_argument("--repetitions", type=int, default=3)
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(fn=cmd_bench)

    split = sub.add_parser("split-cameras",
                           help="two-output camera-based train/test split")
    split.add_argument("--input", required=True, help="corpus dir or dataset text file")
    split.add_argument("--out-train", required=True)
    split.add_argument("--out-test", required=True)
    split.add_argument("--camera-col", default="cameraId")
    split.add_argument("--test-fraction", type=float, default=0.2)
    split.add_argument("--seed", type=int, default=0)
    split.add_argument("--workers", type=int, default=None)
    split.add_argument("--partitions", type=int, default=None)
    split.set_defaults(fn=cmd_split_cameras)

    repo = sub.add_parser("repo", help="model repository client")
    rsub = repo.add_subparsers(dest="repo_cmd", required=True)
    rf = rsub.add_parser("fetch")
    rf.add_argument("--manifest", required=True)
    rf.add_argument("--name", required=True)
    rf.add_argument("--cache", default=None)
    rl = rsub.add_parser("list")
    rl.add_argument("--manifest", required=True)
    rl.add_argument("--cache", default=None)
    rv = rsub.add_parser("verify")
    rv.add_argument("--path", required=True)
    rv.add_argument("--sha256", required=True)
    repo.set_defaults(fn=cmd_repo)

    gb = sub.add_parser("gen-bindings", help="emit the stage registry document")
    gb.add_argument("--out", required=True)
    gb.set_defaults(fn=cmd_gen_bindings)

    rpc = sub.add_parser("serve-rpc", help="line-delimited RPC server on stdin/stdout")
    rpc.add_argument("--workers", type=int, default=None)
    rpc.set_defaults(fn=cmd_serve_rpc)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except JobError as exc:
        print(f"job error: {exc}", file=sys.stderr)
        return 3
    except (TundraError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
