/**
 * The end-to-end fidelity check: an RN2 pipeline built purely through the
 * generated wrappers over RPC must reproduce the CLI experiment's RN2 metrics
 * document byte for byte.
 *
 * Everything the CLI derives (camera split, partition layout, stage
 * parameters) is re-derived client-side from the same documented recipe:
 * split seed = deriveSeed(seed, "split"), 8 partitions, resize 64x64 to the
 * feat64 node, head trained 3000 epochs at rate 2.0 with l2 1e-5. The LR
 * seed param does not influence the fit (zero-init full-batch GD), so the
 * wrapper passes the registry default.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readdirSync, readFileSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, expect, it } from "vitest";

import { cameraInTestSplit, deriveSeed } from "./hashing.js";
import { ensureGenerated } from "./setup.js";

const SEED = 0;
let client: any;
let stages: any;
let corpus: string;
let cliOut: string;

beforeAll(async () => {
  const dir = ensureGenerated();
  stages = await import(join(dir, "index.ts"));

  const work = mkdtempSync(join(tmpdir(), "tundra-rn2-"));
  corpus = join(work, "corpus");
  cliOut = join(work, "cli-out");
  execFileSync("tundra", ["gen-corpus", "--out", corpus, "--cameras", "16",
                          "--bursts-per-camera", "2", "--burst-len", "3",
                          "--leopard-frac", "0.4", "--seed", String(SEED)]);
  execFileSync("tundra", ["experiment", "--data", corpus, "--out", cliOut,
                          "--seed", String(SEED), "--variants", "RN2",
                          "--workers", "2"]);
  client = stages.TundraClient.connect(["tundra", "serve-rpc"], 2);
});

afterAll(async () => {
  try {
    await client.shutdown();
  } catch {
    /* gone */
  }
});

it("wrapper-built RN2 reproduces the CLI metrics byte for byte", async () => {
  const cliMetrics = readFileSync(join(cliOut, "RN2.metrics.json"), "utf-8");

  const splitSeed = deriveSeed(BigInt(SEED), "split");
  const cams = readdirSync(corpus).filter((name) =>
    statSync(join(corpus, name)).isDirectory());
  const testCams = cams.filter((c) => cameraInTestSplit(c, 0.2, splitSeed));
  const trainCams = cams.filter((c) => !cameraInTestSplit(c, 0.2, splitSeed));
  expect(testCams.length).toBeGreaterThan(0);
  expect(trainCams.length).toBeGreaterThan(0);

  const data = await client.readImages(corpus, 8);
  const train = await new stages.ValueFilter(client, {
    inputCol: "cameraId", values: trainCams, keep: true,
  }).transform(data);
  const test = await new stages.ValueFilter(client, {
    inputCol: "cameraId", values: testCams, keep: true,
  }).transform(data);

  const featurizer = new stages.ImageFeaturizer(client, {
    inputCol: "image",
    outputCol: "features",
    modelPath: join(cliOut, "refcnn.tgraph"),
    outputNode: "feat64",
    resizeW: 64,
    resizeH: 64,
    miniBatchSize: 64,
  });
  const head = new stages.LogisticRegression(client, {
    featuresCol: "features",
    labelCol: "label",
    scoreCol: "score",
    learningRate: 2.0,
    epochs: 3000,
    l2: 1e-5,
  });

  const model = await head.fit(await featurizer.transform(train));
  const scored = await model.transform(await featurizer.transform(test));
  const result = await client.evaluateBinary(scored, "score", "label");

  expect(result.document).toBe(cliMetrics);
  expect(JSON.parse(result.document).auc).toBe(result.auc);

  // sanity: the scored rows line up with the CLI's per-image score export
  const cliScores = readFileSync(join(cliOut, "RN2.scores.csv"), "utf-8")
    .trim().split("\n").slice(1);
  const collected = await scored.collect(0);
  expect(collected.rows).toHaveLength(cliScores.length);

  await client.savePipeline([featurizer, model], join(cliOut, "rpc-pipeline"));
  expect(statSync(join(cliOut, "rpc-pipeline", "pipeline.json")).isFile()).toBe(true);
});
