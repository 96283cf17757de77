import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  DuplicateStage,
  UnknownParamKind,
  generateBindings,
} from "../src/generator.js";
import type { RegistryDocument } from "../src/runtime.js";

import { cameraInTestSplit, deriveSeed, fnv1a64, splitmix64 } from "./hashing.js";

function engineRegistry(): RegistryDocument {
  const dir = mkdtempSync(join(tmpdir(), "tundra-reg-"));
  execFileSync("tundra", ["gen-bindings", "--out", dir]);
  return JSON.parse(readFileSync(join(dir, "registry.json"), "utf-8"));
}

const RUNTIME = readFileSync(join(__dirname, "..", "src", "runtime.ts"), "utf-8");

describe("generator", () => {
  it("emits one wrapper per registry entry", () => {
    const doc = engineRegistry();
    const files = generateBindings(doc, RUNTIME);
    const stages = files.get("tundra_client/stages.ts")!;
    for (const stage of doc.stages) {
      expect(stages).toContain(`export class ${stage.name} `);
      for (const p of stage.params) {
        const suffix = p.name.charAt(0).toUpperCase() + p.name.slice(1);
        expect(stages).toContain(`set${suffix}(`);
        expect(stages).toContain(`get${suffix}(`);
      }
    }
    expect(files.get("tundra_client/runtime.ts")).toBe(RUNTIME);
    expect(files.get("tundra_client/version.ts")).toContain("REGISTRY_SHA256");
  });

  it("is deterministic: regenerating yields byte-identical output", () => {
    const doc = engineRegistry();
    const a = generateBindings(doc, RUNTIME);
    const b = generateBindings(JSON.parse(JSON.stringify(doc)), RUNTIME);
    expect([...a.keys()]).toEqual([...b.keys()]);
    for (const key of a.keys()) {
      expect(a.get(key)).toBe(b.get(key));
    }
  });

  it("mirrors parameter docs into TSDoc comments", () => {
    const doc: RegistryDocument = {
      stages: [
        {
          name: "Sample",
          kind: "transformer",
          params: [
            { name: "alpha", kind: "float", default: 0.5, doc: "Mixing weight." },
          ],
        },
      ],
    };
    const stages = generateBindings(doc, RUNTIME).get("tundra_client/stages.ts")!;
    expect(stages).toContain("/** Mixing weight. */");
  });

  it("rejects unknown param kinds", () => {
    const doc = {
      stages: [
        {
          name: "Bad",
          kind: "transformer",
          params: [{ name: "x", kind: "blob", default: null, doc: "" }],
        },
      ],
    } as unknown as RegistryDocument;
    expect(() => generateBindings(doc, RUNTIME)).toThrow(UnknownParamKind);
  });

  it("rejects duplicate stages", () => {
    const stage = { name: "Twice", kind: "transformer" as const, params: [] };
    expect(() =>
      generateBindings({ stages: [stage, stage] }, RUNTIME),
    ).toThrow(DuplicateStage);
  });
});

describe("hash mirror", () => {
  it("matches the engine's frozen vectors", () => {
    expect(fnv1a64(new Uint8Array())).toBe(14695981039346656037n);
    expect(fnv1a64(new TextEncoder().encode("cam001"))).toBe(16772916366511010119n);
    expect(splitmix64(0n)).toBe(16294208416658607535n);
    expect(splitmix64(42n)).toBe(13679457532755275413n);
    expect(deriveSeed(0n, "split")).toBe(16942809337749241491n);
    expect(deriveSeed(7n, "lr:RN2")).toBe(13459682527693487923n);
    const split = deriveSeed(0n, "split");
    expect(cameraInTestSplit("cam000", 0.2, split)).toBe(false);
    expect(cameraInTestSplit("cam003", 0.2, split)).toBe(false);
  });
});
