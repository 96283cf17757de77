import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const ROOT = join(__dirname, "..");

let generatedOnce = false;

/** Generate the client package from the live engine registry. */
export function ensureGenerated(): string {
  if (!generatedOnce) {
    const reg = mkdtempSync(join(tmpdir(), "tundra-reg-"));
    execFileSync("tundra", ["gen-bindings", "--out", reg]);
    execFileSync("npx", ["tsc", "-p", join(ROOT, "tsconfig.json")], { cwd: ROOT });
    execFileSync(
      "node",
      [join(ROOT, "dist", "cli.js"), "--registry", join(reg, "registry.json"),
       "--out", join(ROOT, "generated")],
      { cwd: ROOT },
    );
    generatedOnce = true;
  }
  return join(ROOT, "generated", "tundra_client");
}

export function sampleValue(kind: string): unknown {
  switch (kind) {
    case "int":
      return 3;
    case "float":
      return 0.5;
    case "bool":
      return true;
    case "string":
      return "sample";
    case "path":
      return "/tmp/sample-path";
    case "column":
      return "someColumn";
    case "stringList":
      return ["a", "b"];
    case "floatList":
      return [0.25, 1.5];
    default:
      throw new Error(`no sample for kind ${kind}`);
  }
}

export function readRegistry(): {
  stages: { name: string; kind: string; params: { name: string; kind: string }[] }[];
} {
  const dir = mkdtempSync(join(tmpdir(), "tundra-reg-"));
  execFileSync("tundra", ["gen-bindings", "--out", dir]);
  return JSON.parse(readFileSync(join(dir, "registry.json"), "utf-8"));
}
