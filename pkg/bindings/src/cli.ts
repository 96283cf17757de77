/** Command line for the generator: registry document in, client package out. */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { generateBindings } from "./generator.js";
import type { RegistryDocument } from "./runtime.js";

function arg(name: string, fallback?: string): string {
  const i = process.argv.indexOf(name);
  if (i >= 0 && i + 1 < process.argv.length) return process.argv[i + 1];
  if (fallback !== undefined) return fallback;
  console.error(`missing required argument ${name}`);
  process.exit(2);
}

const registryPath = arg("--registry");
const outDir = arg("--out", "generated");
const here = dirname(fileURLToPath(import.meta.url));
let runtimePath = join(here, "runtime.ts");
try {
  readFileSync(runtimePath);
} catch {
  runtimePath = join(here, "..", "src", "runtime.ts");
}
const runtimeSource = readFileSync(runtimePath, "utf-8");

const doc = JSON.parse(readFileSync(registryPath, "utf-8")) as RegistryDocument;
const files = generateBindings(doc, runtimeSource);
for (const [rel, content] of files) {
  const path = join(outDir, rel);
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, content);
}
console.log(`wrote ${files.size} files under ${join(outDir, "tundra_client")}`);
