/**
 * Turn a stage registry document into the tundra_client package: one wrapper
 * class per stage descriptor, the RPC runtime it rides on, and a version
 * stamp. Output is a pure function of the input document (plus the runtime
 * source text), so regenerating from the same registry is byte-identical.
 */

import { createHash } from "node:crypto";

import type { ParamKind, ParamSpec, RegistryDocument, StageDescriptor } from "./runtime.js";

export const GENERATOR_VERSION = "1";

export class UnknownParamKind extends Error {}
export class DuplicateStage extends Error {}

const KIND_TO_TS: Record<ParamKind, string> = {
  int: "number",
  float: "number",
  bool: "boolean",
  string: "string",
  stringList: "string[]",
  floatList: "number[]",
  path: "string",
  column: "string",
};

function tsType(spec: ParamSpec): string {
  const mapped = KIND_TO_TS[spec.kind];
  if (!mapped) {
    throw new UnknownParamKind(
      `param ${spec.name}: no native type for kind ${JSON.stringify(spec.kind)}`,
    );
  }
  return mapped;
}

function accessorSuffix(name: string): string {
  return name.charAt(0).toUpperCase() + name.slice(1);
}

function docComment(text: string, indent: string): string {
  if (!text) return "";
  return `${indent}/** ${text.replace(/\*\//g, "*\\/")} */\n`;
}

function emitStage(stage: StageDescriptor): string {
  const base = stage.kind === "estimator" ? "EstimatorBase" : "StageBase";
  const lines: string[] = [];
  const ctorFields = stage.params
    .map((p) => `  ${p.name}?: ${tsType(p)};`)
    .join("\n");
  const specLiteral = JSON.stringify(stage.params);
  lines.push(`export interface ${stage.name}Params {`);
  if (ctorFields) lines.push(ctorFields);
  lines.push(`}`);
  lines.push(``);
  lines.push(`/** ${stage.kind === "estimator" ? "Estimator" : "Transformer"} stage \`${stage.name}\`. */`);
  lines.push(`export class ${stage.name} extends ${base} {`);
  lines.push(`  static readonly paramSpecs: ParamSpec[] = ${specLiteral};`);
  lines.push(``);
  lines.push(`  constructor(client: TundraClient, params: ${stage.name}Params = {}) {`);
  lines.push(`    super(client, ${JSON.stringify(stage.name)}, ${stage.name}.paramSpecs,`);
  lines.push(`          params as Record<string, unknown>);`);
  lines.push(`  }`);
  for (const p of stage.params) {
    const suffix = accessorSuffix(p.name);
    const t = tsType(p);
    lines.push(``);
    lines.push(docComment(p.doc, "  ").trimEnd() || undefined!);
    lines.push(`  set${suffix}(value: ${t}): this {`);
    lines.push(`    return this.setParam(${JSON.stringify(p.name)}, value);`);
    lines.push(`  }`);
    lines.push(``);
    lines.push(docComment(p.doc, "  ").trimEnd() || undefined!);
    lines.push(`  get${suffix}(): ${t} | undefined {`);
    lines.push(`    return this.getParam(${JSON.stringify(p.name)}) as ${t} | undefined;`);
    lines.push(`  }`);
  }
  lines.push(`}`);
  return lines.filter((l) => l !== undefined).join("\n");
}

export function generateBindings(
  doc: RegistryDocument,
  runtimeSource: string,
): Map<string, string> {
  const seen = new Set<string>();
  for (const stage of doc.stages) {
    if (seen.has(stage.name)) {
      throw new DuplicateStage(`stage ${stage.name} appears twice in the registry`);
    }
    seen.add(stage.name);
    for (const p of stage.params) tsType(p); // fail fast on unknown kinds
  }
  const stages = [...doc.stages].sort((a, b) => (a.name < b.name ? -1 : 1));

  const header =
    `// Generated by the tundra bindings generator v${GENERATOR_VERSION}.\n` +
    `// Input: the engine's stage registry document. Do not edit by hand.\n\n` +
    `import { EstimatorBase, StageBase, type ParamSpec, type TundraClient } from "./runtime.js";\n\n`;
  const body = stages.map(emitStage).join("\n\n");
  const names = stages.map((s) => s.name);
  const footer =
    `\n\nexport const ALL_STAGES = {\n` +
    names.map((n) => `  ${n},`).join("\n") +
    `\n} as const;\n`;

  const registryJson = JSON.stringify(doc, Object.keys(doc).sort(), 2) + "\n";
  const stamp =
    `export const GENERATOR_VERSION = ${JSON.stringify(GENERATOR_VERSION)};\n` +
    `export const REGISTRY_SHA256 = ${JSON.stringify(
      createHash("sha256").update(registryJson).digest("hex"),
    )};\n`;

  const index =
    `export * from "./runtime.js";\n` +
    `export * from "./stages.js";\n` +
    `export * from "./version.js";\n`;

  return new Map([
    ["tundra_client/stages.ts", header + body + footer],
    ["tundra_client/runtime.ts", runtimeSource],
    ["tundra_client/version.ts", stamp],
    ["tundra_client/index.ts", index],
  ]);
}
