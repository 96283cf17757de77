/**
 * Client runtime for the tundra engine's line-delimited RPC protocol.
 *
 * One client owns one engine subprocess. Requests are serialized: each call
 * writes a single JSON line to the engine's stdin and resolves with the
 * matching response line (responses always arrive in request order).
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import type { Readable, Writable } from "node:stream";

export class TransportError extends Error {}

/** An error raised inside the engine, re-thrown with its code and message. */
export class RemoteError extends Error {
  readonly code: string;
  constructor(code: string, message: string) {
    super(`${code}: ${message}`);
    this.code = code;
  }
}

export type ParamKind =
  | "int"
  | "float"
  | "bool"
  | "string"
  | "stringList"
  | "floatList"
  | "path"
  | "column";

export interface ParamSpec {
  name: string;
  kind: ParamKind;
  default: unknown;
  doc: string;
}

export interface StageDescriptor {
  name: string;
  kind: "estimator" | "transformer";
  params: ParamSpec[];
}

export interface RegistryDocument {
  stages: StageDescriptor[];
}

interface RpcResponse {
  id: number | null;
  ok: boolean;
  result?: unknown;
  error?: { code: string; message: string };
}

/** Validate a value against a ParamSpec kind before anything touches the wire. */
export function checkParamValue(spec: ParamSpec, value: unknown): void {
  const fail = (want: string): never => {
    throw new TypeError(
      `param ${spec.name} expects ${want}, got ${JSON.stringify(value)}`,
    );
  };
  switch (spec.kind) {
    case "int":
      if (typeof value !== "number" || !Number.isInteger(value)) fail("an integer");
      break;
    case "float":
      if (typeof value !== "number" || !Number.isFinite(value)) fail("a number");
      break;
    case "bool":
      if (typeof value !== "boolean") fail("a boolean");
      break;
    case "string":
    case "path":
    case "column":
      if (typeof value !== "string") fail("a string");
      break;
    case "stringList":
      if (!Array.isArray(value) || value.some((v) => typeof v !== "string"))
        fail("a string[]");
      break;
    case "floatList":
      if (!Array.isArray(value) || value.some((v) => typeof v !== "number"))
        fail("a number[]");
      break;
  }
}

export class DataHandle {
  constructor(readonly client: TundraClient, readonly handle: string) {}

  collect(limit = 0): Promise<{ schema: [string, string][]; rows: unknown[][] }> {
    return this.client.call("collect", {
      dataHandle: this.handle,
      limit,
    }) as Promise<{ schema: [string, string][]; rows: unknown[][] }>;
  }
}

export class TundraClient {
  private proc: ChildProcessByStdio<Writable, Readable, null>;
  private nextId = 1;
  private buffer = "";
  private pending: {
    id: number;
    resolve: (v: unknown) => void;
    reject: (e: Error) => void;
  }[] = [];
  private closed = false;

  private constructor(proc: ChildProcessByStdio<Writable, Readable, null>) {
    this.proc = proc;
    proc.stdout.on("data", (chunk: Buffer) => this.onData(chunk));
    proc.on("exit", () => this.failAll(new TransportError("engine exited")));
    proc.on("error", (err) => this.failAll(new TransportError(String(err))));
  }

  /** Spawn an engine subprocess (e.g. ["tundra", "serve-rpc"]). */
  static connect(command: string[], workers?: number): TundraClient {
    const args = command.slice(1);
    if (workers !== undefined) args.push("--workers", String(workers));
    const proc = spawn(command[0], args, { stdio: ["pipe", "pipe", "inherit"] });
    return new TundraClient(proc);
  }

  private onData(chunk: Buffer): void {
    this.buffer += chunk.toString("utf-8");
    let nl;
    while ((nl = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      if (!line.trim()) continue;
      const waiter = this.pending.shift();
      if (!waiter) continue;
      let resp: RpcResponse;
      try {
        resp = JSON.parse(line) as RpcResponse;
      } catch (err) {
        waiter.reject(new TransportError(`unparseable response line: ${line}`));
        continue;
      }
      if (resp.ok) {
        waiter.resolve(resp.result);
      } else {
        const e = resp.error ?? { code: "UnknownError", message: "no detail" };
        waiter.reject(new RemoteError(e.code, e.message));
      }
    }
  }

  private failAll(err: TransportError): void {
    if (this.closed) return;
    this.closed = true;
    for (const waiter of this.pending.splice(0)) waiter.reject(err);
  }

  call(method: string, params: Record<string, unknown> = {}): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new TransportError("client is closed"));
    }
    const id = this.nextId++;
    const line = JSON.stringify({ id, method, params }) + "\n";
    return new Promise((resolve, reject) => {
      this.pending.push({ id, resolve, reject });
      this.proc.stdin.write(line, (err) => {
        if (err) this.failAll(new TransportError(String(err)));
      });
    });
  }

  async describeStages(): Promise<RegistryDocument> {
    return (await this.call("describeStages")) as RegistryDocument;
  }

  async readImages(dir: string, numPartitions = 0): Promise<DataHandle> {
    const r = (await this.call("readImages", { dir, numPartitions })) as {
      handle: string;
    };
    return new DataHandle(this, r.handle);
  }

  async evaluateBinary(
    data: DataHandle,
    scoreCol: string,
    labelCol: string,
  ): Promise<{ auc: number; document: string }> {
    return (await this.call("evaluateBinary", {
      dataHandle: data.handle,
      scoreCol,
      labelCol,
    })) as { auc: number; document: string };
  }

  async savePipeline(stages: StageBase[], path: string): Promise<void> {
    const handles = [];
    for (const s of stages) handles.push(await s.remoteHandle());
    await this.call("savePipeline", { handles, path });
  }

  async shutdown(): Promise<void> {
    try {
      await this.call("shutdown");
    } finally {
      this.closed = true;
      this.proc.stdin.end();
    }
  }

  kill(): void {
    this.proc.kill("SIGKILL");
  }
}

/** Base for generated wrappers: local param store + lazy remote handle. */
export class StageBase {
  readonly client: TundraClient;
  readonly stageName: string;
  readonly specs: Map<string, ParamSpec>;
  private params = new Map<string, unknown>();
  private handle: string | null = null;

  constructor(
    client: TundraClient,
    stageName: string,
    specs: ParamSpec[],
    params: Record<string, unknown> = {},
  ) {
    this.client = client;
    this.stageName = stageName;
    this.specs = new Map(specs.map((s) => [s.name, s]));
    for (const [name, value] of Object.entries(params)) {
      this.setParam(name, value);
    }
  }

  setParam(name: string, value: unknown): this {
    const spec = this.specs.get(name);
    if (!spec) throw new TypeError(`${this.stageName} has no param ${name}`);
    checkParamValue(spec, value);
    this.params.set(name, value);
    this.handle = null; // params changed; re-sync before next use
    return this;
  }

  getParam(name: string): unknown {
    if (!this.specs.has(name)) {
      throw new TypeError(`${this.stageName} has no param ${name}`);
    }
    return this.params.has(name)
      ? this.params.get(name)
      : this.specs.get(name)!.default;
  }

  /** Create (or refresh) the server-side stage and push the local params. */
  async remoteHandle(): Promise<string> {
    if (this.handle === null) {
      const r = (await this.client.call("createStage", {
        stageName: this.stageName,
      })) as { handle: string };
      await this.client.call("setParams", {
        handle: r.handle,
        params: Object.fromEntries(this.params),
      });
      this.handle = r.handle;
    }
    return this.handle;
  }

  async remoteParams(): Promise<Record<string, unknown>> {
    const r = (await this.client.call("getParams", {
      handle: await this.remoteHandle(),
    })) as { params: Record<string, unknown> };
    return r.params;
  }

  async transform(data: DataHandle): Promise<DataHandle> {
    const r = (await this.client.call("transform", {
      handle: await this.remoteHandle(),
      dataHandle: data.handle,
    })) as { handle: string };
    return new DataHandle(this.client, r.handle);
  }
}

/** Fitted transformer returned by Estimator.fit; already lives server-side. */
export class FittedStage extends StageBase {
  private readonly fittedHandle: string;

  constructor(client: TundraClient, handle: string, stageName: string) {
    super(client, stageName, []);
    this.fittedHandle = handle;
  }

  override async remoteHandle(): Promise<string> {
    return this.fittedHandle;
  }
}

export class EstimatorBase extends StageBase {
  async fit(data: DataHandle): Promise<FittedStage> {
    const r = (await this.client.call("fit", {
      handle: await this.remoteHandle(),
      dataHandle: data.handle,
    })) as { handle: string };
    return new FittedStage(this.client, r.handle, `${this.stageName}Model`);
  }
}
