// Generated by the tundra bindings generator v1.
// Input: the engine's stage registry document. Do not edit by hand.

import { EstimatorBase, StageBase, type ParamSpec, type TundraClient } from "./runtime.js";

export interface BurstAssignerParams {
  cameraCol?: string;
  timestampCol?: string;
  outputCol?: string;
  gapSeconds?: number;
}

/** Transformer stage `BurstAssigner`. */
export class BurstAssigner extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"String column with the camera id.","kind":"column","name":"cameraCol"},{"default":null,"doc":"Timestamp column (UTC seconds).","kind":"column","name":"timestampCol"},{"default":"burstId","doc":"String column to append.","kind":"column","name":"outputCol"},{"default":60,"doc":"Gap above which a new burst starts.","kind":"float","name":"gapSeconds"}];

  constructor(client: TundraClient, params: BurstAssignerParams = {}) {
    super(client, "BurstAssigner", BurstAssigner.paramSpecs,
          params as Record<string, unknown>);
  }

  /** String column with the camera id. */
  setCameraCol(value: string): this {
    return this.setParam("cameraCol", value);
  }

  /** String column with the camera id. */
  getCameraCol(): string | undefined {
    return this.getParam("cameraCol") as string | undefined;
  }

  /** Timestamp column (UTC seconds). */
  setTimestampCol(value: string): this {
    return this.setParam("timestampCol", value);
  }

  /** Timestamp column (UTC seconds). */
  getTimestampCol(): string | undefined {
    return this.getParam("timestampCol") as string | undefined;
  }

  /** String column to append. */
  setOutputCol(value: string): this {
    return this.setParam("outputCol", value);
  }

  /** String column to append. */
  getOutputCol(): string | undefined {
    return this.getParam("outputCol") as string | undefined;
  }

  /** Gap above which a new burst starts. */
  setGapSeconds(value: number): this {
    return this.setParam("gapSeconds", value);
  }

  /** Gap above which a new burst starts. */
  getGapSeconds(): number | undefined {
    return this.getParam("gapSeconds") as number | undefined;
  }
}

export interface CacheStageParams {
}

/** Transformer stage `CacheStage`. */
export class CacheStage extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [];

  constructor(client: TundraClient, params: CacheStageParams = {}) {
    super(client, "CacheStage", CacheStage.paramSpecs,
          params as Record<string, unknown>);
  }
}

export interface DropColumnsParams {
  columns?: string[];
}

/** Transformer stage `DropColumns`. */
export class DropColumns extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Column names to drop.","kind":"stringList","name":"columns"}];

  constructor(client: TundraClient, params: DropColumnsParams = {}) {
    super(client, "DropColumns", DropColumns.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Column names to drop. */
  setColumns(value: string[]): this {
    return this.setParam("columns", value);
  }

  /** Column names to drop. */
  getColumns(): string[] | undefined {
    return this.getParam("columns") as string[] | undefined;
  }
}

export interface GroupedScoreAveragerParams {
  keyCol?: string;
  scoreCol?: string;
}

/** Transformer stage `GroupedScoreAverager`. */
export class GroupedScoreAverager extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Grouping key (burstId, originId, ...).","kind":"column","name":"keyCol"},{"default":null,"doc":"Float64 score column to average in place.","kind":"column","name":"scoreCol"}];

  constructor(client: TundraClient, params: GroupedScoreAveragerParams = {}) {
    super(client, "GroupedScoreAverager", GroupedScoreAverager.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Grouping key (burstId, originId, ...). */
  setKeyCol(value: string): this {
    return this.setParam("keyCol", value);
  }

  /** Grouping key (burstId, originId, ...). */
  getKeyCol(): string | undefined {
    return this.getParam("keyCol") as string | undefined;
  }

  /** Float64 score column to average in place. */
  setScoreCol(value: string): this {
    return this.setParam("scoreCol", value);
  }

  /** Float64 score column to average in place. */
  getScoreCol(): string | undefined {
    return this.getParam("scoreCol") as string | undefined;
  }
}

export interface ImageFeaturizerParams {
  inputCol?: string;
  outputCol?: string;
  modelPath?: string;
  outputNode?: string;
  resizeW?: number;
  resizeH?: number;
  miniBatchSize?: number;
}

/** Transformer stage `ImageFeaturizer`. */
export class ImageFeaturizer extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Image column to featurize.","kind":"column","name":"inputCol"},{"default":null,"doc":"FloatVector column to append.","kind":"column","name":"outputCol"},{"default":null,"doc":"Manifest path of the model file pair.","kind":"path","name":"modelPath"},{"default":null,"doc":"Graph node whose value is the feature.","kind":"string","name":"outputNode"},{"default":null,"doc":"Resize width fed to the model.","kind":"int","name":"resizeW"},{"default":null,"doc":"Resize height fed to the model.","kind":"int","name":"resizeH"},{"default":64,"doc":"Rows per network kernel invocation.","kind":"int","name":"miniBatchSize"}];

  constructor(client: TundraClient, params: ImageFeaturizerParams = {}) {
    super(client, "ImageFeaturizer", ImageFeaturizer.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Image column to featurize. */
  setInputCol(value: string): this {
    return this.setParam("inputCol", value);
  }

  /** Image column to featurize. */
  getInputCol(): string | undefined {
    return this.getParam("inputCol") as string | undefined;
  }

  /** FloatVector column to append. */
  setOutputCol(value: string): this {
    return this.setParam("outputCol", value);
  }

  /** FloatVector column to append. */
  getOutputCol(): string | undefined {
    return this.getParam("outputCol") as string | undefined;
  }

  /** Manifest path of the model file pair. */
  setModelPath(value: string): this {
    return this.setParam("modelPath", value);
  }

  /** Manifest path of the model file pair. */
  getModelPath(): string | undefined {
    return this.getParam("modelPath") as string | undefined;
  }

  /** Graph node whose value is the feature. */
  setOutputNode(value: string): this {
    return this.setParam("outputNode", value);
  }

  /** Graph node whose value is the feature. */
  getOutputNode(): string | undefined {
    return this.getParam("outputNode") as string | undefined;
  }

  /** Resize width fed to the model. */
  setResizeW(value: number): this {
    return this.setParam("resizeW", value);
  }

  /** Resize width fed to the model. */
  getResizeW(): number | undefined {
    return this.getParam("resizeW") as number | undefined;
  }

  /** Resize height fed to the model. */
  setResizeH(value: number): this {
    return this.setParam("resizeH", value);
  }

  /** Resize height fed to the model. */
  getResizeH(): number | undefined {
    return this.getParam("resizeH") as number | undefined;
  }

  /** Rows per network kernel invocation. */
  setMiniBatchSize(value: number): this {
    return this.setParam("miniBatchSize", value);
  }

  /** Rows per network kernel invocation. */
  getMiniBatchSize(): number | undefined {
    return this.getParam("miniBatchSize") as number | undefined;
  }
}

export interface ImageSetAugmenterParams {
  inputCol?: string;
  mode?: string;
}

/** Transformer stage `ImageSetAugmenter`. */
export class ImageSetAugmenter extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Image column to flip.","kind":"column","name":"inputCol"},{"default":"train","doc":"'train' or 'score'; duplication is identical, the mode documents intent for readers of the pipeline spec.","kind":"string","name":"mode"}];

  constructor(client: TundraClient, params: ImageSetAugmenterParams = {}) {
    super(client, "ImageSetAugmenter", ImageSetAugmenter.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Image column to flip. */
  setInputCol(value: string): this {
    return this.setParam("inputCol", value);
  }

  /** Image column to flip. */
  getInputCol(): string | undefined {
    return this.getParam("inputCol") as string | undefined;
  }

  /** 'train' or 'score'; duplication is identical, the mode documents intent for readers of the pipeline spec. */
  setMode(value: string): this {
    return this.setParam("mode", value);
  }

  /** 'train' or 'score'; duplication is identical, the mode documents intent for readers of the pipeline spec. */
  getMode(): string | undefined {
    return this.getParam("mode") as string | undefined;
  }
}

export interface ImageTransformerParams {
  inputCol?: string;
  outputCol?: string;
  chain?: string[];
}

/** Transformer stage `ImageTransformer`. */
export class ImageTransformer extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Image column to read.","kind":"column","name":"inputCol"},{"default":null,"doc":"Column to write (may equal inputCol).","kind":"column","name":"outputCol"},{"default":null,"doc":"Op chain, e.g. ['resize:64:64:bilinear', 'toVector'].","kind":"stringList","name":"chain"}];

  constructor(client: TundraClient, params: ImageTransformerParams = {}) {
    super(client, "ImageTransformer", ImageTransformer.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Image column to read. */
  setInputCol(value: string): this {
    return this.setParam("inputCol", value);
  }

  /** Image column to read. */
  getInputCol(): string | undefined {
    return this.getParam("inputCol") as string | undefined;
  }

  /** Column to write (may equal inputCol). */
  setOutputCol(value: string): this {
    return this.setParam("outputCol", value);
  }

  /** Column to write (may equal inputCol). */
  getOutputCol(): string | undefined {
    return this.getParam("outputCol") as string | undefined;
  }

  /** Op chain, e.g. ['resize:64:64:bilinear', 'toVector']. */
  setChain(value: string[]): this {
    return this.setParam("chain", value);
  }

  /** Op chain, e.g. ['resize:64:64:bilinear', 'toVector']. */
  getChain(): string[] | undefined {
    return this.getParam("chain") as string[] | undefined;
  }
}

export interface LogisticRegressionParams {
  featuresCol?: string;
  labelCol?: string;
  scoreCol?: string;
  learningRate?: number;
  epochs?: number;
  l2?: number;
  seed?: number;
}

/** Estimator stage `LogisticRegression`. */
export class LogisticRegression extends EstimatorBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"FloatVector feature column.","kind":"column","name":"featuresCol"},{"default":null,"doc":"Int64 column holding 0/1 labels.","kind":"column","name":"labelCol"},{"default":"score","doc":"Score column the fitted model appends.","kind":"column","name":"scoreCol"},{"default":0.1,"doc":"GD step size (> 0).","kind":"float","name":"learningRate"},{"default":100,"doc":"Full-batch GD steps (>= 1).","kind":"int","name":"epochs"},{"default":0.0001,"doc":"L2 penalty on weights (>= 0).","kind":"float","name":"l2"},{"default":42,"doc":"Determinism-contract seed; zero-init GD does not consume it.","kind":"int","name":"seed"}];

  constructor(client: TundraClient, params: LogisticRegressionParams = {}) {
    super(client, "LogisticRegression", LogisticRegression.paramSpecs,
          params as Record<string, unknown>);
  }

  /** FloatVector feature column. */
  setFeaturesCol(value: string): this {
    return this.setParam("featuresCol", value);
  }

  /** FloatVector feature column. */
  getFeaturesCol(): string | undefined {
    return this.getParam("featuresCol") as string | undefined;
  }

  /** Int64 column holding 0/1 labels. */
  setLabelCol(value: string): this {
    return this.setParam("labelCol", value);
  }

  /** Int64 column holding 0/1 labels. */
  getLabelCol(): string | undefined {
    return this.getParam("labelCol") as string | undefined;
  }

  /** Score column the fitted model appends. */
  setScoreCol(value: string): this {
    return this.setParam("scoreCol", value);
  }

  /** Score column the fitted model appends. */
  getScoreCol(): string | undefined {
    return this.getParam("scoreCol") as string | undefined;
  }

  /** GD step size (> 0). */
  setLearningRate(value: number): this {
    return this.setParam("learningRate", value);
  }

  /** GD step size (> 0). */
  getLearningRate(): number | undefined {
    return this.getParam("learningRate") as number | undefined;
  }

  /** Full-batch GD steps (>= 1). */
  setEpochs(value: number): this {
    return this.setParam("epochs", value);
  }

  /** Full-batch GD steps (>= 1). */
  getEpochs(): number | undefined {
    return this.getParam("epochs") as number | undefined;
  }

  /** L2 penalty on weights (>= 0). */
  setL2(value: number): this {
    return this.setParam("l2", value);
  }

  /** L2 penalty on weights (>= 0). */
  getL2(): number | undefined {
    return this.getParam("l2") as number | undefined;
  }

  /** Determinism-contract seed; zero-init GD does not consume it. */
  setSeed(value: number): this {
    return this.setParam("seed", value);
  }

  /** Determinism-contract seed; zero-init GD does not consume it. */
  getSeed(): number | undefined {
    return this.getParam("seed") as number | undefined;
  }
}

export interface LogisticRegressionModelParams {
  featuresCol?: string;
  scoreCol?: string;
}

/** Transformer stage `LogisticRegressionModel`. */
export class LogisticRegressionModel extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"FloatVector feature column.","kind":"column","name":"featuresCol"},{"default":"score","doc":"Float64 column to append with the positive-class probability.","kind":"column","name":"scoreCol"}];

  constructor(client: TundraClient, params: LogisticRegressionModelParams = {}) {
    super(client, "LogisticRegressionModel", LogisticRegressionModel.paramSpecs,
          params as Record<string, unknown>);
  }

  /** FloatVector feature column. */
  setFeaturesCol(value: string): this {
    return this.setParam("featuresCol", value);
  }

  /** FloatVector feature column. */
  getFeaturesCol(): string | undefined {
    return this.getParam("featuresCol") as string | undefined;
  }

  /** Float64 column to append with the positive-class probability. */
  setScoreCol(value: string): this {
    return this.setParam("scoreCol", value);
  }

  /** Float64 column to append with the positive-class probability. */
  getScoreCol(): string | undefined {
    return this.getParam("scoreCol") as string | undefined;
  }
}

export interface NetworkModelParams {
  modelPath?: string;
  inputCol?: string;
  outputCol?: string;
  outputNode?: string;
  miniBatchSize?: number;
}

/** Transformer stage `NetworkModel`. */
export class NetworkModel extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Manifest path of the model file pair.","kind":"path","name":"modelPath"},{"default":null,"doc":"FloatVector column fed to the graph.","kind":"column","name":"inputCol"},{"default":null,"doc":"FloatVector column to append.","kind":"column","name":"outputCol"},{"default":null,"doc":"Graph node whose value is emitted.","kind":"string","name":"outputNode"},{"default":64,"doc":"Rows evaluated per kernel invocation (>= 1).","kind":"int","name":"miniBatchSize"}];

  constructor(client: TundraClient, params: NetworkModelParams = {}) {
    super(client, "NetworkModel", NetworkModel.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Manifest path of the model file pair. */
  setModelPath(value: string): this {
    return this.setParam("modelPath", value);
  }

  /** Manifest path of the model file pair. */
  getModelPath(): string | undefined {
    return this.getParam("modelPath") as string | undefined;
  }

  /** FloatVector column fed to the graph. */
  setInputCol(value: string): this {
    return this.setParam("inputCol", value);
  }

  /** FloatVector column fed to the graph. */
  getInputCol(): string | undefined {
    return this.getParam("inputCol") as string | undefined;
  }

  /** FloatVector column to append. */
  setOutputCol(value: string): this {
    return this.setParam("outputCol", value);
  }

  /** FloatVector column to append. */
  getOutputCol(): string | undefined {
    return this.getParam("outputCol") as string | undefined;
  }

  /** Graph node whose value is emitted. */
  setOutputNode(value: string): this {
    return this.setParam("outputNode", value);
  }

  /** Graph node whose value is emitted. */
  getOutputNode(): string | undefined {
    return this.getParam("outputNode") as string | undefined;
  }

  /** Rows evaluated per kernel invocation (>= 1). */
  setMiniBatchSize(value: number): this {
    return this.setParam("miniBatchSize", value);
  }

  /** Rows evaluated per kernel invocation (>= 1). */
  getMiniBatchSize(): number | undefined {
    return this.getParam("miniBatchSize") as number | undefined;
  }
}

export interface RepartitionStageParams {
  n?: number;
}

/** Transformer stage `RepartitionStage`. */
export class RepartitionStage extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Target partition count (>= 1).","kind":"int","name":"n"}];

  constructor(client: TundraClient, params: RepartitionStageParams = {}) {
    super(client, "RepartitionStage", RepartitionStage.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Target partition count (>= 1). */
  setN(value: number): this {
    return this.setParam("n", value);
  }

  /** Target partition count (>= 1). */
  getN(): number | undefined {
    return this.getParam("n") as number | undefined;
  }
}

export interface SelectColumnsParams {
  columns?: string[];
}

/** Transformer stage `SelectColumns`. */
export class SelectColumns extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Column names to keep, in output order.","kind":"stringList","name":"columns"}];

  constructor(client: TundraClient, params: SelectColumnsParams = {}) {
    super(client, "SelectColumns", SelectColumns.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Column names to keep, in output order. */
  setColumns(value: string[]): this {
    return this.setParam("columns", value);
  }

  /** Column names to keep, in output order. */
  getColumns(): string[] | undefined {
    return this.getParam("columns") as string[] | undefined;
  }
}

export interface ValueFilterParams {
  inputCol?: string;
  values?: string[];
  keep?: boolean;
}

/** Transformer stage `ValueFilter`. */
export class ValueFilter extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Column holding the value to test.","kind":"column","name":"inputCol"},{"default":null,"doc":"Values selecting the rows.","kind":"stringList","name":"values"},{"default":true,"doc":"True keeps matching rows; False drops them.","kind":"bool","name":"keep"}];

  constructor(client: TundraClient, params: ValueFilterParams = {}) {
    super(client, "ValueFilter", ValueFilter.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Column holding the value to test. */
  setInputCol(value: string): this {
    return this.setParam("inputCol", value);
  }

  /** Column holding the value to test. */
  getInputCol(): string | undefined {
    return this.getParam("inputCol") as string | undefined;
  }

  /** Values selecting the rows. */
  setValues(value: string[]): this {
    return this.setParam("values", value);
  }

  /** Values selecting the rows. */
  getValues(): string[] | undefined {
    return this.getParam("values") as string[] | undefined;
  }

  /** True keeps matching rows; False drops them. */
  setKeep(value: boolean): this {
    return this.setParam("keep", value);
  }

  /** True keeps matching rows; False drops them. */
  getKeep(): boolean | undefined {
    return this.getParam("keep") as boolean | undefined;
  }
}

export interface VectorAssemblerParams {
  inputCols?: string[];
  outputCol?: string;
}

/** Transformer stage `VectorAssembler`. */
export class VectorAssembler extends StageBase {
  static readonly paramSpecs: ParamSpec[] = [{"default":null,"doc":"Columns to concatenate, in order.","kind":"stringList","name":"inputCols"},{"default":null,"doc":"FloatVector column to append.","kind":"column","name":"outputCol"}];

  constructor(client: TundraClient, params: VectorAssemblerParams = {}) {
    super(client, "VectorAssembler", VectorAssembler.paramSpecs,
          params as Record<string, unknown>);
  }

  /** Columns to concatenate, in order. */
  setInputCols(value: string[]): this {
    return this.setParam("inputCols", value);
  }

  /** Columns to concatenate, in order. */
  getInputCols(): string[] | undefined {
    return this.getParam("inputCols") as string[] | undefined;
  }

  /** FloatVector column to append. */
  setOutputCol(value: string): this {
    return this.setParam("outputCol", value);
  }

  /** FloatVector column to append. */
  getOutputCol(): string | undefined {
    return this.getParam("outputCol") as string | undefined;
  }
}

export const ALL_STAGES = {
  BurstAssigner,
  CacheStage,
  DropColumns,
  GroupedScoreAverager,
  ImageFeaturizer,
  ImageSetAugmenter,
  ImageTransformer,
  LogisticRegression,
  LogisticRegressionModel,
  NetworkModel,
  RepartitionStage,
  SelectColumns,
  ValueFilter,
  VectorAssembler,
} as const;
