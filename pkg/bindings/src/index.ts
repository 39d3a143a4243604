export { cliCommand, runCli, type CliResult } from "./cli.js";
export { TabseqCliError } from "./errors.js";
export { openPipeline, Pipeline, type PipelineOptions } from "./pipeline.js";
export {
  parseRecordLine,
  serializeRecord,
  type BoundRecord,
} from "./records.js";
export {
  transform,
  type ExampleFields,
  type TransformConfig,
  type TransformOp,
  type TransformResult,
} from "./transform.js";
export { vocab } from "./vocab.js";

/** Mirrors the pipeline package version. */
export const version = "0.1.0";
