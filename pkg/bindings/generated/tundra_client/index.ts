export * from "./runtime.js";
export * from "./stages.js";
export * from "./version.js";
