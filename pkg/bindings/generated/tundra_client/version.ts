export const GENERATOR_VERSION = "1";
export const REGISTRY_SHA256 = "030e342f622e4a9a7a3d34ee44a9498999f8c1fc66243308744f530c84e84b54";
