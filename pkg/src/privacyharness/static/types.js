/** Shared shapes for page instrumentation. */
export {};
