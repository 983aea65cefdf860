/** Shared shapes for page instrumentation. */

export type BeaconKind =
  | "StorageWrite"
  | "StorageRead"
  | "CacheTiming"
  | "VisitedProbe"
  | "BannerShown"
  | "BannerAction"
  | "PermissionTrigger"
  | "PermissionDecision"
  | "FormSubmission"
  | "GateRevealed"
  | "SubresourceOutcome"
  | "PageView";

export interface WireBeacon {
  run_token: string;
  measurement_id: string;
  page_id: string;
  kind: BeaconKind;
  payload: Record<string, unknown>;
  client_seq: number;
}

export interface PageContext {
  token: string;
  pageId: string;
  measurementId: string;
  beaconUrl: string;
  revealUrl: string;
  dataset: Record<string, string>;
}

export interface ProbeContext {
  top: string;
  party: "first" | "third";
  embedded_origin: string;
}

export interface RevealResponse {
  html: string;
  price: string;
  revealed_by: string;
  already_revealed: boolean;
}
