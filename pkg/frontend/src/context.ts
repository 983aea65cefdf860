/** Page wiring comes from data- attributes on <body>; scripts hold no secrets. */

import type { PageContext } from "./types.js";

export function readContext(body: HTMLElement = document.body): PageContext {
  const data = body.dataset;
  const dataset: Record<string, string> = {};
  for (const key of Object.keys(data)) {
    dataset[key] = data[key] ?? "";
  }
  return {
    token: data.token ?? "",
    pageId: data.page ?? "",
    measurementId: data.measurement ?? "",
    beaconUrl: data.beaconUrl ?? "/beacon",
    revealUrl: data.revealUrl ?? "/gate/reveal",
    dataset,
  };
}

export function flag(ctx: PageContext, name: string): boolean {
  return ctx.dataset[name] === "true";
}
