import { BeaconChannel } from "../src/beacon.js";
import type { PageContext, WireBeacon } from "../src/types.js";

export function makeContext(overrides: Partial<PageContext> = {}, dataset: Record<string, string> = {}): PageContext {
  return {
    token: "tok-test",
    pageId: "banner-forced",
    measurementId: "cookie-banners",
    beaconUrl: "/beacon",
    revealUrl: "/gate/reveal",
    dataset,
    ...overrides,
  };
}

export interface CapturedRequest {
  url: string;
  body: Record<string, unknown>;
}

export function captureChannel(
  ctx: PageContext,
  options: { failures?: number; revealHtml?: string } = {},
): { channel: BeaconChannel; sent: WireBeacon[]; reveals: CapturedRequest[] } {
  const sent: WireBeacon[] = [];
  const reveals: CapturedRequest[] = [];
  let remainingFailures = options.failures ?? 0;

  const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    const body = JSON.parse(String(init?.body ?? "{}"));
    if (remainingFailures > 0) {
      remainingFailures -= 1;
      return new Response("", { status: 500 });
    }
    if (String(url).includes("reveal")) {
      reveals.push({ url: String(url), body });
      return new Response(
        JSON.stringify({
          html: options.revealHtml ?? '<p class="price" id="price">$54.99</p>',
          price: "54.99",
          revealed_by: "FormSubmission",
          already_revealed: false,
        }),
        { status: 200, headers: { "Content-Type": "application/json" } },
      );
    }
    sent.push(body as WireBeacon);
    return new Response(JSON.stringify({ status: "stored" }), { status: 200 });
  }) as typeof fetch;

  return { channel: new BeaconChannel(ctx, fetchFn), sent, reveals };
}

export function setBody(html: string, dataset: Record<string, string> = {}): void {
  document.body.innerHTML = html;
  for (const [key, value] of Object.entries(dataset)) {
    document.body.dataset[key] = value;
  }
}
