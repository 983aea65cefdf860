import { describe, expect, it } from "vitest";

import { timeImageLoad } from "../src/cacheTiming.js";
import { readContext, flag } from "../src/context.js";
import { runMixedLoader } from "../src/mixed.js";
import { probeVisited } from "../src/visited.js";
import { captureChannel, makeContext, setBody } from "./helpers.js";

describe("readContext", () => {
  it("maps body data attributes", () => {
    setBody("<main></main>", {
      token: "tok-9", page: "mixed-page", measurement: "mixed-content",
      beaconUrl: "/beacon", revealUrl: "/gate/reveal", gated: "true",
    });
    const ctx = readContext();
    expect(ctx.token).toBe("tok-9");
    expect(ctx.pageId).toBe("mixed-page");
    expect(ctx.measurementId).toBe("mixed-content");
    expect(flag(ctx, "gated")).toBe(true);
    expect(flag(ctx, "missing")).toBe(false);
  });
});

describe("timeImageLoad", () => {
  function fakeImage(fire: "onload" | "onerror", after: () => void) {
    const img = {
      onload: null as null | (() => void),
      onerror: null as null | (() => void),
      set src(_value: string) {
        after();
        queueMicrotask(() => img[fire]?.());
      },
    };
    return img as unknown as HTMLImageElement;
  }

  it("measures elapsed wall-clock on load", async () => {
    let clock = 10;
    const timing = await timeImageLoad(
      "https://t/probe.png",
      () => fakeImage("onload", () => (clock += 3)),
      () => clock,
    );
    expect(timing).toEqual({ elapsedMs: 3, outcome: "ok" });
  });

  it("reports failures as error outcomes", async () => {
    const timing = await timeImageLoad(
      "https://t/probe.png",
      () => fakeImage("onerror", () => undefined),
      () => 0,
    );
    expect(timing.outcome).toBe("error");
  });
});

describe("probeVisited", () => {
  const el = () => document.createElement("a");

  it("differing colors mean the link was visited", () => {
    const styles = new Map<HTMLElement, string>();
    const probed = el();
    const control = el();
    styles.set(probed, "rgb(85, 26, 139)");
    styles.set(control, "rgb(0, 0, 238)");
    const outcome = probeVisited(probed, control, (e) => ({ color: styles.get(e) ?? "" }));
    expect(outcome).toBe("visited");
  });

  it("identical colors are undetectable, never unvisited", () => {
    const probed = el();
    const control = el();
    const outcome = probeVisited(probed, control, () => ({ color: "rgb(0, 0, 238)" }));
    expect(outcome).toBe("undetectable");
  });

  it("missing links are undetectable", () => {
    expect(probeVisited(null, el())).toBe("undetectable");
  });
});

describe("runMixedLoader", () => {
  it("attempts the fetch-API subresource and reports the outcome", async () => {
    setBody(
      '<img id="mx-image"><iframe id="mx-iframe"></iframe><audio id="mx-audio"></audio>',
      { fetchUrl: "http://plain-cdn.test/r/t/mx/fetch/abc.json" },
    );
    const ctx = makeContext(
      { pageId: "mixed-page", measurementId: "mixed-content" },
      { fetchUrl: "http://plain-cdn.test/r/t/mx/fetch/abc.json" },
    );
    const { channel, sent } = captureChannel(ctx);
    const fetchFn = (async () => new Response("{}", { status: 200 })) as typeof fetch;
    runMixedLoader(ctx, channel, document, fetchFn);
    await new Promise((resolve) => setTimeout(resolve, 0));
    const fetchBeacon = sent.find(
      (b) => b.kind === "SubresourceOutcome" && b.payload.subresource_kind === "fetch",
    );
    expect(fetchBeacon?.payload.client_outcome).toBe("loaded");
  });

  it("reports blocked fetches as errors", async () => {
    setBody("<main></main>", { fetchUrl: "http://plain-cdn.test/x.json" });
    const ctx = makeContext(
      { pageId: "mixed-page", measurementId: "mixed-content" },
      { fetchUrl: "http://plain-cdn.test/x.json" },
    );
    const { channel, sent } = captureChannel(ctx);
    const fetchFn = (async () => {
      throw new TypeError("blocked: mixed content");
    }) as typeof fetch;
    runMixedLoader(ctx, channel, document, fetchFn);
    await new Promise((resolve) => setTimeout(resolve, 0));
    const fetchBeacon = sent.find(
      (b) => b.kind === "SubresourceOutcome" && b.payload.subresource_kind === "fetch",
    );
    expect(fetchBeacon?.payload.client_outcome).toBe("error");
  });
});
