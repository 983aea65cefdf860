import { describe, expect, it, vi } from "vitest";

import { BeaconChannel } from "../src/beacon.js";
import { captureChannel, makeContext } from "./helpers.js";

describe("BeaconChannel", () => {
  it("assigns monotonically increasing sequence numbers", async () => {
    const { channel, sent } = captureChannel(makeContext());
    await channel.send("PageView", {});
    await channel.send("BannerShown", {});
    await channel.send("BannerAction", { action: "accept_all" });
    expect(sent.map((b) => b.client_seq)).toEqual([1, 2, 3]);
  });

  it("carries the page context on every record", async () => {
    const { channel, sent } = captureChannel(makeContext());
    await channel.send("BannerShown", { mode: "forced_interaction" });
    expect(sent[0]).toMatchObject({
      run_token: "tok-test",
      measurement_id: "cookie-banners",
      page_id: "banner-forced",
      kind: "BannerShown",
      payload: { mode: "forced_interaction" },
    });
  });

  it("retries a failed delivery once", async () => {
    vi.useFakeTimers();
    const { channel, sent } = captureChannel(makeContext(), { failures: 1 });
    const promise = channel.send("PageView", {});
    await vi.runAllTimersAsync();
    await promise;
    expect(sent).toHaveLength(1);
    vi.useRealTimers();
  });

  it("gives up quietly after the retry fails", async () => {
    vi.useFakeTimers();
    const { channel, sent } = captureChannel(makeContext(), { failures: 2 });
    const promise = channel.send("PageView", {});
    await vi.runAllTimersAsync();
    await expect(promise).resolves.toBeUndefined();
    expect(sent).toHaveLength(0);
    vi.useRealTimers();
  });

  it("flushes undelivered beacons through sendBeacon", async () => {
    vi.useFakeTimers();
    const { channel } = captureChannel(makeContext(), { failures: 2 });
    const promise = channel.send("PageView", {});
    await vi.runAllTimersAsync();
    await promise;
    const delivered: string[] = [];
    (navigator as { sendBeacon?: unknown }).sendBeacon = (_url: string, data: Blob) => {
      delivered.push(String(data.type));
      return true;
    };
    channel.flushWithSendBeacon();
    expect(delivered).toHaveLength(1);
    channel.flushWithSendBeacon();
    expect(delivered).toHaveLength(1); // queue drained, nothing re-sent
    vi.useRealTimers();
  });

  it("reveal posts token, variant, and proof", async () => {
    const { channel, reveals } = captureChannel(makeContext());
    const result = await channel.reveal({ kind: "banner", action: "accept_all" });
    expect(result.price).toBe("54.99");
    expect(reveals[0].body).toMatchObject({
      token: "tok-test",
      variant_id: "banner-forced",
      proof: { kind: "banner", action: "accept_all" },
    });
  });

  it("reveal surfaces refusals as errors", async () => {
    const fetchFn = (async () => new Response("{}", { status: 409 })) as typeof fetch;
    const channel = new BeaconChannel(makeContext(), fetchFn);
    await expect(channel.reveal({ kind: "banner" })).rejects.toThrow("409");
  });
});
