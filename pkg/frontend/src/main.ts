/**
 * Entry point: dispatch by the page id the server stamped on <body>.
 * The control product page stays inert beyond its price display and one
 * page-view beacon; every stimulus lives on experimental pages.
 */

import { readContext } from "./context.js";
import { BeaconChannel } from "./beacon.js";
import { runBannerController } from "./banner.js";
import { bindGestureTrigger, triggerPermission } from "./permissions.js";
import { bindFormSubmitter } from "./form.js";
import { runMixedLoader } from "./mixed.js";
import { runStorageMatrixProbe } from "./storageMatrix.js";
import { runProfileStateProbe } from "./profileState.js";

function priceVisible(): boolean {
  return document.getElementById("price") !== null;
}

async function dispatch(): Promise<void> {
  const ctx = readContext();
  const channel = new BeaconChannel(ctx);
  const page = ctx.pageId;

  if (page.startsWith("banner-")) {
    await channel.send("PageView", { price_visible: priceVisible() });
    await runBannerController(ctx, channel);
    return;
  }
  if (page.startsWith("perm-")) {
    if (ctx.dataset.intermediate === "true") {
      await channel.send("PageView", { price_visible: false, intermediate: true });
      return; // the third-party frame carries the gesture button
    }
    await channel.send("PageView", { price_visible: priceVisible() });
    if (ctx.dataset.frame === "true") {
      bindGestureTrigger(ctx, channel);
    } else {
      await triggerPermission(ctx, channel);
    }
    return;
  }
  if (page.startsWith("pii-")) {
    await channel.send("PageView", { price_visible: priceVisible() });
    bindFormSubmitter(ctx, channel);
    return;
  }
  if (page === "mixed-page") {
    await channel.send("PageView", { price_visible: false });
    runMixedLoader(ctx, channel);
    return;
  }
  if (page === "partition-frame") {
    await runStorageMatrixProbe(ctx, channel);
    return;
  }
  if (page === "profile-state") {
    await channel.send("PageView", { redirected: ctx.dataset.redirected === "true" });
    await runProfileStateProbe(ctx, channel);
    return;
  }
  // Listing, control, and plain experimental pages: observation only.
  await channel.send("PageView", { price_visible: priceVisible() });
}

if (typeof document !== "undefined" && document.body?.dataset.page) {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => void dispatch());
  } else {
    void dispatch();
  }
}
