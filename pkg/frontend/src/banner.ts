/**
 * Consent banner controller. Two equally prominent choices plus a dismiss
 * control; the shown beacon always precedes any action beacon. On gated pages
 * an action unlocks the product content (locally from the inline template,
 * and recorded server-side through the reveal endpoint).
 */

import { BeaconChannel } from "./beacon.js";
import type { PageContext } from "./types.js";

export type BannerMode = "non_obscuring" | "obscuring" | "forced_interaction";
export type BannerAction = "accept_all" | "deny_all" | "dismiss";

export function renderBanner(mode: BannerMode, doc: Document = document): HTMLElement {
  const banner = doc.createElement("div");
  banner.id = "banner";
  if (mode !== "non_obscuring") {
    banner.classList.add("obscuring");
  }
  banner.innerHTML = [
    '<p id="banner-text">We use cookies to improve your experience.</p>',
    '<button id="banner-accept">Accept all cookies</button>',
    '<button id="banner-deny">Deny all cookies</button>',
    '<button id="banner-dismiss" aria-label="Close">&#10005;</button>',
  ].join("\n");
  doc.body.appendChild(banner);
  return banner;
}

export function revealFromTemplate(doc: Document = document): boolean {
  const template = doc.getElementById("gated-content") as HTMLTemplateElement | null;
  const area = doc.getElementById("gated-area");
  if (!template || !area) {
    return false;
  }
  area.innerHTML = "";
  area.appendChild(template.content.cloneNode(true));
  return true;
}

export async function runBannerController(
  ctx: PageContext,
  channel: BeaconChannel,
  doc: Document = document,
): Promise<void> {
  const mode = (ctx.dataset.bannerMode || "non_obscuring") as BannerMode;
  const gated = ctx.dataset.gated === "true";
  const banner = renderBanner(mode, doc);
  await channel.send("BannerShown", { mode });

  const act = async (action: BannerAction) => {
    await channel.send("BannerAction", { action });
    doc.cookie = `consent=${action === "accept_all" ? "all" : "none"}; path=/`;
    banner.remove();
    if (gated) {
      revealFromTemplate(doc);
      try {
        await channel.reveal({ kind: "banner", action });
      } catch {
        // The local template already unlocked the content; the reveal call is
        // the server-side record and must never block the page.
      }
    }
  };

  doc.getElementById("banner-accept")?.addEventListener("click", () => void act("accept_all"));
  doc.getElementById("banner-deny")?.addEventListener("click", () => void act("deny_all"));
  doc.getElementById("banner-dismiss")?.addEventListener("click", () => void act("dismiss"));
}
