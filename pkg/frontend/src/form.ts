/**
 * Information-form pages. On submit the raw field values go to the harness
 * (the only recipient) as a FormSubmission beacon, and the reveal endpoint is
 * asked to open the gate: the discount note on passive pages, the price
 * itself on active pages. Empty submissions are still reported.
 */

import { BeaconChannel } from "./beacon.js";
import type { PageContext } from "./types.js";

export function collectFields(form: HTMLFormElement, names: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (const name of names) {
    const input = form.querySelector<HTMLInputElement>(`[name="${name}"]`);
    out[name] = input ? input.value : "";
  }
  return out;
}

export function bindFormSubmitter(
  ctx: PageContext,
  channel: BeaconChannel,
  doc: Document = document,
): void {
  const form = doc.getElementById("pii-form") as HTMLFormElement | null;
  if (!form) {
    return;
  }
  const names = (ctx.dataset.fields || "").split(",").filter(Boolean);
  const active = ctx.dataset.active === "true";
  const infoType = ctx.dataset.infoType || "";

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const fields = collectFields(form, names);
    void (async () => {
      await channel.send("FormSubmission", { fields, info_type: infoType, active });
      try {
        const revealed = await channel.reveal({ kind: "form", fields });
        const area = doc.getElementById("gated-area");
        if (area) {
          area.innerHTML = revealed.html;
        }
        if (active) {
          const placeholder = doc.getElementById("price-area");
          placeholder?.remove();
        }
      } catch {
        const area = doc.getElementById("gated-area");
        if (area) {
          area.textContent = "Verification failed.";
        }
      }
    })();
  });
}
