/**
 * Permission prompt triggers. Each trigger emits exactly one trigger beacon
 * (with supported=false when the API is absent) and a decision beacon for
 * every observed state change, carrying the elapsed time since the trigger.
 * The on-page status line mirrors the current state for the visiting agent.
 */

import { BeaconChannel } from "./beacon.js";
import { revealFromTemplate } from "./banner.js";
import type { PageContext } from "./types.js";

export type PermissionKind = "notification" | "webcam" | "passkey" | "storage-access";

export interface PermissionHooks {
  requestNotification?: () => Promise<string>;
  requestWebcam?: () => Promise<void>;
  requestPasskey?: () => Promise<unknown>;
  requestStorageAccess?: () => Promise<void>;
  now?: () => number;
}

function defaultHooks(): PermissionHooks {
  return {
    requestNotification:
      typeof Notification !== "undefined"
        ? () => Notification.requestPermission()
        : undefined,
    requestWebcam:
      typeof navigator !== "undefined" && navigator.mediaDevices?.getUserMedia
        ? async () => {
            const stream = await navigator.mediaDevices.getUserMedia({ video: true });
            stream.getTracks().forEach((track) => track.stop());
          }
        : undefined,
    requestPasskey:
      typeof navigator !== "undefined" && "credentials" in navigator
        ? () =>
            navigator.credentials.create({
              publicKey: {
                challenge: new Uint8Array(16),
                rp: { name: "corpus" },
                user: { id: new Uint8Array(8), name: "visitor", displayName: "visitor" },
                pubKeyCredParams: [{ type: "public-key", alg: -7 }],
              },
            })
        : undefined,
    requestStorageAccess:
      typeof document !== "undefined" && "requestStorageAccess" in document
        ? () => (document as Document & { requestStorageAccess(): Promise<void> }).requestStorageAccess()
        : undefined,
    now: () => performance.now(),
  };
}

function setStatus(state: string, doc: Document): void {
  const status = doc.getElementById("permission-status");
  if (status) {
    status.textContent = `Permission: ${state}`;
  }
}

export async function triggerPermission(
  ctx: PageContext,
  channel: BeaconChannel,
  doc: Document = document,
  hooks: PermissionHooks = defaultHooks(),
): Promise<void> {
  const kind = (ctx.dataset.permissionKind || "notification") as PermissionKind;
  const gated = ctx.dataset.gated === "true";
  const now = hooks.now ?? (() => performance.now());

  const request = {
    notification: hooks.requestNotification,
    webcam: hooks.requestWebcam,
    passkey: hooks.requestPasskey,
    "storage-access": hooks.requestStorageAccess,
  }[kind];

  if (!request) {
    await channel.send("PermissionTrigger", { kind, supported: false });
    setStatus("unsupported", doc);
    return;
  }

  const started = now();
  await channel.send("PermissionTrigger", { kind, supported: true });

  const decide = async (state: "granted" | "denied" | "default") => {
    setStatus(state, doc);
    if (state === "default") {
      return;
    }
    await channel.send("PermissionDecision", {
      kind,
      state,
      elapsed_ms: now() - started,
    });
    if (gated) {
      revealFromTemplate(doc);
      try {
        await channel.reveal({ kind: "permission", state });
      } catch {
        // recorded best-effort; local unlock already happened
      }
    }
  };

  try {
    if (kind === "notification") {
      const result = await (request as () => Promise<string>)();
      await decide(result === "granted" ? "granted" : result === "denied" ? "denied" : "default");
    } else {
      await (request as () => Promise<unknown>)();
      await decide("granted");
    }
  } catch {
    await decide("denied");
  }
}

/** Storage Access needs a user gesture; wire the frame button to the trigger. */
export function bindGestureTrigger(
  ctx: PageContext,
  channel: BeaconChannel,
  doc: Document = document,
  hooks?: PermissionHooks,
): void {
  const button = doc.getElementById("gesture");
  if (!button) {
    return;
  }
  button.addEventListener("click", () => {
    void triggerPermission(ctx, channel, doc, hooks);
  });
}
