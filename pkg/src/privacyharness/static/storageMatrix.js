/**
 * Storage matrix probe, run inside the embedded third-party frame under each
 * top-level site. For every state type: read first and report whatever is
 * there, then write the run-scoped value. Feature absence is reported as an
 * "unsupported" outcome rather than silence, so every (action, context) cell
 * emits exactly one beacon.
 */
import { timeImageLoad } from "./cacheTiming.js";
const DB_NAME = "harness-probe";
const STORE = "kv";
function indexedDbDriver() {
    if (typeof indexedDB === "undefined") {
        return null;
    }
    const open = () => new Promise((resolve, reject) => {
        const request = indexedDB.open(DB_NAME, 1);
        request.onupgradeneeded = () => request.result.createObjectStore(STORE);
        request.onsuccess = () => resolve(request.result);
        request.onerror = () => reject(request.error);
    });
    return {
        async read() {
            const db = await open();
            return new Promise((resolve, reject) => {
                const tx = db.transaction(STORE, "readonly").objectStore(STORE).get("probe");
                tx.onsuccess = () => resolve(String(tx.result ?? ""));
                tx.onerror = () => reject(tx.error);
            });
        },
        async write(value) {
            const db = await open();
            return new Promise((resolve, reject) => {
                const tx = db.transaction(STORE, "readwrite").objectStore(STORE).put(value, "probe");
                tx.onsuccess = () => resolve();
                tx.onerror = () => reject(tx.error);
            });
        },
    };
}
function cacheApiDriver() {
    if (typeof caches === "undefined") {
        return null;
    }
    return {
        async read() {
            const cache = await caches.open(DB_NAME);
            const hit = await cache.match("/probe-value");
            return hit ? hit.text() : "";
        },
        async write(value) {
            const cache = await caches.open(DB_NAME);
            await cache.put("/probe-value", new Response(value));
        },
    };
}
function webStorageDriver(area) {
    if (!area) {
        return null;
    }
    return {
        async read() {
            return area.getItem("harness-probe") ?? "";
        },
        async write(value) {
            area.setItem("harness-probe", value);
        },
    };
}
function cookieDriver(doc) {
    return {
        async read() {
            const match = doc.cookie.match(/(?:^|;\s*)harness-probe=([^;]*)/);
            return match ? decodeURIComponent(match[1]) : "";
        },
        async write(value) {
            doc.cookie = `harness-probe=${encodeURIComponent(value)}; path=/; SameSite=None; Secure`;
        },
    };
}
function cookieStoreDriver() {
    const store = globalThis.cookieStore;
    if (!store) {
        return null;
    }
    return {
        async read() {
            const cookie = await store.get("harness-probe-cs");
            return cookie?.value ?? "";
        },
        async write(value) {
            await store.set({ name: "harness-probe-cs", value, sameSite: "none" });
        },
    };
}
export function defaultDrivers(doc = document) {
    return {
        cookie: cookieDriver(doc),
        "cookie-store": cookieStoreDriver(),
        localStorage: webStorageDriver(safeStorage("localStorage")),
        sessionStorage: webStorageDriver(safeStorage("sessionStorage")),
        indexedDB: indexedDbDriver(),
        "cache-api": cacheApiDriver(),
        // Detecting a shared broadcast channel needs both top-level contexts
        // alive at once; the sequential visit protocol cannot observe it, so the
        // probe reports the honest non-answer instead of a fake "partitioned".
        "broadcast-channel": null,
    };
}
function safeStorage(name) {
    try {
        return globalThis[name];
    }
    catch {
        return undefined; // access itself can throw in partitioned third-party contexts
    }
}
export async function runStorageMatrixProbe(ctx, channel, doc = document, drivers = defaultDrivers(doc)) {
    const probeContext = {
        top: ctx.dataset.top || "a",
        party: ctx.dataset.party || "third",
        embedded_origin: typeof location !== "undefined" ? location.host : "",
    };
    const value = `pv-${ctx.token}`;
    for (const [stateType, driver] of Object.entries(drivers)) {
        if (!driver) {
            await channel.send("StorageRead", {
                state_type: stateType, context: probeContext, value: "", outcome: "unsupported",
            });
            await channel.send("StorageWrite", {
                state_type: stateType, context: probeContext, value: "", outcome: "unsupported",
            });
            continue;
        }
        let seen = "";
        let readOutcome = "ok";
        try {
            seen = await driver.read();
        }
        catch {
            readOutcome = "blocked";
        }
        await channel.send("StorageRead", {
            state_type: stateType, context: probeContext, value: seen, outcome: readOutcome,
        });
        let writeOutcome = "ok";
        try {
            await driver.write(value);
        }
        catch {
            writeOutcome = "blocked";
        }
        await channel.send("StorageWrite", {
            state_type: stateType, context: probeContext, value, outcome: writeOutcome,
        });
    }
    const probeImg = ctx.dataset.probeImg;
    if (probeImg) {
        const timing = await timeImageLoad(probeImg);
        await channel.send("CacheTiming", {
            state_type: "image-cache",
            context: probeContext,
            elapsed_ms: timing.elapsedMs,
            outcome: timing.outcome,
            url: probeImg,
        });
    }
    const status = doc.getElementById("probe-status");
    if (status) {
        status.textContent = "probe complete";
    }
}
