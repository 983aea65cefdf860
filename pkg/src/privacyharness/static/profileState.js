/**
 * Profile-state page: report anything left over from an earlier session, then
 * plant fresh timestamps. Reads are emitted before writes so a same-session
 * reload never masquerades as persistence; the scorer pairs the first
 * session's writes with the second session's first reads.
 */
import { timeImageLoad } from "./cacheTiming.js";
import { probeVisited } from "./visited.js";
const DB_NAME = "harness-profile";
const STORE = "kv";
function mechanisms(doc) {
    const out = [
        {
            name: "cookie",
            async read() {
                const match = doc.cookie.match(/(?:^|;\s*)harness-ts=([^;]*)/);
                return match ? match[1] : "";
            },
            async write(value) {
                doc.cookie = `harness-ts=${value}; path=/; max-age=31536000`;
            },
        },
    ];
    try {
        const area = globalThis.localStorage;
        out.push({
            name: "localStorage",
            async read() {
                return area.getItem("harness-ts") ?? "";
            },
            async write(value) {
                area.setItem("harness-ts", value);
            },
        });
    }
    catch {
        // reported below as an empty read; absence of a mechanism is still a result
    }
    if (typeof indexedDB !== "undefined") {
        const open = () => new Promise((resolve, reject) => {
            const request = indexedDB.open(DB_NAME, 1);
            request.onupgradeneeded = () => request.result.createObjectStore(STORE);
            request.onsuccess = () => resolve(request.result);
            request.onerror = () => reject(request.error);
        });
        out.push({
            name: "indexedDB",
            async read() {
                const db = await open();
                return new Promise((resolve, reject) => {
                    const tx = db.transaction(STORE, "readonly").objectStore(STORE).get("ts");
                    tx.onsuccess = () => resolve(String(tx.result ?? ""));
                    tx.onerror = () => reject(tx.error);
                });
            },
            async write(value) {
                const db = await open();
                return new Promise((resolve, reject) => {
                    const tx = db.transaction(STORE, "readwrite").objectStore(STORE).put(value, "ts");
                    tx.onsuccess = () => resolve();
                    tx.onerror = () => reject(tx.error);
                });
            },
        });
    }
    return out;
}
function report(doc, name, value) {
    const list = doc.getElementById("readouts");
    if (!list) {
        return;
    }
    const term = doc.createElement("dt");
    term.textContent = name;
    const detail = doc.createElement("dd");
    detail.textContent = value || "(empty)";
    list.append(term, detail);
}
export async function runProfileStateProbe(ctx, channel, doc = document) {
    const timestamp = String(Date.now());
    for (const mechanism of mechanisms(doc)) {
        let seen = "";
        try {
            seen = await mechanism.read();
        }
        catch {
            seen = "";
        }
        await channel.send("StorageRead", { mechanism: mechanism.name, value: seen });
        report(doc, mechanism.name, seen);
        try {
            await mechanism.write(timestamp);
            await channel.send("StorageWrite", { mechanism: mechanism.name, value: timestamp });
        }
        catch {
            await channel.send("StorageWrite", {
                mechanism: mechanism.name, value: "", outcome: "blocked",
            });
        }
    }
    const probeImg = ctx.dataset.probeImg;
    if (probeImg) {
        const timing = await timeImageLoad(probeImg);
        await channel.send("CacheTiming", {
            mechanism: "image-cache",
            elapsed_ms: timing.elapsedMs,
            outcome: timing.outcome,
            url: probeImg,
        });
        report(doc, "image-cache", `${timing.elapsedMs.toFixed(1)} ms`);
    }
    const outcome = probeVisited(doc.getElementById("external-link"), doc.getElementById("external-control"));
    await channel.send("VisitedProbe", { mechanism: "visited", outcome });
    report(doc, "visited", outcome);
}
