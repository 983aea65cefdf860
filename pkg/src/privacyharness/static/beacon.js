/**
 * Beacon transport: fire-and-forget with one retry, sendBeacon on unload.
 * Sequence numbers are per-page and monotonic so the collector can dedup
 * at-least-once deliveries. Pages report raw observations only; nothing here
 * interprets outcomes.
 */
const RETRY_DELAY_MS = 400;
export class BeaconChannel {
    constructor(ctx, fetchFn = fetch.bind(globalThis)) {
        this.ctx = ctx;
        this.fetchFn = fetchFn;
        this.seq = 0;
        this.pending = [];
        if (typeof addEventListener === "function") {
            addEventListener("pagehide", () => this.flushWithSendBeacon());
        }
    }
    nextSeq() {
        this.seq += 1;
        return this.seq;
    }
    build(kind, payload) {
        return {
            run_token: this.ctx.token,
            measurement_id: this.ctx.measurementId,
            page_id: this.ctx.pageId,
            kind,
            payload,
            client_seq: this.nextSeq(),
        };
    }
    /** Queue and deliver one beacon; resolves once delivered or given up. */
    async send(kind, payload) {
        const beacon = this.build(kind, payload);
        this.pending.push(beacon);
        try {
            await this.post(beacon);
        }
        catch {
            await new Promise((resolve) => setTimeout(resolve, RETRY_DELAY_MS));
            try {
                await this.post(beacon);
            }
            catch {
                return; // final fallback is the unload flush
            }
        }
        this.pending = this.pending.filter((b) => b !== beacon);
    }
    async post(beacon) {
        const response = await this.fetchFn(this.ctx.beaconUrl, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(beacon),
            keepalive: true,
        });
        if (response.status >= 400) {
            throw new Error(`beacon rejected: ${response.status}`);
        }
    }
    /** Last-chance delivery of anything still queued when the page goes away. */
    flushWithSendBeacon() {
        if (typeof navigator === "undefined" || typeof navigator.sendBeacon !== "function") {
            return;
        }
        for (const beacon of this.pending.splice(0)) {
            const blob = new Blob([JSON.stringify(beacon)], { type: "application/json" });
            navigator.sendBeacon(this.ctx.beaconUrl, blob);
        }
    }
    /** Ask the server to open a gate; returns the revealed fragment. */
    async reveal(proof) {
        const response = await this.fetchFn(this.ctx.revealUrl, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({
                token: this.ctx.token,
                variant_id: this.ctx.pageId,
                proof,
            }),
        });
        if (!response.ok) {
            throw new Error(`reveal refused: ${response.status}`);
        }
        return (await response.json());
    }
}
