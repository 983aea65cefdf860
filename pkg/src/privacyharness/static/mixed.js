/**
 * Mixed-content page companion. The insecure subresources are referenced in
 * the page markup; the server log is the authority on what was fetched and
 * over which scheme. The page adds the fetch()-API attempt (markup cannot
 * express it) and per-kind client-side outcomes as complementary evidence,
 * reported verbatim.
 */
function watch(element, report) {
    if (!element) {
        report("unknown");
        return;
    }
    const img = element;
    if (typeof img.complete === "boolean" && img.complete) {
        report(img.naturalWidth === 0 ? "error" : "loaded");
        return;
    }
    element.addEventListener("load", () => report("loaded"), { once: true });
    element.addEventListener("error", () => report("error"), { once: true });
}
export function runMixedLoader(ctx, channel, doc = document, fetchFn = fetch.bind(globalThis)) {
    const send = (kind, outcome) => void channel.send("SubresourceOutcome", {
        subresource_kind: kind,
        client_outcome: outcome,
        client_side: true,
    });
    watch(doc.getElementById("mx-image"), (outcome) => send("image", outcome));
    watch(doc.getElementById("mx-iframe"), (outcome) => send("iframe", outcome));
    watch(doc.getElementById("mx-audio"), (outcome) => send("audio", outcome));
    const fetchUrl = ctx.dataset.fetchUrl;
    if (fetchUrl) {
        fetchFn(fetchUrl)
            .then((response) => send("fetch", response.ok ? "loaded" : "error"))
            .catch(() => send("fetch", "error"));
    }
    else {
        send("fetch", "unknown");
    }
}
