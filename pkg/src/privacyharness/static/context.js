/** Page wiring comes from data- attributes on <body>; scripts hold no secrets. */
export function readContext(body = document.body) {
    const data = body.dataset;
    const dataset = {};
    for (const key of Object.keys(data)) {
        dataset[key] = data[key] ?? "";
    }
    return {
        token: data.token ?? "",
        pageId: data.page ?? "",
        measurementId: data.measurement ?? "",
        beaconUrl: data.beaconUrl ?? "/beacon",
        revealUrl: data.revealUrl ?? "/gate/reveal",
        dataset,
    };
}
export function flag(ctx, name) {
    return ctx.dataset[name] === "true";
}
