/**
 * Wall-clock image load timing. The threshold that decides "cached" is
 * applied server-side at scoring time; the page only reports what it saw.
 */
export function timeImageLoad(url, createImage = () => new Image(), now = () => performance.now()) {
    return new Promise((resolve) => {
        const img = createImage();
        const started = now();
        img.onload = () => resolve({ elapsedMs: now() - started, outcome: "ok" });
        img.onerror = () => resolve({ elapsedMs: now() - started, outcome: "error" });
        img.src = url;
    });
}
