/**
 * Wall-clock image load timing. The threshold that decides "cached" is
 * applied server-side at scoring time; the page only reports what it saw.
 */

export interface ImageTiming {
  elapsedMs: number;
  outcome: "ok" | "error";
}

export function timeImageLoad(
  url: string,
  createImage: () => HTMLImageElement = () => new Image(),
  now: () => number = () => performance.now(),
): Promise<ImageTiming> {
  return new Promise((resolve) => {
    const img = createImage();
    const started = now();
    img.onload = () => resolve({ elapsedMs: now() - started, outcome: "ok" });
    img.onerror = () => resolve({ elapsedMs: now() - started, outcome: "error" });
    img.src = url;
  });
}
