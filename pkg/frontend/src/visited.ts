/**
 * History probe via link styling. Renders nothing itself: the page provides
 * one link that the first session visited and one that nothing ever visits.
 * Modern engines deliberately lie to computed-style reads of :visited, so
 * identical colors are reported as "undetectable", never as "unvisited".
 */

export type VisitedOutcome = "visited" | "unvisited" | "undetectable";

export function probeVisited(
  visitedLink: HTMLElement | null,
  controlLink: HTMLElement | null,
  getStyle: (el: HTMLElement) => { color: string } = (el) => getComputedStyle(el),
): VisitedOutcome {
  if (!visitedLink || !controlLink) {
    return "undetectable";
  }
  const probed = getStyle(visitedLink).color;
  const control = getStyle(controlLink).color;
  if (!probed || !control) {
    return "undetectable";
  }
  return probed === control ? "undetectable" : "visited";
}
