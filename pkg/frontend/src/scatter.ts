/** Agreement-versus-Entropy10 scatter.
 *
 * Point coordinates are taken bit-for-bit from the report fields (x is
 * entropy10, y is agreement; no client-side recomputation).  Accepted
 * candidates draw as large dots, rejected ones as small dots; dashed
 * horizontal lines mark the input precision and the minimum agreement, a
 * dashed diagonal marks the minimum margin, and members of a
 * probable-equivalence group are joined by line segments.
 */

import type { GroupJson, HuntReportJson, ServerCandidate, Thresholds } from "./types.js";

export interface ScatterPoint {
  x: number; // entropy10, verbatim
  y: number; // agreement, verbatim
  px: number; // pixel position
  py: number;
  big: boolean;
  candidate: ServerCandidate;
}

export interface Segment {
  from: number; // point indexes
  to: number;
}

export interface DashedLine {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  label: string;
}

export interface ScatterLayout {
  width: number;
  height: number;
  points: ScatterPoint[];
  segments: Segment[];
  precisionLine: DashedLine;
  agreementLine: DashedLine;
  marginLine: DashedLine;
  xMax: number;
  yMax: number;
}

const PAD = 34;

export function layoutScatter(
  report: Pick<HuntReportJson, "candidates" | "groups" | "input">,
  thresholds: Thresholds,
  width = 460,
  height = 340,
): ScatterLayout {
  const cands = report.candidates;
  const xMax = Math.max(10, ...cands.map((c) => c.entropy10)) * 1.08;
  const yMax = Math.max(10, report.input.trusted_digits + 3,
    ...cands.map((c) => c.agreement)) * 1.08;
  const sx = (x: number) => PAD + (x / xMax) * (width - 2 * PAD);
  const sy = (y: number) => height - PAD - (y / yMax) * (height - 2 * PAD);

  const points: ScatterPoint[] = cands.map((c) => ({
    x: c.entropy10,
    y: c.agreement,
    px: sx(c.entropy10),
    py: sy(c.agreement),
    big: c.accepted,
    candidate: c,
  }));

  const segments: Segment[] = [];
  for (const group of report.groups as GroupJson[]) {
    const members = group.members;
    for (let i = 0; i + 1 < members.length; i++) {
      segments.push({ from: members[i], to: members[i + 1] });
    }
  }

  const precisionY = sy(report.input.trusted_digits);
  const agreementY = sy(thresholds.minAgreement);
  // the margin line is agreement = entropy10 + minMargin
  const m0 = { x: 0, y: thresholds.minMargin };
  const m1 = { x: xMax, y: xMax + thresholds.minMargin };
  return {
    width,
    height,
    points,
    segments,
    precisionLine: {
      x1: sx(0), y1: precisionY, x2: sx(xMax), y2: precisionY,
      label: `input precision ${report.input.trusted_digits}`,
    },
    agreementLine: {
      x1: sx(0), y1: agreementY, x2: sx(xMax), y2: agreementY,
      label: `min agreement ${thresholds.minAgreement}`,
    },
    marginLine: {
      x1: sx(m0.x), y1: sy(m0.y), x2: sx(m1.x), y2: sy(m1.y),
      label: `min margin ${thresholds.minMargin}`,
    },
    xMax,
    yMax,
  };
}

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof SVGElementTagNameMap>(
  name: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

export function tooltipText(c: ServerCandidate): string {
  return `${c.text}\nEntropy10 ${c.entropy10.toFixed(2)}  Agreement ${c.agreement}` +
    `\nMargin ${c.margin >= 0 ? "+" : ""}${c.margin.toFixed(2)}  ${c.verdict}`;
}

export function renderScatter(
  container: HTMLElement,
  report: Pick<HuntReportJson, "candidates" | "groups" | "input">,
  thresholds: Thresholds,
  onHover?: (c: ServerCandidate | null) => void,
): SVGSVGElement {
  const layout = layoutScatter(report, thresholds);
  const svg = el("svg", {
    width: layout.width,
    height: layout.height,
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    class: "scatter",
  });
  // axes
  svg.appendChild(el("line", {
    x1: PAD, y1: layout.height - PAD, x2: layout.width - PAD,
    y2: layout.height - PAD, class: "axis",
  }));
  svg.appendChild(el("line", {
    x1: PAD, y1: PAD, x2: PAD, y2: layout.height - PAD, class: "axis",
  }));
  for (const [line, cls] of [
    [layout.precisionLine, "line-precision"],
    [layout.agreementLine, "line-agreement"],
    [layout.marginLine, "line-margin"],
  ] as const) {
    const dashed = el("line", {
      x1: line.x1, y1: line.y1, x2: line.x2, y2: line.y2,
      class: `dashed ${cls}`, "stroke-dasharray": "6 4",
    });
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = line.label;
    dashed.appendChild(title);
    svg.appendChild(dashed);
  }
  for (const seg of layout.segments) {
    const a = layout.points[seg.from];
    const b = layout.points[seg.to];
    svg.appendChild(el("line", {
      x1: a.px, y1: a.py, x2: b.px, y2: b.py, class: "equiv-join",
    }));
  }
  layout.points.forEach((point, index) => {
    const dot = el("circle", {
      cx: point.px, cy: point.py,
      r: point.big ? 6 : 2.5,
      class: point.big ? "dot accepted" : "dot rejected",
      "data-index": index,
      "data-text": point.candidate.text,
    });
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = tooltipText(point.candidate);
    dot.appendChild(title);
    if (onHover) {
      dot.addEventListener("mouseenter", () => onHover(point.candidate));
      dot.addEventListener("mouseleave", () => onHover(null));
    }
    svg.appendChild(dot);
  });
  container.replaceChildren(svg);
  return svg;
}
