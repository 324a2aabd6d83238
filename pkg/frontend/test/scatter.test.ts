import { describe, expect, it } from "vitest";

import { layoutScatter, renderScatter, tooltipText } from "../src/scatter.js";
import type { HuntReportJson } from "../src/types.js";

import richReport from "./fixtures/rich_report.json";
import table2 from "./fixtures/table2_report.json";

const rich = richReport as HuntReportJson;
const thresholds = { minAgreement: 14, minMargin: 0 };

describe("scatter layout", () => {
  it("uses report fields bit-for-bit as coordinates", () => {
    const layout = layoutScatter(rich, thresholds);
    expect(layout.points).toHaveLength(rich.candidates.length);
    layout.points.forEach((p, i) => {
      expect(p.x).toBe(rich.candidates[i].entropy10);
      expect(p.y).toBe(rich.candidates[i].agreement);
    });
  });

  it("accepted candidates are large dots, rejected small", () => {
    const layout = layoutScatter(rich, thresholds);
    layout.points.forEach((p, i) => {
      expect(p.big).toBe(rich.candidates[i].accepted);
    });
    expect(layout.points.some((p) => p.big)).toBe(true);
    expect(layout.points.some((p) => !p.big)).toBe(true);
  });

  it("joins probable-equivalent group members with segments", () => {
    const layout = layoutScatter(rich, thresholds);
    const expected = rich.groups.reduce(
      (acc, g) => acc + Math.max(0, g.members.length - 1), 0);
    expect(layout.segments).toHaveLength(expected);
    expect(expected).toBeGreaterThan(0); // the three equivalent radical forms
    for (const seg of layout.segments) {
      expect(seg.from).toBeGreaterThanOrEqual(0);
      expect(seg.to).toBeLessThan(layout.points.length);
    }
  });

  it("places the threshold lines where the scales say", () => {
    const layout = layoutScatter(rich, thresholds);
    // the precision line sits at the input's trusted digit count
    const pointAtPrecision = layout.points.find(
      (p) => p.y === rich.input.trusted_digits);
    if (pointAtPrecision) {
      expect(layout.precisionLine.y1).toBeCloseTo(pointAtPrecision.py, 6);
    }
    expect(layout.precisionLine.y1).toBe(layout.precisionLine.y2);
    expect(layout.agreementLine.y1).toBe(layout.agreementLine.y2);
    // min-margin line is diagonal: rises left to right in pixel space
    expect(layout.marginLine.y2).toBeLessThan(layout.marginLine.y1);
  });
});

describe("scatter rendering", () => {
  it("renders exactly the server's candidate set", () => {
    const host = document.createElement("div");
    const svg = renderScatter(host, rich, thresholds);
    const dots = svg.querySelectorAll("circle.dot");
    expect(dots).toHaveLength(rich.candidates.length);
    const texts = [...dots].map((d) => d.getAttribute("data-text"));
    expect(texts).toEqual(rich.candidates.map((c) => c.text));
    const big = svg.querySelectorAll("circle.dot.accepted");
    expect(big).toHaveLength(rich.candidates.filter((c) => c.accepted).length);
  });

  it("hover exposes expression, entropy, agreement, margin and verdict", () => {
    const cand = (table2 as HuntReportJson).candidates[0];
    const tip = tooltipText(cand);
    expect(tip).toContain(cand.text);
    expect(tip).toContain(`Agreement ${cand.agreement}`);
    expect(tip).toContain(cand.verdict);
    const host = document.createElement("div");
    const svg = renderScatter(host, table2 as HuntReportJson, thresholds);
    expect(svg.querySelector("circle.dot title")?.textContent).toBe(tip);
  });

  it("empty report renders axes and threshold lines only", () => {
    const host = document.createElement("div");
    const svg = renderScatter(host, {
      candidates: [], groups: [],
      input: { text: "", trusted_digits: 10, working_digits: 18, value: "", warnings: [] },
    }, thresholds);
    expect(svg.querySelectorAll("circle.dot")).toHaveLength(0);
    expect(svg.querySelectorAll("line.axis")).toHaveLength(2);
    expect(svg.querySelectorAll("line.dashed")).toHaveLength(3);
  });
});
