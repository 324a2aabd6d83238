/** Digit ruler: which characters of the echoed value are trusted (dark),
 * which are stored guard digits (gray), and which are punctuation. */

export type DigitKind = "trusted" | "guard" | "other";

export interface RulerCell {
  char: string;
  kind: DigitKind;
}

export const GUARD_DISPLAY = 2;

export function digitRuler(valueText: string, trustedDigits: number,
                           guardShown = GUARD_DISPLAY): RulerCell[] {
  const cells: RulerCell[] = [];
  let significant = 0;
  let seenNonzero = false;
  for (const char of valueText) {
    if (char >= "0" && char <= "9") {
      if (char !== "0") seenNonzero = true;
      if (seenNonzero) significant += 1;
      const kind: DigitKind = !seenNonzero || significant <= trustedDigits
        ? "trusted"
        : significant <= trustedDigits + guardShown
          ? "guard"
          : "other";
      cells.push({ char, kind });
    } else {
      cells.push({ char, kind: "other" });
    }
  }
  return cells;
}

export function renderRuler(container: HTMLElement, valueText: string,
                            trustedDigits: number): void {
  container.replaceChildren();
  for (const cell of digitRuler(valueText, trustedDigits)) {
    const span = document.createElement("span");
    span.textContent = cell.char;
    span.className = `digit digit-${cell.kind}`;
    container.appendChild(span);
  }
}
