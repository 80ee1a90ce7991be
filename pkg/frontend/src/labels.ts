/** Parse label-track text (start<TAB>end<TAB>label lines) for the results table. */

export interface LabelRow {
  start: number;
  end: number;
  label: string;
}

export type LabelSortKey = "start" | "end" | "label";

export function parseLabelText(text: string): LabelRow[] {
  const rows: LabelRow[] = [];
  for (const line of text.split("\n")) {
    if (!line) continue;
    const parts = line.split("\t");
    if (parts.length < 3) continue;
    const start = Number(parts[0]);
    const end = Number(parts[1]);
    if (!Number.isFinite(start) || !Number.isFinite(end)) continue;
    rows.push({ start, end, label: parts.slice(2).join("\t") });
  }
  return rows;
}

export function sortLabelRows(
  rows: LabelRow[],
  key: LabelSortKey,
  descending = false,
): LabelRow[] {
  const sorted = [...rows].sort((a, b) => {
    if (key === "label") return a.label.localeCompare(b.label);
    return a[key] - b[key];
  });
  return descending ? sorted.reverse() : sorted;
}
