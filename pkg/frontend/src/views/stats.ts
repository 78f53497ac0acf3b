// Participation charts. Bars are drawn from the stats response verbatim; the
// raw numbers are kept on the view-model (and in the SVG titles) so they can
// be shown on demand. Nothing is recomputed client-side.

import type { ParticipationRow, StatsResponse } from "../types.js";
import { escapeHtml } from "./table.js";

export interface StatsBar {
  label: string;
  sponsored: number;
  sponsoring: number;
  both: number;
  total: number;
}

export interface StatsViewModel {
  status: "ready" | "empty";
  grouping: string;
  bars: StatsBar[];
  totalsRow: ParticipationRow | null;
  ratioDisplay: string | null;
  provenance: string;
  generatedAt: string;
}

export function statsView(response: StatsResponse): StatsViewModel {
  const bars = response.rows
    .filter((row) => row.group_key !== "Total")
    .map((row) => ({
      label: row.group_key,
      sponsored: row.sponsored,
      sponsoring: row.sponsoring,
      both: row.both,
      total: row.total,
    }));
  const totalsRow = response.rows.find((row) => row.group_key === "Total") ?? null;
  const empty = bars.every((bar) => bar.total === 0);
  return {
    status: empty ? "empty" : "ready",
    grouping: response.group_by,
    bars,
    totalsRow,
    ratioDisplay: response.ratio_display ?? null,
    provenance: response.provenance,
    generatedAt: response.generated_at,
  };
}

const WIDTH = 640;
const BAR_HEIGHT = 22;
const GAP = 8;
const LABEL_SPACE = 150;

export function renderStatsSvg(vm: StatsViewModel): string {
  if (vm.status === "empty") {
    return `<p class="empty">no data to chart yet</p>`;
  }
  const max = Math.max(...vm.bars.map((bar) => bar.total), 1);
  const rows = vm.bars.map((bar, index) => {
    const y = index * (BAR_HEIGHT + GAP);
    const width = Math.round(((WIDTH - LABEL_SPACE) * bar.total) / max);
    const title = `${bar.label}: ${bar.total} total — ${bar.sponsored} sponsored, ` +
      `${bar.sponsoring} sponsoring, ${bar.both} both`;
    return (
      `<g transform="translate(0,${y})" data-total="${bar.total}">` +
      `<title>${escapeHtml(title)}</title>` +
      `<text x="${LABEL_SPACE - 8}" y="${BAR_HEIGHT - 7}" text-anchor="end">` +
      `${escapeHtml(bar.label)}</text>` +
      `<rect x="${LABEL_SPACE}" y="2" width="${width}" height="${BAR_HEIGHT - 6}"` +
      ` class="bar"></rect>` +
      `<text x="${LABEL_SPACE + width + 6}" y="${BAR_HEIGHT - 7}" class="value">` +
      `${bar.total}</text></g>`
    );
  });
  const height = vm.bars.length * (BAR_HEIGHT + GAP);
  const ratio = vm.ratioDisplay
    ? `<p class="ratio">giving-to-receiving ratio: ${escapeHtml(vm.ratioDisplay)}</p>`
    : "";
  return (
    `${ratio}<svg viewBox="0 0 ${WIDTH} ${height}" role="img" ` +
    `aria-label="participation by ${escapeHtml(vm.grouping)}">${rows.join("")}</svg>` +
    `<p class="provenance">${escapeHtml(vm.provenance)} · ` +
    `${escapeHtml(vm.generatedAt)}</p>`
  );
}
