// Users table view-model and renderer. Every number shown comes straight from
// one API response; the table never counts or aggregates anything itself.

import type { ViewState } from "../state.js";
import type { UsersPage, UserRow } from "../types.js";

export interface TableViewModel {
  status: "ready";
  rows: UserRow[];
  totalMatching: number;
  page: number;
  pageSize: number;
  pageCount: number;
  summary: string;
  lowerBoundNote: string;
}

export function tableView(page: UsersPage): TableViewModel {
  const pageCount = Math.max(1, Math.ceil(page.total_matching / page.page_size));
  const first = page.items.length ? (page.page - 1) * page.page_size + 1 : 0;
  const last = first ? first + page.items.length - 1 : 0;
  const span = page.items.length ? `${first}-${last}` : "0";
  return {
    status: "ready",
    rows: page.items,
    totalMatching: page.total_matching,
    page: page.page,
    pageSize: page.page_size,
    pageCount,
    summary: `${span} of ${page.total_matching} accounts`,
    lowerBoundNote: page.earnings_lower_bound
      ? "earnings shown are lower bounds" : "",
  };
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const COLUMNS: [string, (row: UserRow) => string][] = [
  ["login", (r) => r.login],
  ["type", (r) => r.account_type ?? ""],
  ["country", (r) => r.country ?? ""],
  ["pronouns", (r) => r.pronoun_category],
  ["sponsors", (r) => String(r.sponsor_count)],
  ["sponsoring", (r) => String(r.sponsoring_count)],
  ["est. $/mo (lower bound)", (r) =>
    r.estimated_monthly_earnings_usd === null
      ? "" : `$${r.estimated_monthly_earnings_usd}`],
  ["commits", (r) => String(r.commits_total)],
  ["quality", (r) => r.quality_flag],
];

export function renderTableHtml(vm: TableViewModel, state: ViewState): string {
  const head = COLUMNS
    .map(([name]) => `<th data-sort="${escapeHtml(name)}">${escapeHtml(name)}</th>`)
    .join("");
  const body = vm.rows
    .map((row) => {
      const cells = COLUMNS
        .map(([, value]) => `<td>${escapeHtml(value(row))}</td>`)
        .join("");
      return `<tr data-login="${escapeHtml(row.login)}">${cells}</tr>`;
    })
    .join("\n");
  return [
    `<p class="summary" data-total="${vm.totalMatching}">${escapeHtml(vm.summary)}` +
      ` <small>(sorted by ${escapeHtml(state.sortBy)} ${state.sortDir})</small></p>`,
    vm.lowerBoundNote ? `<p class="note">${escapeHtml(vm.lowerBoundNote)}</p>` : "",
    `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`,
    `<nav class="pager">page ${vm.page} of ${vm.pageCount}</nav>`,
  ].filter(Boolean).join("\n");
}

export function renderLoadingHtml(): string {
  return `<p class="loading">loading…</p>`;
}

export function renderErrorHtml(field: string, message: string): string {
  const where = field ? `<code>${escapeHtml(field)}</code>: ` : "";
  return `<p class="error" role="alert">${where}${escapeHtml(message)}` +
    ` <button data-action="retry">retry</button></p>`;
}
