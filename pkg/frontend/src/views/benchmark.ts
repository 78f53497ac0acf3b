// Funded-peer comparison panel. Percentiles and bands arrive precomputed from
// the server; the panel's job is to present them and to label the earnings
// figure as the lower bound it is.

import type { BenchmarkResponse, MetricBenchmark } from "../types.js";
import { escapeHtml } from "./table.js";

export interface BenchmarkMetricVm {
  key: string;
  label: string;
  value: number | null;
  percentile: number;
  bands: Record<string, number>;
  lowerBound: boolean;
}

export interface BenchmarkViewModel {
  status: "ready";
  login: string;
  role: string;
  peerCount: number;
  peerDefinition: string;
  metrics: BenchmarkMetricVm[];
}

const METRIC_LABELS: Record<string, string> = {
  sponsor_count: "sponsors",
  commits_total: "lifetime commits",
  estimated_monthly_earnings_usd: "est. monthly earnings (USD, lower bound)",
};

export function benchmarkView(response: BenchmarkResponse): BenchmarkViewModel {
  const metrics = (Object.entries(response.metrics) as [string, MetricBenchmark][])
    .map(([key, metric]) => ({
      key,
      label: METRIC_LABELS[key] ?? key,
      value: metric.value,
      percentile: metric.percentile,
      bands: metric.bands,
      lowerBound: Boolean(metric.lower_bound),
    }));
  return {
    status: "ready",
    login: response.login,
    role: response.role,
    peerCount: response.peer_count,
    peerDefinition: response.peer_definition,
    metrics,
  };
}

export function renderBenchmarkHtml(vm: BenchmarkViewModel): string {
  const rows = vm.metrics.map((metric) => {
    const bands = Object.entries(metric.bands)
      .map(([band, value]) => `${band}=${value}`)
      .join(" ");
    const value = metric.value === null ? "—" : String(metric.value);
    const suffix = metric.lowerBound ? " (lower bound)" : "";
    return (
      `<tr data-metric="${escapeHtml(metric.key)}" ` +
      `data-percentile="${metric.percentile}">` +
      `<th>${escapeHtml(metric.label)}</th>` +
      `<td>${escapeHtml(value)}${suffix}</td>` +
      `<td>${metric.percentile}th percentile</td>` +
      `<td class="bands">${escapeHtml(bands)}</td></tr>`
    );
  });
  return (
    `<section class="benchmark"><h2>${escapeHtml(vm.login)} vs funded peers</h2>` +
    `<p>${escapeHtml(vm.role)} · compared against ${vm.peerCount} accounts ` +
    `(${escapeHtml(vm.peerDefinition)})</p>` +
    `<table>${rows.join("")}</table></section>`
  );
}

export function renderBenchmarkNotFound(login: string): string {
  return `<p class="error" role="alert">no account named ` +
    `<code>${escapeHtml(login)}</code></p>`;
}
