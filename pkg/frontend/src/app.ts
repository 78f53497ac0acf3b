// DOM bootstrap: wires the headless controller to the page. Filter inputs
// drive the controller; the controller's view-models render into the three
// panels; the address bar mirrors the view state (shareable URLs).

import { ApiClient } from "./api.js";
import { DashboardController } from "./controller.js";
import { renderBenchmarkHtml, renderBenchmarkNotFound } from "./views/benchmark.js";
import { renderStatsSvg } from "./views/stats.js";
import {
  renderErrorHtml,
  renderLoadingHtml,
  renderTableHtml,
} from "./views/table.js";
import type { FilterKey } from "./state.js";

const FILTER_CONTROLS: [string, FilterKey][] = [
  ["filter-country", "country"],
  ["filter-account-type", "accountType"],
  ["filter-role", "role"],
  ["filter-pronouns", "pronounCategory"],
  ["filter-quality", "qualityFlag"],
  ["filter-min-sponsors", "minSponsors"],
  ["sort-by", "sortBy"],
  ["sort-dir", "sortDir"],
];

export function mountDashboard(root: Document = document): DashboardController {
  const api = new ApiClient("");
  const controller = new DashboardController(api);

  const tablePanel = root.getElementById("users-panel")!;
  const statsPanel = root.getElementById("stats-panel")!;
  const benchmarkPanel = root.getElementById("benchmark-panel")!;

  controller.onChange(() => {
    const slot = controller.table;
    if (slot.status === "loading") {
      tablePanel.innerHTML = renderLoadingHtml();
    } else if (slot.status === "error") {
      tablePanel.innerHTML = renderErrorHtml(slot.field, slot.message);
    } else {
      tablePanel.innerHTML = renderTableHtml(slot, controller.state);
    }
    if (controller.stats) {
      statsPanel.innerHTML = renderStatsSvg(controller.stats);
    }
    if (controller.benchmark) {
      benchmarkPanel.innerHTML = renderBenchmarkHtml(controller.benchmark);
    } else if (controller.benchmarkError) {
      benchmarkPanel.innerHTML = renderBenchmarkNotFound(
        controller.state.compareLogin ?? "");
    }
    const qs = controller.urlQueryString();
    history.replaceState(null, "", qs ? `?${qs}` : location.pathname);
  });

  for (const [id, key] of FILTER_CONTROLS) {
    const control = root.getElementById(id) as HTMLInputElement | HTMLSelectElement | null;
    control?.addEventListener("change", () => {
      const raw = control.value.trim();
      const value = key === "minSponsors"
        ? (raw === "" ? undefined : Number(raw))
        : (raw === "" ? undefined : raw);
      void controller.setFilter(key, value as never);
    });
  }
  root.getElementById("clear-filters")?.addEventListener("click", () => {
    void controller.clearFilters();
  });
  root.getElementById("page-prev")?.addEventListener("click", () => {
    void controller.setPage(controller.state.page - 1);
  });
  root.getElementById("page-next")?.addEventListener("click", () => {
    void controller.setPage(controller.state.page + 1);
  });
  root.getElementById("export-csv")?.addEventListener("click", () => {
    window.location.href = controller.exportUrl();
  });
  root.getElementById("stats-grouping")?.addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value as "type" | "country";
    void controller.loadStats(value);
  });
  root.getElementById("benchmark-form")?.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = root.getElementById("benchmark-login") as HTMLInputElement;
    if (input.value.trim()) void controller.loadBenchmark(input.value.trim());
  });

  void controller.restoreFromUrl(location.search);
  void controller.loadStats(controller.state.statsGrouping);
  if (controller.state.compareLogin) {
    void controller.loadBenchmark(controller.state.compareLogin);
  }
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("users-panel")) {
  mountDashboard(document);
}
