// Dashboard/API agreement: replay the scripted filter interactions with fetch
// intercepted by recorded backend responses. Every count the dashboard
// displays must equal the value in the intercepted response; nothing may be
// recomputed client-side.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { beforeEach, describe, expect, test } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { DashboardController } from "../src/controller.js";
import { renderStatsSvg } from "../src/views/stats.js";
import { renderTableHtml } from "../src/views/table.js";
import type { FilterKey } from "../src/state.js";
import type { StatsResponse, UsersPage } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const recordings = JSON.parse(
  readFileSync(join(here, "fixtures", "api_recordings.json"), "utf-8"),
) as {
  interactions: { action: string; key?: string; value?: unknown }[];
  responses: Record<string, unknown>;
  benchmark_probes: string[];
};

function recordedFetch(log: string[]): FetchLike {
  return async (url: string) => {
    log.push(url);
    const body = recordings.responses[url];
    if (body === undefined) {
      throw new Error(`no recording for ${url} — regenerate fixtures`);
    }
    return { ok: true, status: 200, json: async () => body };
  };
}

describe("scripted interactions against the recorded country-census backend", () => {
  let requests: string[];
  let controller: DashboardController;

  beforeEach(() => {
    requests = [];
    controller = new DashboardController(new ApiClient("", recordedFetch(requests)));
  });

  test("every displayed count equals the intercepted response value", async () => {
    await controller.refreshTable(); // initial unfiltered view
    expect(recordings.interactions.length).toBe(20);
    for (const step of recordings.interactions) {
      if (step.action === "set") {
        await controller.setFilter(
          step.key as FilterKey,
          (step.value === null ? undefined : step.value) as never,
        );
      } else if (step.action === "page") {
        await controller.setPage(step.value as number);
      } else if (step.action === "clear_all") {
        await controller.clearFilters();
      } else {
        throw new Error(`unknown action ${step.action}`);
      }
      const lastUrl = requests[requests.length - 1];
      const intercepted = recordings.responses[lastUrl] as UsersPage;
      expect(intercepted).toBeDefined();
      expect(controller.table.status).toBe("ready");
      if (controller.table.status !== "ready") continue;
      // view-model agrees with the wire
      expect(controller.table.totalMatching).toBe(intercepted.total_matching);
      expect(controller.table.rows.length).toBe(intercepted.items.length);
      expect(controller.table.rows.map((r) => r.login)).toEqual(
        intercepted.items.map((r) => r.login));
      // and so does the rendered HTML the user actually sees
      const html = renderTableHtml(controller.table, controller.state);
      expect(html).toContain(`data-total="${intercepted.total_matching}"`);
      expect(html).toContain(`of ${intercepted.total_matching} accounts`);
    }
  });

  test("the documented spot check: Japan + Both shows 100 accounts", async () => {
    await controller.setFilter("country", "Japan");
    await controller.setFilter("role", "Both");
    expect(controller.table.status).toBe("ready");
    if (controller.table.status === "ready") {
      expect(controller.table.totalMatching).toBe(100);
    }
  });

  test("clearing all filters reports the unfiltered total", async () => {
    await controller.setFilter("country", "Japan");
    await controller.clearFilters();
    const unfiltered = recordings.responses["/api/users"] as UsersPage;
    expect(controller.table.status).toBe("ready");
    if (controller.table.status === "ready") {
      expect(controller.table.totalMatching).toBe(unfiltered.total_matching);
      expect(unfiltered.total_matching).toBe(15928);
    }
  });

  test("url state round-trips losslessly through every interaction", async () => {
    const { parseViewState, serializeViewState } = await import("../src/state.js");
    await controller.refreshTable();
    for (const step of recordings.interactions) {
      if (step.action === "set") {
        await controller.setFilter(
          step.key as FilterKey,
          (step.value === null ? undefined : step.value) as never);
      } else if (step.action === "page") {
        await controller.setPage(step.value as number);
      } else {
        await controller.clearFilters();
      }
      const url = controller.urlQueryString();
      expect(serializeViewState(parseViewState(url))).toBe(url);
      expect(parseViewState(url)).toEqual(controller.state);
    }
  });

  test("stats panels render response numbers verbatim", async () => {
    await controller.loadStats("type");
    const typeResponse = recordings.responses["/api/stats?group_by=type"] as StatsResponse;
    expect(controller.stats).not.toBeNull();
    const typeBars = controller.stats!.bars;
    for (const row of typeResponse.rows.filter((r) => r.group_key !== "Total")) {
      const bar = typeBars.find((b) => b.label === row.group_key)!;
      expect(bar.total).toBe(row.total);
      expect(bar.sponsored).toBe(row.sponsored);
      expect(bar.sponsoring).toBe(row.sponsoring);
      expect(bar.both).toBe(row.both);
    }
    const svg = renderStatsSvg(controller.stats!);
    for (const row of typeResponse.rows.filter((r) => r.group_key !== "Total")) {
      expect(svg).toContain(`data-total="${row.total}"`);
    }

    await controller.loadStats("country");
    const countryResponse = recordings.responses[
      "/api/stats?group_by=country&top_n=6"] as StatsResponse;
    expect(controller.stats!.bars.length).toBe(6);
    expect(controller.stats!.bars[0].label).toBe("United States");
    expect(controller.stats!.bars[0].total).toBe(
      countryResponse.rows[0].total);
  });

  test("export url carries exactly the active filters, unpaginated", async () => {
    await controller.setFilter("country", "Japan");
    await controller.setFilter("role", "Both");
    await controller.setPage(2);
    expect(controller.exportUrl()).toBe("/api/export?country=Japan&role=Both");
  });
});
