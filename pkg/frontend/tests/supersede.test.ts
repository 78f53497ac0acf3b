// In-flight query supersession: when a newer table query starts before an
// older one resolves, the older result is discarded and never rendered.

import { describe, expect, test } from "vitest";

import { ApiClient, LatestOnly, type FetchLike } from "../src/api.js";
import { DashboardController } from "../src/controller.js";
import type { UsersPage } from "../src/types.js";

function page(total: number): UsersPage {
  return {
    items: [], total_matching: total, page: 1, page_size: 50,
    earnings_lower_bound: true, provenance: "live",
  };
}

describe("LatestOnly", () => {
  test("an older slow result is dropped in favor of the newest", async () => {
    const queue = new LatestOnly();
    let releaseFirst!: (value: number) => void;
    const first = queue.run(() => new Promise<number>((resolve) => {
      releaseFirst = resolve;
    }));
    const second = queue.run(async () => 2);
    expect(await second).toBe(2);
    releaseFirst(1);
    expect(await first).toBeUndefined(); // superseded
  });

  test("errors from superseded requests are swallowed", async () => {
    const queue = new LatestOnly();
    let failFirst!: (error: Error) => void;
    const first = queue.run(() => new Promise((_, reject) => {
      failFirst = reject;
    }));
    const second = queue.run(async () => "fresh");
    expect(await second).toBe("fresh");
    failFirst(new Error("stale failure"));
    await expect(first).resolves.toBeUndefined();
  });
});

describe("controller rendering under racing queries", () => {
  test("slow first query never overwrites the newer result", async () => {
    const resolvers: ((body: UsersPage) => void)[] = [];
    const fetchFn: FetchLike = (url) =>
      new Promise((resolve) => {
        resolvers.push((body) => resolve({
          ok: true, status: 200, json: async () => body,
        }));
        void url;
      });
    const controller = new DashboardController(new ApiClient("", fetchFn));
    const first = controller.setFilter("country", "Japan");
    const second = controller.setFilter("country", "Germany");
    // Answer out of order: the newer (Germany) query resolves first.
    resolvers[1](page(2954));
    await second;
    expect(controller.table.status).toBe("ready");
    if (controller.table.status === "ready") {
      expect(controller.table.totalMatching).toBe(2954);
    }
    resolvers[0](page(1273)); // the stale Japan answer arrives late
    await first;
    if (controller.table.status === "ready") {
      expect(controller.table.totalMatching).toBe(2954); // unchanged
    }
  });
});
