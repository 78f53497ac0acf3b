// Loading and error presentation: the table slot is explicit about being
// in-flight, and API validation errors surface with the offending field.

import { describe, expect, test } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { DashboardController } from "../src/controller.js";
import {
  renderErrorHtml,
  renderLoadingHtml,
} from "../src/views/table.js";

describe("explicit loading and error states", () => {
  test("table is in loading state while a query is in flight", async () => {
    let release!: () => void;
    const fetchFn: FetchLike = () =>
      new Promise((resolve) => {
        release = () => resolve({
          ok: true,
          status: 200,
          json: async () => ({
            items: [], total_matching: 0, page: 1, page_size: 50,
            earnings_lower_bound: true, provenance: "live",
          }),
        });
      });
    const controller = new DashboardController(new ApiClient("", fetchFn));
    const pending = controller.refreshTable();
    expect(controller.table.status).toBe("loading");
    expect(renderLoadingHtml()).toContain("loading");
    release();
    await pending;
    expect(controller.table.status).toBe("ready");
  });

  test("validation errors name the offending field inline", async () => {
    const fetchFn: FetchLike = async () => ({
      ok: false,
      status: 400,
      json: async () => ({
        error: "validation_error", field: "role",
        message: "unknown value 'Emperor'",
      }),
    });
    const controller = new DashboardController(new ApiClient("", fetchFn));
    await controller.refreshTable();
    expect(controller.table.status).toBe("error");
    if (controller.table.status === "error") {
      expect(controller.table.field).toBe("role");
      const html = renderErrorHtml(controller.table.field, controller.table.message);
      expect(html).toContain("<code>role</code>");
      expect(html).toContain("retry");
    }
  });

  test("network failures render a retry affordance", async () => {
    const fetchFn: FetchLike = async () => {
      throw new Error("connection refused");
    };
    const controller = new DashboardController(new ApiClient("", fetchFn));
    await controller.refreshTable();
    expect(controller.table.status).toBe("error");
    if (controller.table.status === "error") {
      expect(renderErrorHtml("", controller.table.message)).toContain("retry");
    }
  });
});
