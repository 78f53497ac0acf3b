// Headless dashboard controller: holds the view state, talks to the API, and
// exposes the latest view-models. The DOM layer (app.ts) subscribes to it;
// tests drive it directly with an intercepted fetch.

import { ApiClient, ApiRequestError, LatestOnly } from "./api.js";
import {
  clearedFilters,
  DEFAULT_STATE,
  parseViewState,
  serializeViewState,
  withFilter,
  withPage,
  type FilterKey,
  type ViewState,
} from "./state.js";
import { benchmarkView, type BenchmarkViewModel } from "./views/benchmark.js";
import { statsView, type StatsViewModel } from "./views/stats.js";
import { tableView, type TableViewModel } from "./views/table.js";

export type TableSlot =
  | { status: "loading" }
  | { status: "error"; field: string; message: string }
  | TableViewModel;

export class DashboardController {
  state: ViewState = { ...DEFAULT_STATE };
  table: TableSlot = { status: "loading" };
  stats: StatsViewModel | null = null;
  benchmark: BenchmarkViewModel | null = null;
  benchmarkError: string | null = null;

  private readonly tableQueue = new LatestOnly();
  private readonly listeners: (() => void)[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  urlQueryString(): string {
    return serializeViewState(this.state);
  }

  exportUrl(): string {
    return this.api.exportUrl(this.state);
  }

  async restoreFromUrl(queryString: string): Promise<void> {
    this.state = parseViewState(queryString);
    await this.refreshTable();
  }

  async setFilter(key: FilterKey, value: ViewState[FilterKey] | undefined):
      Promise<void> {
    this.state = withFilter(this.state, key, value);
    await this.refreshTable();
  }

  async setPage(page: number): Promise<void> {
    this.state = withPage(this.state, page);
    await this.refreshTable();
  }

  async clearFilters(): Promise<void> {
    this.state = clearedFilters(this.state);
    await this.refreshTable();
  }

  async refreshTable(): Promise<void> {
    this.table = { status: "loading" };
    this.notify();
    try {
      const page = await this.tableQueue.run(
        (signal) => this.api.listUsers(this.state, signal));
      if (page === undefined) return; // superseded by a newer query
      this.table = tableView(page);
    } catch (error) {
      if (error instanceof ApiRequestError) {
        this.table = { status: "error", field: error.field, message: error.message };
      } else {
        this.table = { status: "error", field: "", message: String(error) };
      }
    }
    this.notify();
  }

  async loadStats(grouping: "type" | "country"): Promise<void> {
    this.state = { ...this.state, statsGrouping: grouping };
    const response = await this.api.stats(grouping);
    this.stats = statsView(response);
    this.notify();
  }

  async loadBenchmark(login: string): Promise<void> {
    this.state = { ...this.state, compareLogin: login };
    try {
      const response = await this.api.benchmark(login);
      this.benchmark = benchmarkView(response);
      this.benchmarkError = null;
    } catch (error) {
      this.benchmark = null;
      this.benchmarkError = error instanceof ApiRequestError && error.status === 404
        ? `unknown account ${login}` : String(error);
    }
    this.notify();
  }
}
