// Thin typed client for the observatory API.
//
// API query strings are built in one fixed parameter order so a given view
// state always produces the identical URL (tests replay recorded responses
// keyed by these exact strings). In-flight table queries are superseded by
// newer ones: stale responses are discarded, never rendered.

import type { ViewState } from "./state.js";
import type {
  BenchmarkResponse,
  StatsGrouping,
  StatsResponse,
  UsersPage,
} from "./types.js";

export type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly field: string,
    message: string,
  ) {
    super(message);
  }
}

export function usersQueryParams(state: ViewState): URLSearchParams {
  const params = new URLSearchParams();
  if (state.country) params.set("country", state.country);
  if (state.accountType) params.set("account_type", state.accountType);
  if (state.role) params.set("role", state.role);
  if (state.pronounCategory) params.set("pronoun_category", state.pronounCategory);
  if (state.qualityFlag) params.set("quality_flag", state.qualityFlag);
  if (state.minSponsors !== undefined) {
    params.set("min_sponsors", String(state.minSponsors));
  }
  if (state.sortBy !== "sponsor_count") params.set("sort_by", state.sortBy);
  if (state.sortDir !== "desc") params.set("sort_dir", state.sortDir);
  if (state.page !== 1) params.set("page", String(state.page));
  if (state.pageSize !== 50) params.set("page_size", String(state.pageSize));
  return params;
}

function withQuery(path: string, params: URLSearchParams): string {
  const qs = params.toString();
  return qs ? `${path}?${qs}` : path;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike,
  ) {}

  usersUrl(state: ViewState): string {
    return this.baseUrl + withQuery("/api/users", usersQueryParams(state));
  }

  exportUrl(state: ViewState, fields?: string[]): string {
    // What you see is what you export: same filters, same sort, no paging.
    const params = usersQueryParams(state);
    params.delete("page");
    params.delete("page_size");
    if (fields && fields.length) params.set("fields", fields.join(","));
    return this.baseUrl + withQuery("/api/export", params);
  }

  statsUrl(grouping: StatsGrouping, topN?: number): string {
    const params = new URLSearchParams();
    params.set("group_by", grouping);
    if (grouping === "country") params.set("top_n", String(topN ?? 6));
    return this.baseUrl + withQuery("/api/stats", params);
  }

  benchmarkUrl(login: string): string {
    const params = new URLSearchParams();
    params.set("group_by", "benchmark");
    params.set("login", login);
    return this.baseUrl + withQuery("/api/stats", params);
  }

  private async getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchFn(url, { signal });
    const body = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new ApiRequestError(
        response.status,
        String(body["field"] ?? ""),
        String(body["message"] ?? `request failed (${response.status})`),
      );
    }
    return body as T;
  }

  listUsers(state: ViewState, signal?: AbortSignal): Promise<UsersPage> {
    return this.getJson<UsersPage>(this.usersUrl(state), signal);
  }

  stats(grouping: StatsGrouping, topN?: number,
        signal?: AbortSignal): Promise<StatsResponse> {
    return this.getJson<StatsResponse>(this.statsUrl(grouping, topN), signal);
  }

  benchmark(login: string, signal?: AbortSignal): Promise<BenchmarkResponse> {
    return this.getJson<BenchmarkResponse>(this.benchmarkUrl(login), signal);
  }
}

/** Serializes a stream of requests: only the newest one's result is kept. */
export class LatestOnly {
  private sequence = 0;
  private controller: AbortController | null = null;

  async run<T>(task: (signal: AbortSignal | undefined) => Promise<T>):
      Promise<T | undefined> {
    const ticket = ++this.sequence;
    this.controller?.abort();
    const controller = typeof AbortController !== "undefined"
      ? new AbortController() : null;
    this.controller = controller;
    try {
      const result = await task(controller?.signal);
      return ticket === this.sequence ? result : undefined;
    } catch (error) {
      if (ticket !== this.sequence) return undefined; // superseded; swallow
      throw error;
    }
  }
}
