// View state <-> URL query string, losslessly and in canonical form.
//
// Every control on the dashboard lives in this one structure so any view can
// be reproduced from its URL. Serialization omits default values and writes
// keys in a fixed order, which makes serialize(parse(url)) === url for every
// canonical url and parse(serialize(state)) deep-equal to state.

import type {
  AccountType,
  FilterRole,
  PronounCategory,
  QualityFlag,
  SortDir,
  SortKey,
  StatsGrouping,
} from "./types.js";

export interface ViewState {
  country?: string;
  accountType?: AccountType;
  role?: FilterRole;
  pronounCategory?: PronounCategory;
  qualityFlag?: QualityFlag;
  minSponsors?: number;
  sortBy: SortKey;
  sortDir: SortDir;
  page: number;
  pageSize: number;
  statsGrouping: StatsGrouping;
  compareLogin?: string;
}

export const DEFAULT_STATE: ViewState = {
  sortBy: "sponsor_count",
  sortDir: "desc",
  page: 1,
  pageSize: 50,
  statsGrouping: "type",
};

const SORT_KEYS: SortKey[] = [
  "sponsor_count", "sponsoring_count", "estimated_earnings", "login",
  "last_fetched_at",
];
const ACCOUNT_TYPES: AccountType[] = ["User", "Org"];
const ROLES: FilterRole[] = ["Sponsored", "Sponsoring", "Both"];
const PRONOUNS: PronounCategory[] = [
  "Masculine", "Feminine", "OtherNeutral", "Unspecified",
];
const QUALITY: QualityFlag[] = ["High", "Medium", "Low"];
const GROUPINGS: StatsGrouping[] = ["type", "country"];

function oneOf<T extends string>(value: string | null, allowed: T[]): T | undefined {
  return allowed.includes(value as T) ? (value as T) : undefined;
}

function positiveInt(value: string | null): number | undefined {
  if (value === null || !/^\d+$/.test(value)) return undefined;
  const n = parseInt(value, 10);
  return n >= 1 ? n : undefined;
}

export function parseViewState(queryString: string): ViewState {
  const params = new URLSearchParams(
    queryString.startsWith("?") ? queryString.slice(1) : queryString,
  );
  const state: ViewState = { ...DEFAULT_STATE };
  const country = params.get("country");
  if (country) state.country = country;
  state.accountType = oneOf(params.get("account_type"), ACCOUNT_TYPES);
  state.role = oneOf(params.get("role"), ROLES);
  state.pronounCategory = oneOf(params.get("pronoun_category"), PRONOUNS);
  state.qualityFlag = oneOf(params.get("quality_flag"), QUALITY);
  const minSponsors = params.get("min_sponsors");
  if (minSponsors !== null && /^\d+$/.test(minSponsors)) {
    state.minSponsors = parseInt(minSponsors, 10);
  }
  state.sortBy = oneOf(params.get("sort_by"), SORT_KEYS) ?? DEFAULT_STATE.sortBy;
  state.sortDir =
    oneOf(params.get("sort_dir"), ["asc", "desc"] as SortDir[]) ?? DEFAULT_STATE.sortDir;
  state.page = positiveInt(params.get("page")) ?? DEFAULT_STATE.page;
  const pageSize = positiveInt(params.get("page_size"));
  state.pageSize = pageSize !== undefined && pageSize <= 500
    ? pageSize : DEFAULT_STATE.pageSize;
  state.statsGrouping =
    oneOf(params.get("stats"), GROUPINGS) ?? DEFAULT_STATE.statsGrouping;
  const compare = params.get("compare");
  if (compare) state.compareLogin = compare;
  // Drop undefined optionals so states compare cleanly with deepEqual.
  for (const key of Object.keys(state) as (keyof ViewState)[]) {
    if (state[key] === undefined) delete state[key];
  }
  return state;
}

export function serializeViewState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.country) params.set("country", state.country);
  if (state.accountType) params.set("account_type", state.accountType);
  if (state.role) params.set("role", state.role);
  if (state.pronounCategory) params.set("pronoun_category", state.pronounCategory);
  if (state.qualityFlag) params.set("quality_flag", state.qualityFlag);
  if (state.minSponsors !== undefined) {
    params.set("min_sponsors", String(state.minSponsors));
  }
  if (state.sortBy !== DEFAULT_STATE.sortBy) params.set("sort_by", state.sortBy);
  if (state.sortDir !== DEFAULT_STATE.sortDir) params.set("sort_dir", state.sortDir);
  if (state.page !== DEFAULT_STATE.page) params.set("page", String(state.page));
  if (state.pageSize !== DEFAULT_STATE.pageSize) {
    params.set("page_size", String(state.pageSize));
  }
  if (state.statsGrouping !== DEFAULT_STATE.statsGrouping) {
    params.set("stats", state.statsGrouping);
  }
  if (state.compareLogin) params.set("compare", state.compareLogin);
  return params.toString();
}

// The filter-affecting keys; changing any of them resets pagination.
export type FilterKey =
  | "country" | "accountType" | "role" | "pronounCategory" | "qualityFlag"
  | "minSponsors" | "sortBy" | "sortDir" | "pageSize";

export function withFilter(
  state: ViewState, key: FilterKey, value: ViewState[FilterKey] | undefined,
): ViewState {
  const next: ViewState = { ...state, page: 1 };
  if (value === undefined) {
    delete next[key];
  } else {
    (next as unknown as Record<string, unknown>)[key] = value;
  }
  if (next.sortBy === undefined) next.sortBy = DEFAULT_STATE.sortBy;
  if (next.sortDir === undefined) next.sortDir = DEFAULT_STATE.sortDir;
  if (next.pageSize === undefined) next.pageSize = DEFAULT_STATE.pageSize;
  return next;
}

export function withPage(state: ViewState, page: number): ViewState {
  return { ...state, page: Math.max(1, page) };
}

export function clearedFilters(state: ViewState): ViewState {
  return {
    ...DEFAULT_STATE,
    statsGrouping: state.statsGrouping,
    compareLogin: state.compareLogin,
  };
}
